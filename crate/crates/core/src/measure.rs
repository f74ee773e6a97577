//! Exact rational scalars, dyadic intervals and the step-set model for `E`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{input, Error, Result};

/// Exact signed rational with arbitrary-precision numerator and denominator.
/// Always stored reduced with a positive denominator.
pub type Rational = BigRational;

/// Deepest level a [`DyadicInterval`] may have; keeps `index` inside a `u64`.
pub const MAX_LEVEL: u32 = 62;

/// Shorthand for `num/den` as an exact rational. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^-level` as an exact rational.
pub fn dyadic_unit(level: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << level)
}

/// Parses `"num/den"` or an integer shorthand `"num"`. Unreduced fractions are
/// accepted and reduced.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num
        .parse()
        .map_err(|_| Error::Input(format!("malformed rational {s:?}")))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| Error::Input(format!("malformed rational {s:?}")))?;
    if den.is_zero() {
        return input(format!("zero denominator in {s:?}"));
    }
    Ok(Rational::new(num, den))
}

/// Renders as `"num/den"`, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Lossy conversion for reporting and for the floating-point spectral path.
pub fn to_f64(r: &Rational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// `#[serde(with = "rational_str")]` for fields holding a [`Rational`].
pub mod rational_str {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Same as [`rational_str`] for `Vec<Rational>`.
pub mod rational_vec_str {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// The dyadic interval `[k·2⁻ⁿ, (k+1)·2⁻ⁿ) ⊆ [0,1)`.
///
/// Ordered by `(level, index)`, which is the enumeration order used for
/// families and Gram matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicInterval {
    level: u32,
    index: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > MAX_LEVEL {
            return input(format!("dyadic level {level} exceeds maximum {MAX_LEVEL}"));
        }
        if index >= 1u64 << level {
            return input(format!("dyadic index {index} out of range for level {level}"));
        }
        Ok(Self { level, index })
    }

    /// `[0,1)`.
    pub const fn unit() -> Self {
        Self { level: 0, index: 0 }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn left(&self) -> Rational {
        Rational::new(BigInt::from(self.index), BigInt::one() << self.level)
    }

    pub fn right(&self) -> Rational {
        Rational::new(BigInt::from(self.index + 1), BigInt::one() << self.level)
    }

    pub fn midpoint(&self) -> Rational {
        Rational::new(
            BigInt::from(2 * self.index + 1),
            BigInt::one() << (self.level + 1),
        )
    }

    /// Lebesgue measure `2⁻ⁿ`.
    pub fn measure(&self) -> Rational {
        dyadic_unit(self.level)
    }

    /// `(lh I, rh I)`: indices `2k` and `2k+1` one level down.
    ///
    /// Panics if the interval is already at [`MAX_LEVEL`].
    pub fn halves(&self) -> (Self, Self) {
        assert!(self.level < MAX_LEVEL, "cannot split below level {MAX_LEVEL}");
        (
            Self { level: self.level + 1, index: 2 * self.index },
            Self { level: self.level + 1, index: 2 * self.index + 1 },
        )
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self { level: self.level - 1, index: self.index / 2 })
    }

    /// The unique interval at `level` containing this one, if `level ≤ self.level`.
    pub fn ancestor_at(&self, level: u32) -> Option<Self> {
        (level <= self.level).then(|| Self { level, index: self.index >> (self.level - level) })
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Self) -> bool {
        other.ancestor_at(self.level) == Some(*self)
    }

    /// Nested intervals are the only pairs whose Haar functions can interact.
    pub fn is_nested_with(&self, other: &Self) -> bool {
        self.contains(other) || other.contains(self)
    }

    /// Value of `h_I` on a strict sub-interval: `-1` on the left half, `+1` on the right.
    pub(crate) fn haar_sign_on(&self, sub: &Self) -> Option<i8> {
        if sub.level <= self.level || !self.contains(sub) {
            return None;
        }
        let bit = (sub.index >> (sub.level - self.level - 1)) & 1;
        Some(if bit == 0 { -1 } else { 1 })
    }

    /// All intervals of a given level, left to right.
    pub fn level_iter(level: u32) -> impl Iterator<Item = Self> {
        (0..1u64 << level).map(move |index| Self { level, index })
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}) (level {}, index {})",
            self.left(),
            self.right(),
            self.level,
            self.index
        )
    }
}

/// A finite disjoint union of half-open rational intervals inside `[0,1)`.
///
/// Canonical: sorted, pairwise disjoint and non-adjacent, so two step sets are
/// equal as sets iff they compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepSet {
    intervals: Vec<(Rational, Rational)>,
}

impl StepSet {
    /// Canonicalizes an arbitrary list of half-open intervals.
    pub fn normalize(raw: impl IntoIterator<Item = (Rational, Rational)>) -> Result<Self> {
        let zero = Rational::zero();
        let one = Rational::one();
        let mut pieces: Vec<(Rational, Rational)> = Vec::new();
        for (l, r) in raw {
            if l >= r || l < zero || r > one {
                return input(format!(
                    "malformed interval [{}, {}): need 0 <= left < right <= 1",
                    format_rational(&l),
                    format_rational(&r)
                ));
            }
            pieces.push((l, r));
        }
        pieces.sort();
        let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(pieces.len());
        for (l, r) in pieces {
            match merged.last_mut() {
                Some((_, last_r)) if l <= *last_r => {
                    if r > *last_r {
                        *last_r = r;
                    }
                }
                _ => merged.push((l, r)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// `[0,1)`.
    pub fn full() -> Self {
        Self { intervals: vec![(Rational::zero(), Rational::one())] }
    }

    /// `[left, right)`.
    pub fn interval(left: Rational, right: Rational) -> Result<Self> {
        Self::normalize([(left, right)])
    }

    /// Union of the level-`resolution` cells whose flag is set; `cells.len()`
    /// must be `2^resolution`.
    pub fn from_cells(resolution: u32, cells: &[bool]) -> Result<Self> {
        if resolution > 24 || cells.len() != 1usize << resolution {
            return input(format!(
                "cell mask of length {} does not match resolution {resolution}",
                cells.len()
            ));
        }
        let mut intervals = Vec::new();
        let mut k = 0usize;
        while k < cells.len() {
            if !cells[k] {
                k += 1;
                continue;
            }
            let start = k;
            while k < cells.len() && cells[k] {
                k += 1;
            }
            let den = BigInt::one() << resolution;
            intervals.push((
                Rational::new(BigInt::from(start), den.clone()),
                Rational::new(BigInt::from(k), den),
            ));
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().map(|(l, r)| r - l).sum()
    }

    pub fn contains_point(&self, x: &Rational) -> bool {
        let i = self.intervals.partition_point(|(_, r)| r <= x);
        self.intervals.get(i).is_some_and(|(l, _)| l <= x)
    }

    /// `|E ∩ [a, b)|`.
    pub fn measure_within(&self, a: &Rational, b: &Rational) -> Rational {
        let mut total = Rational::zero();
        let start = self.intervals.partition_point(|(_, r)| r <= a);
        for (l, r) in &self.intervals[start..] {
            if l >= b {
                break;
            }
            let lo = if l > a { l } else { a };
            let hi = if r < b { r } else { b };
            total += hi - lo;
        }
        total
    }

    /// `|E ∩ I|`.
    pub fn intersect_measure(&self, interval: &DyadicInterval) -> Rational {
        self.measure_within(&interval.left(), &interval.right())
    }

    /// `q_I = |I ∩ E| / |I|`.
    pub fn density(&self, interval: &DyadicInterval) -> Rational {
        self.intersect_measure(interval) / interval.measure()
    }

    /// `[0,1) \ E`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = Rational::zero();
        for (l, r) in &self.intervals {
            if *l > cursor {
                out.push((cursor.clone(), l.clone()));
            }
            cursor = r.clone();
        }
        if cursor < Rational::one() {
            out.push((cursor, Rational::one()));
        }
        Self { intervals: out }
    }

    /// Every endpoint, in increasing order.
    pub fn endpoints(&self) -> impl Iterator<Item = &Rational> {
        self.intervals.iter().flat_map(|(l, r)| [l, r])
    }
}

#[derive(Serialize, Deserialize)]
struct StepSetJson {
    intervals: Vec<[String; 2]>,
}

impl Serialize for StepSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StepSetJson {
            intervals: self
                .intervals
                .iter()
                .map(|(l, r)| [format_rational(l), format_rational(r)])
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for StepSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = StepSetJson::deserialize(d)?;
        let pairs = raw
            .intervals
            .iter()
            .map(|[l, r]| Ok((parse_rational(l)?, parse_rational(r)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        StepSet::normalize(pairs).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for StepSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (i, (l, r)) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "[{l}, {r})")?;
        }
        Ok(())
    }
}
