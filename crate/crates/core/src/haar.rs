//! Restricted Haar functions `h_I·1_E`, exact step functions and finite
//! Haar combinations.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{input, Result};
use crate::measure::{format_rational, parse_rational, DyadicInterval, Rational, StepSet};

/// An exact step function on `[0,1)`.
///
/// `values[i]` is the value on `[breakpoints[i], breakpoints[i+1])`. The
/// breakpoints always start at 0 and end at 1, and adjacent pieces never carry
/// equal values, so structural equality is equality of functions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<Rational>,
    values: Vec<Rational>,
}

impl PiecewiseConstant {
    pub fn zero() -> Self {
        Self::constant(Rational::zero())
    }

    pub fn constant(value: Rational) -> Self {
        Self { breakpoints: vec![Rational::zero(), Rational::one()], values: vec![value] }
    }

    /// Builds from raw parts, merging equal neighbours.
    pub fn from_parts(breakpoints: Vec<Rational>, values: Vec<Rational>) -> Result<Self> {
        if breakpoints.len() != values.len() + 1 {
            return input(format!(
                "{} breakpoints cannot carry {} values",
                breakpoints.len(),
                values.len()
            ));
        }
        if breakpoints.first() != Some(&Rational::zero()) || breakpoints.last() != Some(&Rational::one()) {
            return input("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return input("breakpoints must be strictly increasing");
        }
        Ok(Self::canonical(breakpoints, values))
    }

    fn canonical(breakpoints: Vec<Rational>, values: Vec<Rational>) -> Self {
        let mut bps = vec![breakpoints[0].clone()];
        let mut vals: Vec<Rational> = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            if vals.last() == Some(&v) {
                *bps.last_mut().unwrap() = breakpoints[i + 1].clone();
            } else {
                vals.push(v);
                bps.push(breakpoints[i + 1].clone());
            }
        }
        Self { breakpoints: bps, values: vals }
    }

    /// Indicator function `1_E`.
    pub fn indicator(set: &StepSet) -> Self {
        let mut bps = vec![Rational::zero()];
        let mut vals = Vec::new();
        for (l, r) in set.intervals() {
            if *l > *bps.last().unwrap() {
                vals.push(Rational::zero());
                bps.push(l.clone());
            }
            vals.push(Rational::one());
            bps.push(r.clone());
        }
        if *bps.last().unwrap() < Rational::one() {
            vals.push(Rational::zero());
            bps.push(Rational::one());
        }
        Self::canonical(bps, vals)
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    /// `(left, right, value)` for each constant piece.
    pub fn pieces(&self) -> impl Iterator<Item = (&Rational, &Rational, &Rational)> {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (&w[0], &w[1], v))
    }

    /// Value at `x ∈ [0,1)`.
    pub fn eval(&self, x: &Rational) -> Rational {
        let i = self.breakpoints.partition_point(|b| b <= x);
        let i = i.saturating_sub(1).min(self.values.len() - 1);
        self.values[i].clone()
    }

    /// Pointwise combination on the common refinement of both breakpoint sets.
    pub fn zip_with(&self, other: &Self, op: impl Fn(&Rational, &Rational) -> Rational) -> Self {
        let mut bps = vec![Rational::zero()];
        let mut vals = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.values.len() && j < other.values.len() {
            vals.push(op(&self.values[i], &other.values[j]));
            let a = &self.breakpoints[i + 1];
            let b = &other.breakpoints[j + 1];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    bps.push(a.clone());
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    bps.push(b.clone());
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    bps.push(a.clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        Self::canonical(bps, vals)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        let values = self.values.iter().map(|v| v * factor).collect();
        Self::canonical(self.breakpoints.clone(), values)
    }

    /// `∫₀¹ f`.
    pub fn integral(&self) -> Rational {
        self.pieces().map(|(l, r, v)| (r - l) * v).sum()
    }

    /// `∫₀¹ f²`.
    pub fn norm_sq(&self) -> Rational {
        self.pieces().map(|(l, r, v)| (r - l) * v * v).sum()
    }

    /// Lebesgue measure of `{f > 0}`.
    pub fn positive_support_measure(&self) -> Rational {
        self.pieces()
            .filter(|(_, _, v)| v.is_positive())
            .map(|(l, r, _)| r - l)
            .sum()
    }
}

/// `h_I`: `-1` on the left half of `I`, `+1` on the right half, `0` elsewhere.
pub fn haar_function(interval: &DyadicInterval) -> PiecewiseConstant {
    let zero = Rational::zero();
    let one = Rational::one();
    let (l, m, r) = (interval.left(), interval.midpoint(), interval.right());
    let mut bps = vec![zero.clone()];
    let mut vals = Vec::new();
    if l > zero {
        bps.push(l);
        vals.push(zero.clone());
    }
    bps.push(m);
    vals.push(-one.clone());
    bps.push(r.clone());
    vals.push(one.clone());
    if r < one {
        bps.push(one);
        vals.push(zero);
    }
    PiecewiseConstant::canonical(bps, vals)
}

/// `‖h_I·1_E‖² = |I ∩ E|`, since `h_I² = 1_I`.
pub fn restricted_norm_sq(interval: &DyadicInterval, set: &StepSet) -> Rational {
    set.intersect_measure(interval)
}

/// `∫ h_I h_J 1_E`.
///
/// Zero unless the intervals are nested. For `J ⊊ I` the factor `h_I` is a
/// constant sign on `J`, leaving `±(|rh J ∩ E| − |lh J ∩ E|)`.
pub fn inner_product(i: &DyadicInterval, j: &DyadicInterval, set: &StepSet) -> Rational {
    if i == j {
        return restricted_norm_sq(i, set);
    }
    let (outer, inner) = if i.contains(j) {
        (i, j)
    } else if j.contains(i) {
        (j, i)
    } else {
        return Rational::zero();
    };
    let (lh, rh) = inner.halves();
    let mass = set.intersect_measure(&rh) - set.intersect_measure(&lh);
    match outer.haar_sign_on(inner) {
        Some(s) if s < 0 => -mass,
        _ => mass,
    }
}

/// A finite coefficient sequence `(a_I)`. Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoefficientMap {
    entries: BTreeMap<DyadicInterval, Rational>,
}

impl CoefficientMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `a_I`; a zero value removes the entry.
    pub fn insert(&mut self, interval: DyadicInterval, value: Rational) {
        if value.is_zero() {
            self.entries.remove(&interval);
        } else {
            self.entries.insert(interval, value);
        }
    }

    pub fn get(&self, interval: &DyadicInterval) -> Option<&Rational> {
        self.entries.get(interval)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicInterval, &Rational)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_level(&self) -> Option<u32> {
        self.entries.keys().map(|i| i.level()).max()
    }

    /// The coefficients with `level ≤ max_level`.
    pub fn truncated(&self, max_level: u32) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| i.level() <= max_level)
                .map(|(i, a)| (*i, a.clone()))
                .collect(),
        }
    }

    /// `Σ a_I² ‖h_I 1_E‖²`.
    pub fn sum_of_norms(&self, set: &StepSet) -> Rational {
        self.entries
            .iter()
            .map(|(i, a)| a * a * restricted_norm_sq(i, set))
            .sum()
    }
}

impl FromIterator<(DyadicInterval, Rational)> for CoefficientMap {
    fn from_iter<T: IntoIterator<Item = (DyadicInterval, Rational)>>(iter: T) -> Self {
        let mut map = Self::new();
        for (i, a) in iter {
            map.insert(i, a);
        }
        map
    }
}

#[derive(Serialize, Deserialize)]
struct CoefficientJson {
    level: u32,
    index: u64,
    a: String,
}

#[derive(Serialize, Deserialize)]
struct CoefficientMapJson {
    coeffs: Vec<CoefficientJson>,
}

impl Serialize for CoefficientMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CoefficientMapJson {
            coeffs: self
                .entries
                .iter()
                .map(|(i, a)| CoefficientJson { level: i.level(), index: i.index(), a: format_rational(a) })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoefficientMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = CoefficientMapJson::deserialize(d)?;
        let mut map = Self::new();
        for c in raw.coeffs {
            let interval = DyadicInterval::new(c.level, c.index).map_err(D::Error::custom)?;
            let a = parse_rational(&c.a).map_err(D::Error::custom)?;
            if map.entries.contains_key(&interval) {
                return Err(D::Error::custom(format!("duplicate coefficient for {interval}")));
            }
            map.insert(interval, a);
        }
        Ok(map)
    }
}

/// The exact step function `Σ a_I h_I 1_E`.
pub fn combination(coeffs: &CoefficientMap, set: &StepSet) -> PiecewiseConstant {
    let mut bps: Vec<Rational> = vec![Rational::zero(), Rational::one()];
    for (i, _) in coeffs.iter() {
        bps.extend([i.left(), i.midpoint(), i.right()]);
    }
    bps.extend(set.endpoints().cloned());
    bps.sort();
    bps.dedup();

    let two = Rational::from_integer(2.into());
    let values = bps
        .windows(2)
        .map(|w| {
            let x = (&w[0] + &w[1]) / &two;
            if !set.contains_point(&x) {
                return Rational::zero();
            }
            coeffs
                .iter()
                .filter(|(i, _)| i.left() <= x && x < i.right())
                .map(|(i, a)| if x < i.midpoint() { -a.clone() } else { a.clone() })
                .sum()
        })
        .collect();
    PiecewiseConstant::canonical(bps, values)
}

/// `∫ f²`.
pub fn norm_sq(f: &PiecewiseConstant) -> Rational {
    f.norm_sq()
}

/// All `I ⊆ [0,1)` with `level ≤ depth` and `|I ∩ E| ≥ p|I|`, in `(level, index)` order.
pub fn enumerate_family(depth: u32, set: &StepSet, p: &Rational) -> Vec<DyadicInterval> {
    (0..=depth)
        .flat_map(DyadicInterval::level_iter)
        .filter(|i| set.intersect_measure(i) >= p * i.measure())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{dyadic_unit, rat};

    fn di(level: u32, index: u64) -> DyadicInterval {
        DyadicInterval::new(level, index).unwrap()
    }

    fn two_thirds() -> StepSet {
        StepSet::interval(rat(0, 1), rat(2, 3)).unwrap()
    }

    fn pc(bps: &[(i64, i64)], vals: &[i64]) -> PiecewiseConstant {
        PiecewiseConstant::from_parts(
            bps.iter().map(|&(a, b)| rat(a, b)).collect(),
            vals.iter().map(|&v| rat(v, 1)).collect(),
        )
        .unwrap()
    }

    // Independent route: integrate the product h_I·h_J·1_E as step functions.
    fn inner_product_by_integration(i: &DyadicInterval, j: &DyadicInterval, e: &StepSet) -> Rational {
        haar_function(i)
            .mul(&haar_function(j))
            .mul(&PiecewiseConstant::indicator(e))
            .integral()
    }

    #[test]
    fn haar_function_shape() {
        assert_eq!(haar_function(&DyadicInterval::unit()), pc(&[(0, 1), (1, 2), (1, 1)], &[-1, 1]));
        assert_eq!(
            haar_function(&di(1, 1)),
            pc(&[(0, 1), (1, 2), (3, 4), (1, 1)], &[0, -1, 1])
        );
        for level in 0..4 {
            for i in DyadicInterval::level_iter(level) {
                assert!(haar_function(&i).integral().is_zero());
                assert_eq!(haar_function(&i).norm_sq(), dyadic_unit(level));
            }
        }
    }

    #[test]
    fn restricted_norm_examples() {
        let e = two_thirds();
        assert_eq!(restricted_norm_sq(&DyadicInterval::unit(), &e), rat(2, 3));
        assert_eq!(restricted_norm_sq(&di(3, 4), &StepSet::full()), rat(1, 8));
        // I_2 = [1/2, 3/4) with a_2 = 1.
        assert_eq!(restricted_norm_sq(&di(2, 2), &e), rat(1, 6));
    }

    #[test]
    fn inner_product_examples() {
        let e = two_thirds();
        assert_eq!(inner_product_by_integration(&DyadicInterval::unit(), &di(1, 1), &e), rat(-1, 6));
        assert_eq!(inner_product(&DyadicInterval::unit(), &di(1, 1), &e), rat(-1, 6));
        assert_eq!(inner_product(&di(1, 1), &DyadicInterval::unit(), &e), rat(-1, 6));
        assert!(inner_product(&DyadicInterval::unit(), &di(2, 1), &StepSet::full()).is_zero());
        assert_eq!(inner_product(&di(2, 2), &di(2, 2), &e), restricted_norm_sq(&di(2, 2), &e));
    }

    #[test]
    fn inner_product_agrees_with_integration_on_all_pairs() {
        let e = StepSet::normalize([(rat(1, 7), rat(2, 5)), (rat(1, 2), rat(13, 16))]).unwrap();
        let family: Vec<_> = (0..4).flat_map(DyadicInterval::level_iter).collect();
        for i in &family {
            for j in &family {
                assert_eq!(inner_product(i, j, &e), inner_product_by_integration(i, j, &e), "{i} {j}");
            }
        }
    }

    #[test]
    fn combination_of_counterexample_pair() {
        let e = two_thirds();
        let coeffs: CoefficientMap = [(DyadicInterval::unit(), rat(1, 1)), (di(2, 2), rat(1, 1))].into_iter().collect();
        let f = combination(&coeffs, &e);
        let expected = PiecewiseConstant::from_parts(
            vec![rat(0, 1), rat(1, 2), rat(5, 8), rat(2, 3), rat(1, 1)],
            vec![rat(-1, 1), rat(0, 1), rat(2, 1), rat(0, 1)],
        )
        .unwrap();
        assert_eq!(f, expected);
        assert_eq!(norm_sq(&f), rat(2, 3));
    }

    #[test]
    fn empty_combination_is_zero() {
        assert_eq!(combination(&CoefficientMap::new(), &two_thirds()), PiecewiseConstant::zero());
        assert!(norm_sq(&PiecewiseConstant::zero()).is_zero());
        assert_eq!(norm_sq(&haar_function(&DyadicInterval::unit())), rat(1, 1));
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let mut c = CoefficientMap::new();
        c.insert(di(1, 0), rat(3, 1));
        c.insert(di(1, 0), rat(0, 1));
        assert!(c.is_empty());
    }

    #[test]
    fn enumerate_family_examples() {
        assert_eq!(enumerate_family(2, &StepSet::full(), &rat(1, 1)).len(), 7);
        assert_eq!(enumerate_family(0, &two_thirds(), &rat(2, 3)), vec![DyadicInterval::unit()]);
        // Densities on levels 0..1 are 2/3, 1, 1/3.
        let e = two_thirds();
        let q: Vec<_> = [DyadicInterval::unit(), di(1, 0), di(1, 1)].iter().map(|i| e.density(i)).collect();
        assert_eq!(q, vec![rat(2, 3), rat(1, 1), rat(1, 3)]);
        assert_eq!(enumerate_family(1, &e, &rat(7, 10)), vec![di(1, 0)]);
    }

    #[test]
    fn piecewise_constant_validation() {
        assert!(PiecewiseConstant::from_parts(vec![rat(0, 1), rat(1, 1)], vec![]).is_err());
        assert!(PiecewiseConstant::from_parts(vec![rat(1, 4), rat(1, 1)], vec![rat(1, 1)]).is_err());
        assert!(PiecewiseConstant::from_parts(vec![rat(0, 1), rat(1, 2), rat(1, 2), rat(1, 1)], vec![rat(1, 1); 3]).is_err());
        let f = pc(&[(0, 1), (1, 2), (1, 1)], &[3, 3]);
        assert_eq!(f, PiecewiseConstant::constant(rat(3, 1)));
        assert_eq!(f.eval(&rat(9, 10)), rat(3, 1));
    }

    #[test]
    fn coefficient_map_json() {
        let json = r#"{"coeffs": [{"level":0,"index":0,"a":"2/2"}, {"level":2,"index":3,"a":"-1/4"}]}"#;
        let c: CoefficientMap = serde_json::from_str(json).unwrap();
        assert_eq!(c.get(&DyadicInterval::unit()), Some(&rat(1, 1)));
        assert_eq!(c.get(&di(2, 3)), Some(&rat(-1, 4)));
        let back: CoefficientMap = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<CoefficientMap>(r#"{"coeffs":[{"level":1,"index":2,"a":"1"}]}"#).is_err());
    }
}
