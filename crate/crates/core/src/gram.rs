//! Gram matrices of restricted Haar families and exact Riesz/Bessel certificates.
//!
//! The Riesz inequality `‖Σ a_I h_I 1_E‖² ≥ c Σ a_I² ‖h_I 1_E‖²` over a finite
//! family is the matrix statement `G − c·D ⪰ 0`, where `G` is the unnormalized
//! Gram matrix and `D` its diagonal. Working with this pencil instead of the
//! normalized Gram matrix keeps every certificate in exact rationals, since
//! `‖h_I 1_E‖` is in general an irrational square root.

use std::io::Write;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::haar::restricted_norm_sq;
use crate::linalg::{self, PivotOrder};
use crate::measure::{format_rational, rational_str, to_f64, DyadicInterval, Rational, StepSet};

/// Exact Gram matrix `⟨h_I 1_E, h_J 1_E⟩` of a labelled family.
///
/// Entries are always the unnormalized inner products. The `normalized` flag
/// records that the family is meant as the unit vectors `h_I 1_E / ‖h_I 1_E‖`;
/// the float view [`GramMatrix::normalized_f64`] and [`eig_bounds`] honour it,
/// and construction rejects zero-norm members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GramMatrix {
    entries: Vec<Vec<Rational>>,
    labels: Vec<DyadicInterval>,
    normalized: bool,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn entries(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i][j]
    }

    pub fn labels(&self) -> &[DyadicInterval] {
        &self.labels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `‖h_I 1_E‖²` for each member.
    pub fn diagonal(&self) -> Vec<Rational> {
        (0..self.size()).map(|i| self.entries[i][i].clone()).collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|row| row.iter().map(to_f64).collect()).collect()
    }

    /// `D^{-1/2} G D^{-1/2}` in floating point. Zero-norm members keep a zero row.
    pub fn normalized_f64(&self) -> Vec<Vec<f64>> {
        let scale: Vec<f64> = self
            .diagonal()
            .iter()
            .map(|d| {
                let d = to_f64(d);
                if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }
            })
            .collect();
        self.entries
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, g)| to_f64(g) * scale[i] * scale[j]).collect())
            .collect()
    }

    /// Elimination order that never creates fill: deeper intervals first.
    ///
    /// Eliminating `J` only couples the members nested with `J` that are still
    /// present, i.e. its ancestors, and those already form a chain.
    fn leaves_first(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.size()).collect();
        order.sort_by(|&a, &b| self.labels[b].cmp(&self.labels[a]));
        order
    }

    /// Writes the matrix as CSV of floats with `digits` significant digits.
    pub fn write_csv<W: Write>(&self, out: W, digits: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = self.labels.iter().map(|l| format!("L{}K{}", l.level(), l.index())).collect();
        w.write_record(std::iter::once("label".to_string()).chain(header.iter().cloned()))?;
        let rows = if self.normalized { self.normalized_f64() } else { self.to_f64() };
        for (label, row) in header.iter().zip(rows) {
            w.write_record(std::iter::once(label.clone()).chain(row.iter().map(|x| format_float(*x, digits))))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scientific notation with `digits` significant digits.
pub fn format_float(x: f64, digits: usize) -> String {
    format!("{:.*e}", digits.saturating_sub(1), x)
}

#[derive(Serialize, Deserialize)]
struct GramJson {
    labels: Vec<DyadicInterval>,
    normalized: bool,
    entries: Vec<Vec<String>>,
}

impl Serialize for GramMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GramJson {
            labels: self.labels.clone(),
            normalized: self.normalized,
            entries: self.entries.iter().map(|row| row.iter().map(format_rational).collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GramMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = GramJson::deserialize(d)?;
        let m = raw.labels.len();
        if raw.entries.len() != m || raw.entries.iter().any(|r| r.len() != m) {
            return Err(D::Error::custom("gram entries must be a square matrix matching the labels"));
        }
        let entries = raw
            .entries
            .iter()
            .map(|row| row.iter().map(|s| crate::measure::parse_rational(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        for i in 0..m {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(D::Error::custom(format!("gram entries not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(GramMatrix { entries, labels: raw.labels, normalized: raw.normalized })
    }
}

/// Exact Gram matrix of `{h_I 1_E : I ∈ family}`.
pub fn build_gram(family: &[DyadicInterval], set: &StepSet, normalized: bool) -> Result<GramMatrix> {
    // |lh I ∩ E| and |rh I ∩ E| determine every entry involving I.
    let halves: Vec<(Rational, Rational)> = family
        .par_iter()
        .map(|i| {
            let (lh, rh) = i.halves();
            (set.intersect_measure(&lh), set.intersect_measure(&rh))
        })
        .collect();
    if normalized {
        if let Some(k) = halves.iter().position(|(l, r)| (l + r).is_zero()) {
            return input(format!("family member {} has zero norm on E and cannot be normalized", family[k]));
        }
    }
    let entries: Vec<Vec<Rational>> = (0..family.len())
        .into_par_iter()
        .map(|a| {
            (0..family.len())
                .map(|b| {
                    let (i, j) = (&family[a], &family[b]);
                    if a == b {
                        return &halves[a].0 + &halves[a].1;
                    }
                    let (outer, inner, inner_idx) = if i.contains(j) {
                        (i, j, b)
                    } else if j.contains(i) {
                        (j, i, a)
                    } else {
                        return Rational::zero();
                    };
                    let mass = &halves[inner_idx].1 - &halves[inner_idx].0;
                    match outer.haar_sign_on(inner) {
                        Some(s) if s < 0 => -mass,
                        _ => mass,
                    }
                })
                .collect()
        })
        .collect();
    Ok(GramMatrix { entries, labels: family.to_vec(), normalized })
}

/// Extreme eigenvalues of `G` (or of `D^{-1/2} G D^{-1/2}` when normalized).
pub fn eig_bounds(gram: &GramMatrix) -> Result<(f64, f64)> {
    let m = if gram.normalized { gram.normalized_f64() } else { gram.to_f64() };
    linalg::extreme_eigenvalues(&m)
}

/// Extreme eigenvalues of an arbitrary exact symmetric matrix.
pub fn eig_bounds_exact(entries: &[Vec<Rational>]) -> Result<(f64, f64)> {
    let m: Vec<Vec<f64>> = entries.iter().map(|row| row.iter().map(to_f64).collect()).collect();
    linalg::extreme_eigenvalues(&m)
}

/// Exact decision of `G − shift·D ⪰ 0` for a diagonal `D`.
pub fn psd_certificate(gram: &GramMatrix, shift: &Rational, diag: &[Rational]) -> bool {
    assert_eq!(diag.len(), gram.size(), "diagonal length must match the Gram matrix");
    let mut m = gram.entries.clone();
    for (i, d) in diag.iter().enumerate() {
        m[i][i] -= shift * d;
    }
    linalg::is_positive_semidefinite(m, PivotOrder::Fixed(&gram.leaves_first()))
}

/// `‖Σ a_I h_I 1_E‖² ≥ c Σ a_I² ‖h_I 1_E‖²` for all coefficients on `family`, exactly.
pub fn verify_riesz(family: &[DyadicInterval], set: &StepSet, c: &Rational) -> Result<bool> {
    let gram = build_gram(family, set, false)?;
    Ok(psd_certificate(&gram, c, &gram.diagonal()))
}

/// `‖Σ a_I h_I 1_E‖² ≤ (1/p) Σ a_I² ‖h_I 1_E‖²` for all coefficients, exactly,
/// i.e. `(1/p)·D − G ⪰ 0`.
pub fn verify_bessel(family: &[DyadicInterval], set: &StepSet, p: &Rational) -> Result<bool> {
    if *p <= Rational::zero() {
        return input(format!("Bessel threshold p must be positive, got {}", format_rational(p)));
    }
    let gram = build_gram(family, set, false)?;
    Ok(bessel_certificate(&gram, &(Rational::one() / p)))
}

/// Exact decision of `bound·D − G ⪰ 0`.
pub fn bessel_certificate(gram: &GramMatrix, bound: &Rational) -> bool {
    let m: Vec<Vec<Rational>> = gram
        .entries
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, g)| if i == j { bound * g - g } else { -g.clone() })
                .collect()
        })
        .collect();
    linalg::is_positive_semidefinite(m, PivotOrder::Fixed(&gram.leaves_first()))
}

/// Gram-level view of `u_i' = u_i − u/n` for orthonormal `u_1, …, u_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerturbationDemo {
    pub n: usize,
    /// `Σ ‖u_i'‖²`
    #[serde(with = "rational_str")]
    pub sum_norm_sq: Rational,
    /// `‖Σ u_i'‖²`
    #[serde(with = "rational_str")]
    pub norm_of_sum_sq: Rational,
    /// `‖u_i − u_i'‖²`, the same for every `i`.
    #[serde(with = "rational_str")]
    pub per_vector_perturbation: Rational,
}

/// `⟨u_i', u_j'⟩ = δ_ij − 1/n`.
pub fn perturbation_gram(n: usize) -> Result<Vec<Vec<Rational>>> {
    if n < 2 {
        return input(format!("perturbation demo needs n >= 2, got {n}"));
    }
    let inv = Rational::new(1.into(), n.into());
    Ok((0..n)
        .map(|i| (0..n).map(|j| if i == j { Rational::one() - &inv } else { -inv.clone() }).collect())
        .collect())
}

pub fn perturbation_demo(n: usize) -> Result<PerturbationDemo> {
    let gram = perturbation_gram(n)?;
    let sum_norm_sq = (0..n).map(|i| gram[i][i].clone()).sum();
    let norm_of_sum_sq = gram.iter().flatten().sum();
    // u_i − u_i' = u/n has coordinates 1/n in the orthonormal basis.
    let inv = Rational::new(1.into(), n.into());
    let per_vector_perturbation = (0..n).map(|_| &inv * &inv).sum::<Rational>();
    Ok(PerturbationDemo { n, sum_norm_sq, norm_of_sum_sq, per_vector_perturbation })
}

/// `Σ_{I,J} c_I c_J ⟨h_I 1_E, h_J 1_E⟩` for a coefficient vector aligned with the labels.
pub fn quadratic_form(gram: &GramMatrix, coeffs: &[Rational]) -> Rational {
    let mut total = Rational::zero();
    for (i, row) in gram.entries.iter().enumerate() {
        if coeffs[i].is_zero() {
            continue;
        }
        for (j, g) in row.iter().enumerate() {
            if !g.is_zero() && !coeffs[j].is_zero() {
                total += &coeffs[i] * &coeffs[j] * g;
            }
        }
    }
    total
}

/// `‖h_I 1_E‖²` for each member, without building the Gram matrix.
pub fn restricted_diagonal(family: &[DyadicInterval], set: &StepSet) -> Vec<Rational> {
    family.iter().map(|i| restricted_norm_sq(i, set)).collect()
}
