//! The weight function `g`, its convexity-type inequalities, and the weighted
//! level-by-level induction behind the lower Riesz bound for `p > 2/3`.
//!
//! For `2/3 < p ≤ 1`,
//!
//! ```text
//! g̃(q) = 1 + p(2−p) / ((3p−2)(3p−2q))
//! g(q)  = g̃(q)          for q ≥ p
//!       = g(p)·q/p       for q ≤ p
//! ```
//!
//! The weight `w_n` is constant on each level-`(n+1)` dyadic cell `I` with
//! value `g(q_I)/q_I`, so `∫_{I∩E} w_n = |I|·g(q_I)`.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{input, Result};
use crate::haar::CoefficientMap;
use crate::measure::{format_rational, int, rat, rational_str, DyadicInterval, Rational, StepSet};

/// Density threshold `p` with `2/3 < p ≤ 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightConfig {
    p: Rational,
}

impl WeightConfig {
    pub fn new(p: Rational) -> Result<Self> {
        if p <= rat(2, 3) || p > Rational::one() {
            return input(format!(
                "weight function needs 2/3 < p <= 1, got {}",
                format_rational(&p)
            ));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    /// The unclipped branch `g̃(q)`.
    pub fn g_tilde(&self, q: &Rational) -> Rational {
        let p = &self.p;
        let three_p_minus_two = int(3) * p - int(2);
        Rational::one()
            + p * (int(2) - p) / (&three_p_minus_two * (int(3) * p - int(2) * q))
    }

    /// `g(q)` for `q ∈ [0, 1]`.
    pub fn g(&self, q: &Rational) -> Result<Rational> {
        check_unit(q)?;
        Ok(self.g_unchecked(q))
    }

    fn g_unchecked(&self, q: &Rational) -> Rational {
        if *q >= self.p {
            self.g_tilde(q)
        } else {
            self.g_tilde(&self.p) * q / &self.p
        }
    }

    /// `C = g(1)`, the upper comparison constant.
    pub fn upper_constant(&self) -> Rational {
        self.g_tilde(&Rational::one())
    }

    /// `g(q)/q`, taking `g(p)/p` (the slope of the linear branch) at `q = 0`.
    pub fn weight_value(&self, q: &Rational) -> Rational {
        if q.is_zero() {
            self.g_tilde(&self.p) / &self.p
        } else {
            self.g_unchecked(q) / q
        }
    }
}

fn check_unit(q: &Rational) -> Result<()> {
    if q.is_negative() || *q > Rational::one() {
        return input(format!("density {} outside [0, 1]", format_rational(q)));
    }
    Ok(())
}

pub fn g(q: &Rational, cfg: &WeightConfig) -> Result<Rational> {
    cfg.g(q)
}

pub fn g_tilde(q: &Rational, cfg: &WeightConfig) -> Rational {
    cfg.g_tilde(q)
}

/// `g(2p−1) = g̃(2p−1)`, the identity that makes `g` convex on `[0,1]`.
pub fn check_lemma_g2pm1(cfg: &WeightConfig) -> bool {
    let q = int(2) * cfg.p() - int(1);
    cfg.g_unchecked(&q) == cfg.g_tilde(&q)
}

/// Decides, for all real `a` at once,
/// `(1−a)²/2·g(q₁) + (1+a)²/2·g(q₂) − g((q₁+q₂)/2) ≥ a²`.
///
/// The difference is `L·a² + B·a + K`; it is nonnegative everywhere iff
/// `L > 0 ∧ B² ≤ 4LK` or `L = B = 0 ∧ K ≥ 0`. Without `require_mid` only
/// `a = 0` is checked, i.e. `K ≥ 0`.
pub fn check_gpos(q1: &Rational, q2: &Rational, cfg: &WeightConfig, require_mid: bool) -> Result<bool> {
    check_unit(q1)?;
    check_unit(q2)?;
    let mid = (q1 + q2) / int(2);
    if require_mid && mid < *cfg.p() {
        return input(format!(
            "midpoint {} below p = {}",
            format_rational(&mid),
            format_rational(cfg.p())
        ));
    }
    let (g1, g2) = (cfg.g_unchecked(q1), cfg.g_unchecked(q2));
    let avg = (&g1 + &g2) / int(2);
    let k = &avg - cfg.g_unchecked(&mid);
    if !require_mid {
        return Ok(!k.is_negative());
    }
    let l = &avg - Rational::one();
    let b = &g2 - &g1;
    Ok(if l.is_positive() {
        &b * &b <= int(4) * &l * &k
    } else {
        l.is_zero() && b.is_zero() && !k.is_negative()
    })
}

/// Result of `q ≤ g(q) ≤ C·q` with `C = g(1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GcompCheck {
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub c: Rational,
}

pub fn check_gcomp(q: &Rational, cfg: &WeightConfig) -> Result<GcompCheck> {
    let gq = cfg.g(q)?;
    let c = cfg.upper_constant();
    Ok(GcompCheck { lower_ok: *q <= gq, upper_ok: gq <= &c * q, c })
}

/// The weight `w_n`: one value per level-`(n+1)` cell.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightProfile {
    n: u32,
    values: BTreeMap<DyadicInterval, Rational>,
}

impl WeightProfile {
    /// Index `n` of `w_n`; cells live at level `n + 1`.
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn cell_level(&self) -> u32 {
        self.n + 1
    }

    pub fn value(&self, cell: &DyadicInterval) -> Option<&Rational> {
        self.values.get(cell)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DyadicInterval, &Rational)> {
        self.values.iter()
    }
}

pub fn weight_profile(set: &StepSet, n: u32, cfg: &WeightConfig) -> WeightProfile {
    let values = DyadicInterval::level_iter(n + 1)
        .map(|cell| {
            let q = set.density(&cell);
            (cell, cfg.weight_value(&q))
        })
        .collect();
    WeightProfile { n, values }
}

/// Value of `Σ a_I h_I` (restricted to `level ≤ cell.level − 1`) on `cell`,
/// where every such `h_I` is constant.
fn value_on_cell(coeffs: &CoefficientMap, cell: &DyadicInterval) -> Rational {
    let mut b = Rational::zero();
    for level in 0..cell.level() {
        let anc = cell.ancestor_at(level).expect("level below cell level");
        if let Some(a) = coeffs.get(&anc) {
            match anc.haar_sign_on(cell) {
                Some(s) if s < 0 => b -= a,
                _ => b += a,
            }
        }
    }
    b
}

/// `‖Σ_{I ∈ D_n} a_I h_I 1_E‖²_{L²(w_n)}`, exactly, cell by cell at level `n+1`.
///
/// Coefficients above level `n` are ignored.
pub fn weighted_norm_sq(set: &StepSet, coeffs: &CoefficientMap, n: u32, cfg: &WeightConfig) -> Rational {
    let profile = weight_profile(set, n, cfg);
    profile
        .iter()
        .map(|(cell, w)| {
            let b = value_on_cell(coeffs, cell);
            if b.is_zero() {
                return Rational::zero();
            }
            &b * &b * set.intersect_measure(cell) * w
        })
        .sum()
}

/// Both sides of one induction step, evaluated exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InductionStep {
    pub n: u32,
    pub holds: bool,
    /// `‖Σ_{D_{n+1}}‖²_{w_{n+1}} − ‖Σ_{D_n}‖²_{w_n}`
    #[serde(with = "rational_str")]
    pub lhs: Rational,
    /// `Σ_{I ∈ D_{n+1} \ D_n} ‖a_I h_I 1_E‖²`
    #[serde(with = "rational_str")]
    pub rhs: Rational,
}

fn check_admissible(set: &StepSet, coeffs: &CoefficientMap, cfg: &WeightConfig) -> Result<()> {
    for (i, _) in coeffs.iter() {
        if set.intersect_measure(i) < cfg.p() * i.measure() {
            return input(format!(
                "coefficient on {i} is inadmissible: density {} < p = {}",
                format_rational(&set.density(i)),
                format_rational(cfg.p())
            ));
        }
    }
    Ok(())
}

/// Evaluates the step from `D_n` to `D_{n+1}`:
/// `‖Σ_{D_{n+1}} a h 1_E‖²_{w_{n+1}} − ‖Σ_{D_n} a h 1_E‖²_{w_n} ≥ Σ_{level n+1} ‖a h 1_E‖²`.
pub fn induction_step_check(
    set: &StepSet,
    coeffs: &CoefficientMap,
    n: u32,
    cfg: &WeightConfig,
) -> Result<InductionStep> {
    if let Some(level) = coeffs.max_level() {
        if level > n + 1 {
            return input(format!("coefficients reach level {level}, beyond D_{}", n + 1));
        }
    }
    // Only the new level needs q_J ≥ p; the partial sum b_J below it is arbitrary.
    let new_level: CoefficientMap = coeffs
        .iter()
        .filter(|(i, _)| i.level() == n + 1)
        .map(|(i, a)| (*i, a.clone()))
        .collect();
    check_admissible(set, &new_level, cfg)?;
    let upper = weighted_norm_sq(set, coeffs, n + 1, cfg);
    let lower = weighted_norm_sq(set, &coeffs.truncated(n), n, cfg);
    let lhs = upper - lower;
    let rhs: Rational = coeffs
        .iter()
        .filter(|(i, _)| i.level() == n + 1)
        .map(|(i, a)| a * a * set.intersect_measure(i))
        .sum();
    Ok(InductionStep { n, holds: lhs >= rhs, lhs, rhs })
}

/// The single-interval form of the induction step:
/// `(b−a)²|lh J|g(q₁) + (b+a)²|rh J|g(q₂) − b²|J|g((q₁+q₂)/2) ≥ |J|·(q₁+q₂)/2·a²`.
pub fn per_interval_check(
    set: &StepSet,
    interval: &DyadicInterval,
    b: &Rational,
    a: &Rational,
    cfg: &WeightConfig,
) -> bool {
    let (lh, rh) = interval.halves();
    let (q1, q2) = (set.density(&lh), set.density(&rh));
    let mid = (&q1 + &q2) / int(2);
    let bm = b - a;
    let bp = b + a;
    let lhs = &bm * &bm * lh.measure() * cfg.g_unchecked(&q1)
        + &bp * &bp * rh.measure() * cfg.g_unchecked(&q2)
        - b * b * interval.measure() * cfg.g_unchecked(&mid);
    let rhs = interval.measure() * mid * a * a;
    lhs >= rhs
}

/// Full bookkeeping of the weighted induction up to `D_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TelescopeReport {
    pub depth: u32,
    #[serde(with = "rational_str")]
    pub p: Rational,
    #[serde(with = "rational_str", rename = "C")]
    pub upper_constant: Rational,
    /// `‖a_{[0,1)} h 1_E‖²_{w_0}`
    #[serde(with = "rational_str")]
    pub base_lhs: Rational,
    /// `‖a_{[0,1)} h 1_E‖²`
    #[serde(with = "rational_str")]
    pub base_rhs: Rational,
    pub base_holds: bool,
    pub steps: Vec<InductionStep>,
    /// `‖Σ_{D_k} a h 1_E‖²_{w_k}` evaluated directly.
    #[serde(with = "rational_str")]
    pub weighted_norm_sq: Rational,
    /// `‖Σ_{D_k} a h 1_E‖²`
    #[serde(with = "rational_str")]
    pub norm_sq: Rational,
    /// `Σ_{D_k} ‖a_I h_I 1_E‖²`
    #[serde(with = "rational_str")]
    pub sum_of_norms: Rational,
    pub weights_in_range: bool,
    /// base + steps reproduce both sides exactly.
    pub telescopes: bool,
    /// `C·‖Σ‖² ≥ ‖Σ‖²_{w_k} ≥ Σ‖a h 1_E‖²`
    pub final_inequality: bool,
}

impl TelescopeReport {
    pub fn all_hold(&self) -> bool {
        self.base_holds
            && self.steps.iter().all(|s| s.holds)
            && self.weights_in_range
            && self.telescopes
            && self.final_inequality
    }
}

/// Runs the base case and every step `n = 0..k−1`, then checks that the
/// telescoped sum equals the directly evaluated weighted inequality at `D_k`
/// and that removing the weight costs at most the factor `C = g(1)`.
pub fn telescoping_check(
    set: &StepSet,
    coeffs: &CoefficientMap,
    depth: u32,
    cfg: &WeightConfig,
) -> Result<TelescopeReport> {
    let coeffs = coeffs.truncated(depth);
    check_admissible(set, &coeffs, cfg)?;
    let c = cfg.upper_constant();

    let base = coeffs.truncated(0);
    let base_lhs = weighted_norm_sq(set, &base, 0, cfg);
    let base_rhs = base.sum_of_norms(set);

    let mut weights_in_range = true;
    for n in 0..=depth {
        let profile = weight_profile(set, n, cfg);
        weights_in_range &= profile.iter().all(|(_, w)| *w >= Rational::one() && *w <= c);
    }

    let steps = (0..depth)
        .map(|n| induction_step_check(set, &coeffs.truncated(n + 1), n, cfg))
        .collect::<Result<Vec<_>>>()?;

    let weighted = weighted_norm_sq(set, &coeffs, depth, cfg);
    let sum_of_norms = coeffs.sum_of_norms(set);
    let norm_sq = crate::haar::combination(&coeffs, set).norm_sq();

    let lhs_total = steps.iter().fold(base_lhs.clone(), |acc, s| acc + &s.lhs);
    let rhs_total = steps.iter().fold(base_rhs.clone(), |acc, s| acc + &s.rhs);
    let telescopes = lhs_total == weighted && rhs_total == sum_of_norms;
    let final_inequality = &c * &norm_sq >= weighted && weighted >= sum_of_norms;

    Ok(TelescopeReport {
        depth,
        p: cfg.p().clone(),
        upper_constant: c,
        base_holds: base_lhs >= base_rhs,
        base_lhs,
        base_rhs,
        steps,
        weighted_norm_sq: weighted,
        norm_sq,
        sum_of_norms,
        weights_in_range,
        telescopes,
        final_inequality,
    })
}

/// One failing grid pair or point in a weight verification sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GridFailure {
    pub check: &'static str,
    #[serde(with = "rational_str")]
    pub q1: Rational,
    #[serde(with = "rational_str")]
    pub q2: Rational,
}

/// Outcome of checking every inequality of the weight function on a grid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightsReport {
    #[serde(with = "rational_str")]
    pub p: Rational,
    #[serde(with = "rational_str")]
    pub grid_step: Rational,
    pub pairs_checked_all_a: usize,
    pub pairs_checked_a_zero: usize,
    pub gpos_failures: Vec<GridFailure>,
    pub gcomp_failures: Vec<GridFailure>,
    pub lemma_g2pm1: bool,
    #[serde(with = "rational_str", rename = "C")]
    pub upper_constant: Rational,
}

impl WeightsReport {
    pub fn passed(&self) -> bool {
        self.gpos_failures.is_empty() && self.gcomp_failures.is_empty() && self.lemma_g2pm1
    }
}

/// Exact sweep over the grid `{0, 1/grid, …, 1}`: the all-`a` inequality on
/// pairs with midpoint `≥ p`, midpoint convexity on all pairs, and
/// `q ≤ g(q) ≤ C·q` at every point.
pub fn verify_weights(cfg: &WeightConfig, grid: u32) -> Result<WeightsReport> {
    use rayon::prelude::*;
    if grid == 0 {
        return input("grid must have at least one step");
    }
    let points: Vec<Rational> = (0..=grid).map(|k| rat(k as i64, grid as i64)).collect();
    let gvals: Vec<Rational> = points.iter().map(|q| cfg.g_unchecked(q)).collect();
    let two = int(2);

    // g at every half-grid midpoint, so pair checks do no repeated work.
    let mid_g: Vec<Rational> = (0..=2 * grid)
        .map(|k| cfg.g_unchecked(&rat(k as i64, 2 * grid as i64)))
        .collect();

    let per_row: Vec<(usize, usize, Vec<GridFailure>)> = (0..=grid as usize)
        .into_par_iter()
        .map(|i| {
            let mut all_a = 0;
            let mut a_zero = 0;
            let mut failures = Vec::new();
            for j in 0..=grid as usize {
                let (g1, g2) = (&gvals[i], &gvals[j]);
                let avg = (g1 + g2) / &two;
                let k = &avg - &mid_g[i + j];
                a_zero += 1;
                if k.is_negative() {
                    failures.push(GridFailure { check: "a=0", q1: points[i].clone(), q2: points[j].clone() });
                }
                let mid = rat((i + j) as i64, 2 * grid as i64);
                if mid >= *cfg.p() {
                    all_a += 1;
                    let l = &avg - Rational::one();
                    let b = g2 - g1;
                    let ok = if l.is_positive() {
                        &b * &b <= int(4) * &l * &k
                    } else {
                        l.is_zero() && b.is_zero() && !k.is_negative()
                    };
                    if !ok {
                        failures.push(GridFailure { check: "all-a", q1: points[i].clone(), q2: points[j].clone() });
                    }
                }
            }
            (all_a, a_zero, failures)
        })
        .collect();

    let mut report = WeightsReport {
        p: cfg.p().clone(),
        grid_step: rat(1, grid as i64),
        pairs_checked_all_a: 0,
        pairs_checked_a_zero: 0,
        gpos_failures: Vec::new(),
        gcomp_failures: Vec::new(),
        lemma_g2pm1: check_lemma_g2pm1(cfg),
        upper_constant: cfg.upper_constant(),
    };
    for (all_a, a_zero, failures) in per_row {
        report.pairs_checked_all_a += all_a;
        report.pairs_checked_a_zero += a_zero;
        report.gpos_failures.extend(failures);
    }
    for q in &points {
        let check = check_gcomp(q, cfg)?;
        if !check.lower_ok {
            report.gcomp_failures.push(GridFailure { check: "q<=g(q)", q1: q.clone(), q2: q.clone() });
        }
        if !check.upper_ok {
            report.gcomp_failures.push(GridFailure { check: "g(q)<=Cq", q1: q.clone(), q2: q.clone() });
        }
    }
    Ok(report)
}
