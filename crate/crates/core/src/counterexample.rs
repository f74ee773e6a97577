//! The zig-zag construction on `E = [0, 2/3)` showing that no positive lower
//! Riesz constant exists at density threshold `p ≤ 2/3`.
//!
//! `I_0 = [0,1)`, `I_{2n+1} = rh I_{2n}`, `I_{2n+2} = lh I_{2n+1}`, with
//! coefficients `a_0 = 1`, `a_{2n} = 2^{n−1}`. Every `I_{2n}` has density
//! exactly 2/3, so the family `{I_{2n}}` is admissible for every `p ≤ 2/3`.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::{combination, restricted_norm_sq, CoefficientMap, PiecewiseConstant};
use crate::measure::{dyadic_unit, rat, rational_str, DyadicInterval, Rational, StepSet};

/// `E = [0, 2/3)`.
pub fn two_thirds_set() -> StepSet {
    StepSet::interval(Rational::zero(), rat(2, 3)).expect("valid interval")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZigzagState {
    pub n: u32,
    /// `I_n`
    pub interval: DyadicInterval,
    /// `a_n`, defined only for even `n`.
    pub coefficient: Option<Rational>,
}

fn power_of_two(k: u32) -> Rational {
    Rational::from_integer(BigInt::one() << k)
}

/// `I_n` and, for even `n = 2m`, the coefficient `a_{2m}`.
pub fn zigzag(n: u32) -> ZigzagState {
    let mut interval = DyadicInterval::unit();
    for stage in 0..n {
        let (lh, rh) = interval.halves();
        interval = if stage % 2 == 0 { rh } else { lh };
    }
    let coefficient = n.is_multiple_of(2).then(|| match n / 2 {
        0 => Rational::one(),
        m => power_of_two(m - 1),
    });
    ZigzagState { n, interval, coefficient }
}

/// `|I_{2k} ∩ E| = (2/3)|I_{2k}|`, `|I_{2k+1} ∩ E| = (1/3)|I_{2k+1}|` and
/// `|I_j| = 2^{-j}` for every stage up to `2n+1`.
pub fn check_lemma_densities(n: u32) -> bool {
    let e = two_thirds_set();
    (0..=2 * n + 1).all(|stage| {
        let i = zigzag(stage).interval;
        let expected = if stage % 2 == 0 { rat(2, 3) } else { rat(1, 3) };
        i.measure() == dyadic_unit(stage) && e.intersect_measure(&i) == expected * i.measure()
    })
}

/// The coefficients `a_0, a_2, …, a_{2n}` on `I_0, I_2, …, I_{2n}`.
pub fn zigzag_coefficients(n: u32) -> CoefficientMap {
    (0..=n)
        .map(|k| {
            let s = zigzag(2 * k);
            (s.interval, s.coefficient.expect("even stage"))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CounterexampleRow {
    pub n: u32,
    /// `Σ_{k≤n} ‖a_{2k} h_{I_{2k}} 1_E‖²`
    #[serde(with = "rational_str")]
    pub sum_of_norms: Rational,
    /// `‖Σ_{k≤n} a_{2k} h_{I_{2k}} 1_E‖²`
    #[serde(with = "rational_str")]
    pub norm_of_sum: Rational,
    #[serde(with = "rational_str")]
    pub ratio: Rational,
}

/// Rows `n = 0..=max_n`, computed through the generic Haar machinery and
/// checked against `2/3 + n/6` and `2/3`.
pub fn counterexample_table(max_n: u32) -> Result<Vec<CounterexampleRow>> {
    let e = two_thirds_set();
    let mut rows = Vec::with_capacity(max_n as usize + 1);
    let mut sum_of_norms = Rational::zero();
    let mut coeffs = CoefficientMap::new();
    for n in 0..=max_n {
        let s = zigzag(2 * n);
        let a = s.coefficient.expect("even stage");
        sum_of_norms += &a * &a * restricted_norm_sq(&s.interval, &e);
        coeffs.insert(s.interval, a);
        let norm_of_sum = combination(&coeffs, &e).norm_sq();

        let expected_sum = rat(2, 3) + rat(n as i64, 6);
        if sum_of_norms != expected_sum || norm_of_sum != rat(2, 3) {
            return Err(Error::Consistency(format!(
                "row {n}: got ({sum_of_norms}, {norm_of_sum}), closed form ({expected_sum}, 2/3)"
            )));
        }
        let ratio = &norm_of_sum / &sum_of_norms;
        rows.push(CounterexampleRow { n, sum_of_norms: sum_of_norms.clone(), norm_of_sum, ratio });
    }
    Ok(rows)
}

/// `Σ_{k≤n} a_{2k} h_{I_{2k}} 1_E`, checked to equal
/// `−1_{[0,1/2)} + 2ⁿ·1_{rh I_{2n} ∩ E}`.
pub fn partial_sum_structure(n: u32) -> Result<PiecewiseConstant> {
    let e = two_thirds_set();
    let f = combination(&zigzag_coefficients(n), &e);

    let (_, rh) = zigzag(2 * n).interval.halves();
    let cut = std::cmp::min(rh.right(), rat(2, 3));
    let spike_on_e = StepSet::interval(rh.left(), cut)?;
    let half = StepSet::interval(Rational::zero(), rat(1, 2))?;
    let expected = PiecewiseConstant::indicator(&half)
        .scale(&-Rational::one())
        .add(&PiecewiseConstant::indicator(&spike_on_e).scale(&power_of_two(n)));

    if f != expected {
        return Err(Error::Consistency(format!(
            "partial sum at n = {n} does not match −1 on [0,1/2) plus 2^n on rh(I_2n) ∩ E"
        )));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn di(level: u32, index: u64) -> DyadicInterval {
        DyadicInterval::new(level, index).unwrap()
    }

    #[test]
    fn zigzag_examples() {
        let z0 = zigzag(0);
        assert_eq!((z0.interval, z0.coefficient), (DyadicInterval::unit(), Some(rat(1, 1))));
        assert_eq!(zigzag(1).interval, di(1, 1));
        assert_eq!(zigzag(1).coefficient, None);
        let z2 = zigzag(2);
        assert_eq!((z2.interval.left(), z2.interval.right()), (rat(1, 2), rat(3, 4)));
        assert_eq!(z2.coefficient, Some(rat(1, 1)));
        assert_eq!(zigzag(6).coefficient, Some(rat(4, 1)));
        for n in 0..20 {
            let s = zigzag(n);
            assert_eq!(s.interval.measure(), dyadic_unit(n));
            if n > 0 {
                let (lh, rh) = zigzag(n - 1).interval.halves();
                assert_eq!(s.interval, if n % 2 == 1 { rh } else { lh });
            }
        }
    }

    #[test]
    fn lemma_densities() {
        assert!(check_lemma_densities(0));
        assert!(check_lemma_densities(5));
        assert!(check_lemma_densities(20));
        let e = two_thirds_set();
        assert_eq!(e.density(&zigzag(0).interval), rat(2, 3));
        assert_eq!(e.density(&zigzag(1).interval), rat(1, 3));
    }

    #[test]
    fn table_examples() {
        let rows = counterexample_table(12).unwrap();
        assert_eq!(rows.len(), 13);
        let pick = |n: usize| (rows[n].sum_of_norms.clone(), rows[n].norm_of_sum.clone(), rows[n].ratio.clone());
        assert_eq!(pick(0), (rat(2, 3), rat(2, 3), rat(1, 1)));
        assert_eq!(pick(1), (rat(5, 6), rat(2, 3), rat(4, 5)));
        assert_eq!(pick(12), (rat(8, 3), rat(2, 3), rat(1, 4)));
        for row in &rows {
            assert_eq!(row.ratio, rat(4, 4 + row.n as i64));
        }
    }

    #[test]
    fn partial_sum_examples() {
        let f0 = partial_sum_structure(0).unwrap();
        assert_eq!(f0.breakpoints(), &[rat(0, 1), rat(1, 2), rat(2, 3), rat(1, 1)]);
        assert_eq!(f0.values(), &[rat(-1, 1), rat(1, 1), rat(0, 1)]);
        let f1 = partial_sum_structure(1).unwrap();
        assert_eq!(f1.breakpoints(), &[rat(0, 1), rat(1, 2), rat(5, 8), rat(2, 3), rat(1, 1)]);
        assert_eq!(f1.values(), &[rat(-1, 1), rat(0, 1), rat(2, 1), rat(0, 1)]);
        for n in 0..10u32 {
            let f = partial_sum_structure(n).unwrap();
            let expected = rat(1, 3) * dyadic_unit(2 * n + 1);
            assert_eq!(f.positive_support_measure(), expected);
        }
    }

    #[test]
    fn family_admissible_exactly_up_to_two_thirds() {
        let e = two_thirds_set();
        for k in 0..8 {
            let i = zigzag(2 * k).interval;
            assert!(e.intersect_measure(&i) >= rat(2, 3) * i.measure());
            assert!(e.intersect_measure(&i) < rat(2, 3) * i.measure() + rat(1, 1_000_000) * i.measure());
            assert!(e.intersect_measure(&i) < rat(67, 100) * i.measure());
        }
    }
}
