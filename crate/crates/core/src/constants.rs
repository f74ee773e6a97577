//! Closed-form constants: the explicit lower Riesz constant `c(p) = 1/g(1)`,
//! its leading-order behaviour near `p = 2/3`, the conjectured sharp leading
//! term, and the two-colouring constant obtained from a Bessel bound `C < 4/3`.

use std::io::Write;

use num_traits::One;
use serde::Serialize;

use crate::error::{input, Result};
use crate::gram::format_float;
use crate::measure::{format_rational, int, rat, rational_str, to_f64, Rational};
use crate::weights::WeightConfig;

/// `c(p) = (3p−2)² / ((3p−2)² + p(2−p))` for `2/3 < p ≤ 1`.
pub fn riesz_constant(p: &Rational) -> Result<Rational> {
    if *p <= rat(2, 3) || *p > Rational::one() {
        return input(format!(
            "riesz constant needs 2/3 < p <= 1, got {}; for p <= 2/3 no positive constant exists",
            format_rational(p)
        ));
    }
    let d = int(3) * p - int(2);
    let d2 = &d * &d;
    Ok(&d2 / (&d2 + p * (int(2) - p)))
}

/// Leading term `(81/8)(p − 2/3)²`.
pub fn asymptotic_constant(p: f64) -> f64 {
    let x = p - 2.0 / 3.0;
    81.0 / 8.0 * x * x
}

/// Leading term `27(p − 2/3)²` of the conjectured sharp constant.
pub fn sharp_conjectured(p: f64) -> f64 {
    let x = p - 2.0 / 3.0;
    27.0 * x * x
}

/// `C/2 − √(2(C−1)(2−C))` for a Bessel bound `1 ≤ C < 4/3`.
pub fn bcms_constant(bessel: f64) -> Result<f64> {
    if !(1.0..4.0 / 3.0).contains(&bessel) {
        return input(format!(
            "two-colouring constant needs 1 <= C < 4/3, got {bessel}"
        ));
    }
    Ok(bessel / 2.0 - (2.0 * (bessel - 1.0) * (2.0 - bessel)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsReport {
    #[serde(with = "rational_str")]
    pub p: Rational,
    #[serde(with = "rational_str")]
    pub c: Rational,
    #[serde(with = "rational_str", rename = "C")]
    pub upper: Rational,
    pub asymptotic: f64,
    pub sharp_conjectured: f64,
    pub bcms: Option<f64>,
}

pub fn constants_report(p: &Rational) -> Result<ConstantsReport> {
    let c = riesz_constant(p)?;
    let upper = WeightConfig::new(p.clone())?.upper_constant();
    let pf = to_f64(p);
    // Bessel bound C = 1/p is below 4/3 exactly when p > 3/4.
    let bcms = if *p > rat(3, 4) {
        Some(bcms_constant(to_f64(&(Rational::one() / p)))?)
    } else {
        None
    };
    Ok(ConstantsReport {
        p: p.clone(),
        c,
        upper,
        asymptotic: asymptotic_constant(pf),
        sharp_conjectured: sharp_conjectured(pf),
        bcms,
    })
}

/// One report per `p`, sorted ascending, duplicates removed.
pub fn comparison_table(p_values: &[Rational]) -> Result<Vec<ConstantsReport>> {
    let mut ps = p_values.to_vec();
    ps.sort();
    ps.dedup();
    ps.iter().map(constants_report).collect()
}

/// `p, c, c_asymptotic, c_sharp_conjectured, c_bcms` with exact `p` and
/// `c` columns followed by float renderings. The BCMS cell is blank where it
/// does not apply.
pub fn write_comparison_csv<W: Write>(rows: &[ConstantsReport], out: W, digits: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "p_float", "c", "c_float", "c_asymptotic", "c_sharp_conjectured", "c_bcms"])?;
    for r in rows {
        w.write_record([
            format_rational(&r.p),
            format_float(to_f64(&r.p), digits),
            format_rational(&r.c),
            format_float(to_f64(&r.c), digits),
            format_float(r.asymptotic, digits),
            format_float(r.sharp_conjectured, digits),
            r.bcms.map(|b| format_float(b, digits)).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
