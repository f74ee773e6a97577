//! Dense symmetric kernels: an exact rational LDLᵀ semidefiniteness test and a
//! cyclic Jacobi eigenvalue solver for `f64`.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::measure::Rational;

/// Stopping threshold: off-diagonal Frobenius mass relative to `‖A‖_F`.
pub const JACOBI_RELATIVE_TOLERANCE: f64 = 1e-14;

/// Sweep cap before [`Error::NoConvergence`].
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// How the exact factorization chooses its next pivot.
#[derive(Clone, Copy, Debug)]
pub enum PivotOrder<'a> {
    /// Largest remaining diagonal entry.
    LargestDiagonal,
    /// A fixed elimination sequence (a permutation of `0..m`).
    Fixed(&'a [usize]),
}

/// Decides `A ⪰ 0` exactly by symmetric Gaussian elimination (LDLᵀ).
///
/// A negative pivot, or a zero pivot whose remaining row is not identically
/// zero, proves `A` is not positive semidefinite. Updates only touch the
/// nonzero pattern of the pivot row, so elimination orders that avoid fill
/// (leaves of a nesting tree first) run in near-linear time.
pub fn is_positive_semidefinite(mut a: Vec<Vec<Rational>>, order: PivotOrder<'_>) -> bool {
    let m = a.len();
    debug_assert!(a.iter().all(|row| row.len() == m));
    if a.iter().enumerate().any(|(i, row)| row[i].is_negative()) {
        return false;
    }
    let mut eliminated = vec![false; m];
    for step in 0..m {
        let k = match order {
            PivotOrder::Fixed(seq) => seq[step],
            PivotOrder::LargestDiagonal => (0..m)
                .filter(|&i| !eliminated[i])
                .max_by(|&i, &j| a[i][i].cmp(&a[j][j]).then(j.cmp(&i)))
                .expect("a remaining index exists"),
        };
        eliminated[k] = true;
        let pivot = a[k][k].clone();
        let coupled: Vec<usize> = (0..m)
            .filter(|&i| !eliminated[i] && !a[i][k].is_zero())
            .collect();
        if pivot.is_negative() {
            return false;
        }
        if pivot.is_zero() {
            if coupled.is_empty() {
                continue;
            }
            return false;
        }
        let col: Vec<Rational> = coupled.iter().map(|&i| a[i][k].clone()).collect();
        for (x, &i) in coupled.iter().enumerate() {
            let li = &col[x] / &pivot;
            for (y, &j) in coupled.iter().enumerate().skip(x) {
                let update = &li * &col[y];
                a[i][j] -= &update;
                if i != j {
                    a[j][i] -= update;
                }
            }
            if a[i][i].is_negative() {
                return false;
            }
        }
    }
    true
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
///
/// Iterates until the off-diagonal Frobenius norm drops below
/// `JACOBI_RELATIVE_TOLERANCE · ‖A‖_F`.
pub fn symmetric_eigenvalues(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let total: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = JACOBI_RELATIVE_TOLERANCE * total;
    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let residual = off(&a);
        if residual <= threshold || n < 2 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// `(λ_min, λ_max)`; an empty matrix reports `(1, 1)`.
pub fn extreme_eigenvalues(matrix: &[Vec<f64>]) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(matrix)?;
    match (eig.first(), eig.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, hi)),
        _ => Ok((1.0, 1.0)),
    }
}
