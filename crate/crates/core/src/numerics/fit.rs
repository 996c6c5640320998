//! Linear least squares onto a fixed set of basis functions.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Outcome of [`fit_basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One coefficient per basis function, in the order given.
    pub coefficients: Vec<f64>,
    pub rms_residual: f64,
    pub max_residual: f64,
    /// Condition number of the normal system (square of the column-scaled
    /// design matrix condition number).
    pub condition: f64,
}

/// Smallest singular value ratio accepted before reporting rank deficiency.
const RANK_RTOL: f64 = 1e-13;

/// Least-squares fit of `samples` (abscissa, value) onto `basis`.
///
/// Solved through an SVD of the column-equilibrated design matrix, never
/// through the normal equations.
pub fn fit_basis(samples: &[(f64, f64)], basis: &[&dyn Fn(f64) -> f64]) -> Result<FitResult> {
    let m = samples.len();
    let k = basis.len();
    if k == 0 {
        return Err(Error::Invalid("empty basis".into()));
    }
    if m < 2 * k {
        return Err(Error::Invalid(format!(
            "{m} samples for {k} basis functions; need at least {}",
            2 * k
        )));
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    if xs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invalid("sample abscissae must be distinct".into()));
    }

    let mut a = DMatrix::<f64>::zeros(m, k);
    let mut rhs = DVector::<f64>::zeros(m);
    for (i, &(s, v)) in samples.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite sample value at s = {s}"
            )));
        }
        rhs[i] = v;
        for (j, f) in basis.iter().enumerate() {
            let b = f(s);
            if !b.is_finite() {
                return Err(Error::Numerical(format!(
                    "basis function {j} is not finite at s = {s}"
                )));
            }
            a[(i, j)] = b;
        }
    }
    let norms: Vec<f64> = (0..k).map(|j| a.column(j).norm()).collect();
    for (j, &nrm) in norms.iter().enumerate() {
        if nrm == 0.0 {
            return Err(Error::RankDeficient(f64::INFINITY));
        }
        a.column_mut(j).scale_mut(1.0 / nrm);
    }

    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = smax / smin;
    if !(smin > RANK_RTOL * smax) {
        return Err(Error::RankDeficient(cond * cond));
    }
    let scaled = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let residual = &a * &scaled - &rhs;
    let coefficients = scaled.iter().zip(&norms).map(|(c, n)| c / n).collect();
    let rms_residual = (residual.norm_squared() / m as f64).sqrt();
    let max_residual = residual.amax();
    Ok(FitResult {
        coefficients,
        rms_residual,
        max_residual,
        condition: cond * cond,
    })
}
