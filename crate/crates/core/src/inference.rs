//! Asymptotic covariance of ARMA parameter estimates, `I(φ,θ)⁻¹ / n`.

use nalgebra::DMatrix;

use crate::error::{FimError, Result};
use crate::fisher::{diagnostics, information_matrix, row_major, ArmaModel, InformationMatrix, DEFAULT_TOL};
use crate::redundancy::{detect_common_roots, DEFAULT_TOL_ROOT};

/// Smallest `λ_min/λ_max` for which a covariance is reported.
pub const INVERSION_THRESHOLD: f64 = 1e-8;

/// Sampling covariance of `(φ̂₁…φ̂_p, θ̂₁…θ̂_q)` for a series of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCovariance {
    pub n: usize,
    pub matrix: DMatrix<f64>,
    pub standard_errors: Vec<f64>,
    pub correlations: DMatrix<f64>,
}

impl AsymptoticCovariance {
    pub fn row_major(&self) -> Vec<f64> {
        row_major(&self.matrix)
    }

    pub fn correlations_row_major(&self) -> Vec<f64> {
        row_major(&self.correlations)
    }
}

/// `I(φ,θ)⁻¹ / n` with standard errors and correlations.
///
/// Refuses when `λ_min/λ_max < 1e-8`; the error carries the model's
/// redundancy report, since a singular information matrix means
/// `φ` and `θ` share a root.
pub fn asymptotic_covariance(model: &ArmaModel, n: usize) -> Result<AsymptoticCovariance> {
    if n == 0 {
        return Err(FimError::InvalidArgument("series length n must be at least 1".into()));
    }
    let info = information_matrix(model, DEFAULT_TOL)?;
    let inverse = match invert_information(&info) {
        Ok(inv) => inv,
        Err(FimError::Singular { margin, threshold, .. }) => {
            return Err(FimError::Singular {
                margin,
                threshold,
                report: Box::new(detect_common_roots(model, DEFAULT_TOL_ROOT)?),
            })
        }
        Err(e) => return Err(e),
    };
    let matrix = inverse / n as f64;
    let standard_errors: Vec<f64> = matrix.diagonal().iter().map(|v| v.sqrt()).collect();
    let k = matrix.nrows();
    let correlations = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            1.0
        } else {
            (matrix[(i, j)] / (standard_errors[i] * standard_errors[j])).clamp(-1.0, 1.0)
        }
    });
    Ok(AsymptoticCovariance {
        n,
        matrix,
        standard_errors,
        correlations,
    })
}

/// Symmetric inverse of an information matrix.
///
/// Cholesky first, LU as fallback. Anything below [`INVERSION_THRESHOLD`],
/// or a matrix neither factorization can invert, is reported as
/// [`FimError::Singular`] with an empty-pairing report; callers holding the
/// model should attach the real report.
pub fn invert_information(info: &InformationMatrix) -> Result<DMatrix<f64>> {
    let diag = diagnostics(info)?;
    let singular = |margin: f64| FimError::Singular {
        margin,
        threshold: INVERSION_THRESHOLD,
        report: Box::new(crate::redundancy::RedundancyReport {
            resultant_magnitude: None,
            paired_roots: Vec::new(),
            verdict: crate::redundancy::Verdict::NotRedundant,
            tol_root: DEFAULT_TOL_ROOT,
            near_redundant_gap: crate::redundancy::NEAR_REDUNDANT_GAP,
            warning: Some("report unavailable: inverted without the model".into()),
        }),
    };
    if diag.is_singular(INVERSION_THRESHOLD) {
        return Err(singular(diag.singularity_margin));
    }
    let a = &info.entries;
    let inverse = match a.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => a
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| singular(diag.singularity_margin))?,
    };
    let k = inverse.nrows();
    Ok(DMatrix::from_fn(k, k, |i, j| 0.5 * (inverse[(i, j)] + inverse[(j, i)])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn info(p: usize, q: usize, v: &[f64]) -> InformationMatrix {
        InformationMatrix {
            p,
            q,
            entries: DMatrix::from_row_slice(p + q, p + q, v),
        }
    }

    #[test]
    fn ar1_variance() {
        let m = ArmaModel::from_coeffs(&[0.5], &[]).unwrap();
        let cov = asymptotic_covariance(&m, 100).unwrap();
        assert_abs_diff_eq!(cov.matrix[(0, 0)], 0.0075, epsilon = 1e-15);
        assert_abs_diff_eq!(cov.standard_errors[0], 0.0075_f64.sqrt(), epsilon = 1e-15);
        assert_eq!(cov.correlations[(0, 0)], 1.0);
    }

    #[test]
    fn redundant_model_reports_common_root() {
        let m = ArmaModel::from_coeffs(&[0.5], &[0.5]).unwrap();
        match asymptotic_covariance(&m, 100) {
            Err(FimError::Singular { report, .. }) => {
                assert!(report.is_redundant());
                assert_abs_diff_eq!(report.paired_roots[0].g.re, 0.5, epsilon = 1e-12);
            }
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn arma11_inverse_by_adjugate() {
        let (a, b, d): (f64, f64, f64) = (4.0 / 3.0, -1.25, 25.0 / 21.0);
        let det = a * d - b * b;
        let m = ArmaModel::from_coeffs(&[0.5], &[0.4]).unwrap();
        let cov = asymptotic_covariance(&m, 1).unwrap();
        let want = [d / det, -b / det, -b / det, a / det];
        for (got, want) in cov.row_major().iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9 * want.abs());
        }
        assert!(cov.correlations[(0, 1)] > 0.0 && cov.correlations[(0, 1)] <= 1.0);
    }

    #[test]
    fn invert_examples() {
        let inv = invert_information(&info(1, 0, &[4.0 / 3.0])).unwrap();
        assert_abs_diff_eq!(inv[(0, 0)], 0.75, epsilon = 1e-15);

        let inv = invert_information(&info(1, 1, &[1.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(inv, DMatrix::identity(2, 2));

        let m = info(1, 1, &[4.0 / 3.0, -1.25, -1.25, 25.0 / 21.0]);
        let inv = invert_information(&m).unwrap();
        let residual = (&m.entries * &inv - DMatrix::<f64>::identity(2, 2)).amax();
        assert!(residual <= 1e-9);
        assert_eq!(inv[(0, 1)], inv[(1, 0)]);
    }

    #[test]
    fn invert_refuses_singular() {
        let m = info(1, 1, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(invert_information(&m), Err(FimError::Singular { .. })));
    }

    #[test]
    fn zero_length_is_rejected() {
        let m = ArmaModel::from_coeffs(&[0.5], &[]).unwrap();
        assert!(matches!(asymptotic_covariance(&m, 0), Err(FimError::InvalidArgument(_))));
    }
}
