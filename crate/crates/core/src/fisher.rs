//! Fisher information matrix of an ARMA(p,q) model.
//!
//! For `φ(B)z_t = θ(B)a_t` the information matrix of `(φ₁…φ_p, θ₁…θ_q)` is
//! `σ_a⁻² E{A_tA_t′}` with `A_t = (v_{t−1}, …, v_{t−p}, u_{t−1}, …, u_{t−q})`,
//! where the derivative processes satisfy `φ(B)v_t = −a_t` and
//! `θ(B)u_t = a_t`. The innovation variance cancels, so nothing here takes
//! a `σ` argument.
//!
//! - The v-v and u-u blocks are Toeplitz in the AR autocovariances of `φ`
//!   and `θ`, obtained from an exact Yule–Walker solve.
//! - The v-u block is `E[v_t u_{t+m}] = −Σ_k ψ_k π_{k+m}` with `ψ`, `π` the
//!   MA(∞) weights of `1/φ` and `1/θ`, summed with adaptive truncation.
//!
//! Row and column order follows `A_t` exactly and is part of the public
//! contract: indices `0..p` are `v_{t−1}…v_{t−p}`, indices `p..p+q` are
//! `u_{t−1}…u_{t−q}`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{FimError, Operator, Result};
use crate::poly::{InverseRootSet, Polynomial, DEFAULT_RECONSTRUCT_TOL};

/// Default absolute tolerance for series-evaluated matrix entries.
pub const DEFAULT_TOL: f64 = 1e-12;
/// `λ_min/λ_max` below this classifies the matrix as singular.
pub const SINGULARITY_THRESHOLD: f64 = 1e-10;
/// Default stationarity/invertibility margin for [`ArmaModel`].
pub const DEFAULT_MARGIN: f64 = 1e-4;

const INITIAL_TRUNCATION: usize = 64;
const MAX_TRUNCATION: usize = 1 << 20;

/// A validated ARMA(p,q) model `φ(B)z_t = θ(B)a_t`.
///
/// Both operators use Box–Jenkins signs: `phi = [0.5]` is `1 − 0.5B`.
/// Construction rejects any operator with an inverse root of modulus above
/// `1 − margin`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaModel {
    phi: Polynomial,
    theta: Polynomial,
    margin: f64,
    phi_roots: InverseRootSet,
    theta_roots: InverseRootSet,
}

impl ArmaModel {
    pub fn new(phi: Polynomial, theta: Polynomial, margin: f64) -> Result<Self> {
        Self::with_reconstruct_tol(phi, theta, margin, DEFAULT_RECONSTRUCT_TOL)
    }

    /// As [`ArmaModel::new`] with an explicit root reconstruction tolerance.
    pub fn with_reconstruct_tol(
        phi: Polynomial,
        theta: Polynomial,
        margin: f64,
        tol_reconstruct: f64,
    ) -> Result<Self> {
        if !(margin > 0.0 && margin < 1.0) {
            return Err(FimError::InvalidArgument(format!(
                "stationarity margin must lie in (0, 1), got {margin}"
            )));
        }
        let phi_roots = checked_roots(&phi, Operator::Phi, margin, tol_reconstruct)?;
        let theta_roots = checked_roots(&theta, Operator::Theta, margin, tol_reconstruct)?;
        Ok(Self {
            phi,
            theta,
            margin,
            phi_roots,
            theta_roots,
        })
    }

    /// Builds a model from Box–Jenkins coefficient slices with the default margin.
    pub fn from_coeffs(phi: &[f64], theta: &[f64]) -> Result<Self> {
        Self::new(
            Polynomial::new(phi.to_vec())?,
            Polynomial::new(theta.to_vec())?,
            DEFAULT_MARGIN,
        )
    }

    pub fn phi(&self) -> &Polynomial {
        &self.phi
    }

    pub fn theta(&self) -> &Polynomial {
        &self.theta
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn phi_roots(&self) -> &InverseRootSet {
        &self.phi_roots
    }

    pub fn theta_roots(&self) -> &InverseRootSet {
        &self.theta_roots
    }

    pub fn p(&self) -> usize {
        self.phi.degree()
    }

    pub fn q(&self) -> usize {
        self.theta.degree()
    }

    /// Largest inverse-root modulus across both operators.
    pub fn max_modulus(&self) -> f64 {
        self.phi_roots.max_modulus().max(self.theta_roots.max_modulus())
    }

    /// The dual model with the roles of `φ` and `θ` exchanged.
    pub fn dual(&self) -> ArmaModel {
        ArmaModel {
            phi: self.theta.clone(),
            theta: self.phi.clone(),
            margin: self.margin,
            phi_roots: self.theta_roots.clone(),
            theta_roots: self.phi_roots.clone(),
        }
    }
}

fn checked_roots(
    p: &Polynomial,
    operator: Operator,
    margin: f64,
    tol_reconstruct: f64,
) -> Result<InverseRootSet> {
    let roots = p.inverse_roots(tol_reconstruct)?;
    let bound = 1.0 - margin;
    let max_modulus = roots.max_modulus();
    if max_modulus > bound {
        return Err(FimError::NonStationary {
            operator,
            max_modulus,
            bound,
            offending: roots
                .roots
                .iter()
                .filter(|g| g.norm() > bound)
                .map(|g| (g.re, g.im))
                .collect(),
        });
    }
    Ok(roots)
}

/// Inverse roots of a standalone polynomial, rejecting anything on or
/// outside the unit circle.
fn strictly_stationary(p: &Polynomial, operator: Operator) -> Result<f64> {
    let roots = p.inverse_roots(DEFAULT_RECONSTRUCT_TOL)?;
    let rho = roots.max_modulus();
    if rho >= 1.0 {
        return Err(FimError::NonStationary {
            operator,
            max_modulus: rho,
            bound: 1.0,
            offending: roots
                .roots
                .iter()
                .filter(|g| g.norm() >= 1.0)
                .map(|g| (g.re, g.im))
                .collect(),
        });
    }
    Ok(rho)
}

/// MA(∞) weights `ψ₀ = 1, ψ₁, …, ψ_N` of `1/c(B)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSequence {
    pub values: Vec<f64>,
    /// Geometric estimate of `Σ_{k>N} |ψ_k|`.
    pub truncation_error_bound: f64,
}

/// Computes `ψ₀…ψ_n` from `ψ_k = Σ_{j=1..min(k,d)} c_jψ_{k−j}`.
pub fn psi_weights(p: &Polynomial, n: usize) -> Result<WeightSequence> {
    let rho = strictly_stationary(p, Operator::Phi)?;
    let values = psi_raw(p.coeffs(), n + 1);
    let max_abs = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let truncation_error_bound = if rho == 0.0 {
        0.0
    } else {
        max_abs * rho.powi((n + 1) as i32) / (1.0 - rho)
    };
    Ok(WeightSequence {
        values,
        truncation_error_bound,
    })
}

/// First `len` ψ-weights, no validation.
fn psi_raw(coeffs: &[f64], len: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(len);
    for k in 0..len {
        if k == 0 {
            psi.push(1.0);
            continue;
        }
        let v: f64 = coeffs
            .iter()
            .take(k)
            .enumerate()
            .map(|(j, c)| c * psi[k - 1 - j])
            .sum();
        psi.push(v);
    }
    psi
}

/// Autocovariances `γ(0…max_lag)` of the AR process `c(B)x_t = e_t` with
/// unit innovation variance.
///
/// `γ(0…d)` come from the `(d+1)`-dimensional Yule–Walker system
/// `γ(k) − Σ_j c_jγ(|k−j|) = δ_{k0}`; higher lags follow the recursion
/// `γ(k) = Σ_j c_jγ(k−j)`.
pub fn ar_autocovariance(p: &Polynomial, max_lag: usize) -> Result<Vec<f64>> {
    strictly_stationary(p, Operator::Phi)?;
    yule_walker(p.coeffs(), max_lag)
}

fn yule_walker(c: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    let d = c.len();
    let mut system = DMatrix::<f64>::identity(d + 1, d + 1);
    for k in 0..=d {
        for (j, cj) in c.iter().enumerate() {
            let lag = k.abs_diff(j + 1);
            system[(k, lag)] -= cj;
        }
    }
    let mut rhs = DVector::<f64>::zeros(d + 1);
    rhs[0] = 1.0;
    let solution = system
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| {
            FimError::NumericalFailure(format!("singular Yule–Walker system for {c:?}"))
        })?;

    let mut gamma: Vec<f64> = solution.iter().copied().collect();
    gamma.truncate(max_lag + 1);
    for k in gamma.len()..=max_lag {
        let v = c.iter().enumerate().map(|(j, cj)| cj * gamma[k - 1 - j]).sum();
        gamma.push(v);
    }
    Ok(gamma)
}

/// `E[v_t u_{t+m}] / σ_a² = −Σ_{k ≥ max(0,−m)} ψ_k π_{k+m}`.
///
/// `ψ` expands `1/φ`, `π` expands `1/θ`; the minus sign comes from
/// `φ(B)v_t = −a_t`.
pub fn cross_covariance(phi: &Polynomial, theta: &Polynomial, m: i64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(FimError::InvalidArgument(format!(
            "truncation tolerance must be positive, got {tol}"
        )));
    }
    let rho_phi = strictly_stationary(phi, Operator::Phi)?;
    let rho_theta = strictly_stationary(theta, Operator::Theta)?;
    let block = cross_block(phi, theta, rho_phi.max(rho_theta), m, m, tol)?;
    Ok(block[0])
}

/// Cross covariances for every lag in `m_lo..=m_hi`, truncated adaptively.
///
/// Starting at `N = 64` terms, `N` doubles until the geometric tail
/// estimate `ρ^N · max|ψ| · max|π| / (1 − ρ²)` and the change in every
/// entry since the previous `N` are both below `tol`.
fn cross_block(
    phi: &Polynomial,
    theta: &Polynomial,
    rho: f64,
    m_lo: i64,
    m_hi: i64,
    tol: f64,
) -> Result<Vec<f64>> {
    let offset = m_lo.unsigned_abs().max(m_hi.unsigned_abs()) as usize;
    let mut n = INITIAL_TRUNCATION;
    let mut previous: Option<Vec<f64>> = None;
    loop {
        let len = n + offset + 1;
        let psi = psi_raw(phi.coeffs(), len);
        let pi = psi_raw(theta.coeffs(), len);
        let values: Vec<f64> = (m_lo..=m_hi)
            .map(|m| {
                let k0 = if m < 0 { m.unsigned_abs() as usize } else { 0 };
                let shift = |k: usize| (k as i64 + m) as usize;
                -(k0..k0 + n).map(|k| psi[k] * pi[shift(k)]).sum::<f64>()
            })
            .collect();

        let max_psi = psi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let max_pi = pi.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let tail = if rho == 0.0 {
            0.0
        } else {
            rho.powi(n as i32) * max_psi * max_pi / (1.0 - rho * rho)
        };
        let change = previous.as_ref().map_or(f64::INFINITY, |prev| {
            prev.iter()
                .zip(&values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        });
        if tail < tol && change < tol {
            return Ok(values);
        }
        if n >= MAX_TRUNCATION {
            return Err(FimError::NumericalFailure(format!(
                "cross-covariance series did not converge within {MAX_TRUNCATION} terms \
                 (tail estimate {tail:e}, last change {change:e})"
            )));
        }
        previous = Some(values);
        n *= 2;
    }
}

/// The `(p+q)`-square information matrix `σ_a⁻² E{A_tA_t′}`.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationMatrix {
    pub p: usize,
    pub q: usize,
    pub entries: DMatrix<f64>,
}

impl InformationMatrix {
    pub fn order(&self) -> usize {
        self.p + self.q
    }

    pub fn row_major(&self) -> Vec<f64> {
        row_major(&self.entries)
    }

    /// Conjugates by the permutation that swaps the `v` and `u` blocks,
    /// giving a `(q, p)` matrix.
    pub fn swap_blocks(&self) -> InformationMatrix {
        let (p, q) = (self.p, self.q);
        let perm = |i: usize| if i < q { p + i } else { i - q };
        let n = p + q;
        InformationMatrix {
            p: q,
            q: p,
            entries: DMatrix::from_fn(n, n, |i, j| self.entries[(perm(i), perm(j))]),
        }
    }
}

pub(crate) fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

/// Assembles `I(φ, θ)` for a validated model.
///
/// `p = q = 0` gives the empty matrix, which is trivially nonsingular.
pub fn information_matrix(model: &ArmaModel, tol: f64) -> Result<InformationMatrix> {
    if !(tol > 0.0) {
        return Err(FimError::InvalidArgument(format!(
            "truncation tolerance must be positive, got {tol}"
        )));
    }
    let (p, q) = (model.p(), model.q());
    let mut entries = DMatrix::<f64>::zeros(p + q, p + q);

    if p > 0 {
        let gamma_v = yule_walker(model.phi().coeffs(), p - 1)?;
        for i in 0..p {
            for j in 0..p {
                entries[(i, j)] = gamma_v[i.abs_diff(j)];
            }
        }
    }
    if q > 0 {
        let gamma_u = yule_walker(model.theta().coeffs(), q - 1)?;
        for i in 0..q {
            for j in 0..q {
                entries[(p + i, p + j)] = gamma_u[i.abs_diff(j)];
            }
        }
    }
    if p > 0 && q > 0 {
        // Row v_{t−i}, column u_{t−j} is E[v_s u_{s+m}] with m = i − j.
        let m_lo = 1 - q as i64;
        let m_hi = p as i64 - 1;
        let block = cross_block(
            model.phi(),
            model.theta(),
            model.max_modulus(),
            m_lo,
            m_hi,
            tol,
        )?;
        for i in 0..p {
            for j in 0..q {
                let m = i as i64 - j as i64;
                let v = block[(m - m_lo) as usize];
                entries[(i, p + j)] = v;
                entries[(p + j, i)] = v;
            }
        }
    }
    Ok(InformationMatrix { p, q, entries })
}

/// Eigen-summary of an information matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralDiagnostics {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub determinant: f64,
    /// `λ_max/λ_min`, infinite when `λ_min ≤ 0`.
    pub condition_number: f64,
    /// `λ_min/λ_max`.
    pub singularity_margin: f64,
}

impl SpectralDiagnostics {
    pub fn is_singular(&self, threshold: f64) -> bool {
        self.singularity_margin < threshold
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::INFINITY)
    }
}

/// Full symmetric eigendecomposition of `info`.
///
/// The empty matrix gets eigenvalues `()`, determinant 1 and margin 1.
pub fn diagnostics(info: &InformationMatrix) -> Result<SpectralDiagnostics> {
    if info.order() == 0 {
        return Ok(SpectralDiagnostics {
            eigenvalues: Vec::new(),
            determinant: 1.0,
            condition_number: 1.0,
            singularity_margin: 1.0,
        });
    }
    let mut eigenvalues = symmetric_eigenvalues(&info.entries)?;
    eigenvalues.sort_by(f64::total_cmp);
    let lambda_min = eigenvalues[0];
    let lambda_max = *eigenvalues.last().expect("order ≥ 1");
    let determinant = eigenvalues.iter().product();
    let condition_number = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    let singularity_margin = if lambda_max > 0.0 {
        lambda_min / lambda_max
    } else {
        0.0
    };
    Ok(SpectralDiagnostics {
        eigenvalues,
        determinant,
        condition_number,
        singularity_margin,
    })
}

pub(crate) fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 10_000)
        .map(|e| e.eigenvalues.iter().copied().collect())
        .ok_or_else(|| FimError::NumericalFailure("symmetric eigensolver did not converge".into()))
}
