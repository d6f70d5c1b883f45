//! Redundancy detection, cancelling polynomials and null certificates.
//!
//! An ARMA model is redundant when `φ(B)` and `θ(B)` share a root. In that
//! case removing the shared factor `(1 − gB)` from both gives polynomials
//! `α = φ/(1 − gB)` and `β = θ/(1 − gB)` of degrees `p−1` and `q−1` with
//! `α(B)θ(B) = β(B)φ(B)`, and the vector `z = (α₀…α_{p−1}, β₀…β_{q−1})`
//! satisfies `I(φ,θ)z = 0`: the combination `α(B)v_{t−1} + β(B)u_{t−1}`
//! equals `(−α/φ + β/θ)a_{t−1}`, which vanishes identically.
//!
//! The verdict is driven by root pairing. The Sylvester resultant is
//! reported next to it as corroboration only.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FimError, Result};
use crate::fisher::{ArmaModel, InformationMatrix};
use crate::poly::{sylvester_resultant, Polynomial, RescaledPolynomial};

/// Default inverse-root gap at or below which two roots count as common.
pub const DEFAULT_TOL_ROOT: f64 = 1e-6;
/// Gaps up to this value (but above the root tolerance) raise a warning.
pub const NEAR_REDUNDANT_GAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Redundant,
    NotRedundant,
}

/// An AR inverse root `g` matched with an MA inverse root `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootPair {
    pub g: Complex64,
    pub h: Complex64,
    pub gap: f64,
}

impl RootPair {
    pub fn midpoint(&self) -> Complex64 {
        (self.g + self.h) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RedundancyReport {
    /// `|∏(G_i − H_j)|`; `None` when `p = q = 0`.
    pub resultant_magnitude: Option<f64>,
    /// Matched roots sorted by `(re, im)` of `g`; `min(p, q)` entries.
    pub paired_roots: Vec<RootPair>,
    pub verdict: Verdict,
    pub tol_root: f64,
    pub near_redundant_gap: f64,
    pub warning: Option<String>,
}

impl RedundancyReport {
    pub fn is_redundant(&self) -> bool {
        self.verdict == Verdict::Redundant
    }

    /// Pairs whose gap is within the root tolerance.
    pub fn common_roots(&self) -> impl Iterator<Item = &RootPair> {
        self.paired_roots.iter().filter(|r| r.gap <= self.tol_root)
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.paired_roots.iter().map(|r| r.gap).reduce(f64::min)
    }
}

/// Pairs the inverse roots of `φ` and `θ` and decides redundancy.
///
/// Pairs within `tol_root` are matched first (closest first), and the
/// remaining roots by a minimum-total-gap assignment. Matching exact common
/// roots first keeps them paired even where collinear roots tie in total
/// gap.
pub fn detect_common_roots(model: &ArmaModel, tol_root: f64) -> Result<RedundancyReport> {
    if !(tol_root >= 0.0) {
        return Err(FimError::InvalidArgument(format!(
            "root tolerance must be non-negative, got {tol_root}"
        )));
    }
    let resultant_magnitude = match sylvester_resultant(model.phi(), model.theta()) {
        Ok(r) => Some(r.abs()),
        Err(FimError::UndefinedResultant) => None,
        Err(e) => return Err(e),
    };

    let g_roots = &model.phi_roots().roots;
    let h_roots = &model.theta_roots().roots;
    let mut paired_roots: Vec<RootPair> = match_roots(g_roots, h_roots, tol_root)
        .into_iter()
        .map(|(i, j)| RootPair {
            g: g_roots[i],
            h: h_roots[j],
            gap: (g_roots[i] - h_roots[j]).norm(),
        })
        .collect();
    paired_roots.sort_by(|a, b| a.g.re.total_cmp(&b.g.re).then(a.g.im.total_cmp(&b.g.im)));

    let verdict = if paired_roots.iter().any(|r| r.gap <= tol_root) {
        Verdict::Redundant
    } else {
        Verdict::NotRedundant
    };
    let warning = match paired_roots.iter().map(|r| r.gap).reduce(f64::min) {
        Some(gap) if verdict == Verdict::NotRedundant && gap <= NEAR_REDUNDANT_GAP => Some(format!(
            "near-redundant: closest AR/MA inverse roots differ by {gap:e}; \
             the information matrix is close to singular and covariances may be unreliable"
        )),
        _ => None,
    };

    Ok(RedundancyReport {
        resultant_magnitude,
        paired_roots,
        verdict,
        tol_root,
        near_redundant_gap: NEAR_REDUNDANT_GAP,
        warning,
    })
}

/// Index pairs `(i, j)` into `g` and `h`, `min(len)` of them.
fn match_roots(g: &[Complex64], h: &[Complex64], tol_root: f64) -> Vec<(usize, usize)> {
    let mut close: Vec<(f64, usize, usize)> = Vec::new();
    for (i, gi) in g.iter().enumerate() {
        for (j, hj) in h.iter().enumerate() {
            let gap = (gi - hj).norm();
            if gap <= tol_root {
                close.push((gap, i, j));
            }
        }
    }
    close.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut g_used = vec![false; g.len()];
    let mut h_used = vec![false; h.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in close {
        if !g_used[i] && !h_used[j] {
            g_used[i] = true;
            h_used[j] = true;
            pairs.push((i, j));
        }
    }

    let g_rest: Vec<usize> = (0..g.len()).filter(|&i| !g_used[i]).collect();
    let h_rest: Vec<usize> = (0..h.len()).filter(|&j| !h_used[j]).collect();
    if g_rest.is_empty() || h_rest.is_empty() {
        return pairs;
    }
    let gap = |i: usize, j: usize| (g[g_rest[i]] - h[h_rest[j]]).norm();
    if g_rest.len() <= h_rest.len() {
        let cost: Vec<Vec<f64>> = (0..g_rest.len())
            .map(|i| (0..h_rest.len()).map(|j| gap(i, j)).collect())
            .collect();
        for (i, j) in hungarian(&cost).into_iter().enumerate() {
            pairs.push((g_rest[i], h_rest[j]));
        }
    } else {
        let cost: Vec<Vec<f64>> = (0..h_rest.len())
            .map(|j| (0..g_rest.len()).map(|i| gap(i, j)).collect())
            .collect();
        for (j, i) in hungarian(&cost).into_iter().enumerate() {
            pairs.push((g_rest[i], h_rest[j]));
        }
    }
    pairs
}

/// Minimum-cost assignment of every row to a distinct column
/// (`rows ≤ cols`). Returns the column chosen for each row.
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    debug_assert!(n <= m);
    // 1-based potentials formulation; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[col0] = true;
            let i0 = owner[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = col0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    col1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Removes the common factor at `g` (with its conjugate when `g` is not
/// real within `tol_root`) from `p`.
fn remove_common_factor(p: &Polynomial, g: Complex64, tol_root: f64) -> Result<Polynomial> {
    if g.im.abs() <= tol_root {
        if p.is_one() {
            return Err(FimError::Precondition(
                "cannot remove a factor from the constant polynomial".into(),
            ));
        }
        Ok(p.divide_real(g.re))
    } else {
        p.divide_conjugate_pair(g)
    }
}

fn distance_to_roots(g: Complex64, roots: &[Complex64]) -> f64 {
    roots
        .iter()
        .map(|r| (r - g).norm())
        .fold(f64::INFINITY, f64::min)
}

/// The cancelling polynomials `α = φ/(1 − gB)`, `β = θ/(1 − gB)`.
///
/// `g` must lie within `tol_root` of an inverse root of both operators.
/// A non-real `g` removes the conjugate factor as well, so the degrees drop
/// by two. Either way `α(B)θ(B) = β(B)φ(B)`.
pub fn construct_cancelling_polynomials(
    model: &ArmaModel,
    g: Complex64,
    tol_root: f64,
) -> Result<(RescaledPolynomial, RescaledPolynomial)> {
    let to_phi = distance_to_roots(g, &model.phi_roots().roots);
    let to_theta = distance_to_roots(g, &model.theta_roots().roots);
    if to_phi > tol_root || to_theta > tol_root {
        return Err(FimError::Precondition(format!(
            "{g} is not a common inverse root within {tol_root:e} \
             (distance to phi roots {to_phi:e}, to theta roots {to_theta:e})"
        )));
    }
    let alpha = remove_common_factor(model.phi(), g, tol_root)?;
    let beta = remove_common_factor(model.theta(), g, tol_root)?;
    Ok((
        RescaledPolynomial::new(1.0, alpha),
        RescaledPolynomial::new(1.0, beta),
    ))
}

/// A nonzero `z` with `I(φ,θ)z ≈ 0`, built from the cancelling polynomials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullCertificate {
    /// The common inverse root the certificate was built from.
    pub root: Complex64,
    pub alpha: RescaledPolynomial,
    pub beta: RescaledPolynomial,
    /// `(α₀, …, α_{p−1}, β₀, …, β_{q−1})` in `A_t` order.
    pub z: Vec<f64>,
    /// `‖Iz‖₂ / ‖z‖₂`.
    pub residual: f64,
}

/// Builds the null vector for the common root `g` and measures `‖Iz‖/‖z‖`.
pub fn null_certificate(
    model: &ArmaModel,
    g: Complex64,
    info: &InformationMatrix,
    tol_root: f64,
) -> Result<NullCertificate> {
    let (p, q) = (model.p(), model.q());
    if info.p != p || info.q != q {
        return Err(FimError::Precondition(format!(
            "information matrix has orders ({}, {}) but the model is ARMA({p}, {q})",
            info.p, info.q
        )));
    }
    let (alpha, beta) = construct_cancelling_polynomials(model, g, tol_root)?;
    let mut z = vec![0.0; p + q];
    for (k, v) in alpha.full_coefficients().into_iter().enumerate() {
        z[k] = v;
    }
    for (k, v) in beta.full_coefficients().into_iter().enumerate() {
        z[p + k] = v;
    }
    let zv = nalgebra::DVector::from_column_slice(&z);
    let residual = (&info.entries * &zv).norm() / zv.norm();
    Ok(NullCertificate {
        root: g,
        alpha,
        beta,
        z,
        residual,
    })
}

/// Detects redundancy and, if present, certifies singularity using the
/// first common pair's midpoint.
pub fn certify(model: &ArmaModel, info: &InformationMatrix, tol_root: f64) -> Result<NullCertificate> {
    let report = detect_common_roots(model, tol_root)?;
    let pair = report.common_roots().next().ok_or(FimError::NotRedundant)?;
    null_certificate(model, pair.midpoint(), info, tol_root)
}

/// Cancels every common factor until the model is no longer redundant.
///
/// Roots are recomputed after each cancellation. A non-redundant model is
/// returned unchanged.
pub fn reduce_model(model: &ArmaModel, tol_root: f64) -> Result<ArmaModel> {
    let mut current = model.clone();
    loop {
        let report = detect_common_roots(&current, tol_root)?;
        let Some(pair) = report.common_roots().next() else {
            return Ok(current);
        };
        let g = pair.midpoint();
        let phi = remove_common_factor(current.phi(), g, tol_root)?;
        let theta = remove_common_factor(current.theta(), g, tol_root)?;
        current = ArmaModel::new(phi, theta, current.margin())?;
    }
}
