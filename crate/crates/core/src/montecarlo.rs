//! Simulation oracle for `E{A_tA_t′}/σ_a²`.
//!
//! The derivative processes `φ(B)v_t = −a_t` and `θ(B)u_t = a_t` are driven
//! by one shared Gaussian noise stream, the outer products `A_tA_t′` are
//! averaged after a burn-in, and batch means (32 batches) give per-entry
//! standard errors. This path shares no code with the analytic
//! computation in [`crate::fisher`] apart from the model type.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{FimError, Result};
use crate::fisher::{information_matrix, row_major, ArmaModel, DEFAULT_TOL};

/// Generator identification recorded in every report.
pub const GENERATOR: &str =
    "ChaCha20Rng (rand_chacha 0.9, seed_from_u64) + StandardNormal ziggurat (rand_distr 0.5)";
pub const BATCHES: usize = 32;
/// Default agreement bound in batch standard errors.
pub const DEFAULT_SE_MULTIPLIER: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    /// Retained samples after burn-in.
    pub n: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Innovation standard deviation.
    pub sigma: f64,
}

impl SimulationConfig {
    pub fn new(n: usize, burn_in: usize, seed: u64, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(FimError::InvalidArgument("sample count n must be positive".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(FimError::InvalidArgument(format!(
                "innovation sd must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self {
            n,
            burn_in,
            seed,
            sigma,
        })
    }

    /// Config with burn-in `⌈10(p+q+1)/(1−ρ)⌉`, `ρ` the largest inverse-root modulus.
    pub fn for_model(model: &ArmaModel, n: usize, seed: u64, sigma: f64) -> Result<Self> {
        Self::new(n, default_burn_in(model), seed, sigma)
    }
}

pub fn default_burn_in(model: &ArmaModel) -> usize {
    let order = (model.p() + model.q() + 1) as f64;
    (10.0 * order / (1.0 - model.max_modulus())).ceil() as usize
}

/// Sample estimate of `E{A_tA_t′}/σ²` with batch-means errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub matrix: DMatrix<f64>,
    pub standard_errors: DMatrix<f64>,
    pub batch_means: Vec<DMatrix<f64>>,
    pub n_effective: usize,
    pub generator: &'static str,
}

impl MomentEstimate {
    /// `zᵀMz` and its batch-means standard error.
    pub fn quadratic_form(&self, z: &[f64]) -> (f64, f64) {
        let zv = nalgebra::DVector::from_column_slice(z);
        let value = zv.dot(&(&self.matrix * &zv));
        let per_batch: Vec<f64> = self
            .batch_means
            .iter()
            .map(|m| zv.dot(&(m * &zv)))
            .collect();
        (value, batch_standard_error(&per_batch))
    }
}

fn batch_standard_error(values: &[f64]) -> f64 {
    let b = values.len();
    if b < 2 {
        return f64::INFINITY;
    }
    let mean = values.iter().sum::<f64>() / b as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Simulates `v_t`, `u_t` and averages `A_tA_t′`.
///
/// The recursions are run on the standardized innovations `a_t/σ`, which
/// is the division by `σ²` carried out before the quadratic products; the
/// result is therefore identical for every `σ` under a fixed seed.
pub fn simulate_derivative_processes(model: &ArmaModel, cfg: &SimulationConfig) -> Result<MomentEstimate> {
    let (p, q) = (model.p(), model.q());
    let k = p + q;
    if cfg.n < k + 1 {
        return Err(FimError::InvalidArgument(format!(
            "need at least p + q + 1 = {} samples, got {}",
            k + 1,
            cfg.n
        )));
    }
    let phi = model.phi().coeffs();
    let theta = model.theta().coeffs();
    let batches = BATCHES.min(cfg.n);

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    // Most recent first: v_hist[j] = v_{t−1−j}.
    let mut v_hist = vec![0.0; p];
    let mut u_hist = vec![0.0; q];
    let mut a = vec![0.0; k];
    let mut batch_sums = vec![DMatrix::<f64>::zeros(k, k); batches];
    let mut batch_counts = vec![0usize; batches];

    for t in 0..cfg.burn_in + cfg.n {
        if t >= cfg.burn_in {
            let idx = t - cfg.burn_in;
            let b = idx * batches / cfg.n;
            a[..p].copy_from_slice(&v_hist);
            a[p..].copy_from_slice(&u_hist);
            let sums = &mut batch_sums[b];
            for i in 0..k {
                for j in i..k {
                    sums[(i, j)] += a[i] * a[j];
                }
            }
            batch_counts[b] += 1;
        }
        let eps: f64 = rng.sample(StandardNormal);
        let v = phi.iter().zip(&v_hist).map(|(c, x)| c * x).sum::<f64>() - eps;
        let u = theta.iter().zip(&u_hist).map(|(c, x)| c * x).sum::<f64>() + eps;
        if p > 0 {
            v_hist.rotate_right(1);
            v_hist[0] = v;
        }
        if q > 0 {
            u_hist.rotate_right(1);
            u_hist[0] = u;
        }
    }

    let mirror = |m: &mut DMatrix<f64>| {
        for i in 0..k {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
    };
    let mut total = DMatrix::<f64>::zeros(k, k);
    for s in &batch_sums {
        total += s;
    }
    let mut matrix = total / cfg.n as f64;
    mirror(&mut matrix);
    let batch_means: Vec<DMatrix<f64>> = batch_sums
        .into_iter()
        .zip(&batch_counts)
        .map(|(mut s, &c)| {
            s /= c as f64;
            mirror(&mut s);
            s
        })
        .collect();
    let standard_errors = DMatrix::from_fn(k, k, |i, j| {
        let values: Vec<f64> = batch_means.iter().map(|m| m[(i, j)]).collect();
        batch_standard_error(&values)
    });

    Ok(MomentEstimate {
        matrix,
        standard_errors,
        batch_means,
        n_effective: cfg.n,
        generator: GENERATOR,
    })
}

/// Simulates `z_t = Σφ_jz_{t−j} + a_t − Σθ_ja_{t−j}` from zero initial
/// conditions and returns the `n` values after burn-in.
pub fn simulate_arma(model: &ArmaModel, cfg: &SimulationConfig) -> Result<Vec<f64>> {
    let phi = model.phi().coeffs();
    let theta = model.theta().coeffs();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut z_hist = vec![0.0; phi.len()];
    let mut a_hist = vec![0.0; theta.len()];
    let mut out = Vec::with_capacity(cfg.n);
    for t in 0..cfg.burn_in + cfg.n {
        let eps: f64 = rng.sample(StandardNormal);
        let a = cfg.sigma * eps;
        let z = phi.iter().zip(&z_hist).map(|(c, x)| c * x).sum::<f64>() + a
            - theta.iter().zip(&a_hist).map(|(c, x)| c * x).sum::<f64>();
        if !z_hist.is_empty() {
            z_hist.rotate_right(1);
            z_hist[0] = z;
        }
        if !a_hist.is_empty() {
            a_hist.rotate_right(1);
            a_hist[0] = a;
        }
        if t >= cfg.burn_in {
            out.push(z);
        }
    }
    Ok(out)
}

/// Writes a simulated series as CSV with the single header `z`.
pub fn write_series_csv<W: Write>(series: &[f64], writer: W) -> Result<()> {
    let io_err = |e: csv::Error| FimError::InvalidArgument(format!("CSV export failed: {e}"));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["z"]).map_err(io_err)?;
    for z in series {
        w.write_record([format!("{z:e}")]).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| FimError::InvalidArgument(format!("CSV export failed: {e}")))?;
    Ok(())
}

/// Analytic-vs-simulated comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McComparison {
    pub p: usize,
    pub q: usize,
    pub config: SimulationConfig,
    pub generator: &'static str,
    /// Row-major.
    pub analytic: Vec<f64>,
    pub estimate: Vec<f64>,
    pub standard_errors: Vec<f64>,
    /// `(estimate − analytic)/SE`, row-major.
    pub deviations_se: Vec<f64>,
    pub max_abs_deviation_se: f64,
    /// Smallest eigenvalue of the sample matrix and the batch SE of the
    /// corresponding quadratic form.
    pub sample_min_eigenvalue: Option<f64>,
    pub sample_min_eigenvalue_se: Option<f64>,
    pub tol_se_multiplier: f64,
    pub pass: bool,
}

/// Runs the simulation oracle and compares it entrywise with `I(φ,θ)`.
pub fn mc_compare(model: &ArmaModel, cfg: &SimulationConfig, tol_se_multiplier: f64) -> Result<McComparison> {
    if !(tol_se_multiplier > 0.0) {
        return Err(FimError::InvalidArgument(format!(
            "SE multiplier must be positive, got {tol_se_multiplier}"
        )));
    }
    let info = information_matrix(model, DEFAULT_TOL)?;
    let est = simulate_derivative_processes(model, cfg)?;
    let analytic = info.row_major();
    let estimate = row_major(&est.matrix);
    let standard_errors = row_major(&est.standard_errors);
    let deviations_se: Vec<f64> = analytic
        .iter()
        .zip(&estimate)
        .zip(&standard_errors)
        .map(|((a, e), se)| deviation_in_se(*a, *e, *se))
        .collect();
    let max_abs_deviation_se = deviations_se.iter().fold(0.0_f64, |m, d| m.max(d.abs()));

    let (sample_min_eigenvalue, sample_min_eigenvalue_se) = if info.order() > 0 {
        let eig = nalgebra::SymmetricEigen::try_new(est.matrix.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| FimError::NumericalFailure("symmetric eigensolver did not converge".into()))?;
        let imin = eig.eigenvalues.imin();
        let vec: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        let (_, se) = est.quadratic_form(&vec);
        (Some(eig.eigenvalues[imin]), Some(se))
    } else {
        (None, None)
    };

    Ok(McComparison {
        p: model.p(),
        q: model.q(),
        config: *cfg,
        generator: est.generator,
        analytic,
        estimate,
        standard_errors,
        deviations_se,
        max_abs_deviation_se,
        sample_min_eigenvalue,
        sample_min_eigenvalue_se,
        tol_se_multiplier,
        pass: max_abs_deviation_se <= tol_se_multiplier,
    })
}

fn deviation_in_se(analytic: f64, estimate: f64, se: f64) -> f64 {
    let diff = estimate - analytic;
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 * analytic.abs().max(1.0) {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}
