//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` (output is printed
//! either way since this target has no harness). Set `ACCEPTANCE_STRICT=1`
//! to exit non-zero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use arma_fim::fisher::DEFAULT_TOL;
use arma_fim::montecarlo::DEFAULT_SE_MULTIPLIER;
use arma_fim::redundancy::DEFAULT_TOL_ROOT;
use arma_fim::{
    ar_autocovariance, asymptotic_covariance, certify, detect_common_roots, diagnostics,
    information_matrix, mc_compare, psi_weights, simulate_derivative_processes, ArmaModel, FimError,
    SimulationConfig,
};
use common::{max_abs_diff, non_redundant, redundant, rng, stable_poly, Generated};
use nalgebra::DMatrix;

const MARGIN_THRESHOLD: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn sweep_models() -> (Vec<Generated>, Vec<Generated>) {
    let plain = (0..200).map(|s| non_redundant(&mut rng(10_000 + s), 3)).collect();
    let shared = (0..200).map(|s| redundant(&mut rng(20_000 + s), 3)).collect();
    (plain, shared)
}

fn closed_form_arma11() -> Outcome {
    let model = ArmaModel::from_coeffs(&[0.5], &[0.4]).unwrap();
    // warm-up, then best of several timed calls
    let _ = information_matrix(&model, DEFAULT_TOL).unwrap();
    let mut best = Duration::MAX;
    let mut info = None;
    for _ in 0..20 {
        let start = Instant::now();
        let i = information_matrix(&model, DEFAULT_TOL).unwrap();
        best = best.min(start.elapsed());
        info = Some(i);
    }
    let info = info.unwrap();
    let want = [1.0 / 0.75, -1.0 / 0.8, -1.0 / 0.8, 1.0 / 0.84];
    let err = max_abs_diff(&info.row_major(), &want);
    outcome(
        err <= 1e-10 && best < Duration::from_millis(1),
        format!("max entry error {err:.2e}, runtime {best:?}"),
    )
}

fn theorem_sweep(plain: &[Generated], shared: &[Generated]) -> Outcome {
    let start = Instant::now();
    let mut disagreements = Vec::new();
    let mut worst_plain = f64::INFINITY;
    let mut worst_shared: f64 = 0.0;
    let labelled = plain.iter().enumerate().map(|(i, g)| (i, g, false));
    for (i, g, expect_redundant) in labelled.chain(shared.iter().enumerate().map(|(i, g)| (i, g, true))) {
        let info = information_matrix(&g.model, DEFAULT_TOL).unwrap();
        let margin = diagnostics(&info).unwrap().singularity_margin;
        let verdict = detect_common_roots(&g.model, DEFAULT_TOL_ROOT).unwrap().is_redundant();
        let singular = margin < MARGIN_THRESHOLD;
        if expect_redundant {
            worst_shared = worst_shared.max(margin);
        } else {
            worst_plain = worst_plain.min(margin);
        }
        if singular != expect_redundant || verdict != expect_redundant {
            let kind = if expect_redundant { "redundant" } else { "non-redundant" };
            disagreements.push(format!("{kind} #{i} margin {margin:.2e} redundant verdict {verdict}"));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        disagreements.is_empty() && elapsed < Duration::from_secs(10),
        format!(
            "{} disagreements {disagreements:?}; min margin (non-redundant) {worst_plain:.2e}, \
             max margin (redundant) {worst_shared:.2e}, runtime {elapsed:?}",
            disagreements.len()
        ),
    )
}

fn certificates(shared: &[Generated]) -> Outcome {
    let mut worst_residual: f64 = 0.0;
    let mut worst_identity: f64 = 0.0;
    let mut failures = 0;
    for g in shared {
        let info = information_matrix(&g.model, DEFAULT_TOL).unwrap();
        match certify(&g.model, &info, DEFAULT_TOL_ROOT) {
            Ok(cert) => {
                let lhs = convolve(&cert.alpha.full_coefficients(), &g.model.theta().full_coefficients());
                let rhs = convolve(&cert.beta.full_coefficients(), &g.model.phi().full_coefficients());
                let len = lhs.len().max(rhs.len());
                let gap = (0..len)
                    .map(|k| lhs.get(k).unwrap_or(&0.0) - rhs.get(k).unwrap_or(&0.0))
                    .fold(0.0_f64, |m, d| m.max(d.abs()));
                worst_residual = worst_residual.max(cert.residual);
                worst_identity = worst_identity.max(gap);
            }
            Err(_) => failures += 1,
        }
    }
    outcome(
        failures == 0 && worst_residual <= 1e-8 && worst_identity <= 1e-9,
        format!(
            "{} models, {failures} without certificate, max residual {worst_residual:.2e}, \
             max |αθ − βφ| coefficient {worst_identity:.2e}",
            shared.len()
        ),
    )
}

fn degeneracy_continuity() -> Outcome {
    let deltas = [0.1, 0.01, 0.001, 0.0001];
    let mins: Vec<f64> = deltas
        .iter()
        .map(|d| {
            let model = ArmaModel::from_coeffs(&[0.5], &[0.5 - d]).unwrap();
            diagnostics(&information_matrix(&model, DEFAULT_TOL).unwrap())
                .unwrap()
                .min_eigenvalue()
        })
        .collect();
    let decreasing = mins.windows(2).all(|w| w[1] < w[0]);
    let last = *mins.last().unwrap();
    outcome(
        decreasing && last <= 1e-6,
        format!("λ_min = {:?}", mins.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()),
    )
}

/// Fixed models spanning p, q ∈ {0, 1, 2, 3}.
fn mc_suite() -> Vec<ArmaModel> {
    let specs: [(&[f64], &[f64]); 10] = [
        (&[0.5], &[]),
        (&[], &[0.6]),
        (&[0.5], &[-0.4]),
        (&[0.8, -0.15], &[]),
        (&[], &[0.3, -0.2]),
        (&[1.2, -0.5], &[0.4]),
        (&[0.3], &[0.5, -0.3]),
        (&[0.6, -0.3, 0.1], &[0.2]),
        (&[0.4, 0.2], &[-0.3, 0.1, 0.1]),
        (&[0.5, -0.2, 0.1], &[0.3, 0.2, -0.1]),
    ];
    specs
        .iter()
        .map(|(phi, theta)| ArmaModel::from_coeffs(phi, theta).unwrap())
        .collect()
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let mut failed = Vec::new();
    let mut worst: f64 = 0.0;
    for (i, model) in mc_suite().iter().enumerate() {
        let cfg = SimulationConfig::for_model(model, 1_000_000, 1000 + i as u64, 1.0).unwrap();
        let cmp = mc_compare(model, &cfg, DEFAULT_SE_MULTIPLIER).unwrap();
        worst = worst.max(cmp.max_abs_deviation_se);
        if !cmp.pass {
            failed.push(format!("ARMA({},{})", cmp.p, cmp.q));
        }
    }
    let model = &mc_suite()[9];
    let a = simulate_derivative_processes(model, &SimulationConfig::for_model(model, 1_000_000, 77, 1.0).unwrap())
        .unwrap();
    let b = simulate_derivative_processes(model, &SimulationConfig::for_model(model, 1_000_000, 77, 7.0).unwrap())
        .unwrap();
    let identical = a.matrix == b.matrix;
    let elapsed = start.elapsed();
    outcome(
        failed.is_empty() && identical && elapsed < Duration::from_secs(60),
        format!(
            "worst deviation {worst:.2} SE, failing {failed:?}, σ=1 vs σ=7 identical: {identical}, \
             runtime {elapsed:?}"
        ),
    )
}

fn duality() -> Outcome {
    let mut worst: f64 = 0.0;
    for s in 0..50 {
        let g = non_redundant(&mut rng(30_000 + s), 3);
        let info = information_matrix(&g.model, DEFAULT_TOL).unwrap();
        let dual = information_matrix(&g.model.dual(), DEFAULT_TOL).unwrap();
        worst = worst.max(max_abs_diff(&dual.row_major(), &info.swap_blocks().row_major()));
    }
    outcome(worst <= 1e-9, format!("50 models, max entry difference {worst:.2e}"))
}

fn inference_contract(plain: &[Generated], shared: &[Generated]) -> Outcome {
    let n = 250;
    let mut worst_residual: f64 = 0.0;
    let mut scaling_exact = true;
    let mut refused = 0;
    let mut bad_errors = 0;
    for g in plain {
        let info = information_matrix(&g.model, DEFAULT_TOL).unwrap();
        // Ill-conditioned but non-redundant models may be refused; the
        // contract then only asks for the structured error.
        let cov = match asymptotic_covariance(&g.model, n) {
            Ok(c) => c,
            Err(FimError::Singular { .. }) => {
                refused += 1;
                continue;
            }
            Err(_) => {
                bad_errors += 1;
                continue;
            }
        };
        let k = info.order();
        let product = &info.entries * (&cov.matrix * n as f64);
        worst_residual = worst_residual.max((product - DMatrix::<f64>::identity(k, k)).amax());
        let quad = asymptotic_covariance(&g.model, 4 * n).unwrap();
        scaling_exact &= cov.matrix.iter().zip(quad.matrix.iter()).all(|(a, b)| *b == a / 4.0);
    }
    for g in shared {
        match asymptotic_covariance(&g.model, n) {
            Err(FimError::Singular { report, .. }) if report.is_redundant() => {}
            _ => bad_errors += 1,
        }
    }
    outcome(
        worst_residual <= 1e-9 && scaling_exact && bad_errors == 0,
        format!(
            "max ‖I·(n·Cov) − I‖ {worst_residual:.2e}, ¼ scaling exact: {scaling_exact}, \
             {refused} ill-conditioned refused with Singular, {bad_errors} raw errors or missing reports"
        ),
    )
}

fn series_vs_yule_walker() -> Outcome {
    let max_lag = 8;
    let terms = 4000;
    let mut worst: f64 = 0.0;
    for s in 0..100u64 {
        let degree = (s % 5) as usize;
        let (p, _) = stable_poly(&mut rng(40_000 + s), degree, 0.9);
        let psi = psi_weights(&p, terms + max_lag).unwrap().values;
        let gamma = ar_autocovariance(&p, max_lag).unwrap();
        for lag in 0..=max_lag {
            let series: f64 = (0..terms).map(|k| psi[k] * psi[k + lag]).sum();
            worst = worst.max((gamma[lag] - series).abs());
        }
    }
    outcome(worst <= 1e-10, format!("100 polynomials, max difference {worst:.2e}"))
}

fn main() {
    let (plain, shared) = sweep_models();
    let results = [
        ("1 closed-form ARMA(1,1)", closed_form_arma11()),
        ("2 singular ⇔ redundant sweep", theorem_sweep(&plain, &shared)),
        ("3 null certificates", certificates(&shared)),
        ("4 degeneracy continuity", degeneracy_continuity()),
        ("5 Monte Carlo oracle", monte_carlo()),
        ("6 duality permutation", duality()),
        ("7 inference contract", inference_contract(&plain, &shared)),
        ("8 Yule–Walker vs series", series_vs_yule_walker()),
    ];
    for (name, r) in &results {
        println!("{} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
    }
    let passed = results.iter().filter(|(_, r)| r.pass).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed < results.len() && std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        std::process::exit(1);
    }
}
