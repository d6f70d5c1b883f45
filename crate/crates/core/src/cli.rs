//! The `fim` command line.
//!
//! Exit codes are a stable contract: 0 success, 1 parse/argument error,
//! 2 invalid model, 3 redundant or singular, 4 no certificate,
//! 5 Monte Carlo verification failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::FimError;
use crate::fisher::{
    diagnostics, information_matrix, ArmaModel, InformationMatrix, SpectralDiagnostics, DEFAULT_MARGIN,
    DEFAULT_TOL, SINGULARITY_THRESHOLD,
};
use crate::inference::asymptotic_covariance;
use crate::montecarlo::{mc_compare, simulate_arma, write_series_csv, SimulationConfig, DEFAULT_SE_MULTIPLIER};
use crate::poly::{Polynomial, DEFAULT_RECONSTRUCT_TOL};
use crate::redundancy::{certify, detect_common_roots, reduce_model, RedundancyReport, DEFAULT_TOL_ROOT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_INVALID_MODEL: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_NO_CERTIFICATE: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

const SIGNIFICANT_DIGITS: usize = 12;

const SIGN_CONVENTION: &str = "\
Coefficients use the Box-Jenkins sign convention:
  --phi c1 c2 ... cp    means  phi(B)   = 1 - c1*B - c2*B^2 - ... - cp*B^p
  --theta d1 ... dq     means  theta(B) = 1 - d1*B - ... - dq*B^q

Example: `fim check --phi 0.8 -0.15 --theta 0.5` is the model
  (1 - 0.8B + 0.15B^2) z_t = (1 - 0.5B) a_t
whose operators share the factor (1 - 0.5B).

A model may also be read from JSON: --model spec.json with
  {\"phi\": [0.8, -0.15], \"theta\": [0.5]}";

#[derive(Debug, Parser)]
#[command(
    name = "fim",
    version,
    about = "Fisher information, covariance and redundancy diagnostics for ARMA(p,q) models",
    after_help = SIGN_CONVENTION
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the information matrix I(phi, theta) and its spectrum.
    #[command(after_help = SIGN_CONVENTION)]
    Compute {
        #[command(flatten)]
        model: ModelArgs,
        /// Absolute truncation tolerance for series-evaluated entries.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// lambda_min/lambda_max below this is reported as singular.
        #[arg(long, default_value_t = SINGULARITY_THRESHOLD)]
        threshold: f64,
        /// Inverse-root gap treated as a common root when explaining singularity.
        #[arg(long, default_value_t = DEFAULT_TOL_ROOT)]
        tol_root: f64,
        #[arg(long)]
        json: bool,
        /// Matrix as CSV with a header row of parameter names.
        #[arg(long, conflicts_with = "json")]
        csv: bool,
    },
    /// Asymptotic covariance I^-1 / n of the estimated coefficients.
    #[command(after_help = SIGN_CONVENTION)]
    Covariance {
        #[command(flatten)]
        model: ModelArgs,
        /// Length of the observed series.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Decide whether phi(B) and theta(B) share a root.
    #[command(after_help = SIGN_CONVENTION)]
    Check {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_TOL_ROOT)]
        tol_root: f64,
        #[arg(long)]
        json: bool,
    },
    /// Print a null vector z with I z = 0 for a redundant model.
    #[command(after_help = SIGN_CONVENTION)]
    Certify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_TOL_ROOT)]
        tol_root: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Cancel common factors and print the minimal model as JSON.
    #[command(after_help = SIGN_CONVENTION)]
    Reduce {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = DEFAULT_TOL_ROOT)]
        tol_root: f64,
    },
    /// Compare I(phi, theta) with a seeded Monte Carlo estimate.
    #[command(after_help = SIGN_CONVENTION)]
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        /// Retained samples after burn-in.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Innovation standard deviation.
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        /// Defaults to ceil(10 (p+q+1) / (1 - rho)).
        #[arg(long)]
        burn_in: Option<usize>,
        /// Agreement bound in batch standard errors.
        #[arg(long, default_value_t = DEFAULT_SE_MULTIPLIER)]
        tol_se: f64,
        /// Also write the simulated ARMA series to this CSV file (column `z`).
        #[arg(long)]
        export_series: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// AR coefficients phi_1 ... phi_p (Box-Jenkins signs).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub phi: Vec<f64>,
    /// MA coefficients theta_1 ... theta_q (Box-Jenkins signs).
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub theta: Vec<f64>,
    /// JSON file with keys "phi" and "theta".
    #[arg(long, conflicts_with_all = ["phi", "theta"])]
    pub model: Option<PathBuf>,
    /// Required distance of every inverse root from the unit circle.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Tolerance for reproducing the coefficients from computed roots.
    #[arg(long, default_value_t = DEFAULT_RECONSTRUCT_TOL)]
    pub tol_reconstruct: f64,
}

/// Model coefficients as read from flags or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default)]
    pub theta: Vec<f64>,
}

impl ModelSpec {
    pub fn from_model(model: &ArmaModel) -> Self {
        Self {
            phi: model.phi().coeffs().to_vec(),
            theta: model.theta().coeffs().to_vec(),
        }
    }
}

/// Failure with its exit code.
struct Exit {
    code: i32,
    message: String,
}

impl Exit {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<FimError> for Exit {
    fn from(e: FimError) -> Self {
        let code = match e {
            FimError::InvalidArgument(_) => EXIT_PARSE,
            FimError::NonStationary { .. } | FimError::NumericalFailure(_) | FimError::Precondition(_) => {
                EXIT_INVALID_MODEL
            }
            FimError::UndefinedResultant => EXIT_INVALID_MODEL,
            FimError::Singular { .. } => EXIT_SINGULAR,
            FimError::NotRedundant => EXIT_NO_CERTIFICATE,
        };
        Exit::new(code, e.to_string())
    }
}

type CmdResult = std::result::Result<i32, Exit>;

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn load_model(args: &ModelArgs) -> std::result::Result<ArmaModel, Exit> {
    let spec = match &args.model {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Exit::new(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ModelSpec>(&text)
                .map_err(|e| Exit::new(EXIT_PARSE, format!("invalid model JSON in {}: {e}", path.display())))?
        }
        None => ModelSpec {
            phi: args.phi.clone(),
            theta: args.theta.clone(),
        },
    };
    let phi = Polynomial::new(spec.phi).map_err(|e| Exit::new(EXIT_PARSE, e.to_string()))?;
    let theta = Polynomial::new(spec.theta).map_err(|e| Exit::new(EXIT_PARSE, e.to_string()))?;
    Ok(ArmaModel::with_reconstruct_tol(
        phi,
        theta,
        args.margin,
        args.tol_reconstruct,
    )?)
}

fn execute(command: Command, out: &mut dyn Write) -> CmdResult {
    match command {
        Command::Compute {
            model,
            tol,
            threshold,
            tol_root,
            json,
            csv,
        } => {
            let model = load_model(&model)?;
            let info = information_matrix(&model, tol)?;
            let diag = diagnostics(&info)?;
            let singular = diag.is_singular(threshold);
            let warning = if singular {
                let report = detect_common_roots(&model, tol_root)?;
                Some(singularity_warning(&diag, threshold, &report))
            } else {
                None
            };
            if json {
                let value = json!({
                    "order": info.order(),
                    "p": info.p,
                    "q": info.q,
                    "entries": info.row_major(),
                    "eigenvalues": diag.eigenvalues,
                    "determinant": diag.determinant,
                    "condition_number": finite_or_null(diag.condition_number),
                    "singularity_margin": diag.singularity_margin,
                    "singular": singular,
                    "threshold": threshold,
                    "tol": tol,
                    "warning": warning,
                });
                emit_json(out, &value)?;
            } else if csv {
                write_matrix_csv(out, &info)?;
            } else {
                write_information_text(out, &model, &info, &diag)?;
                if let Some(w) = warning {
                    emit(out, &format!("WARNING: {w}"))?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Covariance { model, n, json } => {
            let model = load_model(&model)?;
            match asymptotic_covariance(&model, n) {
                Ok(cov) => {
                    if json {
                        emit_json(
                            out,
                            &json!({
                                "n": cov.n,
                                "p": model.p(),
                                "q": model.q(),
                                "covariance": cov.row_major(),
                                "standard_errors": cov.standard_errors,
                                "correlations": cov.correlations_row_major(),
                            }),
                        )?;
                    } else {
                        let names = parameter_names(model.p(), model.q());
                        emit(out, &format!("Asymptotic covariance (n = {})", cov.n))?;
                        write_matrix_text(out, &names, &cov.row_major())?;
                        emit(out, "standard errors:")?;
                        for (name, se) in names.iter().zip(&cov.standard_errors) {
                            emit(out, &format!("  {name:<8} {}", sig(*se)))?;
                        }
                        emit(out, "correlations:")?;
                        write_matrix_text(out, &names, &cov.correlations_row_major())?;
                    }
                    Ok(EXIT_OK)
                }
                Err(FimError::Singular {
                    margin,
                    threshold,
                    report,
                }) => {
                    let message = format!(
                        "information matrix is singular (margin {margin:e} < {threshold:e}): \
                         no covariance exists; {}",
                        redundancy_diagnosis(&report)
                    );
                    if json {
                        emit_json(
                            out,
                            &json!({
                                "error": "singular",
                                "message": message,
                                "singularity_margin": margin,
                                "threshold": threshold,
                                "redundancy_report": *report,
                            }),
                        )?;
                    } else {
                        write_report_text(out, &report)?;
                    }
                    Err(Exit::new(EXIT_SINGULAR, message))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Check { model, tol_root, json } => {
            let model = load_model(&model)?;
            let report = detect_common_roots(&model, tol_root)?;
            if json {
                emit_json(out, &report)?;
            } else {
                write_report_text(out, &report)?;
            }
            Ok(if report.is_redundant() { EXIT_SINGULAR } else { EXIT_OK })
        }
        Command::Certify {
            model,
            tol_root,
            tol,
            json,
        } => {
            let model = load_model(&model)?;
            let info = information_matrix(&model, tol)?;
            let cert = match certify(&model, &info, tol_root) {
                Ok(c) => c,
                Err(FimError::NotRedundant) => {
                    return Err(Exit::new(
                        EXIT_NO_CERTIFICATE,
                        "no certificate exists (Theorem): the model is not redundant, \
                         so its information matrix is nonsingular",
                    ))
                }
                Err(e) => return Err(e.into()),
            };
            if json {
                emit_json(
                    out,
                    &json!({
                        "root": [cert.root.re, cert.root.im],
                        "z": cert.z,
                        "residual": cert.residual,
                        "alpha": cert.alpha.full_coefficients(),
                        "beta": cert.beta.full_coefficients(),
                        "tol_root": tol_root,
                    }),
                )?;
            } else {
                emit(out, &format!("common inverse root: {}", complex_text(cert.root.re, cert.root.im)))?;
                emit(out, &format!("alpha(B) = {}", cert.alpha.poly))?;
                emit(out, &format!("beta(B)  = {}", cert.beta.poly))?;
                emit(out, &format!("z = [{}]", join(cert.z.iter().map(|v| sig(*v)))))?;
                emit(out, &format!("residual |Iz|/|z| = {:e}", cert.residual))?;
            }
            Ok(EXIT_OK)
        }
        Command::Reduce { model, tol_root } => {
            let model = load_model(&model)?;
            let reduced = reduce_model(&model, tol_root)?;
            emit_json(out, &ModelSpec::from_model(&reduced))?;
            Ok(EXIT_OK)
        }
        Command::Verify {
            model,
            n,
            seed,
            sigma,
            burn_in,
            tol_se,
            export_series,
            json,
        } => {
            let model = load_model(&model)?;
            let cfg = match burn_in {
                Some(b) => SimulationConfig::new(n, b, seed, sigma)?,
                None => SimulationConfig::for_model(&model, n, seed, sigma)?,
            };
            let report = mc_compare(&model, &cfg, tol_se)?;
            if let Some(path) = export_series {
                let series = simulate_arma(&model, &cfg)?;
                let file = std::fs::File::create(&path)
                    .map_err(|e| Exit::new(EXIT_PARSE, format!("cannot create {}: {e}", path.display())))?;
                write_series_csv(&series, file)?;
            }
            if json {
                emit_json(out, &report)?;
            } else {
                let names = parameter_names(model.p(), model.q());
                emit(
                    out,
                    &format!(
                        "Monte Carlo check: n = {}, burn-in = {}, seed = {}, sigma = {}",
                        cfg.n, cfg.burn_in, cfg.seed, cfg.sigma
                    ),
                )?;
                emit(out, &format!("generator: {}", report.generator))?;
                emit(out, "analytic:")?;
                write_matrix_text(out, &names, &report.analytic)?;
                emit(out, "simulated:")?;
                write_matrix_text(out, &names, &report.estimate)?;
                emit(out, "deviation (batch SEs):")?;
                write_matrix_text(out, &names, &report.deviations_se)?;
                if let (Some(l), Some(se)) = (report.sample_min_eigenvalue, report.sample_min_eigenvalue_se) {
                    emit(out, &format!("sample min eigenvalue: {} (SE {})", sig(l), sig(se)))?;
                }
                emit(
                    out,
                    &format!(
                        "max |deviation| = {} SE (bound {}): {}",
                        sig(report.max_abs_deviation_se),
                        tol_se,
                        if report.pass { "PASS" } else { "FAIL" }
                    ),
                )?;
            }
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

fn singularity_warning(diag: &SpectralDiagnostics, threshold: f64, report: &RedundancyReport) -> String {
    format!(
        "information matrix is singular (singularity margin {:e} < {threshold:e}); {}",
        diag.singularity_margin,
        redundancy_diagnosis(report)
    )
}

fn redundancy_diagnosis(report: &RedundancyReport) -> String {
    let common: Vec<String> = report
        .common_roots()
        .map(|r| complex_text(r.g.re, r.g.im))
        .collect();
    if common.is_empty() {
        match report.min_gap() {
            Some(gap) => format!(
                "the model is likely redundant: the closest AR/MA inverse roots differ by {gap:e}"
            ),
            None => "the model is likely redundant (common AR/MA roots)".to_string(),
        }
    } else {
        format!(
            "the model is redundant: phi(B) and theta(B) share inverse root(s) {}",
            common.join(", ")
        )
    }
}

fn emit(out: &mut dyn Write, line: &str) -> std::result::Result<(), Exit> {
    writeln!(out, "{line}").map_err(|e| Exit::new(EXIT_PARSE, format!("write failed: {e}")))
}

fn emit_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> std::result::Result<(), Exit> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Exit::new(EXIT_PARSE, format!("JSON encoding failed: {e}")))?;
    emit(out, &text)
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

/// Rounds to 12 significant digits and prints the shortest representation.
pub fn sig(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses");
    format!("{rounded}")
}

fn complex_text(re: f64, im: f64) -> String {
    if im == 0.0 {
        sig(re)
    } else if im > 0.0 {
        format!("{}+{}i", sig(re), sig(im))
    } else {
        format!("{}-{}i", sig(re), sig(-im))
    }
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(", ")
}

pub fn parameter_names(p: usize, q: usize) -> Vec<String> {
    (1..=p)
        .map(|i| format!("φ{i}"))
        .chain((1..=q).map(|j| format!("θ{j}")))
        .collect()
}

fn write_matrix_text(out: &mut dyn Write, names: &[String], row_major: &[f64]) -> std::result::Result<(), Exit> {
    let k = names.len();
    for (i, name) in names.iter().enumerate() {
        let row = join(row_major[i * k..(i + 1) * k].iter().map(|v| format!("{:>20}", sig(*v))));
        emit(out, &format!("  {name:<6}{}", row.replace(", ", "")))?;
    }
    Ok(())
}

fn write_information_text(
    out: &mut dyn Write,
    model: &ArmaModel,
    info: &InformationMatrix,
    diag: &SpectralDiagnostics,
) -> std::result::Result<(), Exit> {
    emit(
        out,
        &format!(
            "ARMA({}, {}) information matrix, phi(B) = {}, theta(B) = {}",
            info.p,
            info.q,
            model.phi(),
            model.theta()
        ),
    )?;
    let names = parameter_names(info.p, info.q);
    write_matrix_text(out, &names, &info.row_major())?;
    emit(out, &format!("eigenvalues: [{}]", join(diag.eigenvalues.iter().map(|v| sig(*v)))))?;
    emit(out, &format!("determinant: {}", sig(diag.determinant)))?;
    emit(out, &format!("condition number: {}", sig(diag.condition_number)))?;
    emit(out, &format!("singularity margin: {}", sig(diag.singularity_margin)))
}

fn write_matrix_csv(out: &mut dyn Write, info: &InformationMatrix) -> std::result::Result<(), Exit> {
    let csv_err = |e: csv::Error| Exit::new(EXIT_PARSE, format!("CSV encoding failed: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(parameter_names(info.p, info.q)).map_err(csv_err)?;
    let k = info.order();
    let values = info.row_major();
    for i in 0..k {
        w.write_record(values[i * k..(i + 1) * k].iter().map(|v| format!("{v:e}")))
            .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Exit::new(EXIT_PARSE, format!("CSV encoding failed: {e}")))?;
    out.write_all(&bytes)
        .map_err(|e| Exit::new(EXIT_PARSE, format!("write failed: {e}")))
}

fn write_report_text(out: &mut dyn Write, report: &RedundancyReport) -> std::result::Result<(), Exit> {
    emit(
        out,
        &format!(
            "verdict: {}",
            if report.is_redundant() { "redundant" } else { "not redundant" }
        ),
    )?;
    if report.paired_roots.is_empty() {
        emit(out, "paired inverse roots: none (p = 0 or q = 0)")?;
    } else {
        emit(out, "paired inverse roots (phi, theta, gap):")?;
        for pair in &report.paired_roots {
            emit(
                out,
                &format!(
                    "  {}  {}  {:e}",
                    complex_text(pair.g.re, pair.g.im),
                    complex_text(pair.h.re, pair.h.im),
                    pair.gap
                ),
            )?;
        }
    }
    match report.resultant_magnitude {
        Some(r) => emit(out, &format!("|resultant|: {r:e}"))?,
        None => emit(out, "|resultant|: undefined (p = q = 0)")?,
    }
    emit(out, &format!("root tolerance: {:e}", report.tol_root))?;
    if let Some(w) = &report.warning {
        emit(out, &format!("WARNING: {w}"))?;
    }
    Ok(())
}
