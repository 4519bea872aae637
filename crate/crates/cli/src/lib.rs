//! Command-line surface for `pciclone`: reports, figure sweeps, the two
//! optimisers, and Monte-Carlo verification.
//!
//! Exit codes: 0 success, 1 I/O failure or failed verification, 2 domain
//! error, 3 non-convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 1.0)` deliberately rejects NaN

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use pciclone::machine::OutputRole;
use pciclone::montecarlo::ComparisonSummary;
use pciclone::{
    asymmetry_gain, build_machine, compare_to_analytic, minimize_asymmetry, noise_report, simulate, solve_amplifier,
    AsymmetryOptions, CloningConfig, EmpiricalMoments, NoiseReport, SampleConfig, SearchOptions,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "pciclone",
    version,
    about = "Phase-conjugated-inputs cloning machines for continuous variables"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Structural / convergence tolerance
    #[arg(long, global = true, env = "PCICLONE_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format (default: json, except csv for `sweep` and a text table for `verify`)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Machine configuration, either as counts `N N' M` or as `--total n --asym a --clones M`.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Replicas of |ψ⟩
    #[arg(value_name = "N")]
    pub n_inputs: Option<u32>,
    /// Replicas of |ψ*⟩
    #[arg(value_name = "NC")]
    pub n_conj: Option<u32>,
    /// Clones
    #[arg(value_name = "M")]
    pub m_clones: Option<u32>,
    /// Total inputs n = N + N'
    #[arg(long, requires_all = ["asym", "clones"], conflicts_with_all = ["n_inputs", "n_conj"])]
    pub total: Option<u32>,
    /// Conjugate fraction a = N'/n
    #[arg(long, requires = "total")]
    pub asym: Option<f64>,
    #[arg(long, requires = "total")]
    pub clones: Option<u32>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<CloningConfig, CliError> {
        let (n, nc, m) = match (self.total, self.asym, self.clones) {
            (Some(total), Some(a), Some(m)) => {
                if !(0.0..=1.0).contains(&a) {
                    return Err(CliError::Domain(format!("--asym must lie in [0, 1], got {a}")));
                }
                // N' = a·n has to land on an integer for a physical machine
                let nc = a * total as f64;
                if (nc - nc.round()).abs() > 1e-9 {
                    return Err(CliError::Domain(format!("a·n = {nc} is not an integer count")));
                }
                let nc = nc.round() as u32;
                (total - nc, nc, m)
            }
            _ => match (self.n_inputs, self.n_conj, self.m_clones) {
                (Some(n), Some(nc), Some(m)) => (n, nc, m),
                _ => {
                    return Err(CliError::Domain(
                        "expected N N' M, or --total n --asym a --clones M".into(),
                    ))
                }
            },
        };
        Ok(CloningConfig::new(n, nc, m)?)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form gain, noise and fidelities of one configuration
    Report(ConfigArgs),
    /// Clone noise against the asymmetry a = N'/n (figure data)
    Sweep {
        /// Total inputs n
        n: f64,
        /// Clone counts M
        #[arg(value_name = "M")]
        m_list: Vec<f64>,
        /// Points on a ∈ [0, 1]
        #[arg(long, default_value_t = 100)]
        a_steps: usize,
    },
    /// Optimal asymmetry a* for n inputs and M clones
    Optimize {
        n: f64,
        m: f64,
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
        #[arg(long, default_value_t = 1e-9)]
        refine_tol: f64,
    },
    /// Rediscover the amplifier taking (αψ, βψ*) to γψ by constrained search
    #[command(allow_negative_numbers = true)]
    Solve {
        alpha: f64,
        beta: f64,
        gamma: f64,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
    },
    /// Build, sample and compare a machine against its closed forms
    #[command(allow_negative_numbers = true)]
    Verify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Number of Monte-Carlo samples
        #[arg(value_name = "SAMPLES", default_value_t = 100_000)]
        samples: usize,
        /// Overrides --seed
        #[arg(value_name = "SEED")]
        sample_seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        psi_re: f64,
        #[arg(long, default_value_t = 0.5)]
        psi_im: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Domain(String),
    NonConvergence(String),
    VerifyFailed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::VerifyFailed(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) => write!(f, "domain error: {m}"),
            CliError::NonConvergence(m) => write!(f, "did not converge: {m}"),
            CliError::VerifyFailed(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<pciclone::Error> for CliError {
    fn from(e: pciclone::Error) -> Self {
        match e {
            pciclone::Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            e if e.is_domain() => CliError::Domain(e.to_string()),
            e => CliError::VerifyFailed(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// One point of the clone-noise-versus-asymmetry curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub a: f64,
    #[serde(rename = "N")]
    pub n_inputs: f64,
    #[serde(rename = "Nc")]
    pub n_conj: f64,
    #[serde(rename = "G")]
    pub gain: f64,
    pub n_th: f64,
    pub sqrt_n_th: f64,
}

impl SweepRow {
    pub fn new(n: f64, m: f64, a: f64) -> Result<Self, CliError> {
        let gain = asymmetry_gain(n, m, a)?;
        let n_th = (gain - 1.0) / m;
        Ok(Self {
            n,
            m,
            a,
            n_inputs: (1.0 - a) * n,
            n_conj: a * n,
            gain,
            n_th,
            sqrt_n_th: n_th.sqrt(),
        })
    }
}

/// Rows for every `M` and `a = i/a_steps` (`i = 0..=a_steps`) with
/// `M ≥ (1 − a) n`; infeasible points are skipped.
pub fn sweep_rows(n: f64, m_list: &[f64], a_steps: usize) -> Result<Vec<SweepRow>, CliError> {
    if m_list.is_empty() {
        return Err(CliError::Domain("sweep needs at least one M".into()));
    }
    if !(n >= 1.0) || a_steps == 0 {
        return Err(CliError::Domain(format!(
            "need n >= 1 and a_steps >= 1 (n = {n}, a_steps = {a_steps})"
        )));
    }
    let mut ms = m_list.to_vec();
    ms.sort_by(f64::total_cmp);
    let mut rows = vec![];
    for m in ms {
        if !(m >= 1.0) {
            return Err(CliError::Domain(format!("M must be at least 1, got {m}")));
        }
        for i in 0..=a_steps {
            let a = i as f64 / a_steps as f64;
            if m < (1.0 - a) * n {
                continue;
            }
            rows.push(SweepRow::new(n, m, a)?);
        }
    }
    Ok(rows)
}

/// Flattened row of the verification table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZRow {
    pub mode: usize,
    pub role: String,
    pub z_mean_x: f64,
    pub z_mean_p: f64,
    pub z_var_x: f64,
    pub z_var_p: f64,
    pub fidelity: f64,
    pub fidelity_expected: f64,
    pub z_fidelity: f64,
}

fn role_name(role: OutputRole) -> String {
    match role {
        OutputRole::Clone(l) => format!("clone{l}"),
        OutputRole::Anticlone(l) => format!("anticlone{l}"),
        OutputRole::Residual => "residual".into(),
    }
}

fn z_rows(summary: &ComparisonSummary) -> Vec<ZRow> {
    summary
        .modes
        .iter()
        .map(|c| ZRow {
            mode: c.mode,
            role: role_name(c.role),
            z_mean_x: c.z_mean[0],
            z_mean_p: c.z_mean[1],
            z_var_x: c.z_variance[0],
            z_var_p: c.z_variance[1],
            fidelity: c.fidelity,
            fidelity_expected: c.fidelity_expected,
            z_fidelity: c.z_fidelity,
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyDocument {
    pub pass: bool,
    pub commutation_residual: f64,
    pub symplectic_residual: f64,
    pub tol: f64,
    pub report: NoiseReport,
    pub empirical: EmpiricalMoments,
    pub comparison: ComparisonSummary,
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn render<T: Serialize>(value: &T, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => to_csv(std::slice::from_ref(value)),
    }
}

fn verify_table(doc: &VerifyDocument) -> String {
    let mut s = String::new();
    let c = &doc.report;
    s += &format!(
        "machine ({},{},{}) gain {:.12}\n",
        c.n_inputs, c.n_conj, c.m_clones, c.gain
    );
    s += &format!(
        "commutation residual {:.3e}, symplectic residual {:.3e} (tol {:.1e})\n",
        doc.commutation_residual, doc.symplectic_residual, doc.tol
    );
    s += &format!(
        "{} samples, seed {}, psi = {}{:+}i\n",
        doc.empirical.sample_count, doc.empirical.seed, doc.empirical.psi.re, doc.empirical.psi.im
    );
    s += &format!(
        "{:>4} {:<11} {:>8} {:>8} {:>8} {:>8} {:>10} {:>10} {:>8}\n",
        "mode", "role", "z<x>", "z<p>", "zVar_x", "zVar_p", "F", "F_pred", "zF"
    );
    for r in z_rows(&doc.comparison) {
        s += &format!(
            "{:>4} {:<11} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>10.6} {:>10.6} {:>8.3}\n",
            r.mode, r.role, r.z_mean_x, r.z_mean_p, r.z_var_x, r.z_var_p, r.fidelity, r.fidelity_expected, r.z_fidelity
        );
    }
    s += &format!(
        "max |z| = {:.3} (threshold {}): {}\n",
        doc.comparison.max_abs_z,
        doc.comparison.threshold,
        if doc.pass { "PASS" } else { "FAIL" }
    );
    s
}

/// Result of a command: the rendered text, plus an error to report after
/// the text has been written (failed verification still prints its table).
pub struct Output {
    pub text: String,
    pub failure: Option<CliError>,
}

impl From<String> for Output {
    fn from(text: String) -> Self {
        Self { text, failure: None }
    }
}

pub fn execute(cli: &Cli) -> Result<Output, CliError> {
    let g = &cli.global;
    if !(g.tol > 0.0) {
        return Err(CliError::Domain(format!("--tol must be positive, got {}", g.tol)));
    }
    match &cli.command {
        Command::Report(args) => {
            let report = noise_report(&args.resolve()?);
            Ok(render(&report, g.format.unwrap_or(Format::Json))?.into())
        }
        Command::Sweep { n, m_list, a_steps } => {
            let rows = sweep_rows(*n, m_list, *a_steps)?;
            Ok(match g.format.unwrap_or(Format::Csv) {
                Format::Csv => to_csv(&rows)?,
                Format::Json => to_json(&rows)?,
            }
            .into())
        }
        Command::Optimize {
            n,
            m,
            grid_step,
            refine_tol,
        } => {
            let opts = AsymmetryOptions {
                grid_step: *grid_step,
                refine_tol: *refine_tol,
            };
            let result = minimize_asymmetry(*n, *m, &opts)?;
            Ok(match g.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&result)?,
                // the scan itself, as sweep rows
                Format::Csv => to_csv(
                    &result
                        .trace
                        .iter()
                        .map(|p| SweepRow::new(*n, *m, p.a))
                        .collect::<Result<Vec<_>, _>>()?,
                )?,
            }
            .into())
        }
        Command::Solve {
            alpha,
            beta,
            gamma,
            restarts,
        } => {
            let opts = SearchOptions {
                seed: g.seed,
                restarts: *restarts,
                tol: g.tol,
                ..SearchOptions::default()
            };
            let result = solve_amplifier(*alpha, *beta, *gamma, &opts)?;
            Ok(render(&result, g.format.unwrap_or(Format::Json))?.into())
        }
        Command::Verify {
            config,
            samples,
            sample_seed,
            psi_re,
            psi_im,
        } => {
            let cfg = config.resolve()?;
            let machine = build_machine(&cfg)?;
            let report = noise_report(&cfg);
            let commutation_residual = machine.transform.commutation_residual();
            let symplectic_residual = machine.transform.to_symplectic_with_tol(g.tol)?.residual();
            let sample_cfg = SampleConfig::new(
                *samples,
                sample_seed.unwrap_or(g.seed),
                Complex64::new(*psi_re, *psi_im),
            )?;
            let empirical = simulate(&machine, &sample_cfg)?;
            let comparison = compare_to_analytic(&empirical, &report, &machine.layout)?;
            let pass = !comparison.flagged && commutation_residual < g.tol && symplectic_residual < g.tol;
            let doc = VerifyDocument {
                pass,
                commutation_residual,
                symplectic_residual,
                tol: g.tol,
                report,
                empirical,
                comparison,
            };
            let text = match g.format {
                None => verify_table(&doc),
                Some(Format::Json) => to_json(&doc)?,
                Some(Format::Csv) => to_csv(&z_rows(&doc.comparison))?,
            };
            let failure = (!pass).then(|| {
                CliError::VerifyFailed(format!(
                    "max |z| = {:.3}, residuals {:.1e}/{:.1e}",
                    doc.comparison.max_abs_z, commutation_residual, symplectic_residual
                ))
            });
            Ok(Output { text, failure })
        }
    }
}

/// Run a parsed command line and write its output. Returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|out| {
        match &cli.global.out {
            Some(path) => std::fs::write(path, &out.text)?,
            None => match std::io::stdout().write_all(out.text.as_bytes()) {
                // downstream closed early (e.g. `| head`): not our failure
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            },
        }
        out.failure.map_or(Ok(()), Err)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("pciclone: {e}");
            e.exit_code()
        }
    }
}
