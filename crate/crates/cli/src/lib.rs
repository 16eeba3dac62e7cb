//! `cgauss` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure (structured JSON on stderr),
//! 2 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cgauss_core::dyson::{gap_order_violations, simulate, simulate_coupled, DysonConfig};
use cgauss_core::experiments::{dimension_sweep, SweepConfig};
use cgauss_core::io::{
    load_data_csv, load_real_symmetric_any, load_vector, output_dir, write_json, write_plot_data, Payload, PlotKind,
    ResultEnvelope, RunManifest,
};
use cgauss_core::mechanisms::{
    covariance_from_data, run_mechanism, MechanismOptions, PrivacyParams, PsdPolicy, Variant,
};
use cgauss_core::random_matrix::{
    classical_locations, empirical_gap_cdf, gap_tail_exponent, rigidity_statistic, sample_ensemble_eigenvalues,
    Ensemble, FitRange, RigidityFactor,
};
use cgauss_core::verify::{run_verify, DEFAULT_SEED, FULL, QUICK};
use cgauss_core::{Error, SeededRng, WeylChamberVector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "cgauss",
    version,
    about = "Private rank-k covariance approximation and random-matrix experiments"
)]
pub struct Cli {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the complex or real Gaussian mechanism on one matrix.
    Mechanism(MechanismArgs),
    /// Sample GUE/GOE eigenvalues; gap CDF, tail exponent and rigidity.
    Gaps(GapsArgs),
    /// Simulate Dyson Brownian motion, or compare two coupled runs.
    Dyson(DysonCmd),
    /// Utility metrics across dimensions with a log-log exponent fit.
    Sweep(SweepArgs),
    /// Run the invariant suite; exits 1 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EnsembleArg {
    Gue,
    Goe,
}

impl From<EnsembleArg> for Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Gue => Ensemble::Gue,
            EnsembleArg::Goe => Ensemble::Goe,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Complex,
    Real,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Complex => Variant::Complex,
            VariantArg::Real => Variant::Real,
        }
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["matrix", "data"]))]
pub struct MechanismArgs {
    /// Real symmetric PSD matrix (.json or .csv).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Data rows (CSV); the mechanism runs on AᵀA after row clipping.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub row_bound: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::Complex)]
    pub variant: VariantArg,
    /// Accept inputs that are not PSD (logs a warning instead of failing).
    #[arg(long)]
    pub warn_non_psd: bool,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GapsArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, value_enum, default_value_t = EnsembleArg::Gue)]
    pub ensemble: EnsembleArg,
    #[arg(long, default_value_t = 20_000)]
    pub n: usize,
    /// 1-based gap index; defaults to d/2.
    #[arg(long)]
    pub index: Option<usize>,
    /// Rigidity exponent L in (ln d)^(L ln ln d).
    #[arg(long, default_value_t = 1.0)]
    pub l: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the gap CDF table (s,p_hat,ci_lo,ci_hi).
    #[arg(long)]
    pub cdf_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct DysonCmd {
    #[command(subcommand)]
    pub couple: Option<DysonSub>,
    #[command(flatten)]
    pub run: DysonArgs,
}

#[derive(Debug, Subcommand)]
pub enum DysonSub {
    /// Drive two initial conditions with the same increments and count gap-order violations.
    Couple(CoupleArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DysonParams {
    #[arg(long, default_value_t = 2)]
    pub beta: u8,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DysonArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Initial eigenvalues (.json array or .csv row); default all zero.
    #[arg(long)]
    pub gamma0: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub beta: u8,
    #[arg(long, default_value_t = 1e-4)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trajectory CSV (t,gamma_1..gamma_d); stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoupleArgs {
    #[arg(long)]
    pub gamma0: PathBuf,
    #[arg(long)]
    pub xi0: PathBuf,
    #[command(flatten)]
    pub params: DysonParams,
    /// Violation tolerance; defaults to 1e-3·√dt.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 8.0)]
    pub gap_multiple: f64,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [VariantArg::Complex, VariantArg::Real])]
    pub variants: Vec<VariantArg>,
    /// Reuse one test matrix per dimension instead of a fresh one per replication.
    #[arg(long)]
    pub fixed_matrix: bool,
    #[arg(long)]
    pub seed: u64,
    /// Result JSON; the per-d CSV is written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Smaller instance counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Appends flags from a `--config` JSON object that are not already given on
/// the command line. Arrays become comma lists; `true` becomes a bare flag.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pos = strs.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(argv) };
    let path = match strs[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => strs.get(pos + 1).cloned().ok_or("--config needs a file")?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let obj: serde_json::Map<String, Value> = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let mut out = argv;
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        if strs.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined: Vec<String> = items.iter().map(scalar).collect();
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(&other).into());
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn resolve(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        output_dir(Path::new(".")).join(path)
    }
}

fn emit_envelope(manifest: RunManifest, payload: Payload, out: Option<&Path>) -> cgauss_core::Result<()> {
    let mut manifest = manifest;
    match out {
        Some(p) => {
            let p = resolve(p);
            manifest.record_output(&p);
            manifest.finish();
            write_json(&p, &ResultEnvelope::new(manifest, payload))
        }
        None => {
            manifest.finish();
            let text = serde_json::to_string_pretty(&ResultEnvelope::new(manifest, payload))?;
            to_stdout(&text, true)
        }
    }
}

/// A reader closing the pipe early (`| head`) is not an error.
fn to_stdout(text: &str, newline: bool) -> cgauss_core::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let res = out
        .write_all(text.as_bytes())
        .and_then(|_| if newline { out.write_all(b"\n") } else { Ok(()) })
        .and_then(|_| out.flush());
    match res {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn cmd_mechanism(a: &MechanismArgs) -> cgauss_core::Result<i32> {
    let m = match (&a.matrix, &a.data) {
        (Some(p), _) => load_real_symmetric_any(p)?,
        (None, Some(p)) => covariance_from_data(&load_data_csv(p, a.row_bound)?),
        (None, None) => unreachable!("clap enforces one input"),
    };
    let params = PrivacyParams::new(a.epsilon, a.delta)?;
    let opts = MechanismOptions {
        psd: if a.warn_non_psd {
            PsdPolicy::WarnOnly
        } else {
            PsdPolicy::Strict
        },
    };
    let variant = Variant::from(a.variant);
    let out = run_mechanism(variant, &m, a.k, &params, &mut SeededRng::new(a.seed), &opts)?;
    let config = json!({
        "matrix": a.matrix, "data": a.data, "row_bound": a.row_bound, "k": a.k,
        "epsilon": a.epsilon, "delta": a.delta, "variant": variant,
    });
    let payload = json!({
        "variant": variant,
        "k": a.k,
        "noise_scale": params.noise_scale(),
        "y": out.y,
        "perturbed_eigenvalues": out.m_hat_values,
        "seed": out.seed_record,
    });
    emit_envelope(
        RunManifest::start("mechanism", config, Some(a.seed)),
        Payload::Other(payload),
        a.out.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn cmd_gaps(a: &GapsArgs) -> cgauss_core::Result<i32> {
    let ensemble = Ensemble::from(a.ensemble);
    let index = a.index.unwrap_or(a.d / 2);
    let set = sample_ensemble_eigenvalues(a.d, ensemble, a.n, a.seed)?;
    let rf = RigidityFactor::new(a.d, a.l)?;
    let unit = ensemble.entry_scale() / (rf.value * (a.d as f64).sqrt());
    let cdf = empirical_gap_cdf(&set, index, unit)?;
    let tail = gap_tail_exponent(&set, index, unit, FitRange::default())?;
    let rigidity = rigidity_statistic(&set, &classical_locations(a.d)?, &rf)?;
    let config = json!({"d": a.d, "ensemble": ensemble, "n": a.n, "index": index, "l": a.l});
    let manifest = RunManifest::start("gaps", config, Some(a.seed));
    if let Some(p) = &a.cdf_out {
        let p = resolve(p);
        let mut m = manifest.clone();
        m.record_output(&p);
        m.finish();
        write_plot_data(
            &ResultEnvelope::new(m, Payload::GapCdf(cdf.clone())),
            PlotKind::GapCdf,
            &p,
        )?;
    }
    let payload = json!({
        "unit": unit,
        "rigidity_factor": rf,
        "tail_fit": tail,
        "rigidity": rigidity,
        "cdf": cdf,
    });
    emit_envelope(manifest, Payload::Other(payload), a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn cmd_dyson(a: &DysonArgs) -> cgauss_core::Result<i32> {
    let Some(seed) = a.seed else {
        eprintln!("error: the following required arguments were not provided:\n  --seed <SEED>");
        return Ok(EXIT_USAGE);
    };
    let gamma0 = match (&a.gamma0, a.d) {
        (Some(p), _) => WeylChamberVector::new(load_vector(p)?)?,
        (None, Some(d)) => WeylChamberVector::zeros(d),
        (None, None) => {
            eprintln!("error: give --d or --gamma0");
            return Ok(EXIT_USAGE);
        }
    };
    let cfg = DysonConfig::new(gamma0.len(), a.beta, a.dt, a.t_end)?;
    let traj = simulate(&gamma0, &cfg, &mut SeededRng::new(seed))?;
    let config = json!({"d": cfg.dim, "beta": a.beta, "dt": a.dt, "t_end": a.t_end, "gamma0": gamma0});
    let mut manifest = RunManifest::start("dyson", config, Some(seed));
    match &a.out {
        Some(out) => {
            let out = resolve(out);
            manifest.record_output(&out);
            manifest.finish();
            let env = ResultEnvelope::new(manifest, Payload::Trajectory(traj));
            write_plot_data(&env, PlotKind::Trajectory, &out)?;
            write_json(&out.with_extension("manifest.json"), &env.manifest)?;
        }
        None => to_stdout(&cgauss_core::io::trajectory_csv(&traj), false)?,
    }
    Ok(EXIT_OK)
}

fn cmd_couple(a: &CoupleArgs) -> cgauss_core::Result<i32> {
    let gamma0 = WeylChamberVector::new(load_vector(&a.gamma0)?)?;
    let xi0 = WeylChamberVector::new(load_vector(&a.xi0)?)?;
    let p = &a.params;
    let cfg = DysonConfig::new(gamma0.len(), p.beta, p.dt, p.t_end)?;
    let pair = simulate_coupled(&gamma0, &xi0, &cfg, &mut SeededRng::new(p.seed))?;
    let tol = a.tol.unwrap_or(1e-3 * cfg.step().sqrt());
    let report = gap_order_violations(&pair, tol);
    let config = json!({
        "gamma0": a.gamma0, "xi0": a.xi0, "beta": p.beta, "dt": p.dt, "t_end": p.t_end, "tol": tol,
    });
    let payload = json!({
        "violations": report,
        "initial_gaps_ordered": pair.initial_gaps_ordered,
        "recorded_states": pair.gamma.states.len(),
    });
    emit_envelope(
        RunManifest::start("dyson couple", config, Some(p.seed)),
        Payload::Other(payload),
        a.out.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs) -> cgauss_core::Result<i32> {
    let cfg = SweepConfig {
        k: a.k,
        dims: a.dims.clone(),
        gap_multiple: a.gap_multiple,
        params: PrivacyParams::new(a.epsilon, a.delta)?,
        replications: a.reps,
        master_seed: a.seed,
        variants: a.variants.iter().map(|&v| v.into()).collect(),
        fixed_matrix: a.fixed_matrix,
    };
    let result = dimension_sweep(&cfg)?;
    let mut manifest = RunManifest::start("sweep", serde_json::to_value(&cfg)?, Some(a.seed));
    match &a.out {
        Some(out) => {
            let out = resolve(out);
            let csv = out.with_extension("csv");
            manifest.record_output(&out);
            manifest.record_output(&csv);
            manifest.finish();
            let env = ResultEnvelope::new(manifest, Payload::Sweep(result));
            write_plot_data(&env, PlotKind::Sweep, &csv)?;
            write_json(&out, &env)?;
        }
        None => emit_envelope(manifest, Payload::Sweep(result), None)?,
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs) -> cgauss_core::Result<i32> {
    let report = run_verify(if a.quick { QUICK } else { FULL }, a.seed.unwrap_or(DEFAULT_SEED))?;
    for c in &report.checks {
        eprintln!(
            "{:<20} {} ({} instances; {})",
            c.name,
            if c.passed() { "ok" } else { "FAILED" },
            c.instances,
            c.detail
        );
    }
    to_stdout(&serde_json::to_string_pretty(&report)?, true)?;
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_RUNTIME })
}

fn run(cli: &Cli) -> cgauss_core::Result<i32> {
    match &cli.command {
        Command::Mechanism(a) => cmd_mechanism(a),
        Command::Gaps(a) => cmd_gaps(a),
        Command::Dyson(DysonCmd {
            couple: Some(DysonSub::Couple(a)),
            ..
        }) => cmd_couple(a),
        Command::Dyson(DysonCmd { run, .. }) => cmd_dyson(run),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::DimensionMismatch { .. } => "dimension_mismatch",
        Error::NotHermitian { .. } => "not_hermitian",
        Error::NonFinite { .. } => "non_finite",
        Error::EigenNonConvergence { .. } => "eigen_non_convergence",
        Error::NotPsd { .. } => "not_psd",
        Error::BisectionNonConvergence { .. } => "bisection_non_convergence",
        Error::IntegrationFailure { .. } => "integration_failure",
        Error::Parse { .. } => "parse",
        Error::RaggedRow { .. } => "ragged_row",
        Error::Empty(_) => "empty",
        Error::KindMismatch { .. } => "kind_mismatch",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
        Error::Csv(_) => "csv",
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv = match merge_config(argv.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"error": error_kind(&e), "message": e.to_string()}));
            EXIT_RUNTIME
        }
    }
}
