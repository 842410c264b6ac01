//! `bimetric`: command-line driver for the entanglement field model.
//!
//! Exit codes: 0 success, 2 usage, 3 configuration, 4 runtime failure.

mod config;

use bimetric_core::field_dynamics::{
    self, source_from_entropy, total_energy, FieldError, FieldState,
};
use bimetric_core::metric::{
    build_qmm, deformation_factor, det_qmm, det_qmm_closed_form, interval_qmm, interval_srm,
    light_speed_spatial, light_speed_temporal, BimetricParams, FourVector, GradientCovector,
};
use bimetric_core::quantum_state::{
    max_chsh_for_entropy, reduced_entropies, schmidt_family_max_chsh, PhysicalConstants, PureState,
    QuantumError,
};
use bimetric_core::scenarios::{self, write_atomic, ExportFormat, ScenarioConfig, ScenarioError};
use bimetric_core::signal_propagation::{
    superluminal_factor, trace_null_ray, FieldSource, PropagationError, PropagationMode,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{debug, info};
use num_complex::Complex64;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Config(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Config { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<PropagationError> for CliError {
    fn from(e: PropagationError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bimetric",
    version,
    about = "Entanglement field, deformed light cones and superluminal signal scenarios"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON scenario config; unset keys take their defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set lattice.num_points=2048` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Where to write the result; written atomically.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Light-speed relation used for signals; overrides the config.
    #[arg(long, global = true, value_enum)]
    mode: Option<Mode>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Spatial,
    Temporal,
    Full,
}

impl From<Mode> for PropagationMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Spatial => PropagationMode::Spatial,
            Mode::Temporal => PropagationMode::Temporal,
            Mode::Full => PropagationMode::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StateKind {
    /// (|00> + |11>)/sqrt 2
    Bell,
    /// |00>
    Product,
    /// cos(theta)|00> + sin(theta)|11>
    Schmidt,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entanglement entropy of a two-qubit pure state.
    Entropy {
        #[arg(long, value_enum, default_value_t = StateKind::Bell)]
        state: StateKind,
        /// Schmidt angle in radians.
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
    },
    /// Deformed metric for a gradient covector (1/m, with x0 = c0 t).
    Metric {
        /// Components d_0 phi, d_1 phi, d_2 phi, d_3 phi.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            required = true
        )]
        gradient: Vec<f64>,
        /// Displacement dx^0, dx^1, dx^2, dx^3 in meters.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        displacement: Option<Vec<f64>>,
    },
    /// Evolve the entropy source on the scenario lattice.
    Evolve,
    /// Trace a signal from A to B through the initial entropy source profile.
    Trace,
    /// Run the scenario selected by the config's `scenario` key.
    Scenario,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BIMETRIC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 0 for --help/--version and 2 for usage errors
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Entropy { state, theta } => entropy(common, *state, *theta),
        Command::Metric {
            gradient,
            displacement,
        } => metric(common, gradient, displacement.as_deref()),
        Command::Evolve => evolve(common),
        Command::Trace => trace(common),
        Command::Scenario => scenario(common),
    }
}

fn load_config(common: &Common) -> Result<ScenarioConfig, CliError> {
    let mut config = config::load(common.config.as_deref(), &common.overrides)?;
    if let Some(mode) = common.mode {
        config.mode = mode.into();
    }
    debug!("config: {config:?}");
    Ok(config)
}

fn export_format(f: Format) -> ExportFormat {
    match f {
        Format::Csv => ExportFormat::Csv,
        Format::Json => ExportFormat::Json,
    }
}

/// Writes `csv` or `json` to `--output` when given.
fn write_output(
    common: &Common,
    csv: impl FnOnce() -> String,
    json: impl FnOnce() -> String,
) -> Result<(), CliError> {
    let Some(path) = &common.output else {
        return Ok(());
    };
    let text = match common.format {
        Format::Csv => csv(),
        Format::Json => json(),
    };
    write_atomic(path, text.as_bytes()).map_err(|e| CliError::Runtime(e.to_string()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct EntropyReport {
    state: String,
    entropy_a_nats: f64,
    entropy_b_nats: f64,
    chsh_max: f64,
}

fn entropy(common: &Common, kind: StateKind, theta: f64) -> Result<String, CliError> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (psi, label) = match kind {
        StateKind::Bell => (PureState::bell_phi_plus(), "bell".to_string()),
        StateKind::Product => (
            PureState::product(&[one, zero], &[one, zero])?,
            "product".to_string(),
        ),
        StateKind::Schmidt => (
            PureState::schmidt_family(theta),
            format!("schmidt(theta={theta})"),
        ),
    };
    let (s_a, s_b) = reduced_entropies(&psi)?;
    let chsh = match kind {
        StateKind::Schmidt => schmidt_family_max_chsh(theta),
        _ => max_chsh_for_entropy(s_a)?,
    };
    let report = EntropyReport {
        state: label,
        entropy_a_nats: s_a,
        entropy_b_nats: s_b,
        chsh_max: chsh,
    };
    write_output(
        common,
        || {
            format!(
                "state,entropy_a_nats,entropy_b_nats,chsh_max\n{},{:.16e},{:.16e},{:.16e}\n",
                report.state, s_a, s_b, chsh
            )
        },
        || to_json(&report),
    )?;
    Ok(format!(
        "entropy {}: S = {s_a} nats, max CHSH {chsh:.12}",
        report.state
    ))
}

#[derive(Serialize)]
struct MetricReport {
    beta: f64,
    gradient: [f64; 4],
    metric: [[f64; 4]; 4],
    deformation_factor: f64,
    determinant: f64,
    determinant_closed_form: f64,
    light_speed_temporal_m_s: f64,
    light_speed_spatial_m_s: Option<f64>,
    interval_srm: Option<f64>,
    interval_qmm: Option<f64>,
}

fn metric(
    common: &Common,
    gradient: &[f64],
    displacement: Option<&[f64]>,
) -> Result<String, CliError> {
    let four = |name: &str, v: &[f64]| {
        <[f64; 4]>::try_from(v)
            .map_err(|_| CliError::Usage(format!("--{name} takes 4 components, got {}", v.len())))
    };
    let gradient = four("gradient", gradient)?;
    let displacement = displacement.map(|d| four("displacement", d)).transpose()?;
    let config = load_config(common)?;
    let params = BimetricParams::new(config.beta).map_err(|e| CliError::Config(e.to_string()))?;
    let constants = PhysicalConstants::CODATA;
    let g = GradientCovector::new(gradient).map_err(|e| CliError::Usage(e.to_string()))?;
    let dx = displacement
        .map(FourVector::new)
        .transpose()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let q = build_qmm(&g, &params);
    let report = MetricReport {
        beta: params.beta(),
        gradient: g.0,
        metric: *q.entries(),
        deformation_factor: deformation_factor(&g, &params),
        determinant: det_qmm(&g, &params),
        determinant_closed_form: det_qmm_closed_form(&g, &params),
        light_speed_temporal_m_s: light_speed_temporal(g.0[0] * constants.c0, &params, &constants),
        light_speed_spatial_m_s: light_speed_spatial(g.spatial(), &params, &constants).ok(),
        interval_srm: dx.as_ref().map(interval_srm),
        interval_qmm: dx.as_ref().map(|d| interval_qmm(d, &g, &params)),
    };
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    write_output(
        common,
        || {
            format!(
                "deformation_factor,determinant,determinant_closed_form,light_speed_temporal_m_s,light_speed_spatial_m_s,interval_srm,interval_qmm\n{:.16e},{:.16e},{:.16e},{:.16e},{},{},{}\n",
                report.deformation_factor,
                report.determinant,
                report.determinant_closed_form,
                report.light_speed_temporal_m_s,
                opt(report.light_speed_spatial_m_s),
                opt(report.interval_srm),
                opt(report.interval_qmm)
            )
        },
        || to_json(&report),
    )?;
    let spatial = match report.light_speed_spatial_m_s {
        Some(c) => format!("{:.6}", c / constants.c0),
        None => "none (beta*(grad phi)^2 >= 1)".to_string(),
    };
    Ok(format!(
        "metric: det q = {:.12e}, c_temporal/c0 = {:.6}, c_spatial/c0 = {spatial}",
        report.determinant,
        report.light_speed_temporal_m_s / constants.c0
    ))
}

fn initial_source(
    config: &ScenarioConfig,
) -> Result<(scenarios::ResolvedScenario, FieldState), CliError> {
    let resolved = config.resolve()?;
    let state = source_from_entropy(
        config.initial_entropy,
        &resolved.entanglement,
        resolved.detector_a.position,
        config.profile_width,
        &resolved.lattice,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    Ok((resolved, state))
}

#[derive(Serialize)]
struct FieldReport<'a> {
    time_s: f64,
    steps: usize,
    x_m: Vec<f64>,
    phi: &'a [f64],
    pi: &'a [f64],
}

pub const DEFAULT_EVOLVE_STEPS: usize = 1000;

fn evolve(common: &Common) -> Result<String, CliError> {
    let config = load_config(common)?;
    let (resolved, initial) = initial_source(&config)?;
    let lattice = &resolved.lattice;
    let steps = config.steps.unwrap_or(DEFAULT_EVOLVE_STEPS);
    let potential = &config.potential;
    let e0 = total_energy(&initial, potential, lattice);
    let last = field_dynamics::evolve(&initial, potential, lattice, steps)?;
    let e1 = total_energy(&last, potential, lattice);
    write_output(
        common,
        || {
            let mut buf = Vec::new();
            last.write_csv(lattice, &mut buf)
                .expect("writing to memory");
            String::from_utf8(buf).expect("ascii")
        },
        || {
            to_json(&FieldReport {
                time_s: last.time(),
                steps,
                x_m: lattice.positions().collect(),
                phi: last.phi(),
                pi: last.pi(),
            })
        },
    )?;
    Ok(format!(
        "evolve {}: {steps} steps to t = {:.6e} s, max|phi| = {:.6e}, energy {:.6e} -> {:.6e}",
        config.name,
        last.time(),
        last.max_abs_phi(),
        e0,
        e1
    ))
}

fn trace(common: &Common) -> Result<String, CliError> {
    let config = load_config(common)?;
    let (resolved, state) = initial_source(&config)?;
    let ray = trace_null_ray(
        &resolved.detector_a,
        &resolved.detector_b,
        FieldSource::Snapshot(&state),
        &resolved.bimetric,
        &resolved.lattice,
        config.mode,
    )?;
    let factor = superluminal_factor(
        &ray,
        &resolved.detector_a,
        &resolved.detector_b,
        &resolved.constants,
    );
    write_output(
        common,
        || {
            let mut buf = Vec::new();
            ray.write_csv(&mut buf).expect("writing to memory");
            String::from_utf8(buf).expect("ascii")
        },
        || to_json(&ray),
    )?;
    Ok(format!(
        "trace {} ({} mode): arrival {:.6e} s over {} m, factor {:.6}",
        config.name,
        config.mode,
        ray.arrival_time(),
        config.separation,
        factor
    ))
}

fn scenario(common: &Common) -> Result<String, CliError> {
    let config = load_config(common)?;
    info!("running {} scenario '{}'", config.scenario, config.name);
    let result = scenarios::run(&config)?;
    if let Some(path) = &common.output {
        scenarios::export(&result, export_format(common.format), path)?;
        info!("wrote {}", path.display());
    }
    Ok(format!(
        "{} {}: {} rows, {}",
        result.metadata.name,
        result.metadata.scenario,
        result.rows.len(),
        result.headline()
    ))
}
