//! End-to-end runs: the detector timing bound, correlation decay with
//! distance, and screening by an intervening mass.
//!
//! Every scenario produces rows with the same six columns so that the results
//! can be exported and compared uniformly.

use crate::field_dynamics::{
    effective_mass_profile, linear_ramp, source_from_entropy, step_with, Boundary, FieldError,
    FieldHistory, FieldPotential, FieldState, Interval, LatticeConfig, Potential,
};
use crate::metric::{BimetricParams, MetricError};
use crate::par::{self, Execution};
use crate::quantum_state::{
    max_chsh_for_entropy, EntanglementParams, PhysicalConstants, QuantumError,
};
use crate::signal_propagation::{
    superluminal_factor, trace_null_ray_with, Detector, FieldSource, PropagationError,
    PropagationMode, TraceOptions,
};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CALIBRATION_MAX_ITERATIONS: usize = 200;
pub const CALIBRATION_TOLERANCE: f64 = 1e-6;
/// Largest `β(∂ₓφ)²` tried when calibrating a spatial gradient.
pub const MAX_SPATIAL_LOAD: f64 = 1.0 - 1e-12;
/// Inclusive range of superluminal factors flagged as consistent.
pub const FACTOR_WINDOW: (f64, f64) = (1e4, 1e7);
/// Fraction of the lattice extent that must remain outside the detector span.
pub const MIN_MARGIN: f64 = 0.1;
/// Pulse widths past the light-cone arrival during which a detector records.
pub const WINDOW_WIDTHS: f64 = 4.0;
pub const CSV_HEADER: &str =
    "distance_m,entropy_nats,phi_peak,chsh_max,arrival_time_s,superluminal_factor";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid config field '{field}': {message}")]
    Config { field: String, message: String },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Propagation(#[from] PropagationError),
    #[error("target factor {target:e} is unreachable in {mode} mode; maximum achievable factor is {max_achievable:e}")]
    Calibration {
        target: f64,
        max_achievable: f64,
        mode: PropagationMode,
    },
    #[error("calibration did not converge in {iterations} iterations: best factor {best:e} for target {target:e}")]
    NoConvergence {
        target: f64,
        best: f64,
        iterations: usize,
    },
    #[error("result has no rows")]
    EmptyResult,
    #[error("row {row}: column {column} is not finite")]
    NonFinite { row: usize, column: &'static str },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("JSON encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

fn config_error(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    TimingBound,
    DistanceDecay,
    InterveningMass,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::TimingBound => "timing_bound",
            Self::DistanceDecay => "distance_decay",
            Self::InterveningMass => "intervening_mass",
        })
    }
}

/// Lattice settings as written in a config file. Unset `dx` and `dt` are
/// derived from `span_fraction` and `courant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSpec {
    pub num_points: usize,
    /// m
    pub dx: Option<f64>,
    /// s
    pub dt: Option<f64>,
    pub courant: f64,
    pub boundary: Boundary,
    /// Share of the lattice extent covered by the detector separation.
    pub span_fraction: f64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            num_points: 4096,
            dx: None,
            dt: None,
            courant: 0.5,
            boundary: Boundary::Absorbing,
            span_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: ScenarioKind,
    /// m
    pub separation: f64,
    /// m²
    pub beta: f64,
    pub gamma: f64,
    /// nats
    pub initial_entropy: f64,
    /// m
    pub profile_width: f64,
    pub potential: Potential,
    pub lattice: LatticeSpec,
    pub mode: PropagationMode,
    pub target_factor: Option<f64>,
    /// m, measured from detector A; defaults depend on the scenario.
    pub distances: Option<Vec<f64>>,
    pub mass_region: Option<Interval>,
    pub mass_boost: f64,
    /// Step count for plain field evolution.
    pub steps: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "geneva".to_string(),
            scenario: ScenarioKind::TimingBound,
            separation: 11_000.0,
            beta: 1.0,
            gamma: 1.0,
            initial_entropy: LN_2,
            profile_width: 100.0,
            potential: Potential::default(),
            lattice: LatticeSpec::default(),
            mode: PropagationMode::Spatial,
            target_factor: None,
            distances: None,
            mass_region: None,
            mass_boost: 10.0,
            steps: None,
        }
    }
}

/// Validated config with the lattice and detectors laid out.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedScenario {
    pub config: ScenarioConfig,
    pub lattice: LatticeConfig,
    pub bimetric: BimetricParams,
    pub entanglement: EntanglementParams,
    pub constants: PhysicalConstants,
    pub detector_a: Detector,
    pub detector_b: Detector,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Checks every invariant and lays the detectors on the lattice.
    ///
    /// Detector A sits on the lattice node nearest the middle of the left
    /// margin so the source peak is sampled exactly.
    pub fn resolve(&self) -> Result<ResolvedScenario> {
        let constants = PhysicalConstants::CODATA;
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(config_error(
                "separation",
                format!("must be finite and > 0, got {}", self.separation),
            ));
        }
        let bimetric =
            BimetricParams::new(self.beta).map_err(|e| config_error("beta", e.to_string()))?;
        let entanglement = EntanglementParams::new(self.gamma)
            .map_err(|e| config_error("gamma", e.to_string()))?;
        if !(0.0..=LN_2).contains(&self.initial_entropy) {
            return Err(config_error(
                "initial_entropy",
                format!(
                    "must lie in [0, ln 2] for a two-qubit pure state, got {}",
                    self.initial_entropy
                ),
            ));
        }
        if !(self.profile_width > 0.0 && self.profile_width.is_finite()) {
            return Err(config_error(
                "profile_width",
                format!("must be finite and > 0, got {}", self.profile_width),
            ));
        }
        self.potential
            .validate()
            .map_err(|e| config_error("potential", e.to_string()))?;
        if let Some(t) = self.target_factor {
            if !(t >= 1.0 && t.is_finite()) {
                return Err(config_error(
                    "target_factor",
                    format!("must be finite and >= 1, got {t}"),
                ));
            }
        }
        if !(self.mass_boost >= 1.0 && self.mass_boost.is_finite()) {
            return Err(config_error(
                "mass_boost",
                format!("must be finite and >= 1, got {}", self.mass_boost),
            ));
        }

        let spec = &self.lattice;
        let n = spec.num_points;
        if n < crate::field_dynamics::MIN_POINTS {
            return Err(config_error(
                "lattice.num_points",
                format!(
                    "must be at least {}, got {n}",
                    crate::field_dynamics::MIN_POINTS
                ),
            ));
        }
        let dx = match spec.dx {
            Some(dx) => dx,
            None => {
                let f = spec.span_fraction;
                if !(f > 0.0 && f <= 1.0 - 2.0 * MIN_MARGIN) {
                    return Err(config_error(
                        "lattice.span_fraction",
                        format!("must lie in (0, {}], got {f}", 1.0 - 2.0 * MIN_MARGIN),
                    ));
                }
                self.separation / f / (n - 1) as f64
            }
        };
        let dt = match spec.dt {
            Some(dt) => dt,
            None => spec.courant * dx / constants.c0,
        };
        let lattice =
            LatticeConfig::new(n, dx, dt, spec.boundary, constants.c0).map_err(|e| match e {
                FieldError::Cfl { .. } => config_error("lattice.dt", e.to_string()),
                FieldError::InvalidLattice { field, .. } => {
                    config_error(&format!("lattice.{field}"), e.to_string())
                }
                other => config_error("lattice", other.to_string()),
            })?;

        let extent = lattice.extent();
        if self.separation > (1.0 - MIN_MARGIN) * extent {
            return Err(config_error(
                "separation",
                format!(
                    "{} m does not fit in the {extent} m lattice with a {}% margin",
                    self.separation,
                    MIN_MARGIN * 100.0
                ),
            ));
        }
        let a = ((extent - self.separation) / 2.0 / dx).round() * dx;
        let (detector_a, detector_b) = Detector::pair(a, a + self.separation)?;
        Ok(ResolvedScenario {
            config: self.clone(),
            lattice,
            bimetric,
            entanglement,
            constants,
            detector_a,
            detector_b,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub distance_m: f64,
    pub entropy_nats: f64,
    pub phi_peak: f64,
    pub chsh_max: f64,
    pub arrival_time_s: f64,
    pub superluminal_factor: f64,
}

impl ScenarioRow {
    fn columns(&self) -> [(&'static str, f64); 6] {
        [
            ("distance_m", self.distance_m),
            ("entropy_nats", self.entropy_nats),
            ("phi_peak", self.phi_peak),
            ("chsh_max", self.chsh_max),
            ("arrival_time_s", self.arrival_time_s),
            ("superluminal_factor", self.superluminal_factor),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSummary {
    pub num_points: usize,
    pub dx: f64,
    pub dt: f64,
    pub courant: f64,
    pub boundary: Boundary,
    pub detector_a_m: f64,
    pub detector_b_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    /// `gradient` (1/m) in spatial and full mode, `phi_dot` (1/s) in temporal mode.
    pub parameter: String,
    pub value: f64,
    pub iterations: usize,
    pub achieved_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    pub name: String,
    pub scenario: ScenarioKind,
    pub code_version: String,
    pub mode: PropagationMode,
    pub lattice: LatticeSummary,
    pub calibration: Option<Calibration>,
    /// Whether the superluminal factor lies in [`FACTOR_WINDOW`].
    pub consistent_with_window: Option<bool>,
    pub row_layout: String,
    pub notes: Vec<String>,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub metadata: ScenarioMetadata,
    pub rows: Vec<ScenarioRow>,
}

impl ScenarioResult {
    /// Nonempty rows with every value finite.
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(ScenarioError::EmptyResult);
        }
        for (i, row) in self.rows.iter().enumerate() {
            if let Some((column, _)) = row.columns().into_iter().find(|(_, v)| !v.is_finite()) {
                return Err(ScenarioError::NonFinite { row: i, column });
            }
        }
        Ok(())
    }

    /// `(control, treated)` row pairs of an intervening-mass result.
    pub fn pairs(&self) -> impl Iterator<Item = (&ScenarioRow, &ScenarioRow)> {
        self.rows.chunks_exact(2).map(|p| (&p[0], &p[1]))
    }

    /// Headline number for one-line summaries.
    pub fn headline(&self) -> String {
        let last = match self.rows.last() {
            Some(r) => r,
            None => return "no rows".to_string(),
        };
        match self.metadata.scenario {
            ScenarioKind::TimingBound => format!(
                "arrival {:.4e} s, factor {:.6e}",
                last.arrival_time_s, last.superluminal_factor
            ),
            ScenarioKind::DistanceDecay => {
                format!("chsh_max {:.6} at {} m", last.chsh_max, last.distance_m)
            }
            ScenarioKind::InterveningMass => match self.pairs().last() {
                Some((c, t)) => format!(
                    "chsh_max {:.6} vs control {:.6} at {} m",
                    t.chsh_max, c.chsh_max, t.distance_m
                ),
                None => "no pairs".to_string(),
            },
        }
    }
}

pub const NOTE_PURE_STATE: &str =
    "correlations assume the pure two-qubit family cos(theta)|00> + sin(theta)|11> with theta set by the local entropy phi/gamma";
pub const NOTE_DECOHERENCE: &str =
    "decoherence is not modeled; values are the decoherence-free prediction";

fn metadata(
    resolved: &ResolvedScenario,
    kind: ScenarioKind,
    row_layout: &str,
    notes: Vec<String>,
) -> ScenarioMetadata {
    let lattice = &resolved.lattice;
    ScenarioMetadata {
        name: resolved.config.name.clone(),
        scenario: kind,
        code_version: crate::VERSION.to_string(),
        mode: resolved.config.mode,
        lattice: LatticeSummary {
            num_points: lattice.num_points(),
            dx: lattice.dx(),
            dt: lattice.dt(),
            courant: lattice.courant(),
            boundary: lattice.boundary(),
            detector_a_m: resolved.detector_a.position,
            detector_b_m: resolved.detector_b.position,
        },
        calibration: None,
        consistent_with_window: None,
        row_layout: row_layout.to_string(),
        notes,
        config: resolved.config.clone(),
    }
}

fn mode_note(mode: PropagationMode) -> String {
    match mode {
        PropagationMode::Spatial => {
            "signal speed from the spatial gradient: c = c0 / sqrt(1 - beta (dphi/dx)^2)"
        }
        PropagationMode::Temporal => {
            "signal speed from the time derivative: c = c0 sqrt(1 + beta phi_dot^2 / c0^2)"
        }
        PropagationMode::Full => {
            "signal speed from the full 1+1D null condition of the deformed metric"
        }
    }
    .to_string()
}

/// Dispatches on `config.scenario`.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioResult> {
    run_with(config, Execution::default())
}

pub fn run_with(config: &ScenarioConfig, exec: Execution) -> Result<ScenarioResult> {
    match config.scenario {
        ScenarioKind::TimingBound => run_timing_bound(config),
        ScenarioKind::DistanceDecay => {
            let resolved = config.resolve()?;
            let distances = config
                .distances
                .clone()
                .unwrap_or_else(|| default_distances(&resolved));
            run_distance_decay_with(config, &distances, exec)
        }
        ScenarioKind::InterveningMass => {
            let resolved = config.resolve()?;
            let region = config
                .mass_region
                .unwrap_or_else(|| default_region(&resolved));
            run_intervening_mass_with(config, region, config.mass_boost, exec)
        }
    }
}

/// From a point beside the source out to the full separation.
pub fn default_distances(resolved: &ResolvedScenario) -> Vec<f64> {
    let sep = resolved.config.separation;
    let mut d = vec![1e-9 * sep];
    d.extend((1..=20).map(|k| sep * k as f64 / 20.0));
    d
}

/// The middle fifth of the span between the detectors.
pub fn default_region(resolved: &ResolvedScenario) -> Interval {
    let a = resolved.detector_a.position;
    let sep = resolved.config.separation;
    Interval::new(a + 0.4 * sep, a + 0.6 * sep)
}

fn trace_factor(
    resolved: &ResolvedScenario,
    state: &FieldState,
    options: &TraceOptions,
) -> std::result::Result<(f64, f64), PropagationError> {
    let ray = trace_null_ray_with(
        &resolved.detector_a,
        &resolved.detector_b,
        FieldSource::Snapshot(state),
        &resolved.bimetric,
        &resolved.lattice,
        resolved.config.mode,
        options,
    )?;
    let factor = superluminal_factor(
        &ray,
        &resolved.detector_a,
        &resolved.detector_b,
        &resolved.constants,
    );
    Ok((ray.arrival_time(), factor))
}

/// Uniform profile with amplitude `value`: a ramp through the midpoint of the
/// detectors for spatial and full mode, a constant `φ̇` for temporal mode.
fn uniform_profile(resolved: &ResolvedScenario, value: f64) -> Result<FieldState> {
    let lattice = &resolved.lattice;
    let state = match resolved.config.mode {
        PropagationMode::Temporal => FieldState::from_fn(lattice, |_| 0.0, |_| value)?,
        PropagationMode::Spatial | PropagationMode::Full => {
            let mid = 0.5 * (resolved.detector_a.position + resolved.detector_b.position);
            linear_ramp(value, mid, lattice)?
        }
    };
    Ok(state)
}

/// Calibrates a uniform gradient to the target superluminal factor and
/// reports the arrival time at detector B.
pub fn run_timing_bound(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let resolved = config.resolve()?;
    let target = config.target_factor.unwrap_or(1.5e4);
    let mode = config.mode;
    // rays through a uniform profile see a constant speed; one substep per cell is exact
    let options = TraceOptions {
        steps_per_cell: 1,
        ..TraceOptions::default()
    };
    let evaluate = |value: f64| -> Result<(f64, f64)> {
        let state = uniform_profile(&resolved, value)?;
        Ok(trace_factor(&resolved, &state, &options)?)
    };

    let (parameter, mut lo, mut hi) = match mode {
        PropagationMode::Temporal => {
            let c0 = resolved.constants.c0;
            (
                "phi_dot",
                0.0,
                2.0 * target * c0 / resolved.bimetric.beta().sqrt(),
            )
        }
        PropagationMode::Spatial | PropagationMode::Full => (
            "gradient",
            0.0,
            (MAX_SPATIAL_LOAD / resolved.bimetric.beta()).sqrt(),
        ),
    };

    let reached = |factor: f64| (factor - target).abs() <= CALIBRATION_TOLERANCE * target;
    let (mut value, mut best, mut iterations) = (0.0, evaluate(0.0)?, 0);
    if !reached(best.1) {
        let top = evaluate(hi)?;
        if top.1 < target && !reached(top.1) {
            return Err(ScenarioError::Calibration {
                target,
                max_achievable: top.1,
                mode,
            });
        }
        loop {
            if iterations == CALIBRATION_MAX_ITERATIONS {
                return Err(ScenarioError::NoConvergence {
                    target,
                    best: best.1,
                    iterations,
                });
            }
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let eval = evaluate(mid)?;
            if (eval.1 - target).abs() < (best.1 - target).abs() {
                (value, best) = (mid, eval);
            }
            if reached(eval.1) {
                break;
            }
            if eval.1 < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }

    let (arrival, factor) = best;
    let state = uniform_profile(&resolved, value)?;
    let row = ScenarioRow {
        distance_m: config.separation,
        entropy_nats: config.initial_entropy,
        phi_peak: state.max_abs_phi(),
        chsh_max: max_chsh_for_entropy(config.initial_entropy)?,
        arrival_time_s: arrival,
        superluminal_factor: factor,
    };
    let tol = 1.0 + CALIBRATION_TOLERANCE;
    let consistent = factor >= FACTOR_WINDOW.0 / tol && factor <= FACTOR_WINDOW.1 * tol;
    let mut meta = metadata(
        &resolved,
        ScenarioKind::TimingBound,
        "one row for detector B",
        vec![
            mode_note(mode),
            NOTE_PURE_STATE.to_string(),
            NOTE_DECOHERENCE.to_string(),
        ],
    );
    meta.calibration = Some(Calibration {
        parameter: parameter.to_string(),
        value,
        iterations,
        achieved_factor: factor,
    });
    meta.consistent_with_window = Some(consistent);
    let result = ScenarioResult {
        metadata: meta,
        rows: vec![row],
    };
    result.validate()?;
    Ok(result)
}

fn check_distances(resolved: &ResolvedScenario, distances: &[f64]) -> Result<()> {
    if distances.is_empty() {
        return Err(config_error("distances", "must not be empty"));
    }
    if distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(config_error(
            "distances",
            "every distance must be finite and > 0",
        ));
    }
    if distances.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_error("distances", "must be strictly ascending"));
    }
    let room = resolved.lattice.extent() - resolved.detector_a.position;
    let last = distances[distances.len() - 1];
    if last > room {
        return Err(config_error(
            "distances",
            format!("{last} m runs past the lattice edge ({room} m from detector A)"),
        ));
    }
    Ok(())
}

/// Field evolution from the entropy source with a detector at each distance.
///
/// Each detector keeps the largest `|φ|` it sees until `WINDOW_WIDTHS` pulse
/// widths after the light-cone arrival; the rays travel through the evolving
/// field.
fn decay_rows<P: FieldPotential + ?Sized>(
    resolved: &ResolvedScenario,
    potential: &P,
    distances: &[f64],
    exec: Execution,
) -> Result<Vec<ScenarioRow>> {
    let config = &resolved.config;
    let lattice = &resolved.lattice;
    let c0 = lattice.c0();
    let a = resolved.detector_a.position;
    let initial = source_from_entropy(
        config.initial_entropy,
        &resolved.entanglement,
        a,
        config.profile_width,
        lattice,
    )?;

    let windows: Vec<f64> = distances
        .iter()
        .map(|d| (d + WINDOW_WIDTHS * config.profile_width) / c0)
        .collect();
    let duration = windows.iter().fold(0.0_f64, |m, &w| m.max(w));
    let steps = (duration / lattice.dt()).ceil() as usize;
    let stride = (steps / 256).max(1);

    let mut peaks = vec![0.0_f64; distances.len()];
    let mut observe = |state: &FieldState| -> Result<()> {
        for ((peak, &d), &w) in peaks.iter_mut().zip(distances).zip(&windows) {
            if state.time() <= w * (1.0 + 1e-12) {
                *peak = peak.max(state.phi_at(lattice, a + d)?.abs());
            }
        }
        Ok(())
    };
    observe(&initial)?;
    let mut snapshots = vec![initial.clone()];
    let mut current = initial;
    for k in 1..=steps {
        current = step_with(&current, potential, lattice, exec)?;
        observe(&current)?;
        if k % stride == 0 || k == steps {
            snapshots.push(current.clone());
        }
    }
    let history = FieldHistory::new(snapshots)?;

    let gamma = resolved.entanglement.gamma();
    let rows = par::map_collect(
        exec,
        &distances.iter().zip(&peaks).collect::<Vec<_>>(),
        |(&d, &peak)| {
            let to = Detector {
                position: a + d,
                ..resolved.detector_b
            };
            let ray = trace_null_ray_with(
                &resolved.detector_a,
                &to,
                FieldSource::History(&history),
                &resolved.bimetric,
                lattice,
                config.mode,
                &TraceOptions::default(),
            )?;
            let entropy = if gamma > 0.0 {
                (peak / gamma).min(LN_2)
            } else {
                0.0
            };
            Ok(ScenarioRow {
                distance_m: d,
                entropy_nats: entropy,
                phi_peak: peak,
                chsh_max: max_chsh_for_entropy(entropy)?,
                arrival_time_s: ray.arrival_time(),
                superluminal_factor: superluminal_factor(
                    &ray,
                    &resolved.detector_a,
                    &to,
                    &resolved.constants,
                ),
            })
        },
    );
    rows.into_iter().collect()
}

pub fn run_distance_decay(config: &ScenarioConfig, distances: &[f64]) -> Result<ScenarioResult> {
    run_distance_decay_with(config, distances, Execution::default())
}

/// Correlation at detectors placed `distances` from the source at A.
pub fn run_distance_decay_with(
    config: &ScenarioConfig,
    distances: &[f64],
    exec: Execution,
) -> Result<ScenarioResult> {
    let resolved = config.resolve()?;
    if config.gamma == 0.0 {
        return Err(config_error(
            "gamma",
            "must be > 0 to map phi back to entropy",
        ));
    }
    check_distances(&resolved, distances)?;
    let rows = decay_rows(&resolved, &config.potential, distances, exec)?;
    let meta = metadata(
        &resolved,
        ScenarioKind::DistanceDecay,
        "one row per distance, ascending",
        vec![
            mode_note(config.mode),
            NOTE_PURE_STATE.to_string(),
            NOTE_DECOHERENCE.to_string(),
        ],
    );
    let result = ScenarioResult {
        metadata: meta,
        rows,
    };
    result.validate()?;
    Ok(result)
}

pub fn run_intervening_mass(
    config: &ScenarioConfig,
    mass_region: Interval,
    mass_boost: f64,
) -> Result<ScenarioResult> {
    run_intervening_mass_with(config, mass_region, mass_boost, Execution::default())
}

/// Paired runs without and with the mass multiplied by `mass_boost` inside
/// `mass_region`. Rows alternate control, treated for each distance; the
/// default distance is the full separation.
pub fn run_intervening_mass_with(
    config: &ScenarioConfig,
    mass_region: Interval,
    mass_boost: f64,
    exec: Execution,
) -> Result<ScenarioResult> {
    let resolved = config.resolve()?;
    if config.gamma == 0.0 {
        return Err(config_error(
            "gamma",
            "must be > 0 to map phi back to entropy",
        ));
    }
    if config.potential.mass.is_nan() || config.potential.mass <= 0.0 {
        return Err(config_error(
            "potential.mass",
            "must be > 0 for a mass boost to act",
        ));
    }
    let distances = config
        .distances
        .clone()
        .unwrap_or_else(|| vec![config.separation]);
    check_distances(&resolved, &distances)?;
    let lattice = &resolved.lattice;
    if mass_region.start.is_nan()
        || mass_region.end.is_nan()
        || mass_region.start >= mass_region.end
    {
        return Err(config_error("mass_region", "start must be below end"));
    }
    let control = effective_mass_profile(&config.potential, mass_region, 1.0, lattice)
        .map_err(|e| config_error("mass_region", e.to_string()))?;
    let treated = effective_mass_profile(&config.potential, mass_region, mass_boost, lattice)
        .map_err(|e| match e {
            FieldError::InvalidBoost(_) => config_error("mass_boost", e.to_string()),
            other => config_error("mass_region", other.to_string()),
        })?;

    // the two runs own separate lattices; parallelism comes from the join
    let inner = if exec.is_parallel() {
        Execution::Sequential
    } else {
        exec
    };
    let (with_out, with_mass) = par::join(
        exec,
        || decay_rows(&resolved, &control, &distances, inner),
        || decay_rows(&resolved, &treated, &distances, inner),
    );
    let (with_out, with_mass) = (with_out?, with_mass?);
    let rows = with_out
        .into_iter()
        .zip(with_mass)
        .flat_map(|(c, t)| [c, t])
        .collect();

    let a = resolved.detector_a.position;
    let b = resolved.detector_b.position;
    let placement = if mass_region.start > a && mass_region.end < b {
        "mass region lies strictly between the detectors"
    } else {
        "mass region is not strictly between the detectors"
    };
    let meta = metadata(
        &resolved,
        ScenarioKind::InterveningMass,
        "pairs per distance: control row, then row with the intervening mass",
        vec![
            mode_note(config.mode),
            format!(
                "mass boost {mass_boost} over [{}, {}] m; {placement}",
                mass_region.start, mass_region.end
            ),
            NOTE_PURE_STATE.to_string(),
            NOTE_DECOHERENCE.to_string(),
        ],
    );
    let result = ScenarioResult {
        metadata: meta,
        rows,
    };
    result.validate()?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

/// Text of `result` in `format`; floats in CSV carry 17 significant digits.
pub fn render(result: &ScenarioResult, format: ExportFormat) -> Result<String> {
    result.validate()?;
    match format {
        ExportFormat::Csv => {
            let mut out = String::new();
            out.push_str(CSV_HEADER);
            out.push('\n');
            for row in &result.rows {
                let fields: Vec<String> = row
                    .columns()
                    .iter()
                    .map(|(_, v)| format!("{v:.16e}"))
                    .collect();
                let _ = writeln!(out, "{}", fields.join(","));
            }
            Ok(out)
        }
        ExportFormat::Json => {
            let mut out = serde_json::to_string_pretty(result)?;
            out.push('\n');
            Ok(out)
        }
    }
}

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn export(result: &ScenarioResult, format: ExportFormat, destination: &Path) -> Result<()> {
    let text = render(result, format)?;
    write_atomic(destination, text.as_bytes())
}
