//! Null signals between two detectors through the deformed light cone.
//!
//! In 1+1D the null condition `q_μν dx^μ dx^ν = 0` fixes the local one-way
//! speed, so a ray is fully described by its time of flight. Integration uses
//! classical Runge–Kutta on `dt/dx = 1/c(x, t)` with step boundaries placed on
//! lattice nodes, where the interpolated gradient has its kinks.

use crate::field_dynamics::{gradient_field, FieldError, FieldHistory, FieldState, LatticeConfig};
use crate::metric::{
    interval_qmm, interval_srm, light_speed_temporal, spatial_speed_from_load, BimetricParams,
    FourVector, GradientCovector, MetricError,
};
use crate::quantum_state::PhysicalConstants;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

/// Half-width of the null band in [`cone_classification`], relative to the
/// magnitude of the quadratic form's terms.
pub const NULL_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagationError {
    #[error("detectors A and B must be at distinct positions (both at {0} m)")]
    CoincidentDetectors(f64),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("signal did not reach {target} m within {max_time:e} s (reached {reached} m)")]
    NoArrival {
        target: f64,
        reached: f64,
        max_time: f64,
    },
    #[error("ray options invalid: {0}")]
    InvalidOptions(String),
}

pub type Result<T> = std::result::Result<T, PropagationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorLabel {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub label: DetectorLabel,
    /// m
    pub position: f64,
}

impl Detector {
    /// Counters `A` at `a` and `B` at `b`.
    pub fn pair(a: f64, b: f64) -> Result<(Detector, Detector)> {
        if a == b {
            return Err(PropagationError::CoincidentDetectors(a));
        }
        Ok((
            Detector {
                label: DetectorLabel::A,
                position: a,
            },
            Detector {
                label: DetectorLabel::B,
                position: b,
            },
        ))
    }
}

/// Which light-speed relation drives the ray.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagationMode {
    /// `c(x) = c₀ / √(1 − β (∂ₓφ)²)`, taking `φ̇ = 0`.
    #[default]
    Spatial,
    /// `c(t) = c₀ √(1 + β φ̇²/c₀²)`, ignoring the spatial gradient.
    Temporal,
    /// Root of the full 1+1D null condition with both gradient components.
    Full,
}

impl std::str::FromStr for PropagationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spatial" => Ok(Self::Spatial),
            "temporal" => Ok(Self::Temporal),
            "full" => Ok(Self::Full),
            other => Err(format!(
                "unknown mode '{other}' (expected spatial, temporal or full)"
            )),
        }
    }
}

impl std::fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Spatial => "spatial",
            Self::Temporal => "temporal",
            Self::Full => "full",
        })
    }
}

/// Field the ray travels through.
#[derive(Debug, Clone, Copy)]
pub enum FieldSource<'a> {
    /// Static snapshot.
    Snapshot(&'a FieldState),
    /// Evolving field, linearly interpolated between snapshots.
    History(&'a FieldHistory),
}

impl FieldSource<'_> {
    fn gradient(
        &self,
        config: &LatticeConfig,
        t: f64,
        x: f64,
    ) -> std::result::Result<GradientCovector, FieldError> {
        match self {
            FieldSource::Snapshot(s) => gradient_field(s, config, x),
            FieldSource::History(h) => h.gradient_at(config, t, x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Runge–Kutta substeps per lattice cell.
    pub steps_per_cell: usize,
    /// No-arrival cutoff as a multiple of the flat-space crossing time.
    pub max_time_factor: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            steps_per_cell: 8,
            max_time_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    /// s
    pub t: f64,
    /// m
    pub x: f64,
    /// m/s
    pub local_c: f64,
}

/// Trajectory of a signal; `history` ends at the arrival event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayState {
    pub position: f64,
    pub time: f64,
    pub history: Vec<RaySample>,
}

impl RayState {
    pub fn arrival_time(&self) -> f64 {
        self.time
    }

    /// CSV with columns `t,x,local_c`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,x,local_c")?;
        for s in &self.history {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", s.t, s.x, s.local_c)?;
        }
        Ok(())
    }
}

/// Signed speed root of `(1 − βb²) v² − 2βab v − (1 + βa²) = 0`, `v = dx/dx⁰`,
/// picking the branch with the sign of `direction`.
pub fn null_speed_full(
    a: f64,
    b: f64,
    params: &BimetricParams,
    direction: f64,
) -> std::result::Result<f64, MetricError> {
    let beta = params.beta();
    let spatial = 1.0 - beta * b * b;
    if spatial.is_nan() || spatial <= 0.0 {
        return Err(MetricError::ConstraintViolation(beta * b * b));
    }
    // discriminant reduces to 1 + β(a² − b²) = spatial + βa² > 0
    let root = (spatial + beta * a * a).sqrt();
    let cross = beta * a * b;
    // the two roots have opposite signs; avoid cancellation in the smaller one
    let v = if direction >= 0.0 {
        if cross >= 0.0 {
            (cross + root) / spatial
        } else {
            (1.0 + beta * a * a) / (root - cross)
        }
    } else if cross <= 0.0 {
        (cross - root) / spatial
    } else {
        -(1.0 + beta * a * a) / (root + cross)
    };
    Ok(v)
}

/// Local one-way light speed magnitude (m/s) at `(t, x)` heading along `direction`.
pub fn local_speed(
    field: FieldSource<'_>,
    params: &BimetricParams,
    config: &LatticeConfig,
    mode: PropagationMode,
    t: f64,
    x: f64,
    direction: f64,
) -> Result<f64> {
    let constants = PhysicalConstants {
        c0: config.c0(),
        ..PhysicalConstants::CODATA
    };
    let x = x.clamp(0.0, config.extent());
    let g = field.gradient(config, t, x)?;
    let c = match mode {
        PropagationMode::Spatial => {
            spatial_speed_from_load(params.beta() * g.0[1] * g.0[1], &constants)?
        }
        PropagationMode::Temporal => {
            light_speed_temporal(g.0[0] * constants.c0, params, &constants)
        }
        PropagationMode::Full => {
            constants.c0 * null_speed_full(g.0[0], g.0[1], params, direction)?.abs()
        }
    };
    Ok(c)
}

pub fn trace_null_ray(
    from: &Detector,
    to: &Detector,
    field: FieldSource<'_>,
    params: &BimetricParams,
    config: &LatticeConfig,
    mode: PropagationMode,
) -> Result<RayState> {
    trace_null_ray_with(
        from,
        to,
        field,
        params,
        config,
        mode,
        &TraceOptions::default(),
    )
}

/// Integrates the ray from `from` to `to` starting at `t = 0`.
pub fn trace_null_ray_with(
    from: &Detector,
    to: &Detector,
    field: FieldSource<'_>,
    params: &BimetricParams,
    config: &LatticeConfig,
    mode: PropagationMode,
    options: &TraceOptions,
) -> Result<RayState> {
    if options.steps_per_cell == 0
        || options.max_time_factor.is_nan()
        || options.max_time_factor <= 0.0
    {
        return Err(PropagationError::InvalidOptions(format!("{options:?}")));
    }
    let (x0, x1) = (from.position, to.position);
    if x0 == x1 {
        return Err(PropagationError::CoincidentDetectors(x0));
    }
    for x in [x0, x1] {
        if x < 0.0 || x > config.extent() {
            return Err(FieldError::OutOfExtent {
                position: x,
                extent: config.extent(),
            }
            .into());
        }
    }
    let direction = (x1 - x0).signum();
    let max_time = options.max_time_factor * (x1 - x0).abs() / config.c0();
    let speed = |t: f64, x: f64| local_speed(field, params, config, mode, t, x, direction);
    // dt/dx along the direction of travel, as a function of distance s = |x − x0|
    let slowness = |s: f64, t: f64| -> Result<f64> { Ok(1.0 / speed(t, x0 + direction * s)?) };

    let mut t = 0.0;
    let mut history = vec![RaySample {
        t,
        x: x0,
        local_c: speed(t, x0)?,
    }];
    let nodes = node_breaks(x0, x1, config.dx());
    for w in nodes.windows(2) {
        let (s_start, s_end) = ((w[0] - x0).abs(), (w[1] - x0).abs());
        let n = ((s_end - s_start) / config.dx() * options.steps_per_cell as f64)
            .ceil()
            .max(1.0) as usize;
        let h = (s_end - s_start) / n as f64;
        for i in 0..n {
            let s = s_start + h * i as f64;
            let k1 = slowness(s, t)?;
            let k2 = slowness(s + 0.5 * h, t + 0.5 * h * k1)?;
            let k3 = slowness(s + 0.5 * h, t + 0.5 * h * k2)?;
            let k4 = slowness(s + h, t + h * k3)?;
            t += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            let s_next = if i + 1 == n { s_end } else { s + h };
            let x = x0 + direction * s_next;
            if t > max_time {
                return Err(PropagationError::NoArrival {
                    target: x1,
                    reached: x,
                    max_time,
                });
            }
            history.push(RaySample {
                t,
                x,
                local_c: speed(t, x)?,
            });
        }
    }
    // the final sample sits exactly on the target
    if let Some(last) = history.last_mut() {
        last.x = x1;
    }
    Ok(RayState {
        position: x1,
        time: t,
        history,
    })
}

/// `x0`, every lattice node strictly between, then `x1`, in travel order.
fn node_breaks(x0: f64, x1: f64, dx: f64) -> Vec<f64> {
    let (lo, hi) = (x0.min(x1), x0.max(x1));
    let first = (lo / dx).floor() as i64 + 1;
    let last = (hi / dx).ceil() as i64 - 1;
    let mut pts = vec![lo];
    for j in first..=last {
        let x = j as f64 * dx;
        if x > lo && x < hi {
            pts.push(x);
        }
    }
    pts.push(hi);
    if x1 < x0 {
        pts.reverse();
    }
    pts
}

/// Effective speed between the detectors in units of `c₀`.
pub fn superluminal_factor(
    ray: &RayState,
    from: &Detector,
    to: &Detector,
    constants: &PhysicalConstants,
) -> f64 {
    (to.position - from.position).abs() / ray.arrival_time() / constants.c0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalCharacter {
    Timelike,
    Null,
    Spacelike,
}

/// Causal character of one displacement in both frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeClassification {
    pub srm: CausalCharacter,
    pub qmm: CausalCharacter,
}

fn classify(interval: f64, scale: f64) -> CausalCharacter {
    if interval.abs() <= NULL_TOLERANCE * scale {
        CausalCharacter::Null
    } else if interval > 0.0 {
        CausalCharacter::Timelike
    } else {
        CausalCharacter::Spacelike
    }
}

pub fn cone_classification(
    dx: &FourVector,
    grad: &GradientCovector,
    params: &BimetricParams,
) -> ConeClassification {
    let scale = dx.euclidean_norm_sq();
    let proj = grad.contract(dx);
    ConeClassification {
        srm: classify(interval_srm(dx), scale),
        qmm: classify(
            interval_qmm(dx, grad, params),
            scale + params.beta() * proj * proj,
        ),
    }
}
