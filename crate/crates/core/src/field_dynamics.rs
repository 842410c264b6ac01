//! Klein–Gordon evolution of the entanglement field on a 1+1D lattice.
//!
//! The field obeys `∂²φ/∂t² = c₀² ∂²φ/∂x² − c₀² V'(φ)` with the mass stored in
//! inverse meters. Time stepping is kick-drift-kick leapfrog with second-order
//! central differences in space.

use crate::metric::GradientCovector;
use crate::par::{self, Execution};
use crate::quantum_state::EntanglementParams;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use thiserror::Error;

pub const MIN_POINTS: usize = 16;
pub const MAX_COURANT: f64 = 0.5;
/// Growth of `max |φ|` over the reference amplitude that counts as blow-up.
pub const INSTABILITY_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("lattice needs at least {MIN_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid lattice parameter {field}: {value}")]
    InvalidLattice { field: &'static str, value: f64 },
    #[error("CFL condition violated: c0*dt/dx = {courant} > {MAX_COURANT} (reduce dt)")]
    Cfl { courant: f64 },
    #[error("mass must be finite and >= 0, got {0}")]
    InvalidMass(f64),
    #[error("field arrays must have {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("profile width {width} m must be at least 2*dx = {min} m")]
    WidthTooSmall { width: f64, min: f64 },
    #[error("instability at t = {time:e} s: max|phi| = {max:e} exceeds {INSTABILITY_GROWTH:e} x initial {reference:e}")]
    Instability { time: f64, max: f64, reference: f64 },
    #[error("position {position} m outside lattice extent [0, {extent}] m")]
    OutOfExtent { position: f64, extent: f64 },
    #[error("mass region [{start}, {end}] m covers no lattice site")]
    EmptyRegion { start: f64, end: f64 },
    #[error("mass boost must be finite and >= 1, got {0}")]
    InvalidBoost(f64),
    #[error("field history must contain snapshots with increasing times")]
    BadHistory,
}

pub type Result<T> = std::result::Result<T, FieldError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Absorbing,
}

/// Uniform lattice `x_j = j·dx`, `j = 0..num_points`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    num_points: usize,
    dx: f64,
    dt: f64,
    boundary: Boundary,
    c0: f64,
}

impl LatticeConfig {
    pub fn new(num_points: usize, dx: f64, dt: f64, boundary: Boundary, c0: f64) -> Result<Self> {
        if num_points < MIN_POINTS {
            return Err(FieldError::TooFewPoints(num_points));
        }
        for (field, value) in [("dx", dx), ("dt", dt), ("c0", c0)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(FieldError::InvalidLattice { field, value });
            }
        }
        let courant = c0 * dt / dx;
        if courant > MAX_COURANT * (1.0 + 1e-12) {
            return Err(FieldError::Cfl { courant });
        }
        Ok(Self {
            num_points,
            dx,
            dt,
            boundary,
            c0,
        })
    }

    /// `dt = courant · dx / c0`.
    pub fn with_courant(
        num_points: usize,
        dx: f64,
        courant: f64,
        boundary: Boundary,
        c0: f64,
    ) -> Result<Self> {
        Self::new(num_points, dx, courant * dx / c0, boundary, c0)
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn courant(&self) -> f64 {
        self.c0 * self.dt / self.dx
    }

    /// Largest addressable position, `(N − 1)·dx`.
    pub fn extent(&self) -> f64 {
        (self.num_points - 1) as f64 * self.dx
    }

    /// Length of the periodic box, `N·dx`.
    pub fn period(&self) -> f64 {
        self.num_points as f64 * self.dx
    }

    pub fn position(&self, site: usize) -> f64 {
        site as f64 * self.dx
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.num_points).map(|j| self.position(j))
    }

    /// Lower site index and fractional offset for interpolation at `x`.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let extent = self.extent();
        let slack = 1e-9 * self.dx;
        if !(x >= -slack && x <= extent + slack) {
            return Err(FieldError::OutOfExtent {
                position: x,
                extent,
            });
        }
        let s = (x / self.dx).clamp(0.0, (self.num_points - 1) as f64);
        let j = (s.floor() as usize).min(self.num_points - 2);
        Ok((j, s - j as f64))
    }

    /// Separation used by profiles: minimum image on periodic lattices.
    fn displacement(&self, x: f64, center: f64) -> f64 {
        let d = x - center;
        match self.boundary {
            Boundary::Absorbing => d,
            Boundary::Periodic => {
                let p = self.period();
                d - p * (d / p).round()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Free,
    Polynomial,
}

/// `V(φ) = ½ m² φ²` plus, for the polynomial kind, `Σ_k coefficients[k] φ^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Potential {
    pub kind: PotentialKind,
    /// 1/m
    pub mass: f64,
    pub coefficients: Vec<f64>,
}

impl Potential {
    pub fn free(mass: f64) -> Result<Self> {
        let p = Self {
            kind: PotentialKind::Free,
            mass,
            coefficients: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn polynomial(mass: f64, coefficients: Vec<f64>) -> Result<Self> {
        let p = Self {
            kind: PotentialKind::Polynomial,
            mass,
            coefficients,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(FieldError::InvalidMass(self.mass));
        }
        if self.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        Ok(())
    }

    #[inline]
    fn value_with_mass(&self, mass: f64, phi: f64) -> f64 {
        let mut v = 0.5 * mass * mass * phi * phi;
        if self.kind == PotentialKind::Polynomial {
            let mut power = 1.0;
            for &c in &self.coefficients {
                v += c * power;
                power *= phi;
            }
        }
        v
    }

    #[inline]
    fn derivative_with_mass(&self, mass: f64, phi: f64) -> f64 {
        let mut dv = mass * mass * phi;
        if self.kind == PotentialKind::Polynomial {
            let mut power = 1.0;
            for (k, &c) in self.coefficients.iter().enumerate().skip(1) {
                dv += k as f64 * c * power;
                power *= phi;
            }
        }
        dv
    }
}

impl Default for Potential {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Free,
            mass: 0.0,
            coefficients: Vec::new(),
        }
    }
}

/// Potential that may vary from site to site.
pub trait FieldPotential: Sync {
    fn value(&self, site: usize, phi: f64) -> f64;
    fn derivative(&self, site: usize, phi: f64) -> f64;
}

impl FieldPotential for Potential {
    #[inline]
    fn value(&self, _site: usize, phi: f64) -> f64 {
        self.value_with_mass(self.mass, phi)
    }

    #[inline]
    fn derivative(&self, _site: usize, phi: f64) -> f64 {
        self.derivative_with_mass(self.mass, phi)
    }
}

/// Closed interval of positions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.end
    }
}

/// Base potential with the mass multiplied by `boost` inside a region.
#[derive(Debug, Clone, PartialEq)]
pub struct MassProfile {
    base: Potential,
    masses: Vec<f64>,
}

impl MassProfile {
    pub fn base(&self) -> &Potential {
        &self.base
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }
}

impl FieldPotential for MassProfile {
    #[inline]
    fn value(&self, site: usize, phi: f64) -> f64 {
        self.base.value_with_mass(self.masses[site], phi)
    }

    #[inline]
    fn derivative(&self, site: usize, phi: f64) -> f64 {
        self.base.derivative_with_mass(self.masses[site], phi)
    }
}

/// Screening region for an intervening mass: `m(x) = boost·m` inside `region`.
pub fn effective_mass_profile(
    base: &Potential,
    region: Interval,
    mass_boost: f64,
    config: &LatticeConfig,
) -> Result<MassProfile> {
    base.validate()?;
    if !(mass_boost >= 1.0 && mass_boost.is_finite()) {
        return Err(FieldError::InvalidBoost(mass_boost));
    }
    let masses: Vec<f64> = config
        .positions()
        .map(|x| {
            if region.contains(x) {
                base.mass * mass_boost
            } else {
                base.mass
            }
        })
        .collect();
    if !config.positions().any(|x| region.contains(x)) {
        return Err(FieldError::EmptyRegion {
            start: region.start,
            end: region.end,
        });
    }
    Ok(MassProfile {
        base: base.clone(),
        masses,
    })
}

/// `φ` (dimensionless) and `π = ∂φ/∂t` (1/s) on every lattice site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    phi: Vec<f64>,
    pi: Vec<f64>,
    time: f64,
    /// `max |φ|` when the evolution started; the blow-up check compares against it.
    reference_amplitude: f64,
}

impl FieldState {
    pub fn new(config: &LatticeConfig, phi: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        let n = config.num_points;
        for v in [&phi, &pi] {
            if v.len() != n {
                return Err(FieldError::LengthMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if phi.iter().chain(&pi).any(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        let reference_amplitude = max_abs(&phi);
        Ok(Self {
            phi,
            pi,
            time: 0.0,
            reference_amplitude,
        })
    }

    pub fn zeros(config: &LatticeConfig) -> Self {
        let n = config.num_points;
        Self {
            phi: vec![0.0; n],
            pi: vec![0.0; n],
            time: 0.0,
            reference_amplitude: 0.0,
        }
    }

    /// Samples `φ(x)` and `π(x)` at every site.
    pub fn from_fn(
        config: &LatticeConfig,
        phi: impl Fn(f64) -> f64,
        pi: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        Self::new(
            config,
            config.positions().map(&phi).collect(),
            config.positions().map(&pi).collect(),
        )
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn max_abs_phi(&self) -> f64 {
        max_abs(&self.phi)
    }

    /// `φ` linearly interpolated to `x`.
    pub fn phi_at(&self, config: &LatticeConfig, x: f64) -> Result<f64> {
        let (j, f) = config.locate(x)?;
        Ok(lerp(self.phi[j], self.phi[j + 1], f))
    }

    /// `φ̇` linearly interpolated to `x`.
    pub fn pi_at(&self, config: &LatticeConfig, x: f64) -> Result<f64> {
        let (j, f) = config.locate(x)?;
        Ok(lerp(self.pi[j], self.pi[j + 1], f))
    }

    /// CSV snapshot with columns `x,phi,pi`.
    pub fn write_csv<W: Write>(&self, config: &LatticeConfig, mut out: W) -> io::Result<()> {
        writeln!(out, "x,phi,pi")?;
        for (j, x) in config.positions().enumerate() {
            writeln!(out, "{x:.16e},{:.16e},{:.16e}", self.phi[j], self.pi[j])?;
        }
        Ok(())
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn lerp(a: f64, b: f64, f: f64) -> f64 {
    a + f * (b - a)
}

/// Gaussian initial profile `φ(x) = γ s exp(−(x − center)² / 2 width²)`, `π = 0`.
pub fn source_from_entropy(
    s: f64,
    params: &EntanglementParams,
    center: f64,
    width: f64,
    config: &LatticeConfig,
) -> Result<FieldState> {
    let min = 2.0 * config.dx;
    if width.is_nan() || width < min {
        return Err(FieldError::WidthTooSmall { width, min });
    }
    let peak = params.gamma() * s;
    let phi = config
        .positions()
        .map(|x| {
            let d = config.displacement(x, center);
            peak * (-d * d / (2.0 * width * width)).exp()
        })
        .collect();
    FieldState::new(config, phi, vec![0.0; config.num_points])
}

/// Field value `φ = a·(x − origin)` with `π = 0`.
pub fn linear_ramp(slope: f64, origin: f64, config: &LatticeConfig) -> Result<FieldState> {
    FieldState::from_fn(config, |x| slope * (x - origin), |_| 0.0)
}

fn acceleration<P: FieldPotential + ?Sized>(
    phi: &[f64],
    potential: &P,
    config: &LatticeConfig,
    exec: Execution,
) -> Vec<f64> {
    let n = phi.len();
    let c2 = config.c0 * config.c0;
    let inv_dx2 = 1.0 / (config.dx * config.dx);
    let site = |j: usize, left: f64, right: f64| {
        c2 * ((left - 2.0 * phi[j] + right) * inv_dx2 - potential.derivative(j, phi[j]))
    };
    let periodic = config.boundary == Boundary::Periodic;
    let mut out = Vec::with_capacity(n);
    out.push(if periodic {
        site(0, phi[n - 1], phi[1])
    } else {
        0.0
    });
    par::extend_sites(exec, &mut out, 1..n - 1, |j| {
        site(j, phi[j - 1], phi[j + 1])
    });
    out.push(if periodic {
        site(n - 1, phi[n - 2], phi[0])
    } else {
        0.0
    });
    out
}

/// One kick-drift-kick leapfrog step of length `dt`.
pub fn step<P: FieldPotential + ?Sized>(
    state: &FieldState,
    potential: &P,
    config: &LatticeConfig,
) -> Result<FieldState> {
    step_with(state, potential, config, Execution::default())
}

/// [`step`] with an explicit execution strategy.
pub fn step_with<P: FieldPotential + ?Sized>(
    state: &FieldState,
    potential: &P,
    config: &LatticeConfig,
    exec: Execution,
) -> Result<FieldState> {
    let n = config.num_points;
    if state.phi.len() != n {
        return Err(FieldError::LengthMismatch {
            expected: n,
            got: state.phi.len(),
        });
    }
    let dt = config.dt;
    let half = 0.5 * dt;
    let accel = acceleration(&state.phi, potential, config, exec);
    let pi_half = par::collect_sites(exec, n, |j| state.pi[j] + half * accel[j]);
    let mut phi = par::collect_sites(exec, n, |j| state.phi[j] + dt * pi_half[j]);

    if config.boundary == Boundary::Absorbing {
        // first-order outgoing-wave closure: φ_t = ∓c₀ φ_x at the edges
        let r = config.courant();
        let old = &state.phi;
        phi[0] = old[0] + r * (old[1] - old[0]);
        phi[n - 1] = old[n - 1] - r * (old[n - 1] - old[n - 2]);
    }

    let accel = acceleration(&phi, potential, config, exec);
    let mut pi = par::collect_sites(exec, n, |j| pi_half[j] + half * accel[j]);
    if config.boundary == Boundary::Absorbing {
        pi[0] = (phi[0] - state.phi[0]) / dt;
        pi[n - 1] = (phi[n - 1] - state.phi[n - 1]) / dt;
    }

    let time = state.time + dt;
    let max = max_abs(&phi);
    let reference = state.reference_amplitude;
    if !max.is_finite()
        || pi.iter().any(|p| !p.is_finite())
        || (reference > 0.0 && max > INSTABILITY_GROWTH * reference)
    {
        return Err(FieldError::Instability {
            time,
            max,
            reference,
        });
    }
    Ok(FieldState {
        phi,
        pi,
        time,
        reference_amplitude: reference,
    })
}

/// Applies [`step`] `steps` times, calling `observe` after each step.
pub fn evolve_observed<P, F>(
    state: &FieldState,
    potential: &P,
    config: &LatticeConfig,
    steps: usize,
    exec: Execution,
    mut observe: F,
) -> Result<FieldState>
where
    P: FieldPotential + ?Sized,
    F: FnMut(&FieldState),
{
    let mut current = state.clone();
    for _ in 0..steps {
        current = step_with(&current, potential, config, exec)?;
        observe(&current);
    }
    Ok(current)
}

pub fn evolve<P: FieldPotential + ?Sized>(
    state: &FieldState,
    potential: &P,
    config: &LatticeConfig,
    steps: usize,
) -> Result<FieldState> {
    evolve_observed(
        state,
        potential,
        config,
        steps,
        Execution::default(),
        |_| {},
    )
}

/// `E = Σ [½ π²/c₀² + ½ (∂ₓφ)² + V(φ)] dx` in lattice units (1/m).
///
/// The gradient uses forward differences on every link of the lattice.
pub fn total_energy<P: FieldPotential + ?Sized>(
    state: &FieldState,
    potential: &P,
    config: &LatticeConfig,
) -> f64 {
    let n = config.num_points;
    let dx = config.dx;
    let inv_c2 = 1.0 / (config.c0 * config.c0);
    let links = match config.boundary {
        Boundary::Periodic => n,
        Boundary::Absorbing => n - 1,
    };
    let mut e = 0.0;
    for j in 0..n {
        e += 0.5 * state.pi[j] * state.pi[j] * inv_c2 + potential.value(j, state.phi[j]);
    }
    for j in 0..links {
        let g = (state.phi[(j + 1) % n] - state.phi[j]) / dx;
        e += 0.5 * g * g;
    }
    e * dx
}

/// Modified energy that kick-drift-kick leapfrog conserves exactly for a
/// quadratic potential on a periodic lattice:
/// `E − Σ (dt²/8c₀²) (∂²φ/∂t²)² dx`.
pub fn shadow_energy(state: &FieldState, potential: &Potential, config: &LatticeConfig) -> f64 {
    let accel = acceleration(&state.phi, potential, config, Execution::Sequential);
    let c2 = config.c0 * config.c0;
    let correction: f64 =
        accel.iter().map(|a| a * a).sum::<f64>() * config.dt * config.dt / (8.0 * c2);
    total_energy(state, potential, config) - correction * config.dx
}

/// `∂ₓφ` at a lattice site by central differences; one-sided at absorbing edges.
pub fn site_gradient(state: &FieldState, config: &LatticeConfig, site: usize) -> f64 {
    let n = config.num_points;
    let phi = &state.phi;
    let dx = config.dx;
    match (config.boundary, site) {
        (Boundary::Periodic, 0) => (phi[1] - phi[n - 1]) / (2.0 * dx),
        (Boundary::Periodic, j) if j == n - 1 => (phi[0] - phi[n - 2]) / (2.0 * dx),
        (Boundary::Absorbing, 0) => (phi[1] - phi[0]) / dx,
        (Boundary::Absorbing, j) if j == n - 1 => (phi[n - 1] - phi[n - 2]) / dx,
        (_, j) => (phi[j + 1] - phi[j - 1]) / (2.0 * dx),
    }
}

/// `(π/c₀, ∂ₓφ, 0, 0)` linearly interpolated to `position`.
pub fn gradient_field(
    state: &FieldState,
    config: &LatticeConfig,
    position: f64,
) -> Result<GradientCovector> {
    let (j, f) = config.locate(position)?;
    let g0 = lerp(state.pi[j], state.pi[j + 1], f) / config.c0;
    let g1 = lerp(
        site_gradient(state, config, j),
        site_gradient(state, config, j + 1),
        f,
    );
    Ok(GradientCovector([g0, g1, 0.0, 0.0]))
}

/// Field snapshots at increasing times, interpolated linearly in time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    snapshots: Vec<FieldState>,
}

impl FieldHistory {
    pub fn new(snapshots: Vec<FieldState>) -> Result<Self> {
        if snapshots.is_empty() || snapshots.windows(2).any(|w| w[1].time <= w[0].time) {
            return Err(FieldError::BadHistory);
        }
        Ok(Self { snapshots })
    }

    /// Records `stride`-spaced snapshots of an evolution of `steps` steps.
    pub fn record<P: FieldPotential + ?Sized>(
        initial: &FieldState,
        potential: &P,
        config: &LatticeConfig,
        steps: usize,
        stride: usize,
    ) -> Result<Self> {
        let stride = stride.max(1);
        let mut snapshots = vec![initial.clone()];
        let mut count = 0;
        evolve_observed(
            initial,
            potential,
            config,
            steps,
            Execution::default(),
            |s| {
                count += 1;
                if count % stride == 0 {
                    snapshots.push(s.clone());
                }
            },
        )?;
        Self::new(snapshots)
    }

    pub fn snapshots(&self) -> &[FieldState] {
        &self.snapshots
    }

    /// Bracketing snapshots and weight for time `t`, clamped to the recorded span.
    fn bracket(&self, t: f64) -> (&FieldState, &FieldState, f64) {
        let s = &self.snapshots;
        if t <= s[0].time || s.len() == 1 {
            return (&s[0], &s[0], 0.0);
        }
        let last = s.len() - 1;
        if t >= s[last].time {
            return (&s[last], &s[last], 0.0);
        }
        let k = s.partition_point(|st| st.time <= t) - 1;
        let (a, b) = (&s[k], &s[k + 1]);
        (a, b, (t - a.time) / (b.time - a.time))
    }

    /// Gradient covector at `(t, x)`.
    pub fn gradient_at(&self, config: &LatticeConfig, t: f64, x: f64) -> Result<GradientCovector> {
        let (a, b, w) = self.bracket(t);
        let ga = gradient_field(a, config, x)?;
        let gb = gradient_field(b, config, x)?;
        Ok(GradientCovector(std::array::from_fn(|mu| {
            lerp(ga.0[mu], gb.0[mu], w)
        })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::LN_2;

    fn periodic(n: usize, courant: f64) -> LatticeConfig {
        LatticeConfig::with_courant(n, 1.0, courant, Boundary::Periodic, 1.0).unwrap()
    }

    fn absorbing(n: usize) -> LatticeConfig {
        LatticeConfig::with_courant(n, 1.0, 0.5, Boundary::Absorbing, 1.0).unwrap()
    }

    #[test]
    fn lattice_validation() {
        assert!(matches!(
            LatticeConfig::new(8, 1.0, 0.1, Boundary::Periodic, 1.0),
            Err(FieldError::TooFewPoints(8))
        ));
        assert!(matches!(
            LatticeConfig::new(64, 1.0, 0.6, Boundary::Periodic, 1.0),
            Err(FieldError::Cfl { .. })
        ));
        assert!(LatticeConfig::new(64, 1.0, 0.5, Boundary::Periodic, 1.0).is_ok());
        assert!(matches!(
            LatticeConfig::new(64, -1.0, 0.5, Boundary::Periodic, 1.0),
            Err(FieldError::InvalidLattice { field: "dx", .. })
        ));
    }

    #[test]
    fn source_examples() {
        let cfg = periodic(128, 0.5);
        let unit = EntanglementParams::default();
        let zero = source_from_entropy(0.0, &unit, 64.0, 8.0, &cfg).unwrap();
        assert!(zero.phi().iter().all(|&v| v == 0.0));

        let s = source_from_entropy(LN_2, &unit, 64.0, 8.0, &cfg).unwrap();
        assert_relative_eq!(s.max_abs_phi(), LN_2, max_relative = 1e-12);
        assert_eq!(s.phi()[64], LN_2);
        for j in 1..64 {
            assert!((s.phi()[64 + j] - s.phi()[64 - j]).abs() < 1e-12);
        }
        // minimum image: site 0 is 64 cells from the center on either side
        assert!((s.phi()[0] - s.phi()[127].max(s.phi()[1])).abs() < 1.0);

        assert!(matches!(
            source_from_entropy(LN_2, &unit, 64.0, 1.5, &cfg),
            Err(FieldError::WidthTooSmall { .. })
        ));
    }

    #[test]
    fn vacuum_is_fixed_point() {
        let cfg = absorbing(64);
        let zero = FieldState::zeros(&cfg);
        let pot = Potential::free(0.3).unwrap();
        let after = evolve(&zero, &pot, &cfg, 50).unwrap();
        assert!(after.phi().iter().chain(after.pi()).all(|&v| v == 0.0));
        assert_eq!(total_energy(&after, &pot, &cfg), 0.0);
    }

    #[test]
    fn static_gaussian_energy_is_gradient_only() {
        let cfg = periodic(256, 0.5);
        let s =
            source_from_entropy(1.0, &EntanglementParams::default(), 128.0, 10.0, &cfg).unwrap();
        let e = total_energy(&s, &Potential::free(0.0).unwrap(), &cfg);
        let grad: f64 = (0..256)
            .map(|j| {
                let g = s.phi()[(j + 1) % 256] - s.phi()[j];
                0.5 * g * g
            })
            .sum();
        assert!(e > 0.0);
        assert_relative_eq!(e, grad, max_relative = 1e-14);
    }

    #[test]
    fn stencil_locality_under_delta_data() {
        let cfg = periodic(128, 0.5);
        let j0 = 64;
        let mut phi = vec![0.0; 128];
        phi[j0] = 1.0;
        let mut state = FieldState::new(&cfg, phi, vec![0.0; 128]).unwrap();
        let pot = Potential::free(0.2).unwrap();
        for s in 1..=40 {
            state = step(&state, &pot, &cfg).unwrap();
            for k in 0..128usize {
                if k.abs_diff(j0) > s + 1 {
                    assert_eq!(state.phi()[k], 0.0, "site {k} reached after {s} steps");
                    assert_eq!(state.pi()[k], 0.0);
                }
            }
        }
    }

    #[test]
    fn gradient_of_linear_ramp_is_exact() {
        let cfg = LatticeConfig::with_courant(64, 0.25, 0.5, Boundary::Absorbing, 1.0).unwrap();
        let ramp = linear_ramp(0.7, 3.0, &cfg).unwrap();
        for x in [0.0, 0.3, 5.0, 7.77, cfg.extent()] {
            let g = gradient_field(&ramp, &cfg, x).unwrap();
            assert!((g.0[1] - 0.7).abs() < 1e-10);
            assert_eq!(g.0[0], 0.0);
        }
        assert!(matches!(
            gradient_field(&ramp, &cfg, cfg.extent() + 1.0),
            Err(FieldError::OutOfExtent { .. })
        ));
        let zero = FieldState::zeros(&cfg);
        assert_eq!(
            gradient_field(&zero, &cfg, 2.0).unwrap(),
            GradientCovector::zero()
        );
    }

    #[test]
    fn gaussian_gradient_converges_at_second_order() {
        let width = 1.0;
        let center = 8.0;
        let x_probe = center + 0.75;
        let error = |dx: f64| {
            let n = (16.0 / dx) as usize + 1;
            let cfg = LatticeConfig::with_courant(n, dx, 0.5, Boundary::Absorbing, 1.0).unwrap();
            let s = source_from_entropy(1.0, &EntanglementParams::default(), center, width, &cfg)
                .unwrap();
            let g = gradient_field(&s, &cfg, x_probe).unwrap().0[1];
            let d = x_probe - center;
            let exact = -d / (width * width) * (-d * d / (2.0 * width * width)).exp();
            (g - exact).abs()
        };
        let e1 = error(0.25);
        let e2 = error(0.125);
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn time_derivative_component_is_pi_over_c0() {
        let cfg = LatticeConfig::with_courant(32, 1.0, 0.5, Boundary::Periodic, 4.0).unwrap();
        let s = FieldState::from_fn(&cfg, |_| 0.0, |_| 8.0).unwrap();
        assert_eq!(gradient_field(&s, &cfg, 3.5).unwrap().0[0], 2.0);
    }

    #[test]
    fn instability_detected() {
        // m·c₀·dt = 5 exceeds the leapfrog stability limit
        let cfg = periodic(64, 0.5);
        let pot = Potential::free(10.0).unwrap();
        let s = source_from_entropy(LN_2, &EntanglementParams::default(), 32.0, 4.0, &cfg).unwrap();
        let err = evolve(&s, &pot, &cfg, 200).unwrap_err();
        assert!(matches!(err, FieldError::Instability { .. }));
    }

    #[test]
    fn unit_boost_profile_matches_base() {
        let cfg = absorbing(256);
        let base = Potential::free(0.1).unwrap();
        let profile =
            effective_mass_profile(&base, Interval::new(100.0, 150.0), 1.0, &cfg).unwrap();
        let s = source_from_entropy(LN_2, &EntanglementParams::default(), 60.0, 6.0, &cfg).unwrap();
        let a = evolve(&s, &base, &cfg, 300).unwrap();
        let b = evolve(&s, &profile, &cfg, 300).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn profile_errors() {
        let cfg = absorbing(64);
        let base = Potential::free(0.1).unwrap();
        assert!(matches!(
            effective_mass_profile(&base, Interval::new(10.2, 10.8), 2.0, &cfg),
            Err(FieldError::EmptyRegion { .. })
        ));
        assert!(matches!(
            effective_mass_profile(&base, Interval::new(10.0, 20.0), 0.5, &cfg),
            Err(FieldError::InvalidBoost(_))
        ));
        assert!(Potential::free(-1.0).is_err());
    }

    #[test]
    fn screening_region_reduces_transmission() {
        let cfg = absorbing(600);
        let base = Potential::free(0.05).unwrap();
        let profile =
            effective_mass_profile(&base, Interval::new(200.0, 260.0), 10.0, &cfg).unwrap();
        let s =
            source_from_entropy(LN_2, &EntanglementParams::default(), 100.0, 8.0, &cfg).unwrap();
        let probe = 400.0;
        let peak_beyond = |p: &dyn FieldPotential| {
            let mut peak = 0.0_f64;
            evolve_observed(&s, p, &cfg, 1000, Execution::default(), |st| {
                peak = peak.max(st.phi_at(&cfg, probe).unwrap().abs());
            })
            .unwrap();
            peak
        };
        let control = peak_beyond(&base);
        let screened = peak_beyond(&profile);
        assert!(
            screened < control,
            "screened {screened} vs control {control}"
        );
    }

    #[test]
    fn region_ahead_of_wave_leaves_near_field_untouched() {
        let cfg = absorbing(600);
        let base = Potential::free(0.05).unwrap();
        let profile =
            effective_mass_profile(&base, Interval::new(450.0, 500.0), 10.0, &cfg).unwrap();
        let s =
            source_from_entropy(LN_2, &EntanglementParams::default(), 100.0, 8.0, &cfg).unwrap();
        // 200 steps at courant 0.5 move the front 100 m; the region is 350 m away
        let a = evolve(&s, &base, &cfg, 200).unwrap();
        let b = evolve(&s, &profile, &cfg, 200).unwrap();
        assert!((a.phi_at(&cfg, 200.0).unwrap() - b.phi_at(&cfg, 200.0).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn sequential_and_parallel_steps_agree_bitwise() {
        let cfg = LatticeConfig::with_courant(8192, 1.0, 0.5, Boundary::Absorbing, 1.0).unwrap();
        let s =
            source_from_entropy(LN_2, &EntanglementParams::default(), 4000.0, 50.0, &cfg).unwrap();
        let pot = Potential::polynomial(0.01, vec![0.0, 0.0, 0.0, 0.0, 1e-3]).unwrap();
        let mut a = s.clone();
        let mut b = s;
        for _ in 0..20 {
            a = step_with(&a, &pot, &cfg, Execution::Sequential).unwrap();
            b = step_with(&b, &pot, &cfg, Execution::Parallel).unwrap();
        }
        assert_eq!(a, b);
    }

    #[test]
    fn polynomial_potential_derivative_matches_finite_difference() {
        let pot = Potential::polynomial(0.3, vec![0.5, -0.2, 0.1, 0.04, -0.01]).unwrap();
        for phi in [-1.3, 0.0, 0.4, 2.0] {
            let h = 1e-6;
            let fd = (pot.value(0, phi + h) - pot.value(0, phi - h)) / (2.0 * h);
            assert!((fd - pot.derivative(0, phi)).abs() < 1e-8);
        }
    }

    #[test]
    fn history_interpolates_in_time() {
        let cfg = periodic(32, 0.5);
        let a = FieldState::from_fn(&cfg, |_| 0.0, |_| 1.0).unwrap();
        let mut b = FieldState::from_fn(&cfg, |_| 0.0, |_| 3.0).unwrap();
        b.time = 2.0;
        let h = FieldHistory::new(vec![a, b.clone()]).unwrap();
        assert_relative_eq!(h.gradient_at(&cfg, 1.0, 5.0).unwrap().0[0], 2.0);
        assert_relative_eq!(h.gradient_at(&cfg, 10.0, 5.0).unwrap().0[0], 3.0);
        assert!(FieldHistory::new(vec![b.clone(), b]).is_err());
    }

    #[test]
    fn snapshot_csv_layout() {
        let cfg = periodic(16, 0.5);
        let s = FieldState::from_fn(&cfg, |x| x, |_| 0.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,phi,pi");
        assert_eq!(lines.len(), 17);
        assert_eq!(
            lines[2],
            "1.0000000000000000e0,1.0000000000000000e0,0.0000000000000000e0"
        );
    }
}
