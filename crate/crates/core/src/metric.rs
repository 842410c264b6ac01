//! Special-relativity metric `η = diag(1, -1, -1, -1)` and the gradient-deformed
//! metric `q_μν = η_μν + β ∂_μφ ∂_νφ`.
//!
//! Coordinates are `x⁰ = c₀ t` so every component is measured in meters and
//! `∂₀φ = φ̇ / c₀`.

// tensor components read as in index notation
#![allow(clippy::needless_range_loop)]

use crate::quantum_state::PhysicalConstants;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this `|1 + β ∂φ·∂φ|` the deformed metric is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

pub type Matrix4 = [[f64; 4]; 4];

pub const MINKOWSKI: Matrix4 = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
];

const ETA_DIAG: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("non-finite component in {0}")]
    NonFinite(&'static str),
    #[error("beta must be finite and > 0, got {0}")]
    InvalidBeta(f64),
    #[error("degenerate metric: 1 + beta*(dphi.dphi) = {0:e}")]
    DegenerateMetric(f64),
    #[error("light-speed constraint violated: beta*(grad phi)^2 = {0} must be < 1")]
    ConstraintViolation(f64),
    #[error("boost speed {0} must be < 1 (in units of c0)")]
    SuperluminalVelocity(f64),
}

pub type Result<T> = std::result::Result<T, MetricError>;

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(MetricError::NonFinite(what))
    }
}

/// Contravariant displacement `dx^μ` in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVector(pub [f64; 4]);

impl FourVector {
    pub fn new(components: [f64; 4]) -> Result<Self> {
        check_finite(&components, "four-vector")?;
        Ok(Self(components))
    }

    /// From a time interval in seconds and a spatial displacement in meters.
    pub fn from_si(dt: f64, dx: [f64; 3], constants: &PhysicalConstants) -> Result<Self> {
        Self::new([constants.c0 * dt, dx[0], dx[1], dx[2]])
    }

    pub fn euclidean_norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }
}

/// Covariant gradient `∂_μφ` in 1/m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GradientCovector(pub [f64; 4]);

impl GradientCovector {
    pub fn new(components: [f64; 4]) -> Result<Self> {
        check_finite(&components, "gradient covector")?;
        Ok(Self(components))
    }

    pub fn zero() -> Self {
        Self([0.0; 4])
    }

    /// From `φ̇` (1/s) and the spatial gradient (1/m).
    pub fn from_si(phi_dot: f64, spatial: [f64; 3], constants: &PhysicalConstants) -> Result<Self> {
        Self::new([phi_dot / constants.c0, spatial[0], spatial[1], spatial[2]])
    }

    pub fn spatial(&self) -> [f64; 3] {
        [self.0[1], self.0[2], self.0[3]]
    }

    /// `η^μν ∂_μφ ∂_νφ`.
    pub fn minkowski_square(&self) -> f64 {
        self.0.iter().zip(ETA_DIAG).map(|(g, e)| e * g * g).sum()
    }

    /// `∂^μφ = η^μν ∂_νφ`.
    pub fn raised(&self) -> [f64; 4] {
        std::array::from_fn(|mu| ETA_DIAG[mu] * self.0[mu])
    }

    /// `∂_μφ dx^μ`.
    pub fn contract(&self, dx: &FourVector) -> f64 {
        self.0.iter().zip(dx.0).map(|(g, d)| g * d).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BimetricParams {
    beta: f64,
}

impl BimetricParams {
    /// `beta` in m², strictly positive.
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(MetricError::InvalidBeta(beta));
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Default for BimetricParams {
    fn default() -> Self {
        Self { beta: 1.0 }
    }
}

/// Symmetric rank-2 tensor with both indices of the same variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    entries: Matrix4,
}

impl MetricTensor {
    pub fn minkowski() -> Self {
        Self { entries: MINKOWSKI }
    }

    /// Symmetrizes and rejects non-finite input.
    pub fn from_entries(entries: Matrix4) -> Result<Self> {
        check_finite(entries.as_flattened(), "metric")?;
        let sym =
            std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (entries[i][j] + entries[j][i])));
        Ok(Self { entries: sym })
    }

    pub fn entries(&self) -> &Matrix4 {
        &self.entries
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.entries[mu][nu]
    }

    /// `g_μν dx^μ dx^ν`.
    pub fn quadratic_form(&self, dx: &FourVector) -> f64 {
        let mut s = 0.0;
        for mu in 0..4 {
            for nu in 0..4 {
                s += self.entries[mu][nu] * dx.0[mu] * dx.0[nu];
            }
        }
        s
    }

    /// `A^{μα} B_{να}`; equals `δ^μ_ν` when `self` is the inverse of `lower`.
    pub fn contract_with(&self, lower: &MetricTensor) -> Matrix4 {
        std::array::from_fn(|mu| {
            std::array::from_fn(|nu| {
                (0..4)
                    .map(|a| self.entries[mu][a] * lower.entries[nu][a])
                    .sum()
            })
        })
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        determinant4(&self.entries)
    }
}

/// `q_μν = η_μν + β ∂_μφ ∂_νφ`.
pub fn build_qmm(grad: &GradientCovector, params: &BimetricParams) -> MetricTensor {
    let g = &grad.0;
    let entries = std::array::from_fn(|mu| {
        std::array::from_fn(|nu| MINKOWSKI[mu][nu] + params.beta * (g[mu] * g[nu]))
    });
    MetricTensor { entries }
}

/// `1 + β η^μν ∂_μφ ∂_νφ`, the rank-one update factor of the deformed metric.
pub fn deformation_factor(grad: &GradientCovector, params: &BimetricParams) -> f64 {
    1.0 + params.beta * grad.minkowski_square()
}

/// Contravariant inverse `q^μν = η^μν - β ∂^μφ ∂^νφ / (1 + β ∂φ·∂φ)`.
pub fn inverse_qmm(grad: &GradientCovector, params: &BimetricParams) -> Result<MetricTensor> {
    let denom = deformation_factor(grad, params);
    if denom.abs() < DEGENERACY_THRESHOLD {
        return Err(MetricError::DegenerateMetric(denom));
    }
    let up = grad.raised();
    let entries = std::array::from_fn(|mu| {
        std::array::from_fn(|nu| MINKOWSKI[mu][nu] - params.beta * (up[mu] * up[nu]) / denom)
    });
    Ok(MetricTensor { entries })
}

/// `det q`, computed numerically from the assembled tensor.
pub fn det_qmm(grad: &GradientCovector, params: &BimetricParams) -> f64 {
    build_qmm(grad, params).determinant()
}

/// `det q = det η · (1 + β η^μν ∂_μφ ∂_νφ)` from the matrix determinant lemma.
pub fn det_qmm_closed_form(grad: &GradientCovector, params: &BimetricParams) -> f64 {
    -deformation_factor(grad, params)
}

/// `ds² = (dx⁰)² - Σ (dxⁱ)²`.
pub fn interval_srm(dx: &FourVector) -> f64 {
    let d = &dx.0;
    d[0] * d[0] - d[1] * d[1] - d[2] * d[2] - d[3] * d[3]
}

/// `ds_q² = ds² + β (∂_μφ dx^μ)²`.
pub fn interval_qmm(dx: &FourVector, grad: &GradientCovector, params: &BimetricParams) -> f64 {
    let proj = grad.contract(dx);
    interval_srm(dx) + params.beta * proj * proj
}

/// `c(t) = c₀ (1 + β φ̇² / c₀²)^{1/2}` for a purely temporal gradient.
pub fn light_speed_temporal(
    phi_dot: f64,
    params: &BimetricParams,
    constants: &PhysicalConstants,
) -> f64 {
    let ratio = phi_dot / constants.c0;
    constants.c0 * (1.0 + params.beta * ratio * ratio).sqrt()
}

/// `c(x) = c₀ / (1 - β (∂ᵢφ)²)^{1/2}` for a purely spatial gradient.
pub fn light_speed_spatial(
    grad_spatial: [f64; 3],
    params: &BimetricParams,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let load = params.beta * grad_spatial.iter().map(|g| g * g).sum::<f64>();
    spatial_speed_from_load(load, constants)
}

/// Same as [`light_speed_spatial`] in terms of `β (∂ᵢφ)²` directly.
pub fn spatial_speed_from_load(load: f64, constants: &PhysicalConstants) -> Result<f64> {
    if load.is_nan() || load >= 1.0 {
        return Err(MetricError::ConstraintViolation(load));
    }
    Ok(constants.c0 / (1.0 - load).sqrt())
}

/// Pure boost `Λ^μ_ν` with velocity in units of `c₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzBoost {
    matrix: Matrix4,
    velocity: [f64; 3],
}

impl LorentzBoost {
    pub fn identity() -> Self {
        Self {
            matrix: std::array::from_fn(|i| {
                std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 })
            }),
            velocity: [0.0; 3],
        }
    }

    pub fn matrix(&self) -> &Matrix4 {
        &self.matrix
    }

    pub fn velocity(&self) -> [f64; 3] {
        self.velocity
    }

    pub fn gamma(&self) -> f64 {
        self.matrix[0][0]
    }

    /// `(Λ⁻¹)^μ_ν = η^μα Λ^β_α η_βν`.
    pub fn inverse_matrix(&self) -> Matrix4 {
        std::array::from_fn(|mu| {
            std::array::from_fn(|nu| ETA_DIAG[mu] * self.matrix[nu][mu] * ETA_DIAG[nu])
        })
    }

    /// `max |Λ^μ_ν Λ_μ^σ - δ_ν^σ|` with `Λ_μ^σ = η_μα Λ^α_β η^βσ`.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for nu in 0..4 {
            for sigma in 0..4 {
                let s: f64 = (0..4)
                    .map(|mu| {
                        self.matrix[mu][nu]
                            * ETA_DIAG[mu]
                            * self.matrix[mu][sigma]
                            * ETA_DIAG[sigma]
                    })
                    .sum();
                let delta = if nu == sigma { 1.0 } else { 0.0 };
                worst = worst.max((s - delta).abs());
            }
        }
        worst
    }

    /// `Λ_self Λ_other` (apply `other` first).
    pub fn compose(&self, other: &LorentzBoost) -> Matrix4 {
        matmul4(&self.matrix, &other.matrix)
    }
}

/// Standard boost for `v` (fraction of `c₀`).
pub fn boost(velocity: [f64; 3]) -> Result<LorentzBoost> {
    check_finite(&velocity, "boost velocity")?;
    let v2: f64 = velocity.iter().map(|v| v * v).sum();
    if v2 >= 1.0 {
        return Err(MetricError::SuperluminalVelocity(v2.sqrt()));
    }
    if v2 == 0.0 {
        return Ok(LorentzBoost::identity());
    }
    let gamma = 1.0 / (1.0 - v2).sqrt();
    let mut m = [[0.0; 4]; 4];
    m[0][0] = gamma;
    for i in 0..3 {
        m[0][i + 1] = -gamma * velocity[i];
        m[i + 1][0] = -gamma * velocity[i];
        for j in 0..3 {
            let delta = if i == j { 1.0 } else { 0.0 };
            m[i + 1][j + 1] = delta + (gamma - 1.0) * velocity[i] * velocity[j] / v2;
        }
    }
    Ok(LorentzBoost {
        matrix: m,
        velocity,
    })
}

/// `x'^μ = Λ^μ_ν x^ν` and `∂'_μφ = (Λ⁻¹)^ν_μ ∂_νφ`.
pub fn transform(
    b: &LorentzBoost,
    dx: &FourVector,
    grad: &GradientCovector,
) -> (FourVector, GradientCovector) {
    let lam = &b.matrix;
    let inv = b.inverse_matrix();
    let x = std::array::from_fn(|mu| (0..4).map(|nu| lam[mu][nu] * dx.0[nu]).sum());
    let g = std::array::from_fn(|mu| (0..4).map(|nu| inv[nu][mu] * grad.0[nu]).sum());
    (FourVector(x), GradientCovector(g))
}

fn matmul4(a: &Matrix4, b: &Matrix4) -> Matrix4 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..4).map(|k| a[i][k] * b[k][j]).sum()))
}

fn determinant4(m: &Matrix4) -> f64 {
    let mut a = *m;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("nonempty");
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        det *= a[col][col];
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
        }
    }
    det
}
