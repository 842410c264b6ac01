//! Bipartite pure states and density matrices on finite Hilbert spaces.
//!
//! Covers Kronecker products, partial traces, von Neumann entropy (in nats),
//! the entanglement field value `φ = γ S(ρ_A)`, unitary evolution of density
//! matrices in the flat-slice limit, the local integrability check
//! `[H(x), H(x')] = 0`, and CHSH correlations for two-qubit states.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, LN_2};
use thiserror::Error;

/// Tolerance on normalization, Hermiticity and unit trace.
pub const STATE_TOLERANCE: f64 = 1e-12;
/// Smallest eigenvalue accepted for a density matrix.
pub const EIGENVALUE_FLOOR: f64 = -1e-10;
/// Eigenvalues below this are treated as a numerical failure by the entropy.
pub const EIGENVALUE_FAILURE: f64 = -1e-8;
/// Eigenvalues at or below this contribute `0 ln 0 = 0`.
pub const EIGENVALUE_ZERO: f64 = 1e-12;
/// Required agreement between `S(ρ_A)` and `S(ρ_B)`.
pub const ENTROPY_SYMMETRY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("state is not normalized: sum of |amplitude|^2 = {0}")]
    NotNormalized(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("eigenvalue {0:e} is below the numerical floor {EIGENVALUE_FAILURE:e}")]
    NegativeEigenvalue(f64),
    #[error("hamiltonian is not hermitian (max |H - H†| = {0:e})")]
    NonHermitian(f64),
    #[error("CHSH correlations need a two-qubit state, got {dim_a}x{dim_b}")]
    NotTwoQubit { dim_a: usize, dim_b: usize },
    #[error("entropy {0} nats is outside [0, ln 2]")]
    EntropyOutOfRange(f64),
    #[error("reduced entropies disagree: S(rho_A) = {s_a}, S(rho_B) = {s_b}")]
    EntropyMismatch { s_a: f64, s_b: f64 },
    #[error("gamma must be finite and >= 0, got {0}")]
    InvalidGamma(f64),
    #[error("physical constants must be strictly positive (c0 = {c0}, hbar = {hbar})")]
    InvalidConstants { c0: f64, hbar: f64 },
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Speed of light and reduced Planck constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// m/s
    pub c0: f64,
    /// J·s
    pub hbar: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        c0: 2.997_924_58e8,
        hbar: 1.054_571_817e-34,
    };

    pub fn new(c0: f64, hbar: f64) -> Result<Self> {
        if !(c0 > 0.0 && hbar > 0.0 && c0.is_finite() && hbar.is_finite()) {
            return Err(QuantumError::InvalidConstants { c0, hbar });
        }
        Ok(Self { c0, hbar })
    }

    /// `c0 = hbar = 1`, handy for evolution tests in natural units.
    pub fn natural() -> Self {
        Self { c0: 1.0, hbar: 1.0 }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}

/// Coupling between entropy and the entanglement field, `φ = γ S`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementParams {
    gamma: f64,
}

impl EntanglementParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(QuantumError::InvalidGamma(gamma));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for EntanglementParams {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

/// Dense complex matrix with nonzero dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    pub fn new(inner: DMatrix<Complex64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(QuantumError::EmptyMatrix {
                rows: inner.nrows(),
                cols: inner.ncols(),
            });
        }
        Ok(Self(inner))
    }

    pub fn from_row_slice(rows: usize, cols: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(QuantumError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rows, cols, entries))
    }

    /// Real-valued matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(QuantumError::DimensionMismatch("ragged rows".into()));
        }
        let entries: Vec<Complex64> = rows
            .iter()
            .flat_map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self::from_row_slice(n, m, &entries)
    }

    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "identity dimension must be positive");
        Self(DMatrix::identity(n, n))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let d =
            DVector::from_iterator(values.len(), values.iter().map(|&v| Complex64::new(v, 0.0)));
        Self::new(DMatrix::from_diagonal(&d))
    }

    /// Pauli matrices.
    pub fn pauli_x() -> Self {
        Self::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).expect("2x2")
    }

    pub fn pauli_y() -> Self {
        let i = Complex64::i();
        let z = Complex64::new(0.0, 0.0);
        Self::from_row_slice(2, 2, &[z, -i, i, z]).expect("2x2")
    }

    pub fn pauli_z() -> Self {
        Self::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]]).expect("2x2")
    }

    /// Projector `|v⟩⟨v|`.
    pub fn projector(v: &DVector<Complex64>) -> Result<Self> {
        Self::new(v * v.adjoint())
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Complex64> {
        self.0.get((row, col)).copied()
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(QuantumError::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self(&self.0 * &other.0))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.diagonal().iter().sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A†|` for square matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .0
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(QuantumError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// `[a, b] = ab - ba`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(QuantumError::DimensionMismatch(format!(
            "commutator of {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(ComplexMatrix(&a.0 * &b.0 - &b.0 * &a.0))
}

/// Normalized pure state of a bipartite system, amplitudes indexed `i·dim_b + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dim_a: usize,
    dim_b: usize,
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(dim_a: usize, dim_b: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dim_a == 0 || dim_b == 0 {
            return Err(QuantumError::EmptyMatrix {
                rows: dim_a,
                cols: dim_b,
            });
        }
        if amplitudes.len() != dim_a * dim_b {
            return Err(QuantumError::DimensionMismatch(format!(
                "{} amplitudes for a {dim_a}x{dim_b} system",
                amplitudes.len()
            )));
        }
        let norm_sq: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > STATE_TOLERANCE || !norm_sq.is_finite() {
            return Err(QuantumError::NotNormalized(norm_sq));
        }
        Ok(Self {
            dim_a,
            dim_b,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(dim_a: usize, dim_b: usize, mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QuantumError::NotNormalized(norm * norm));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Self::new(dim_a, dim_b, amplitudes)
    }

    /// `|i⟩ ⊗ |k⟩`.
    pub fn basis(dim_a: usize, dim_b: usize, i: usize, k: usize) -> Result<Self> {
        if i >= dim_a || k >= dim_b {
            return Err(QuantumError::DimensionMismatch(format!(
                "basis index ({i}, {k}) outside {dim_a}x{dim_b}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim_a * dim_b];
        amps[i * dim_b + k] = Complex64::new(1.0, 0.0);
        Self::new(dim_a, dim_b, amps)
    }

    /// `ψ_A ⊗ ψ_B` from normalized single-party vectors.
    pub fn product(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        let amps = a
            .iter()
            .flat_map(|&x| b.iter().map(move |&y| x * y))
            .collect();
        Self::new(a.len(), b.len(), amps)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell_phi_plus() -> Self {
        Self::schmidt_family(FRAC_PI_4)
    }

    /// `cos θ |00⟩ + sin θ |11⟩`.
    pub fn schmidt_family(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let z = Complex64::new(0.0, 0.0);
        Self {
            dim_a: 2,
            dim_b: 2,
            amplitudes: DVector::from_vec(vec![
                Complex64::new(c, 0.0),
                z,
                z,
                Complex64::new(s, 0.0),
            ]),
        }
    }

    /// Haar-distributed pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim_a: usize, dim_b: usize) -> Self {
        loop {
            let amps: Vec<Complex64> = (0..dim_a * dim_b)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            if let Ok(state) = Self::normalized(dim_a, dim_b, amps) {
                return state;
            }
        }
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `(U_A ⊗ U_B) |ψ⟩`; unitarity is the caller's responsibility.
    pub fn apply_local(&self, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> Result<Self> {
        if u_a.rows() != self.dim_a
            || u_b.rows() != self.dim_b
            || !u_a.is_square()
            || !u_b.is_square()
        {
            return Err(QuantumError::DimensionMismatch(format!(
                "local operators {}x{} and {}x{} on a {}x{} state",
                u_a.rows(),
                u_a.cols(),
                u_b.rows(),
                u_b.cols(),
                self.dim_a,
                self.dim_b
            )));
        }
        let u = tensor_product(u_a, u_b);
        Self::normalized(
            self.dim_a,
            self.dim_b,
            (&u.0 * &self.amplitudes).iter().copied().collect(),
        )
    }

    /// `⟨ψ| O |ψ⟩`.
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<Complex64> {
        let n = self.amplitudes.len();
        if op.rows() != n || op.cols() != n {
            return Err(QuantumError::DimensionMismatch(format!(
                "{}x{} observable on a state of dimension {n}",
                op.rows(),
                op.cols()
            )));
        }
        Ok(self.amplitudes.dotc(&(&op.0 * &self.amplitudes)))
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: ComplexMatrix(&self.amplitudes * self.amplitudes.adjoint()),
            dim_a: self.dim_a,
            dim_b: self.dim_b,
        }
    }
}

/// Which factor of the bipartition to keep in a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// Hermitian, unit-trace, positive-semidefinite operator on `H_A ⊗ H_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        let n = dim_a * dim_b;
        if !matrix.is_square() || matrix.rows() != n {
            return Err(QuantumError::DimensionMismatch(format!(
                "{}x{} matrix does not factor as {dim_a}*{dim_b}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let defect = matrix.hermiticity_defect();
        if defect > STATE_TOLERANCE {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "not hermitian (max |rho - rho†| = {defect:e})"
            )));
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > STATE_TOLERANCE || trace.im.abs() > STATE_TOLERANCE {
            return Err(QuantumError::InvalidDensityMatrix(format!(
                "trace = {trace}"
            )));
        }
        if let Some(&min) = matrix.hermitian_eigenvalues().first() {
            if min < EIGENVALUE_FLOOR {
                return Err(QuantumError::InvalidDensityMatrix(format!(
                    "eigenvalue {min:e} below {EIGENVALUE_FLOOR:e}"
                )));
            }
        }
        Ok(Self {
            matrix,
            dim_a,
            dim_b,
        })
    }

    /// Single-system state (`dim_b = 1`).
    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let n = matrix.rows();
        Self::new(matrix, n, 1)
    }

    /// `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d).scale(Complex64::new(1.0 / d as f64, 0.0)),
            dim_a: d,
            dim_b: 1,
        }
    }

    /// `ρ_A ⊗ ρ_B`.
    pub fn product(rho_a: &DensityMatrix, rho_b: &DensityMatrix) -> Self {
        Self {
            matrix: tensor_product(&rho_a.matrix, &rho_b.matrix),
            dim_a: rho_a.dim(),
            dim_b: rho_b.dim(),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.hermitian_eigenvalues()
    }
}

/// Reduced density matrix on `keep`, tracing out the other factor.
pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Result<DensityMatrix> {
    let (da, db) = (rho.dim_a, rho.dim_b);
    if rho.matrix.rows() != da * db {
        return Err(QuantumError::DimensionMismatch(format!(
            "{}x{} matrix does not factor as {da}*{db}",
            rho.matrix.rows(),
            rho.matrix.cols()
        )));
    }
    let m = rho.matrix.as_matrix();
    let reduced = match keep {
        Subsystem::A => DMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::B => DMatrix::from_fn(db, db, |k, l| {
            (0..da).map(|i| m[(i * db + k, i * db + l)]).sum()
        }),
    };
    let kept = reduced.nrows();
    Ok(DensityMatrix {
        matrix: ComplexMatrix(hermitian_part(reduced)),
        dim_a: kept,
        dim_b: 1,
    })
}

/// `S(ρ) = -Tr ρ ln ρ` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_of_spectrum(&rho.eigenvalues())
}

/// Entropy of an eigenvalue multiset, with `0 ln 0 = 0`.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lambda in eigenvalues {
        if lambda < EIGENVALUE_FAILURE {
            return Err(QuantumError::NegativeEigenvalue(lambda));
        }
        if lambda > EIGENVALUE_ZERO {
            s -= lambda * lambda.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Entropy of both reductions of a pure state; errors if they disagree.
pub fn reduced_entropies(psi: &PureState) -> Result<(f64, f64)> {
    let rho = psi.density_matrix();
    let s_a = von_neumann_entropy(&partial_trace(&rho, Subsystem::A)?)?;
    let s_b = von_neumann_entropy(&partial_trace(&rho, Subsystem::B)?)?;
    if (s_a - s_b).abs() > ENTROPY_SYMMETRY_TOLERANCE {
        return Err(QuantumError::EntropyMismatch { s_a, s_b });
    }
    Ok((s_a, s_b))
}

/// `φ = γ S(ρ_A)`, cross-checked against `γ S(ρ_B)`.
pub fn entanglement_field_value(psi: &PureState, params: &EntanglementParams) -> Result<f64> {
    let (s_a, _) = reduced_entropies(psi)?;
    Ok(params.gamma * s_a)
}

/// `ρ(σ) = e^{-iHσ/ħc₀} ρ(0) e^{+iHσ/ħc₀}`, with the exponential built from
/// the eigendecomposition of `H`.
pub fn evolve_heisenberg(
    rho: &DensityMatrix,
    h: &ComplexMatrix,
    sigma: f64,
    constants: &PhysicalConstants,
) -> Result<DensityMatrix> {
    if !h.is_square() || h.rows() != rho.dim() {
        return Err(QuantumError::DimensionMismatch(format!(
            "{}x{} hamiltonian for a state of dimension {}",
            h.rows(),
            h.cols(),
            rho.dim()
        )));
    }
    let u = unitary_from_hamiltonian(h, -sigma / (constants.hbar * constants.c0))?;
    let evolved = &u.0 * rho.matrix.as_matrix() * u.0.adjoint();
    Ok(DensityMatrix {
        matrix: ComplexMatrix(hermitian_part(evolved)),
        dim_a: rho.dim_a,
        dim_b: rho.dim_b,
    })
}

/// `exp(i · scale · H)` for Hermitian `H`.
pub fn unitary_from_hamiltonian(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    let defect = h.hermiticity_defect();
    if defect > STATE_TOLERANCE * h.max_abs().max(1.0) {
        return Err(QuantumError::NonHermitian(defect));
    }
    let eig = hermitian_part(h.0.clone()).symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&l| Complex64::from_polar(1.0, scale * l)),
    );
    let v = &eig.eigenvectors;
    Ok(ComplexMatrix(
        v * DMatrix::from_diagonal(&phases) * v.adjoint(),
    ))
}

/// True iff `max |[H(x), H(x')]| ≤ tol`.
pub fn check_integrability(
    h_x: &ComplexMatrix,
    h_xprime: &ComplexMatrix,
    tol: f64,
) -> Result<bool> {
    Ok(commutator(h_x, h_xprime)?.max_abs() <= tol)
}

/// Measurement directions in the x–z plane for a CHSH test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshAngles {
    pub const fn new(a: f64, a_prime: f64, b: f64, b_prime: f64) -> Self {
        Self {
            a,
            a_prime,
            b,
            b_prime,
        }
    }

    /// `(0, π/2, π/4, -π/4)`, which saturates Tsirelson's bound on `|Φ⁺⟩`.
    pub fn optimal_bell() -> Self {
        Self::new(0.0, std::f64::consts::FRAC_PI_2, FRAC_PI_4, -FRAC_PI_4)
    }
}

/// `cos θ σ_z + sin θ σ_x`.
pub fn spin_observable(angle: f64) -> ComplexMatrix {
    let (s, c) = angle.sin_cos();
    ComplexMatrix::from_real_rows(&[&[c, s], &[s, -c]]).expect("2x2")
}

/// `E(a, b) = ⟨ψ| σ_a ⊗ σ_b |ψ⟩`.
pub fn correlation(psi: &PureState, a: f64, b: f64) -> Result<f64> {
    if psi.dim_a != 2 || psi.dim_b != 2 {
        return Err(QuantumError::NotTwoQubit {
            dim_a: psi.dim_a,
            dim_b: psi.dim_b,
        });
    }
    let op = tensor_product(&spin_observable(a), &spin_observable(b));
    Ok(psi.expectation(&op)?.re)
}

/// `E(a,b) + E(a,b') + E(a',b) - E(a',b')`.
pub fn chsh_value(psi: &PureState, angles: &ChshAngles) -> Result<f64> {
    let e = |x, y| correlation(psi, x, y);
    Ok(
        e(angles.a, angles.b)? + e(angles.a, angles.b_prime)? + e(angles.a_prime, angles.b)?
            - e(angles.a_prime, angles.b_prime)?,
    )
}

/// Entanglement entropy of `cos θ |00⟩ + sin θ |11⟩`.
pub fn schmidt_family_entropy(theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    let s2 = 1.0 - c2;
    let term = |p: f64| if p > 0.0 { -p * p.ln() } else { 0.0 };
    term(c2) + term(s2)
}

/// Maximal CHSH value of `cos θ |00⟩ + sin θ |11⟩`, `2√(1 + sin² 2θ)`.
pub fn schmidt_family_max_chsh(theta: f64) -> f64 {
    2.0 * (1.0 + (2.0 * theta).sin().powi(2)).sqrt()
}

/// Maximal CHSH value reachable by the pure two-qubit state with entropy `s`.
///
/// Inverts the entropy of the Schmidt family by bisection on `θ ∈ [0, π/4]`.
pub fn max_chsh_for_entropy(s: f64) -> Result<f64> {
    if !(0.0..=LN_2 + 1e-12).contains(&s) {
        return Err(QuantumError::EntropyOutOfRange(s));
    }
    let target = s.min(LN_2);
    let (mut lo, mut hi) = (0.0_f64, FRAC_PI_4);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if schmidt_family_entropy(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = if target == 0.0 {
        0.0
    } else if target == LN_2 {
        FRAC_PI_4
    } else {
        0.5 * (lo + hi)
    };
    Ok(schmidt_family_max_chsh(theta))
}

/// Random Hermitian matrix with standard-normal entries (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let m = DMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    ComplexMatrix(hermitian_part(m))
}

/// Random unitary `exp(iH)` with `H` from [`random_hermitian`].
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> ComplexMatrix {
    let h = random_hermitian(rng, n);
    unitary_from_hamiltonian(&h, 1.0).expect("hermitian by construction")
}

fn hermitian_part(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let adj = m.adjoint();
    (m + adj) * Complex64::new(0.5, 0.0)
}
