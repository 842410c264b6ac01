//! Bimetric spacetime model of quantum entanglement.
//!
//! The entanglement entropy of a two-party pure state sources a scalar field
//! `φ = γ S(ρ_A)`. Gradients of `φ` deform the Minkowski metric into
//! `q_μν = η_μν + β ∂_μφ ∂_νφ`, whose light cone is wider than the flat one.
//! The crate evolves `φ` on a 1+1D Klein–Gordon lattice, traces signals
//! through the deformed cone and assembles end-to-end scenario tables.
//!
//! Modules, bottom-up:
//!
//! * [`quantum_state`]: states, partial traces, entropy, CHSH values.
//! * [`metric`]: both metrics, light speeds, Lorentz boosts.
//! * [`field_dynamics`]: lattice evolution of `φ`.
//! * [`signal_propagation`]: null rays and superluminal factors.
//! * [`scenarios`]: timing bound, distance decay, intervening mass, export.

pub mod field_dynamics;
pub mod metric;
pub mod par;
pub mod quantum_state;
pub mod scenarios;
pub mod signal_propagation;

pub use par::Execution;

/// Crate version stamped into exported metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
