//! Pure-dephasing qubit–environment models.
//!
//! A qubit coupled to an environment through `σᶻ ⊗ H̃ + 1 ⊗ H_E` keeps its
//! populations but loses phase coherence at a rate set by the overlap of the
//! two environment branches `|ε₀(t)⟩`, `|ε₁(t)⟩`. This crate provides:
//!
//! - [`linalg`]: dense Hermitian eigensolvers, propagators, Kronecker products
//!   and projector-range intersections.
//! - [`dephasing`]: the model itself, the decoherence factor `r(t)`, the
//!   Loschmidt echo `|r|²` and the qubit purity along trajectories.
//! - [`coherence`]: detection and construction of decoherence-free
//!   environment states, and a fragility probe for that structure.
//! - [`spin_bath`]: the `n`-spin `σᶻσᶻ` bath with a rank-one self-evolution
//!   term, its perturbative echo and state-preparation error bounds.
//! - [`bloch`]: the single-spin environment min-max problem on the Bloch
//!   sphere.

pub mod bloch;
pub mod coherence;
pub mod dephasing;
mod error;
pub mod linalg;
pub mod sampling;
pub mod spin_bath;

pub use error::{Error, ErrorClass, Result};
pub use linalg::{ComplexMatrix, HermitianOperator, SpectralDecomposition, StateVector, C64};

/// Library version embedded in CLI outputs.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
