//! Time-optimal adiabatic quantum computation.
//!
//! Control paths for an interpolating Hamiltonian `H(x)` are treated as
//! curves on a Riemannian manifold with metric `g_ij = Tr[∂_i H ∂_j H] / Δ⁴`,
//! where `Δ` is the ground-state gap. Geodesics of this metric minimize the
//! adiabatic time functional `∫ ‖∂_s H‖ / Δ² ds`. The crate provides:
//!
//! * [`numerics`]: dense complex linear algebra, qubit partial traces and a
//!   fixed-step RK4 integrator.
//! * [`hamiltonians`]: the projector-pair family `x¹ P_a⊥ + x² P_b⊥` with the
//!   Grover and Toeplitz problem builders, and the one-qubit Pauli family.
//! * [`geometry`]: metric tensor, Christoffel symbols, Riemann curvature.
//! * [`paths`]: control curves, the analytic 1-d brachistochrone, quadrature
//!   and shooting geodesic solvers.
//! * [`dynamics`]: adiabatic speed, time functional, schedules and exact
//!   Schrödinger propagation with the final-time error `δ(T)`.
//! * [`observables`]: gap, curvature and entanglement series along a path.

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod hamiltonians;
pub mod numerics;
pub mod observables;
pub mod paths;

pub use error::{QabError, Result};

pub use hamiltonians::{ParametrizedHamiltonian, PauliFamily, ProjectorPairFamily, ProjectorPairProblem};
pub use numerics::{ComplexMatrix, ComplexVector, C64};
pub use paths::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default floor below which the gap is treated as closed.
pub const GAP_FLOOR: f64 = 1e-3;
