//! Dense complex linear algebra, qubit-register operations and ODE integration.

mod linalg;
mod ode;
mod quadrature;
mod qubits;

pub use linalg::{hermitian_eig, solve_linear, ComplexMatrix, ComplexVector, HermitianEigen, C64};
pub use ode::{integrate_final, integrate_ode, OdeScalar, Trajectory};
pub use quadrature::{cumulative_simpson, simpson};
pub use qubits::{partial_trace, partial_transpose, trace_norm, von_neumann_entropy, Subsystem};
