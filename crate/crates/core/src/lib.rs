//! Kuramoto–Sivashinsky solver: compact fourth-order finite differences in
//! space and a partial-fraction Padé exponential Runge–Kutta integrator in
//! time.

pub mod analysis;
pub mod cli;
pub mod compact_fd;
pub mod error;
pub mod imexrk4;
pub mod kse_system;
pub mod linalg;
pub mod problems;
pub mod scalar;

pub use compact_fd::{BoundaryScheme, DerivativeOperator, DerivativeOrder, Grid};
pub use error::{Error, Result};
pub use imexrk4::{coefficients, derive_coefficients, integrate, prepare, step_dense_reference, ImexCoefficients, StepperWorkspace};
pub use kse_system::{BoundaryValues, KseParameters, SemiDiscreteKse};
pub use linalg::{DenseMatrix, LinalgError, LuFactorization};
pub use problems::{example1_exact, make_problem, ProblemOverrides, ProblemSpec};
pub use scalar::{Entry, Real};

pub type Matrix = DenseMatrix<f64>;
pub type ComplexMatrix = DenseMatrix<num_complex::Complex64>;
pub type Kse = SemiDiscreteKse<f64>;
