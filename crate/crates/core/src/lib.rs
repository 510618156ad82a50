//! Adaptive P1 finite elements for a sparse elliptic optimal control problem.
//!
//! The control is a regular Borel measure, discretized as a linear combination
//! of Dirac masses at the interior nodes of a conforming triangulation. The
//! crate provides:
//!
//! - conforming 2D triangulations of a disk, a square and an L-shaped domain,
//!   with longest-edge bisection refinement ([`mesh`]),
//! - symmetric triangle quadrature up to polynomial degree 19 ([`quadrature`]),
//! - sparse SPD linear algebra ([`linalg`]),
//! - P1 assembly, Dirac loads and error norms ([`fem`]),
//! - a semismooth Newton solver for the discrete optimality system, with an
//!   accelerated proximal-gradient cross-check ([`solver`]),
//! - residual error indicators (an L2 state estimator for Dirac sources and a
//!   maximum-norm adjoint estimator) ([`estimators`]),
//! - the SOLVE -> ESTIMATE -> MARK -> REFINE adaptive loop ([`afem`]),
//! - the benchmark problems and CSV/VTK output used by the CLI ([`mod@bench`]).

pub mod afem;
pub mod bench;
pub mod estimators;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod solver;

pub use afem::{afem_loop, AfemConfig, ConvergenceRecord, RefinementMode};
pub use bench::{example_disk, example_lshape, example_square, ExactSolution};
pub use fem::{ControlMeasure, FeFunction};
pub use mesh::{DomainKind, DomainSpec, Mesh};
pub use solver::{OcpProblem, OcpSolution};

/// A scalar function of a 2D point, shared across meshes and AFEM iterations.
pub type ScalarField = std::sync::Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
