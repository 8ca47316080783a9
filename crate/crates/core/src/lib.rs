pub mod ad;
pub mod error;
pub mod hybrid;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod mmd;
pub mod moea;
pub mod newton;
pub mod points;
pub mod problems;
pub mod refset;
pub mod scalar;

pub use error::{Error, Result};
pub use kernels::{KernelFamily, KernelSpec};
pub use points::{ObjectivePointSet, PointSet, StackedDecision};
pub use problems::{make_problem, Problem, ProblemDef};
pub use scalar::Scalar;
