//! Convex hull pricing for multi-period unit commitment.
//!
//! The crate is layered bottom-up: [`algebra`] holds sparse LP/MIP models,
//! [`simplexcore`] solves them, [`instance`] describes generators and systems,
//! [`hulls`] turns generators into formulations, [`oracle`] provides the
//! single-generator ground truth and [`pricing`] runs the pricing algorithms.

pub mod algebra;
pub mod clock;
pub mod hulls;
pub mod instance;
pub mod oracle;
pub mod pricing;
pub mod simplexcore;
pub mod verify;

pub use algebra::{LinearModel, Sense, VarId, VarKind};
pub use instance::{GeneratorClass, GeneratorSpec, SystemInstance};
pub use simplexcore::{SolveResult, SolveStatus, SolverOptions};
