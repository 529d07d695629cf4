//! Numerical Hyers–Ulam stability for the Jensen functional equation
//! `f(xy) + f(xσ(y)) = 2f(x)` on semigroups with involution.
//!
//! Given an approximate solution `f` with defect δ the crate builds the exact
//! solution `g` near `f − f(e)` three ways (dyadic limit, mean construction,
//! Drygas reconstruction) and checks `|f(x) − g(x) − f(e)| ≤ 3δ` together with
//! the intermediate inequalities that lead to it.

pub mod carrier;
pub mod defect;
pub mod error;
pub mod funcspace;
pub mod harness;
pub mod scan;
pub mod stabilize;
pub mod verify;

pub use carrier::{validate_carrier, Carrier, Element, MeanCapability};
pub use defect::{inequality_suite, jensen_defect, DefectReport, InequalityRecord};
pub use error::{JensenError, Result};
pub use funcspace::BoundedFn;
pub use harness::{run_experiment, ExperimentConfig, ExperimentReport};
pub use num_complex::Complex64;
pub use stabilize::{jensen_approximant, Method, StabilizationResult, StabilizeOptions};
pub use verify::{verify_solution, VerificationReport, VerifyOptions};

/// Absolute tolerance used by every comparison unless overridden.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Successive-difference threshold for the dyadic and reconstruction limits.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-10;
pub const DEFAULT_DYADIC_N: u32 = 40;
