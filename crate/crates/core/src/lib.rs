//! Full conformal prediction sets for convex regularized empirical risk
//! minimization, computed from approximate solutions tracked along a
//! homotopy in the candidate label.
//!
//! The crate is `no_std` (it only needs `alloc`). The layering is:
//!
//! - [`losses`] and [`regularizers`]: convex building blocks with their
//!   Fenchel conjugates and regularity constants.
//! - [`optim`]: primal/dual objectives, dual feasible vectors, duality gap
//!   certificates and the warm-startable solvers.
//! - [`homotopy`]: the candidate-label grid, with an ε-certified solution
//!   attached to every grid point.
//! - [`conformal`]: conformity scores, ranks, interval-union assembly,
//!   wrapping bounds for smooth losses and the reference baselines.

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod conformal;
pub mod ext;
pub mod homotopy;
pub mod linalg;
pub mod losses;
pub mod optim;
pub mod regularizers;

pub use conformal::{ConformityMeasure, Interval, IntervalUnion, TypicalnessReport};
pub use ext::ExtendedReal;
pub use homotopy::{CoverageMode, HomotopyPath, PathConfig, StepRule};
pub use linalg::Matrix;
pub use losses::{LossKind, Regularity};
pub use optim::{Dataset, Model, PrimalDualPair, Problem, SolverConfig};
pub use regularizers::RegKind;
