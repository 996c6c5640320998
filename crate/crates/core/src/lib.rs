//! Symmetry classification, heat-equation maps and closed-form solutions for
//! one-dimensional linear diffusion equations
//!
//! ```text
//! u_t = a(x,t) u_xx + b(x,t) u_x + c(x,t) u,   a > 0.
//! ```
//!
//! The pipeline is: parse coefficients ([`expr`]), compute the semi-invariants
//! I, J, K ([`invariants`]), decide the symmetry class by fitting K as a
//! function of I ([`classify`]), then build the point transformation to the
//! heat equation ([`canonical`]) and the symmetry generators ([`generators`]).
//! [`catalogue`] holds closed-form solutions and [`verify`] checks them.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod catalogue;
pub mod classify;
pub mod driftdesign;
pub mod error;
pub mod expr;
pub mod generators;
pub mod invariants;
pub mod numerics;
pub mod special;
pub mod verify;

pub use canonical::{HeatMap, MapCase, MobiusParams, Target, TimeDepMap};
pub use catalogue::{CatalogueEntry, ROSTER};
pub use classify::{SymmetryClass, TimeDepClassifiers, Variant};
pub use driftdesign::{DesignedDrift, RiccatiSolution, TargetForm};
pub use error::{Error, Result};
pub use expr::{parse, Expr, ParamEnv, Var};
pub use generators::{Basis, StructureTable, VectorField};
pub use invariants::{CoefficientSet, Coefficients, InvariantProfile, WorkingDomain};
pub use verify::{EvolutionReport, Grid, ResidualReport, SymmetryCheck};
