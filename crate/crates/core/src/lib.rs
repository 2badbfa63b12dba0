//! Explicit and implicit front-tracking solver for the generalized porous
//! medium equation in pressure form, `v_t = σ(v) v_xx + |v_x|²`, with hole
//! filling between neighbouring patches, exact Barenblatt references and
//! the diagnostics used to validate runs.

// Negated comparisons deliberately reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barenblatt;
pub mod convergence;
pub mod diagnostics;
pub mod error;
pub mod hole_filling;
pub mod mesh;
pub mod nonlinearity;
pub mod patch;
pub mod simulation;
pub mod tridiag;
pub mod validation;

pub use barenblatt::{exact_filling, BarenblattParams};
pub use error::{Error, Result};
pub use hole_filling::{FillingEvent, HoleFillingRun, Phase, Stepper};
pub use mesh::{CflMode, Grid, MeshConfig};
pub use nonlinearity::{
    Nonlinearity, NonlinearityKind, PerturbedPmeNonlinearity, PmeNonlinearity, StructuralBounds,
};
pub use patch::{PatchState, StepReport};
pub use simulation::{run, Problem, Profile, RunOutput, RunSettings};
