//! Discrete rectifiable varifolds and numerical checks of the regularity
//! theory for varifolds whose first variation is controlled by a Hölder
//! modulus: `delta V(X) <= K rho^alpha int ||d^M X|| d mu_V`.
//!
//! A varifold is represented by weighted atoms (position, tangent frame,
//! quadrature weight, multiplicity). On top of that representation the crate
//! provides test vector fields, the first variation and Hölder-constant
//! estimation, monotonicity identities, tilt/height excess and their decay,
//! Lipschitz approximation diagnostics, synthetic generators with exact
//! oracles, and an end-to-end regularity check.

// `!(x > 0.0)` is deliberate throughout: NaN must fail validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod excess;
pub mod fields;
pub mod generators;
pub mod geometry;
pub mod io;
pub mod monotonicity;
pub mod regularity;
pub mod report;
pub mod variation;
pub mod varifold;

pub use config::Config;
pub use error::{Error, Result};
pub use fields::{CutoffProfile, FieldSpec, ScalarField, VectorField};
pub use geometry::{projection_distance, unit_ball_volume, ProjectionDistance, ProjectionPair};
pub use varifold::{Diagnostic, DiagnosticKind, DiscreteVarifold, Domain, Flags, VarifoldSample};
