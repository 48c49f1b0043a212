//! Axisymmetric incompressible Navier-Stokes with swirl on an `(r, z)` node grid,
//! together with the zoom diagnostics used to look at almost-maximal points of a
//! flow after a space-time rescaling by the local speed.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid`], [`field`], [`frame`], [`history`], [`snapshot`]: meshes, fields,
//!   interpolation, Cartesian reconstruction and persistence.
//! * [`solver`]: the pressure-free momentum tendency, the discrete projection and
//!   the Heun time stepper.
//! * [`initdata`]: analytic oracles and normalised initial data.
//! * [`microscope`]: candidate detection, parabolic-cube rescaling and the
//!   closeness-to-constant measurement.
//! * [`invariants`]: executable bounds (maximum principle, energy, divergence,
//!   short-time bound, scaling covariance).
//! * [`config`] and [`run`]: run configuration and the orchestration behind the CLI.

pub mod config;
pub mod error;
pub mod field;
pub mod frame;
pub mod grid;
pub mod history;
pub mod initdata;
pub mod invariants;
pub mod microscope;
pub mod run;
pub mod snapshot;
pub mod solver;

pub use error::{Error, Result};
pub use field::{AxisymField, FieldRole, Parity, ScalarField};
pub use frame::CylindricalFrame;
pub use grid::{Grid, ZBoundary};
pub use history::{Snapshot, SnapshotHistory};
