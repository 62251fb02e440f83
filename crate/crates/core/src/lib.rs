//! Revenue-maximizing cargo loading of a box-hull vessel under deadweight,
//! volume and metacentric-height constraints.
//!
//! Cargo types are stacked in the hold from the keel up, so the height of
//! the loaded center of mass is a quadratic function of the loads and the
//! stability requirement becomes a single quadratic inequality next to two
//! linear capacity constraints.
//!
//! - [`model`] holds the input data and assembles a [`model::Problem`].
//! - [`hydrostatics`] computes draft, KM, KG and GM for a loading.
//! - [`quadratic_analysis`] classifies the constraint matrix by congruence.
//! - [`solver`] solves the LP baseline and the constrained problem and
//!   certifies KKT points.
//! - [`oracle`] searches a lattice exhaustively for global evidence.
//! - [`cli`] reads scenario files and renders reports.

pub mod cli;
pub mod error;
pub mod hydrostatics;
pub mod model;
pub mod oracle;
pub mod quadratic_analysis;
pub mod solver;

pub use error::{Error, Result};
