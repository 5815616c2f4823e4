//! OSA-UCS ↔ CIEXYZ conversion.
//!
//! The forward direction is closed form. The inverse recovers lightness from
//! a cubic (Cardano) and the remaining free cube-root coordinate by a
//! safeguarded Newton iteration. [`batch`] runs both over structure-of-arrays
//! batches with a masked Newton loop.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod bench;
pub mod error;
pub mod figure;
pub mod forward;
pub mod inverse;
pub mod model;

pub use batch::{batch_lgj_to_xyz, batch_xyz_to_lgj, BatchReport, ColorBatch};
pub use error::{Error, Result};
pub use forward::xyz_to_lgj;
pub use inverse::{lgj_to_xyz, InverseTrace};
pub use model::{CubicSolver, LgjColor, SolveOptions, XyzColor};
