//! Spreading-speed laboratory for the parabolic-parabolic chemotaxis system
//!
//! ```text
//! u_t = Lap u - chi div(u grad v) + u (a - b u)
//! v_t = Lap v - lambda v + mu u
//! ```
//!
//! on one- to three-dimensional boxes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod model;
pub mod solver;
pub mod theory;

pub use error::{Error, Result};
pub use model::{Boundary, Field, Grid, Params, RunRecord, State};
