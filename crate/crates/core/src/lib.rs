//! Mean curvature flow of surfaces in four-dimensional ambient spaces,
//! instrumented with the pull-backs of parallel calibrating 2-forms.
//!
//! The crate is `no_std` (with `alloc`); file formats, configuration and the
//! command-line driver live in the companion `symflow` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod ambient;
pub mod diagnostics;
pub mod flow;
pub mod forms;
pub mod math;
pub mod mesh;
pub mod surface;

pub use forms::{FormsError, Frame4, TwoForm4};
pub use math::Vec6;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
