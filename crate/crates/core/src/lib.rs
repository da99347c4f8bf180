//! Certified decay and escape-rate bounds for piecewise expanding maps of
//! the unit interval.

pub mod certify;
pub mod cli;
pub mod contraction;
pub mod dynamics;
pub mod error;
pub mod lasota_yorke;
pub mod rigor;
pub mod ulam;

pub use error::{Error, Result};
pub use rigor::{parse_expr, Expr, Interval, Jet2};
