//! Validated interval arithmetic and the expression language built on it.

pub mod expr;
pub mod interval;
pub mod jet;
pub mod round;

pub use expr::{parse_expr, Expr, Rational};
pub use interval::{parse_rational, Interval};
pub use jet::{eval_jet, eval_jet_with, Jet2, Smoothness};
