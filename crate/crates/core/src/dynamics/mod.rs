//! Piecewise monotone maps of the unit interval, their iterates and the
//! derivative and distortion bounds needed downstream.

mod branch;
mod distortion;
mod map;
mod search;

pub use branch::{branch_preimage, preimage_ends, Branch, Piece};
pub use distortion::distortion_excess_integral;
pub use map::{build_map, iterate_map, linear_mod1, mod_one, BranchSpec, PiecewiseMap};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rigor::Interval;

/// A hole `H` in `[0, 1]`; mass landing in `H` is removed.
#[derive(Clone, Debug, PartialEq)]
pub struct Hole {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Hole {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo < BigRational::zero() || hi > BigRational::one() || lo > hi {
            return Err(Error::Config(format!(
                "hole [{lo}, {hi}] is not inside [0, 1]"
            )));
        }
        Ok(Hole { lo, hi })
    }

    pub fn interval(&self) -> Interval {
        Interval::from_ratio(&self.lo).hull(&Interval::from_ratio(&self.hi))
    }
}
