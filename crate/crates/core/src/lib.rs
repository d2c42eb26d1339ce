pub mod arcs;
pub mod arith;
pub mod constructions;
pub mod counting;
pub mod error;
pub mod expsum;
pub mod graph;
pub mod probes;
pub mod rational;

pub use error::{LabError, Result};
pub use rational::{Interval, Rational, ReducedFraction};
