//! Weyl m-functions and value distribution for half-line Schrodinger
//! operators with `L^2`-sparse potentials.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod value_dist;
pub mod weyl;

pub use error::{Error, Result};
pub use geometry::{HalfPlanePoint, IntervalUnion};
pub use potential::{Interpolation, PotentialSpec, SparseWindowSequence};
pub use weyl::{m_boundary, m_function, MFunctionRequest};
