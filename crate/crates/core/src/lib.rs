#![no_std]
// Negated comparisons are how NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod charvalues;
pub mod error;
pub mod lattice;
pub mod mourre;
pub mod numerics;
pub mod regularity;
pub mod resolvent;
pub mod scaling;
pub mod symbol;

pub use error::{Error, Result};
pub use num_complex::Complex64;
