//! Incomplete tomography with mutually unbiased bases.

pub mod error;
pub mod estimators;
pub mod field;
pub mod fixtures;
pub mod io;
pub mod linalg;
pub mod mub;
pub mod negativity;
pub mod reproduce;
pub mod tomography;

pub use error::{Error, Result};
pub use linalg::{CMat, EigenDecomposition};
pub use mub::{build_mub, verify_mub, MubSet};
pub use num_complex::Complex64 as C64;
