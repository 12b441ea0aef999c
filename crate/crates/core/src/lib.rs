//! Numerical models for two-photon (Hong-Ou-Mandel) interference of
//! degenerate photon pairs sent through a long fiber Mach-Zehnder
//! interferometer.
//!
//! The crate is `no_std` and only needs an allocator. It covers:
//!
//! - [`source`]: the filtered pair source and its joint spectral amplitude,
//! - [`interference`]: beam-splitter evolution, the exact coincidence
//!   probability by spectral quadrature and its closed form,
//! - [`fiber`]: Taylor group-delay model, dispersion cancellation, link and
//!   thermal limits,
//! - [`counting`]: detector chain, accidentals and Poisson sampling,
//! - [`dip_fit`]: Gaussian dip fitting and visibilities.
//!
//! All quantities are SI unless a function name says otherwise.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod consts;
pub mod counting;
pub mod dip_fit;
mod error;
pub mod fiber;
pub mod interference;
mod linalg;
pub mod rng;
pub mod source;

pub use error::{Error, Result};

/// Either a finite value or "no limit".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    Unbounded,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            Bound::Unbounded => None,
        }
    }
}
