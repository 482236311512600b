//! Spectral tools for Gevrey regularity of periodic Navier-Stokes flows:
//! fields and multipliers, Littlewood-Paley norms, Gevrey product operators,
//! a mild solver and the diagnostics built on top of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod field;
pub mod gevrey;
pub mod grid;
pub mod init;
pub mod lab;
pub mod lp;
pub mod mild;
pub mod report;
pub mod snapshot;
pub mod spectral;

pub use error::{NsgError, Result};
pub use field::{MultiIndex, SpectralField, VelocityField};
pub use grid::{Grid, Wavevector};
pub use lp::{build_filter_bank, Exponent, LPFilterBank, NormReport, NormSpec};
pub use mild::{PicardReport, SolutionTrajectory, SolverConfig};
