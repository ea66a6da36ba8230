//! Simulation and analysis of bursty signals generated by nonlinear
//! stochastic differential equations.
//!
//! * [`sde`]: simple, restricted and complex SDEs with an adaptive
//!   Euler-Maruyama integrator.
//! * [`fpt`] and [`bessel`]: burst-duration densities from Bessel-process
//!   first-passage times.
//! * [`bursts`], [`stats`], [`spectrum`]: excursion detection, log-binned
//!   densities, power-law fits and spectra.
//! * [`returns`]: q-Gaussian returns modulated by the complex SDE.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bessel;
pub mod bursts;
pub mod error;
pub mod fpt;
pub mod returns;
pub mod sde;
pub mod spectrum;
pub mod stats;

pub use bursts::{detect_bursts, Burst, BurstDetector, BurstSequence};
pub use error::{Error, Result};
pub use fpt::{BesselIndex, ClosedPdf, FptSpec, SeriesPdf};
pub use returns::{QGaussianParams, ReturnModelParams, ReturnSeries};
pub use sde::{ComplexSdeParams, Model, Observer, Path, PathMeta, RunSummary, SdeParams, SimConfig, StopRule};
pub use spectrum::{PsdConfig, Spectrum};
pub use stats::{LogHistogram, PowerLawFit, ScatterBin};
