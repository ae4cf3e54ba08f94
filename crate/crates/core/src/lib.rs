//! Sideband cooling of a trapped ion through a dressed two-level atom in a
//! structured photonic environment.
//!
//! [`analytic`] holds the closed-form rate-equation model, [`lindblad`] the
//! truncated master-equation oracle it is checked against, and [`sweep`]
//! the parameter scans built on both. [`cli`] is the command-line front end.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod lindblad;
pub mod ode;
pub mod params;
pub mod sweep;

pub use error::{Error, ErrorKind, Result};
pub use params::{DressedFrame, PhysicalParams, ReferenceRate};
