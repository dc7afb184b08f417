//! Quasimorphisms on free groups, their random-walk averages, hulls under the
//! shift action, and twisted cut-and-project sets.
//!
//! All values are exact rationals (or exact elements of `Q(sqrt d)`); floats
//! appear only in summary statistics and Monte Carlo estimates.

pub mod aperiodic;
pub mod error;
pub mod hull_lab;
pub mod qm;
pub mod rational;
pub mod rng;
pub mod walk;
pub mod words;

pub use error::{Error, Result};
pub use qm::{antisymmetrize, defect, fingerprint, rescale3, Fingerprint, Quasimorphism};
pub use rational::Rational;
pub use words::{GroupSpec, ReducedWord};
