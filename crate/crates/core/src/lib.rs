//! Scale-dependent dynamical complexity for symbolic systems.
//!
//! Entropy at scale, upper metric mean dimension, Birkhoff level-set spectra
//! (separated-set and measure-theoretic), a specification/Moran construction
//! with its mass-distribution lower bound, and independent oracles (exact word
//! counts, constrained maximum entropy, weighted-shift bounds).

pub mod config;
pub mod counting;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod measures;
pub mod oracles;
pub mod report;
pub mod spectra;
pub mod specification;

pub use dynamics::{Letter, NuForm, Point, Potential, System, SystemKind, TailConvention};
pub use error::{Error, Result};
