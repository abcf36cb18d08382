//! Kinetic plasma instability toolkit.
//!
//! The crate implements the constructive machinery around two-stream-type
//! instabilities of homogeneous plasma equilibria in reduced geometry
//! (one spatial dimension, one or two velocity dimensions):
//!
//! * equilibrium construction and Penrose stability classification,
//! * dispersion-relation root finding and explicit growing modes,
//! * spectral semi-Lagrangian solvers for linearized and nonlinear
//!   Vlasov-Poisson and for the rescaled relativistic Vlasov-Maxwell
//!   system with Debye/light-speed parameter `eps`,
//! * an iterative construction of approximate growing solutions with
//!   residual-order verification,
//! * experiment drivers measuring growth rates, escape times and the
//!   rescaling/patching identities between the classical and
//!   quasineutral frames.
//!
//! Everything is deterministic: given the same configuration the solvers
//! and reports reproduce bit-identical artifacts.

pub mod config;
pub mod dispersion;
pub mod equilibria;
pub mod error;
pub mod fit;
pub mod grid;
pub mod harness;
pub mod hierarchy;
pub mod norms;
pub mod numeric;
pub mod poisson;
pub mod report;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};

/// Complex scalar used throughout the dispersion analysis.
pub type C64 = num_complex::Complex64;
