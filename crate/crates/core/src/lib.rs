//! Entropy-stable finite-volume solver for the multicomponent compressible
//! Euler equations on periodic Cartesian grids, together with the
//! diagnostics needed to check the scheme's structural properties at run
//! time: positivity, discrete entropy dissipation, conservation, weak-BV
//! decay, consistency residuals and relative entropy.
//!
//! The crate is organized along the pipeline:
//! [`thermo`] (mixture closure and entropy pair) -> [`mesh`] (periodic
//! grids, projection, discrete divergence) -> [`flux`] (physical and
//! Lax-Friedrichs fluxes) -> [`solver`] (semi-discrete RHS and explicit
//! time stepping) -> [`diagnostics`] (entropy production, weak BV,
//! consistency and relative entropy) -> [`cases`] / [`studies`]
//! (test problems and the convergence harness).

pub mod cases;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod flux;
pub mod mesh;
pub mod rng;
pub mod snapshot;
pub mod solver;
pub mod state;
pub mod studies;
pub mod thermo;

pub use error::{Error, Result};
pub use state::{CompVec, ConservedState, PrimitiveState};
pub use thermo::{GasMixture, SpeciesParams};
