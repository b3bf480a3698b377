//! Numerical laboratory for scalar conservation laws whose flux jumps at `x = 0`:
//!
//! ```text
//! u_t + (H(x) f(u) + H(-x) g(u))_x = 0
//! ```
//!
//! The crate provides the flux model, the interface admissibility kernel and
//! its case table, a vanishing-viscosity solver with a matching finite-volume
//! scheme, trace/residual/contraction analysis, and the `discflux` CLI.

pub mod admissibility;
pub mod analysis;
pub mod cli;
pub mod error;
pub mod flux;
pub mod solver;

pub use admissibility::{AdmissibilityReport, Condition, InterfaceShock, KatoConfiguration, KatoResult};
pub use error::{Error, Result};
pub use flux::{Crossings, CurveSpec, FluxPair, Side};
pub use solver::{Grid1D, InitialProfile, SolutionField, SolverConfig, SweepResult};
