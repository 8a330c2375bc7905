//! Solvers for the viscous Cahn–Hilliard tumor-growth system and its
//! regularizations, with the convex-analysis and operator machinery they
//! rest on and harnesses for the vanishing-viscosity studies.

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod operators;
pub mod potential;
pub mod spectral;

pub use dynamics::{InitialData, Model, State, SystemParams};
pub use error::{Error, Result};
pub use grid::{Field, Grid};
pub use potential::PotentialSpec;
pub use spectral::SpectralPlan;
