//! Time integration of the tumor-growth system
//!
//! ```text
//! αμ_t + φ_t − Δμ = p(σ − μ)
//! μ = βφ_t + (−Δ + 1)φ + ξ + π(φ),   ξ ∈ B(φ)
//! σ_t − Δσ = −p(σ − μ)
//! ```
//!
//! with homogeneous Neumann conditions. Two integrators are provided: an
//! implicit backward-Euler step valid for every `β ≥ 0` and exact or
//! regularized graphs, and classical RK4 for the fully regularized ODE
//! (`β, ε, λ > 0`).

mod ledger;
mod params;
mod regularized;
mod run;
mod viscous;

use std::sync::Arc;

use crate::error::Result;
use crate::potential::PotentialSpec;
use crate::spectral::SpectralPlan;

pub use ledger::{ledger_tol, EnergyMeter, EnergyReport, LedgerRow, LEDGER_CONSTANT};
pub use params::{InitialData, PhaseGraph, State, SystemParams};
pub use regularized::{integrate_regularized, rhs_regularized, stability_limit, Derivative, RK4_MARGIN};
pub use run::{run_system, MemorySaver, NullSaver, RunOutput, Saver, Scheme, GROWTH_LIMIT};
pub use viscous::{step_viscous, StepOutcome, ViscousStepper};

/// Everything a run needs besides initial data: grid transforms, nonlinearity and parameters.
#[derive(Clone, Debug)]
pub struct Model {
    pub plan: Arc<SpectralPlan>,
    pub graph: PhaseGraph,
    pub params: SystemParams,
}

impl Model {
    pub fn new(plan: Arc<SpectralPlan>, potential: PotentialSpec, params: SystemParams) -> Result<Self> {
        params.validate()?;
        let graph = PhaseGraph::new(potential, params.eps)?;
        Ok(Model { plan, graph, params })
    }

    pub fn potential(&self) -> &PotentialSpec {
        self.graph.potential()
    }

    /// Symbol of `−Δ` (or `(−Δ)_λ`) per mode.
    pub fn symbol(&self) -> Vec<f64> {
        self.plan
            .eigenvalues()
            .iter()
            .map(|&k| self.params.laplacian_symbol(k))
            .collect()
    }
}
