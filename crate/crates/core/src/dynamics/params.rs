use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::operators::sqrt_resolvent;
use crate::potential::{resolvent_scalar, GraphValue, PotentialSpec, RegularizedPotential};
use crate::spectral::SpectralPlan;

/// Scalar model and scheme parameters.
///
/// `eps = 0` selects the exact graph `B`, `lambda = 0` the true discrete
/// Laplacian and `beta = 0` the non-viscous limit system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub eps: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub p: f64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max")]
    pub picard_max: usize,
}

fn default_picard_tol() -> f64 {
    1e-12
}

fn default_picard_max() -> usize {
    2000
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            alpha: 0.1,
            beta: 0.1,
            eps: 0.0,
            lambda: 0.0,
            p: 0.5,
            t_end: 0.5,
            dt: 1e-3,
            picard_tol: default_picard_tol(),
            picard_max: default_picard_max(),
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        };
        finite("alpha", self.alpha)?;
        finite("beta", self.beta)?;
        finite("eps", self.eps)?;
        finite("lambda", self.lambda)?;
        finite("p", self.p)?;
        finite("t_end", self.t_end)?;
        finite("dt", self.dt)?;
        if self.alpha <= 0.0 {
            return Err(Error::invalid("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid("beta", format!("must lie in [0, 1), got {}", self.beta)));
        }
        if self.eps < 0.0 {
            return Err(Error::invalid("eps", format!("must be nonnegative, got {}", self.eps)));
        }
        if self.lambda < 0.0 {
            return Err(Error::invalid("lambda", format!("must be nonnegative, got {}", self.lambda)));
        }
        if self.p < 0.0 {
            return Err(Error::invalid("p", format!("must be nonnegative, got {}", self.p)));
        }
        if self.t_end <= 0.0 {
            return Err(Error::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.dt <= 0.0 {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.dt >= self.t_end {
            return Err(Error::invalid(
                "dt",
                format!("step {} must be smaller than t_end {}", self.dt, self.t_end),
            ));
        }
        if !(self.picard_tol.is_finite() && self.picard_tol > 0.0) {
            return Err(Error::invalid("picard_tol", "must be positive"));
        }
        if self.picard_max == 0 {
            return Err(Error::invalid("picard_max", "must be at least 1"));
        }
        Ok(())
    }

    /// Heuristic smallness flag `α ≥ 1/(4L²)` from the Gronwall absorption
    /// term `1 − 2L²α − 2δ`; not a proven admissibility bound.
    pub fn alpha_warning(&self, pot: &PotentialSpec) -> bool {
        let l = pot.pi_lip();
        l > 0.0 && self.alpha >= 1.0 / (4.0 * l * l)
    }

    /// Step sizes covering `[0, t_end]`; the last step is shortened to land on `t_end`.
    pub fn step_sizes(&self) -> Vec<f64> {
        let n = ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize;
        let mut steps = vec![self.dt; n];
        let last = self.t_end - (n - 1) as f64 * self.dt;
        steps[n - 1] = last;
        steps
    }

    /// Symbol of the (possibly Yosida-regularized) `−Δ` for eigenvalue `κ`.
    pub fn laplacian_symbol(&self, kappa: f64) -> f64 {
        if self.lambda > 0.0 {
            kappa / (1.0 + self.lambda * kappa)
        } else {
            kappa
        }
    }
}

/// The monotone part of the nonlinearity as seen by the solvers: either the
/// exact graph `B` or its Yosida approximation `B_ε`.
#[derive(Clone, Debug, PartialEq)]
pub enum PhaseGraph {
    Exact(PotentialSpec),
    Yosida(RegularizedPotential),
}

impl PhaseGraph {
    pub fn new(pot: PotentialSpec, eps: f64) -> Result<Self> {
        if eps == 0.0 {
            Ok(PhaseGraph::Exact(pot))
        } else {
            Ok(PhaseGraph::Yosida(RegularizedPotential::new(pot, eps)?))
        }
    }

    pub fn potential(&self) -> &PotentialSpec {
        match self {
            PhaseGraph::Exact(p) => p,
            PhaseGraph::Yosida(r) => &r.base,
        }
    }

    /// `(I + τ·graph)^{-1}(r)`.
    pub fn prox(&self, tau: f64, r: f64) -> Result<f64> {
        match self {
            PhaseGraph::Exact(p) => resolvent_scalar(p, tau, r),
            PhaseGraph::Yosida(reg) => reg.resolvent(tau, r),
        }
    }

    pub fn graph(&self, r: f64) -> Result<GraphValue> {
        match self {
            PhaseGraph::Exact(p) => Ok(p.graph(r)),
            PhaseGraph::Yosida(reg) => Ok(GraphValue::single(reg.b(r)?)),
        }
    }

    /// Single-valued selection used for initial data and explicit evaluation.
    pub fn selection(&self, r: f64) -> Result<f64> {
        match self {
            PhaseGraph::Exact(p) => Ok(p.selection(r)),
            PhaseGraph::Yosida(reg) => reg.b(r),
        }
    }

    /// Convex energy density `B̂` or `B̂_ε`.
    pub fn convex_energy(&self, r: f64) -> Result<f64> {
        match self {
            PhaseGraph::Exact(p) => Ok(p.bhat(r)),
            PhaseGraph::Yosida(reg) => reg.bhat(r),
        }
    }

    pub fn pi(&self, r: f64) -> f64 {
        self.potential().pi(r)
    }

    pub fn pihat(&self, r: f64) -> f64 {
        self.potential().pihat(r)
    }
}

/// Unknowns at one time instant, plus the recovered selection `ξ ∈ B(φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub mu: Field,
    pub phi: Field,
    pub sigma: Field,
    pub xi: Field,
}

impl State {
    pub fn grid(&self) -> &Arc<crate::grid::Grid> {
        self.phi.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.mu.is_finite() && self.phi.is_finite() && self.sigma.is_finite() && self.xi.is_finite()
    }

    /// `θ = αμ + φ + σ`.
    pub fn theta(&self, alpha: f64) -> Field {
        self.phi.add(&self.sigma).axpy(alpha, &self.mu)
    }

    /// `ζ = αμ + φ`.
    pub fn zeta(&self, alpha: f64) -> Field {
        self.phi.axpy(alpha, &self.mu)
    }
}

/// Raw initial fields, optionally smoothed by `(I − εΔ)^{-1/2}` in `μ` and `σ`.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub mu0: Field,
    pub phi0: Field,
    pub sigma0: Field,
    pub smoothing_eps: Option<f64>,
}

impl InitialData {
    pub fn new(mu0: Field, phi0: Field, sigma0: Field) -> Result<Self> {
        mu0.check_grid(&phi0)?;
        mu0.check_grid(&sigma0)?;
        if !(mu0.is_finite() && phi0.is_finite() && sigma0.is_finite()) {
            return Err(Error::NonFinite("initial data"));
        }
        Ok(InitialData {
            mu0,
            phi0,
            sigma0,
            smoothing_eps: None,
        })
    }

    pub fn with_smoothing(mut self, eps: Option<f64>) -> Self {
        self.smoothing_eps = eps;
        self
    }

    /// Builds the `t = 0` state; `ξ` is the graph selection at `φ₀`.
    pub fn prepare(&self, plan: &SpectralPlan, graph: &PhaseGraph) -> Result<State> {
        let (mu, sigma) = match self.smoothing_eps {
            Some(e) if e > 0.0 => (
                sqrt_resolvent(plan, e, &self.mu0)?,
                sqrt_resolvent(plan, e, &self.sigma0)?,
            ),
            _ => (self.mu0.clone(), self.sigma0.clone()),
        };
        let xi_vals = self
            .phi0
            .values()
            .iter()
            .map(|&r| graph.selection(r))
            .collect::<Result<Vec<f64>>>()?;
        Ok(State {
            t: 0.0,
            mu,
            phi: self.phi0.clone(),
            sigma,
            xi: Field::from_raw(self.phi0.grid().clone(), xi_vals),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_the_field() {
        let mut p = SystemParams::default();
        assert!(p.validate().is_ok());
        p.beta = 1.5;
        match p.validate() {
            Err(Error::InvalidParameter { name, .. }) => assert_eq!(name, "beta"),
            other => panic!("unexpected {other:?}"),
        }
        let p = SystemParams {
            dt: 1.0,
            t_end: 0.5,
            ..Default::default()
        };
        assert!(matches!(p.validate(), Err(Error::InvalidParameter { name: "dt", .. })));
        let p = SystemParams {
            alpha: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn step_sizes_cover_interval() {
        let p = SystemParams {
            t_end: 0.25,
            dt: 0.1,
            ..Default::default()
        };
        let s = p.step_sizes();
        assert_eq!(s.len(), 3);
        assert!((s.iter().sum::<f64>() - 0.25).abs() < 1e-15);
        let p = SystemParams {
            t_end: 0.5,
            dt: 1e-3,
            ..Default::default()
        };
        assert_eq!(p.step_sizes().len(), 500);
    }

    #[test]
    fn alpha_warning_threshold() {
        let pot = PotentialSpec::quartic(0.2).unwrap(); // 1/(4·0.64) = 0.390625
        let mut p = SystemParams::default();
        assert!(!p.alpha_warning(&pot));
        p.alpha = 0.4;
        assert!(p.alpha_warning(&pot));
    }
}
