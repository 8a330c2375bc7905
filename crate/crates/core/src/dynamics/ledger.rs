use std::io::Write;

use crate::error::Result;
use crate::grid::{inner_unchecked, integral, Field};
use crate::operators::dual_norm;

use super::params::State;
use super::Model;

/// `C_E` in the ledger tolerance `C_E·dt`. The backward-Euler scheme satisfies
/// the discrete Lyapunov inequality up to inner-iteration and roundoff error,
/// so the slack only absorbs those.
pub const LEDGER_CONSTANT: f64 = 1e-6;

pub fn ledger_tol(dt: f64) -> f64 {
    LEDGER_CONSTANT * dt
}

/// One row per step.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    pub energy: f64,
    /// Cumulative dissipation `D(t)`.
    pub dissipation: f64,
    /// `∫(αμ + φ + σ)`.
    pub mass: f64,
    /// `‖δ(αμ + φ)/δt‖_{V*}`; zero on the initial row.
    pub zeta_increment: f64,
    pub xi_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyReport {
    pub rows: Vec<LedgerRow>,
}

impl EnergyReport {
    /// `max_n (E_n + D_n − E_0)`; nonpositive when the Lyapunov inequality holds exactly.
    pub fn lyapunov_excess(&self) -> f64 {
        let e0 = match self.rows.first() {
            Some(r) => r.energy,
            None => return 0.0,
        };
        self.rows
            .iter()
            .map(|r| r.energy + r.dissipation - e0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_n |m_n − m_0| / (1 + |m_0|)`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = match self.rows.first() {
            Some(r) => r.mass,
            None => return 0.0,
        };
        self.rows
            .iter()
            .map(|r| (r.mass - m0).abs() / (1.0 + m0.abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_xi_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.xi_residual).fold(0.0, f64::max)
    }

    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "t,E,D,m,zeta_increment_dual,xi_residual")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.12e},{:.17e},{:.17e},{:.17e},{:.17e},{:.6e}",
                r.t, r.energy, r.dissipation, r.mass, r.zeta_increment, r.xi_residual
            )?;
        }
        Ok(())
    }
}

/// Evaluates the energy functional, dissipation and mass for a model.
#[derive(Debug)]
pub struct EnergyMeter<'a> {
    model: &'a Model,
    symbol: Vec<f64>,
}

impl<'a> EnergyMeter<'a> {
    pub fn new(model: &'a Model) -> Self {
        EnergyMeter {
            model,
            symbol: model.symbol(),
        }
    }

    /// `⟨Af, f⟩_H` with `A` the (possibly Yosida) Laplacian of the model.
    pub fn quadratic(&self, f: &Field) -> f64 {
        let sym = &self.symbol;
        let plan = &self.model.plan;
        let mut c = plan.forward_unchecked(f.values());
        for (ck, a) in c.iter_mut().zip(sym) {
            *ck *= a;
        }
        let af = Field::from_raw(f.grid().clone(), plan.inverse_unchecked(&c));
        inner_unchecked(&af, f).max(0.0)
    }

    /// `(α/2)‖μ‖² + ½(‖φ‖² + ⟨Aφ,φ⟩) + ∫(B̂ + π̂)(φ) + ½‖σ‖²`.
    pub fn energy(&self, s: &State) -> Result<f64> {
        let alpha = self.model.params.alpha;
        let graph = &self.model.graph;
        let pot = s
            .phi
            .values()
            .iter()
            .map(|&r| Ok(graph.convex_energy(r)? + graph.pihat(r)))
            .collect::<Result<Vec<f64>>>()?;
        let pot = integral(&Field::from_raw(s.phi.grid().clone(), pot));
        Ok(0.5 * alpha * inner_unchecked(&s.mu, &s.mu)
            + 0.5 * (inner_unchecked(&s.phi, &s.phi) + self.quadratic(&s.phi))
            + pot
            + 0.5 * inner_unchecked(&s.sigma, &s.sigma))
    }

    /// `dt·[⟨Aμ,μ⟩ + β‖δφ/δt‖² + ⟨Aσ,σ⟩ + p‖σ−μ‖²]` evaluated at the new state.
    pub fn dissipation_increment(&self, prev: &State, next: &State, dt: f64) -> f64 {
        let prm = &self.model.params;
        let dphi = next.phi.sub(&prev.phi);
        let gap = next.sigma.sub(&next.mu);
        dt * (self.quadratic(&next.mu)
            + prm.beta * inner_unchecked(&dphi, &dphi) / (dt * dt)
            + self.quadratic(&next.sigma)
            + prm.p * inner_unchecked(&gap, &gap))
    }

    pub fn mass(&self, s: &State) -> f64 {
        integral(&s.theta(self.model.params.alpha))
    }

    pub fn zeta_increment(&self, prev: &State, next: &State, dt: f64) -> Result<f64> {
        let alpha = self.model.params.alpha;
        let d = next.zeta(alpha).sub(&prev.zeta(alpha)).scale(1.0 / dt);
        dual_norm(&self.model.plan, &d)
    }
}
