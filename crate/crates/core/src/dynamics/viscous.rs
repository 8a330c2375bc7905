//! Backward-Euler step with the `μ`/`σ` equations eliminated per cosine mode.
//!
//! Given `φ⁺`, the implicit linear equations for `μ⁺, σ⁺` decouple mode by mode:
//! `μ̂⁺ = m₀ − q φ̂⁺`. Substituting into the chemical-potential relation leaves a
//! single monotone inclusion for `φ⁺`,
//!
//! ```text
//! C φ⁺ + B(φ⁺) ∋ g − π(φ⁺),   Ĉ_k = β/dt + 1 + A_k + q_k ≥ 1,
//! ```
//!
//! solved by Douglas–Rachford splitting (spectral solve for `C`, pointwise prox
//! for `B`) with `π` lagged one sweep. Since `‖π'‖ < 1 ≤ min Ĉ`, the lag contracts.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

use super::params::State;
use super::Model;

/// Result of one implicit step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: State,
    pub iterations: usize,
    /// `max_i dist(ξ_i, B(φ_i)) / (1 + |B(φ_i)|)`.
    pub xi_residual: f64,
}

/// Reusable backward-Euler stepper; caches mode coefficients for the current `dt`.
#[derive(Debug)]
pub struct ViscousStepper<'a> {
    model: &'a Model,
    symbol: Vec<f64>,
    dt: f64,
    s: Vec<f64>,
    det: Vec<f64>,
    q: Vec<f64>,
    c: Vec<f64>,
    tau: f64,
}

impl<'a> ViscousStepper<'a> {
    pub fn new(model: &'a Model) -> Self {
        let symbol = model.symbol();
        let n = symbol.len();
        ViscousStepper {
            model,
            symbol,
            dt: f64::NAN,
            s: vec![0.0; n],
            det: vec![0.0; n],
            q: vec![0.0; n],
            c: vec![0.0; n],
            tau: 1.0,
        }
    }

    fn prepare(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        let prm = &self.model.params;
        let (alpha, beta, p) = (prm.alpha, prm.beta, prm.p);
        let mut cmin = f64::INFINITY;
        for k in 0..self.symbol.len() {
            let a_k = self.symbol[k];
            let a = alpha / dt + a_k + p;
            let s = 1.0 / dt + a_k + p;
            let det = a * s - p * p;
            let q = s / (dt * det);
            let c = beta / dt + 1.0 + a_k + q;
            self.s[k] = s;
            self.det[k] = det;
            self.q[k] = q;
            self.c[k] = c;
            cmin = cmin.min(c);
        }
        self.tau = 1.0 / cmin;
        self.dt = dt;
    }

    /// Advances `state` by `dt`. `step` is only used for diagnostics.
    pub fn step(&mut self, state: &State, dt: f64, step: usize) -> Result<StepOutcome> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        self.prepare(dt);
        let model = self.model;
        let plan = &model.plan;
        let graph = &model.graph;
        let prm = &model.params;
        let (alpha, beta, p) = (prm.alpha, prm.beta, prm.p);
        let grid = state.phi.grid().clone();
        let n = grid.len();
        let tau = self.tau;

        let mu_h = plan.forward_unchecked(state.mu.values());
        let phi_h = plan.forward_unchecked(state.phi.values());
        let sig_h = plan.forward_unchecked(state.sigma.values());
        let mut m0 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        let mut g_h = vec![0.0; n];
        for k in 0..n {
            let r1 = (alpha * mu_h[k] + phi_h[k]) / dt;
            r2[k] = sig_h[k] / dt;
            m0[k] = (self.s[k] * r1 + p * r2[k]) / self.det[k];
            g_h[k] = m0[k] + beta / dt * phi_h[k];
        }

        let phi_old = state.phi.values();
        let mut z: Vec<f64> = phi_old
            .iter()
            .zip(state.xi.values())
            .map(|(f, x)| f - tau * x)
            .collect();
        let mut psi = phi_old.to_vec();
        let mut iterations = 0;
        let mut last_residual = f64::INFINITY;
        let mut converged = false;
        let mut rhs_h = vec![0.0; n];
        let mut psi_new = vec![0.0; n];
        while iterations < prm.picard_max {
            iterations += 1;
            let pi_vals: Vec<f64> = psi.iter().map(|&r| graph.pi(r)).collect();
            let pi_h = plan.forward_unchecked(&pi_vals);
            let z_h = plan.forward_unchecked(&z);
            for k in 0..n {
                rhs_h[k] = (z_h[k] + tau * (g_h[k] - pi_h[k])) / (1.0 + tau * self.c[k]);
            }
            let x = plan.inverse_unchecked(&rhs_h);
            for i in 0..n {
                psi_new[i] = graph.prox(tau, 2.0 * x[i] - z[i])?;
            }
            for i in 0..n {
                z[i] += psi_new[i] - x[i];
            }
            let d_psi = weighted_dist(&grid, &psi_new, &psi);
            let gap = weighted_dist(&grid, &psi_new, &x);
            std::mem::swap(&mut psi, &mut psi_new);
            let scale = 1.0 + weighted_norm(&grid, &psi);
            last_residual = d_psi.max(gap) / scale;
            if !last_residual.is_finite() {
                break;
            }
            if last_residual <= prm.picard_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::PicardNotConverged {
                step,
                t: state.t + dt,
                iterations,
                residual: last_residual,
            });
        }

        let psi_h = plan.forward_unchecked(&psi);
        let mut mu_new_h = vec![0.0; n];
        let mut sig_new_h = vec![0.0; n];
        let mut lin_h = vec![0.0; n];
        for k in 0..n {
            mu_new_h[k] = m0[k] - self.q[k] * psi_h[k];
            sig_new_h[k] = (r2[k] + p * mu_new_h[k]) / self.s[k];
            lin_h[k] = (self.symbol[k] + 1.0) * psi_h[k];
        }
        let mu = plan.inverse_unchecked(&mu_new_h);
        let sigma = plan.inverse_unchecked(&sig_new_h);
        let lin = plan.inverse_unchecked(&lin_h);
        let mut xi = vec![0.0; n];
        let mut xi_residual = 0.0f64;
        for i in 0..n {
            xi[i] = mu[i] - beta * (psi[i] - phi_old[i]) / dt - lin[i] - graph.pi(psi[i]);
            let gv = graph.graph(psi[i])?;
            let scale = 1.0 + gv.lo.abs().max(gv.hi.abs());
            xi_residual = xi_residual.max(gv.distance(xi[i]) / scale);
        }
        let next = State {
            t: state.t + dt,
            mu: Field::from_raw(grid.clone(), mu),
            phi: Field::from_raw(grid.clone(), psi),
            sigma: Field::from_raw(grid.clone(), sigma),
            xi: Field::from_raw(grid, xi),
        };
        if !next.is_finite() {
            return Err(Error::Unstable {
                t: next.t,
                growth: f64::INFINITY,
            });
        }
        Ok(StepOutcome {
            state: next,
            iterations,
            xi_residual,
        })
    }
}

fn weighted_dist(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn weighted_norm(grid: &Grid, a: &[f64]) -> f64 {
    grid.weights().iter().zip(a).map(|(w, x)| w * x * x).sum::<f64>().sqrt()
}

/// One backward-Euler step of size `dt` from `state`.
pub fn step_viscous(model: &Model, state: &State, dt: f64) -> Result<StepOutcome> {
    check_state(model, state)?;
    ViscousStepper::new(model).step(state, dt, 1)
}

pub(crate) fn check_state(model: &Model, state: &State) -> Result<()> {
    let g = model.plan.grid();
    for f in [&state.mu, &state.phi, &state.sigma, &state.xi] {
        if !(Arc::ptr_eq(f.grid(), g) || **f.grid() == **g) {
            return Err(Error::GridMismatch);
        }
    }
    if !state.is_finite() {
        return Err(Error::NonFinite("state"));
    }
    Ok(())
}
