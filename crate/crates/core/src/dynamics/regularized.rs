//! The fully regularized system as an ODE on `H × H × H`, integrated with
//! classical RK4.

use crate::error::{Error, Result};
use crate::grid::Field;

use super::params::{PhaseGraph, State};
use super::run::{run_system, RunOutput, Saver, Scheme};
use super::{InitialData, Model};

/// Explicit stability factor: RK4 is stable on the real axis up to `≈ 2.78`.
pub const RK4_MARGIN: f64 = 2.5;

/// Time derivatives of `(μ, φ, σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub dmu: Field,
    pub dphi: Field,
    pub dsigma: Field,
}

fn check_regularized(model: &Model) -> Result<()> {
    let p = &model.params;
    if p.beta <= 0.0 {
        return Err(Error::invalid("beta", "the regularized vector field needs beta > 0"));
    }
    if p.lambda <= 0.0 {
        return Err(Error::invalid("lambda", "the regularized vector field needs lambda > 0"));
    }
    if !matches!(model.graph, PhaseGraph::Yosida(_)) {
        return Err(Error::invalid("eps", "the regularized vector field needs eps > 0"));
    }
    Ok(())
}

/// ```text
/// φ' = (1/β)[μ − ((−Δ)_λ + 1)φ − B_ε(φ) − π(φ)]
/// μ' = (1/α)[p(σ − μ) − (−Δ)_λ μ − φ']
/// σ' = −(−Δ)_λ σ − p(σ − μ)
/// ```
pub fn rhs_regularized(model: &Model, s: &State) -> Result<Derivative> {
    check_regularized(model)?;
    super::viscous::check_state(model, s)?;
    rhs_unchecked(model, &s.mu, &s.phi, &s.sigma)
}

fn rhs_unchecked(model: &Model, mu: &Field, phi: &Field, sigma: &Field) -> Result<Derivative> {
    let prm = &model.params;
    let lam = prm.lambda;
    let plan = &model.plan;
    let sym = |k: f64| k / (1.0 + lam * k);
    let a_mu = plan.apply_symbol_unchecked(mu, sym);
    let a_phi = plan.apply_symbol_unchecked(phi, sym);
    let a_sigma = plan.apply_symbol_unchecked(sigma, sym);
    let n = phi.values().len();
    let (alpha, beta, p) = (prm.alpha, prm.beta, prm.p);
    let mut dmu = vec![0.0; n];
    let mut dphi = vec![0.0; n];
    let mut dsigma = vec![0.0; n];
    let (m, f, s) = (mu.values(), phi.values(), sigma.values());
    for i in 0..n {
        let gp = model.graph.selection(f[i])? + model.graph.pi(f[i]);
        dphi[i] = (m[i] - a_phi.values()[i] - f[i] - gp) / beta;
        let exchange = p * (s[i] - m[i]);
        dmu[i] = (exchange - a_mu.values()[i] - dphi[i]) / alpha;
        dsigma[i] = -a_sigma.values()[i] - exchange;
    }
    let grid = phi.grid().clone();
    Ok(Derivative {
        dmu: Field::from_raw(grid.clone(), dmu),
        dphi: Field::from_raw(grid.clone(), dphi),
        dsigma: Field::from_raw(grid, dsigma),
    })
}

/// Largest step accepted by [`integrate_regularized`]: `RK4_MARGIN / L`,
/// with `L` the max-row-sum bound on the Jacobian of the vector field.
pub fn stability_limit(model: &Model) -> Result<f64> {
    check_regularized(model)?;
    let prm = &model.params;
    let (alpha, beta, p) = (prm.alpha, prm.beta, prm.p);
    let y = 1.0 / prm.lambda;
    let y = y.min(model.plan.max_eigenvalue());
    let lg = 1.0 / prm.eps + model.potential().pi_lip();
    let phi_row = (1.0 + y + 1.0 + lg) / beta;
    let mu_row = (p + y) / alpha + 1.0 / (alpha * beta) + (y + 1.0 + lg) / (alpha * beta) + p / alpha;
    let sigma_row = p + y + p;
    let l = phi_row.max(mu_row).max(sigma_row);
    Ok(RK4_MARGIN / l)
}

/// One classical RK4 step.
pub(crate) fn rk4_step(model: &Model, s: &State, dt: f64) -> Result<State> {
    let k1 = rhs_unchecked(model, &s.mu, &s.phi, &s.sigma)?;
    let stage = |k: &Derivative, h: f64| {
        (
            s.mu.axpy(h, &k.dmu),
            s.phi.axpy(h, &k.dphi),
            s.sigma.axpy(h, &k.dsigma),
        )
    };
    let (m2, f2, s2) = stage(&k1, 0.5 * dt);
    let k2 = rhs_unchecked(model, &m2, &f2, &s2)?;
    let (m3, f3, s3) = stage(&k2, 0.5 * dt);
    let k3 = rhs_unchecked(model, &m3, &f3, &s3)?;
    let (m4, f4, s4) = stage(&k3, dt);
    let k4 = rhs_unchecked(model, &m4, &f4, &s4)?;
    let combine = |y: &Field, a: &Field, b: &Field, c: &Field, d: &Field| {
        let n = y.values().len();
        let mut out = y.values().to_vec();
        for i in 0..n {
            out[i] += dt / 6.0 * (a.values()[i] + 2.0 * b.values()[i] + 2.0 * c.values()[i] + d.values()[i]);
        }
        Field::from_raw(y.grid().clone(), out)
    };
    let mu = combine(&s.mu, &k1.dmu, &k2.dmu, &k3.dmu, &k4.dmu);
    let phi = combine(&s.phi, &k1.dphi, &k2.dphi, &k3.dphi, &k4.dphi);
    let sigma = combine(&s.sigma, &k1.dsigma, &k2.dsigma, &k3.dsigma, &k4.dsigma);
    let xi = phi.values().iter().map(|&r| model.graph.selection(r)).collect::<Result<Vec<f64>>>()?;
    let xi = Field::from_raw(phi.grid().clone(), xi);
    Ok(State {
        t: s.t + dt,
        mu,
        phi,
        sigma,
        xi,
    })
}

/// RK4 trajectory of the regularized ODE on `[0, t_end]`.
pub fn integrate_regularized(model: &Model, init: &InitialData, saver: &mut dyn Saver) -> Result<RunOutput> {
    check_regularized(model)?;
    let limit = stability_limit(model)?;
    if model.params.dt > limit {
        return Err(Error::StepTooLarge {
            dt: model.params.dt,
            limit,
        });
    }
    run_system(model, init, Scheme::RungeKutta4, saver)
}
