use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

mod common;
use common::{dense_neg_laplacian, dopri, quartic_yosida};

use tumorch_core::dynamics::*;
use tumorch_core::grid::{inner_h, integral};
use tumorch_core::io::{read_snapshot_file, SnapshotSaver};
use tumorch_core::potential::TablePotential;
use tumorch_core::{Error, Field, Grid, PotentialSpec, SpectralPlan};

fn plan1d(n: usize, len: f64) -> Arc<SpectralPlan> {
    Arc::new(SpectralPlan::new(Arc::new(Grid::with_lengths(&[n], &[len]).unwrap())))
}

fn quartic() -> PotentialSpec {
    PotentialSpec::quartic(0.2).unwrap()
}

fn state_from(mu: Field, phi: Field, sigma: Field) -> State {
    let xi = Field::zeros(phi.grid().clone());
    State { t: 0.0, mu, phi, sigma, xi }
}

fn smooth_data(g: &Arc<Grid>) -> InitialData {
    let pi = std::f64::consts::PI;
    let l = g.lengths()[0];
    InitialData::new(
        Field::from_fn(g.clone(), |x| (3.0 * pi * x[0] / l).cos()).unwrap(),
        Field::from_fn(g.clone(), |x| 0.8 * (2.0 * pi * x[0] / l).cos() + 0.1).unwrap(),
        Field::from_fn(g.clone(), |x| 0.5 + 0.3 * (pi * x[0] / l).cos()).unwrap(),
    )
    .unwrap()
}

#[test]
fn zero_state_is_an_equilibrium_of_the_vector_field() {
    let plan = plan1d(9, 1.0);
    let g = plan.grid().clone();
    let params = SystemParams { beta: 0.3, eps: 0.1, lambda: 0.05, ..Default::default() };
    let model = Model::new(plan, quartic(), params).unwrap();
    let z = Field::zeros(g.clone());
    let d = rhs_regularized(&model, &state_from(z.clone(), z.clone(), z)).unwrap();
    assert_eq!(d.dmu.max_abs(), 0.0);
    assert_eq!(d.dphi.max_abs(), 0.0);
    assert_eq!(d.dsigma.max_abs(), 0.0);
}

#[test]
fn constant_state_without_exchange() {
    let plan = plan1d(7, 2.0);
    let g = plan.grid().clone();
    let (alpha, beta, eps) = (0.2, 0.4, 0.05);
    let params = SystemParams { alpha, beta, eps, lambda: 0.1, p: 0.0, ..Default::default() };
    let model = Model::new(plan, quartic(), params).unwrap();
    let (m, f, s) = (0.7, -0.4, 1.3);
    let st = state_from(Field::constant(g.clone(), m), Field::constant(g.clone(), f), Field::constant(g, s));
    let d = rhs_regularized(&model, &st).unwrap();
    let gp = quartic_yosida(0.2, eps, f) - 0.8 * f;
    let dphi = (m - f - gp) / beta;
    for i in 0..7 {
        assert!(d.dsigma.values()[i].abs() < 1e-12);
        assert!((d.dphi.values()[i] - dphi).abs() < 1e-12 * (1.0 + dphi.abs()));
        assert!((d.dmu.values()[i] + dphi / alpha).abs() < 1e-12 * (1.0 + dphi.abs() / alpha));
    }
}

#[test]
fn vector_field_matches_dense_transcription() {
    let n = 6;
    let len = 1.5;
    let h = len / (n - 1) as f64;
    let plan = plan1d(n, len);
    let g = plan.grid().clone();
    let (alpha, beta, eps, lambda, p) = (0.3, 0.2, 0.07, 0.05, 0.6);
    let params = SystemParams { alpha, beta, eps, lambda, p, ..Default::default() };
    let model = Model::new(plan, quartic(), params).unwrap();
    let mu = vec![0.3, -0.1, 0.8, 0.2, -0.6, 0.4];
    let phi = vec![-0.9, 0.5, 0.1, 1.2, -0.3, 0.0];
    let sigma = vec![0.2, 0.9, -0.4, 0.5, 0.3, -0.7];
    let st = state_from(
        Field::new(g.clone(), mu.clone()).unwrap(),
        Field::new(g.clone(), phi.clone()).unwrap(),
        Field::new(g, sigma.clone()).unwrap(),
    );
    let d = rhs_regularized(&model, &st).unwrap();

    let l = dense_neg_laplacian(n, h);
    let id = DMatrix::<f64>::identity(n, n);
    let jl = (&id + &l * lambda).try_inverse().unwrap();
    let yos = (&id - jl) / lambda;
    let (mu, phi, sigma) = (DVector::from_vec(mu), DVector::from_vec(phi), DVector::from_vec(sigma));
    let gp = phi.map(|r| quartic_yosida(0.2, eps, r) - 0.8 * r);
    let dphi = (&mu - &yos * &phi - &phi - gp) / beta;
    let dmu = ((&sigma - &mu) * p - &yos * &mu - &dphi) / alpha;
    let dsig = -(&yos * &sigma) - (&sigma - &mu) * p;
    for i in 0..n {
        assert!((d.dphi.values()[i] - dphi[i]).abs() < 1e-12 * (1.0 + dphi[i].abs()), "dphi {i}");
        assert!((d.dmu.values()[i] - dmu[i]).abs() < 1e-12 * (1.0 + dmu[i].abs()), "dmu {i}");
        assert!((d.dsigma.values()[i] - dsig[i]).abs() < 1e-12 * (1.0 + dsig[i].abs()), "dsigma {i}");
    }
}

#[test]
fn vector_field_needs_all_regularizations() {
    let plan = plan1d(5, 1.0);
    let g = plan.grid().clone();
    let z = Field::zeros(g);
    let st = state_from(z.clone(), z.clone(), z);
    for (beta, eps, lambda, name) in [(0.0, 0.1, 0.1, "beta"), (0.1, 0.1, 0.0, "lambda"), (0.1, 0.0, 0.1, "eps")] {
        let params = SystemParams { beta, eps, lambda, ..Default::default() };
        let model = Model::new(plan.clone(), quartic(), params).unwrap();
        match rhs_regularized(&model, &st) {
            Err(Error::InvalidParameter { name: n, .. }) => assert_eq!(n, name),
            other => panic!("expected rejection of {name}, got {other:?}"),
        }
    }
}

#[test]
fn regularized_constant_data_matches_scalar_oracle() {
    let plan = plan1d(8, 1.0);
    let g = plan.grid().clone();
    let (alpha, beta, eps, p) = (0.5, 0.5, 0.1, 0.4);
    let params = SystemParams { alpha, beta, eps, lambda: 0.1, p, t_end: 1.0, dt: 2e-3, ..Default::default() };
    let model = Model::new(plan, quartic(), params).unwrap();
    let y0 = [0.3, 0.9, -0.2];
    let init = InitialData::new(
        Field::constant(g.clone(), y0[0]),
        Field::constant(g.clone(), y0[1]),
        Field::constant(g, y0[2]),
    )
    .unwrap();
    let out = integrate_regularized(&model, &init, &mut NullSaver).unwrap();
    let f = |y: &[f64; 3]| {
        let (m, f, s) = (y[0], y[1], y[2]);
        let dphi = (m - f - quartic_yosida(0.2, eps, f) + 0.8 * f) / beta;
        [(p * (s - m) - dphi) / alpha, dphi, -p * (s - m)]
    };
    let y = dopri(f, y0, 1.0, 1e-13);
    let fs = &out.final_state;
    assert!((fs.t - 1.0).abs() < 1e-15);
    for (field, want) in [(&fs.mu, y[0]), (&fs.phi, y[1]), (&fs.sigma, y[2])] {
        for v in field.values() {
            assert!((v - want).abs() < 1e-8, "{v} vs {want}");
        }
    }
}

fn rk4_final(n: usize, dt: f64) -> State {
    let plan = plan1d(n, 1.0);
    let g = plan.grid().clone();
    let params = SystemParams { alpha: 0.5, beta: 0.5, eps: 0.1, lambda: 0.05, p: 0.4, t_end: 0.2, dt, ..Default::default() };
    let model = Model::new(plan, quartic(), params).unwrap();
    integrate_regularized(&model, &smooth_data(&g), &mut NullSaver).unwrap().final_state
}

#[test]
fn runge_kutta_is_fourth_order() {
    let reference = rk4_final(16, 0.2 / 1280.0);
    let err = |dt: f64| {
        let s = rk4_final(16, dt);
        [s.mu.sub(&reference.mu), s.phi.sub(&reference.phi), s.sigma.sub(&reference.sigma)]
            .iter()
            .map(|d| d.max_abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.2 / 40.0), err(0.2 / 80.0));
    let order = (e1 / e2).log2();
    assert!(order >= 3.8, "observed order {order} ({e1:e}, {e2:e})");
}

#[test]
fn explicit_step_limit_enforced() {
    let plan = plan1d(16, 1.0);
    let g = plan.grid().clone();
    let params = SystemParams { beta: 0.05, eps: 0.05, lambda: 0.01, dt: 0.01, t_end: 0.1, ..Default::default() };
    let model = Model::new(plan, quartic(), params).unwrap();
    let lim = stability_limit(&model).unwrap();
    assert!(lim < 0.01);
    assert!(matches!(
        integrate_regularized(&model, &smooth_data(&g), &mut NullSaver),
        Err(Error::StepTooLarge { .. })
    ));
}

#[test]
fn equilibrium_is_a_fixed_point_of_both_integrators() {
    // p = 0, φ ≡ 0.5 and μ = σ = φ + B(φ) + π(φ) = 0.2.
    let plan = plan1d(12, 1.0);
    let g = plan.grid().clone();
    let init = InitialData::new(
        Field::constant(g.clone(), 0.2),
        Field::constant(g.clone(), 0.5),
        Field::constant(g, 0.2),
    )
    .unwrap();
    for beta in [0.0, 0.1] {
        let params = SystemParams { beta, p: 0.0, t_end: 0.05, dt: 0.01, ..Default::default() };
        let model = Model::new(plan.clone(), quartic(), params).unwrap();
        let out = run_system(&model, &init, Scheme::BackwardEuler, &mut NullSaver).unwrap();
        assert!(out.final_state.phi.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert!(out.final_state.mu.values().iter().all(|v| (v - 0.2).abs() < 1e-12));
        let xe = out.final_state.xi.values().iter().map(|v| (v - 0.1).abs()).fold(0.0, f64::max);
        assert!(xe < 1e-8, "beta {beta}: xi error {xe:e}");
    }
    let params = SystemParams { beta: 0.1, eps: 0.1, lambda: 0.1, p: 0.0, t_end: 0.05, dt: 1e-3, ..Default::default() };
    let model = Model::new(plan.clone(), quartic(), params).unwrap();
    let z = Field::zeros(plan.grid().clone());
    let zero = InitialData::new(z.clone(), z.clone(), z).unwrap();
    let out = integrate_regularized(&model, &zero, &mut NullSaver).unwrap();
    assert_eq!(out.final_state.phi.max_abs(), 0.0);
}

#[test]
fn pure_diffusion_step_matches_modal_closed_form() {
    // B ≡ 0, π ≡ 0, p = 0, β = 0: per mode φ̂ = μ̂/(1+κ) and
    // (α + 1/(1+κ)) (μ̂⁺ − μ̂ⁿ)/dt + ... closes in μ̂ alone.
    let plan = plan1d(20, 1.0);
    let g = plan.grid().clone();
    let zero_graph = PotentialSpec::CustomTable(TablePotential::new(&[(-1.0, 0.0), (1.0, 0.0)], 0.0).unwrap());
    let (alpha, dt) = (0.3, 0.01);
    let params = SystemParams { alpha, beta: 0.0, p: 0.0, t_end: 0.05, dt, ..Default::default() };
    let model = Model::new(plan.clone(), zero_graph, params).unwrap();
    let data = smooth_data(&g);
    let mut saver = MemorySaver::new(1);
    let out = run_system(&model, &data, Scheme::BackwardEuler, &mut saver).unwrap();
    let kappa = plan.eigenvalues();
    let mut mu_h = plan.transform(&data.mu0).unwrap();
    let mut phi_h = plan.transform(&data.phi0).unwrap();
    for _ in 0..5 {
        for k in 0..mu_h.len() {
            let c = 1.0 / (1.0 + kappa[k]);
            let m = (alpha * mu_h[k] + phi_h[k]) / (alpha + c + dt * kappa[k]);
            mu_h[k] = m;
            phi_h[k] = c * m;
        }
    }
    let mu = plan.inverse_transform(&mu_h).unwrap();
    let phi = plan.inverse_transform(&phi_h).unwrap();
    assert!(out.final_state.mu.sub(&mu).max_abs() < 1e-10);
    assert!(out.final_state.phi.sub(&phi).max_abs() < 1e-10);
    let m0 = integral(&saver.states[0].theta(alpha));
    for s in &saver.states {
        assert!((integral(&s.theta(alpha)) - m0).abs() < 1e-12 * (1.0 + m0.abs()));
    }
}

fn reference_params(beta: f64, eps: f64) -> SystemParams {
    SystemParams { alpha: 0.1, beta, eps, lambda: 0.0, p: 0.5, t_end: 0.5, dt: 1e-3, ..Default::default() }
}

#[test]
fn ledger_lyapunov_mass_and_selection() {
    let plan = plan1d(128, 1.0);
    let g = plan.grid().clone();
    let data = smooth_data(&g);
    for (beta, eps) in [(0.1, 0.0), (0.1, 0.01), (0.0, 0.0)] {
        let model = Model::new(plan.clone(), quartic(), reference_params(beta, eps)).unwrap();
        let out = run_system(&model, &data, Scheme::BackwardEuler, &mut NullSaver).unwrap();
        let rep = &out.report;
        assert_eq!(rep.rows.len(), 501);
        let e0 = rep.rows[0].energy;
        for r in &rep.rows {
            assert!(r.energy + r.dissipation <= e0 + ledger_tol(1e-3), "step {}", r.step);
        }
        assert!(rep.mass_drift() <= 1e-8);
        assert!(rep.max_xi_residual() <= 1e-8, "xi residual {}", rep.max_xi_residual());
        assert!(rep.rows.windows(2).all(|w| w[1].dissipation >= w[0].dissipation));
    }
}

#[test]
fn identical_configurations_are_bitwise_identical() {
    let plan = plan1d(64, 1.0);
    let g = plan.grid().clone();
    let data = smooth_data(&g);
    let model = Model::new(plan, quartic(), SystemParams { t_end: 0.1, ..reference_params(0.05, 0.0) }).unwrap();
    let mut a = MemorySaver::new(1);
    let mut b = MemorySaver::new(1);
    run_system(&model, &data, Scheme::BackwardEuler, &mut a).unwrap();
    run_system(&model, &data, Scheme::BackwardEuler, &mut b).unwrap();
    assert_eq!(a.states.len(), b.states.len());
    for (x, y) in a.states.iter().zip(&b.states) {
        assert_eq!(x, y);
    }
}

#[test]
fn inner_iteration_cap_reported() {
    let plan = plan1d(32, 1.0);
    let g = plan.grid().clone();
    let params = SystemParams { picard_max: 1, t_end: 0.1, dt: 0.05, ..reference_params(0.1, 0.0) };
    let model = Model::new(plan, quartic(), params).unwrap();
    let err = run_system(&model, &smooth_data(&g), Scheme::BackwardEuler, &mut NullSaver).unwrap_err();
    assert!(matches!(err, Error::PicardNotConverged { step: 1, .. }));
    assert!(err.is_solver_abort());
}

#[test]
fn mismatched_initial_grid_rejected() {
    let plan = plan1d(16, 1.0);
    let other = Arc::new(Grid::unit(&[17]).unwrap());
    let model = Model::new(plan, quartic(), reference_params(0.1, 0.0)).unwrap();
    assert!(matches!(
        run_system(&model, &smooth_data(&other), Scheme::BackwardEuler, &mut NullSaver),
        Err(Error::GridMismatch)
    ));
}

#[test]
fn smoothing_applies_sqrt_resolvent_to_mu_and_sigma_only() {
    let plan = plan1d(32, 1.0);
    let g = plan.grid().clone();
    let data = smooth_data(&g).with_smoothing(Some(0.01));
    let graph = PhaseGraph::new(quartic(), 0.0).unwrap();
    let s = data.prepare(&plan, &graph).unwrap();
    let want = tumorch_core::operators::sqrt_resolvent(&plan, 0.01, &data.mu0).unwrap();
    assert_eq!(s.mu, want);
    assert_eq!(s.phi, data.phi0);
    assert!(inner_h(&s.sigma, &s.sigma).unwrap() < inner_h(&data.sigma0, &data.sigma0).unwrap());
}

/// RK4 on the fully regularized system against backward Euler with the same
/// `ε` and `λ`. Both schemes share the Yosida symbol, so the distance is the
/// first-order time error of the implicit scheme. Envelope constant fitted on
/// `dt ∈ {4e-4, 2e-4}` (max ratio 3.9e-4) and frozen with a factor 2 margin.
#[test]
fn explicit_and_implicit_integrators_agree() {
    const ENVELOPE: f64 = 8e-4;
    let plan = plan1d(32, 1.0);
    let g = plan.grid().clone();
    let data = smooth_data(&g);
    let base = SystemParams { alpha: 0.1, beta: 0.05, eps: 0.05, lambda: 0.01, p: 0.5, t_end: 0.25, ..Default::default() };
    let rk = Model::new(plan.clone(), quartic(), SystemParams { dt: 5e-5, ..base.clone() }).unwrap();
    let fine = integrate_regularized(&rk, &data, &mut NullSaver).unwrap().final_state;
    let mut d = Vec::new();
    for dt in [4e-4, 2e-4] {
        let be = Model::new(plan.clone(), quartic(), SystemParams { dt, ..base.clone() }).unwrap();
        let s = run_system(&be, &data, Scheme::BackwardEuler, &mut NullSaver).unwrap().final_state;
        let diff = s.phi.sub(&fine.phi);
        let dist = inner_h(&diff, &diff).unwrap().sqrt();
        assert!(dist <= ENVELOPE * (dt + base.lambda), "dt = {dt}: distance {dist:e}");
        d.push(dist);
    }
    let ratio = d[0] / d[1];
    assert!((1.8..2.2).contains(&ratio), "halving dt changed the distance by {ratio}");
}

#[test]
fn snapshots_round_trip_through_saver() {
    let plan = plan1d(16, 1.0);
    let g = plan.grid().clone();
    let model = Model::new(plan, quartic(), SystemParams { t_end: 0.01, dt: 0.004, ..reference_params(0.1, 0.0) }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut saver = SnapshotSaver::new(dir.path(), 2).unwrap();
    let out = run_system(&model, &smooth_data(&g), Scheme::BackwardEuler, &mut saver).unwrap();
    // steps 0, 2 and the final step 3
    assert_eq!(saver.files_written(), 12);
    let snap = read_snapshot_file(dir.path().join("phi_000003.snap")).unwrap();
    assert_eq!(snap.field.values(), out.final_state.phi.values());
    assert!((snap.time - 0.01).abs() < 1e-15);
}
