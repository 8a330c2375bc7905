use std::sync::Arc;

use tumorch_core::experiments::*;
use tumorch_core::{Error, PotentialSpec, SpectralPlan, SystemParams};

fn cos(amplitude: f64, k: usize, offset: f64) -> FieldProfile {
    FieldProfile::Cosine { amplitude, modes: vec![k], offset }
}

fn small() -> Scenario {
    Scenario {
        grid: GridSpec::unit(&[48]),
        potential: PotentialSpec::quartic(0.2).unwrap(),
        params: SystemParams { alpha: 0.1, beta: 0.1, p: 0.5, t_end: 0.1, dt: 2e-3, ..Default::default() },
        initial: InitialSpec { mu: cos(1.0, 3, 0.0), phi: cos(0.8, 2, 0.0), sigma: cos(0.3, 1, 0.5), smoothing_eps: None },
        seed: 7,
    }
}

fn constant_initial(phi: f64) -> InitialSpec {
    InitialSpec {
        mu: FieldProfile::Constant { value: 0.2 },
        phi: FieldProfile::Constant { value: phi },
        sigma: FieldProfile::Constant { value: 0.5 },
        smoothing_eps: None,
    }
}

fn bump_scenario() -> Scenario {
    Scenario {
        grid: GridSpec { dims: vec![65], spacing: None, lengths: Some(vec![2.0]), origin: Some(vec![-1.0]) },
        potential: PotentialSpec::quartic(0.2).unwrap(),
        params: SystemParams { alpha: 0.1, beta: 0.1, p: 0.5, t_end: 0.02, dt: 1e-3, ..Default::default() },
        initial: InitialSpec {
            mu: FieldProfile::Constant { value: 0.0 },
            phi: FieldProfile::GaussianBump { amplitude: 0.8, center: vec![0.0], width: 0.05, offset: 0.0 },
            sigma: FieldProfile::Constant { value: 0.5 },
            smoothing_eps: None,
        },
        seed: 0,
    }
}

#[test]
fn equal_parameters_give_zero_bundle() {
    let sc = small().with_params(|p| p.beta = 0.0);
    let grid = sc.build_grid().unwrap();
    let plan = Arc::new(SpectralPlan::new(grid.clone()));
    let init = sc.build_initial(&grid).unwrap();
    let a = simulate(&plan, &sc, &init, 5).unwrap();
    let b = simulate(&plan, &sc, &init, 5).unwrap();
    assert_eq!(a.states.len(), 11);
    let bundle = ErrorBundle::compute(&plan, sc.params.alpha, &a.states, &b.states).unwrap();
    assert_eq!(bundle, ErrorBundle::default());
}

#[test]
fn beta_study_errors_shrink_and_report_is_written() {
    let cfg = StudyConfig { beta_schedule: vec![0.2, 0.1, 0.05, 0.025], save_stride: 5, ..Default::default() };
    let res = study_beta_rate(&small(), &cfg).unwrap();
    assert_eq!(res.bundles.len(), 4);
    assert!(res.decreasing);
    assert!(res.fit.slope > 0.0);
    assert_eq!(res.ledgers.len(), 5);

    let dir = tempfile::tempdir().unwrap();
    let rep = res.report();
    rep.write(dir.path()).unwrap();
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 5);
    let verdict = std::fs::read_to_string(dir.path().join("verdict.txt")).unwrap();
    assert!(verdict.contains("slope"));
    assert!(dir.path().join("ledgers").read_dir().unwrap().count() == 5);
}

#[test]
fn later_cauchy_pair_is_closer() {
    let cfg = StudyConfig { beta_schedule: vec![0.1, 0.05, 0.025], save_stride: 5, ..Default::default() };
    let res = study_beta_cauchy(&small(), &cfg).unwrap();
    assert_eq!(res.pairs.len(), 2);
    assert!(res.pairs[1].2.total < res.pairs[0].2.total);
    assert!(res.spread >= 1.0);
}

#[test]
fn cauchy_pairs_need_two_values() {
    let cfg = StudyConfig { beta_schedule: vec![0.1], ..Default::default() };
    assert!(matches!(study_beta_cauchy(&small(), &cfg), Err(Error::InvalidParameter { name: "beta_schedule", .. })));
}

#[test]
fn lambda_distances_decrease() {
    let cfg = StudyConfig { lambda_schedule: vec![0.1, 0.05, 0.025], ..Default::default() };
    let res = study_lambda(&small(), &cfg).unwrap();
    assert!(res.decreasing, "{:?}", res.distances);
}

#[test]
fn constant_data_make_lambda_irrelevant() {
    let mut sc = small();
    sc.initial = constant_initial(0.3);
    let cfg = StudyConfig { lambda_schedule: vec![0.1, 0.01], ..Default::default() };
    let res = study_lambda(&sc, &cfg).unwrap();
    for (_, d) in &res.distances {
        assert!(*d <= 1e-13, "{d}");
    }
}

#[test]
fn small_epsilon_stays_close_to_exact_graph() {
    let cfg = StudyConfig { eps_schedule: vec![1e-2, 1e-3, 1e-4], ..Default::default() };
    let res = study_epsilon(&small(), &cfg).unwrap();
    assert!(res.decreasing, "{:?}", res.distances);
    let (eps, d) = res.distances[2];
    assert!(d <= 10.0 * eps, "{d}");
}

#[test]
fn consistency_studies_require_viscosity() {
    let sc = small().with_params(|p| p.beta = 0.0);
    let cfg = StudyConfig::default();
    assert!(matches!(study_lambda(&sc, &cfg), Err(Error::InvalidParameter { name: "beta", .. })));
    assert!(matches!(study_epsilon(&sc, &cfg), Err(Error::InvalidParameter { name: "beta", .. })));
}

#[test]
fn zero_data_give_zero_truncation_differences() {
    let mut sc = bump_scenario();
    sc.initial = InitialSpec {
        mu: FieldProfile::Constant { value: 0.0 },
        phi: FieldProfile::Constant { value: 0.0 },
        sigma: FieldProfile::Constant { value: 0.0 },
        smoothing_eps: None,
    };
    let cfg = StudyConfig { domain_factors: vec![1, 2, 4], refine: 1, ..Default::default() };
    let res = study_domain_truncation(&sc, &cfg).unwrap();
    assert!(res.differences.iter().all(|(_, d)| *d == 0.0), "{:?}", res.differences);
}

#[test]
fn bump_differences_decay_with_domain_size() {
    let cfg = StudyConfig { domain_factors: vec![1, 2, 4, 8], refine: 1, ..Default::default() };
    let res = study_domain_truncation(&bump_scenario(), &cfg).unwrap();
    assert!(res.decreasing, "{:?}", res.differences);
}

#[test]
fn truncation_rejects_data_near_the_boundary() {
    let mut sc = bump_scenario();
    sc.initial.phi = FieldProfile::GaussianBump { amplitude: 0.8, center: vec![0.75], width: 0.05, offset: 0.0 };
    let cfg = StudyConfig { domain_factors: vec![1, 2], refine: 1, ..Default::default() };
    assert!(matches!(study_domain_truncation(&sc, &cfg), Err(Error::MarginViolation(_))));

    let sc = bump_scenario();
    let cfg = StudyConfig { window: Some(vec![[-0.95, 0.5]]), domain_factors: vec![1, 2], ..Default::default() };
    assert!(matches!(study_domain_truncation(&sc, &cfg), Err(Error::MarginViolation(_))));

    let mut sc = bump_scenario();
    sc.initial.mu = cos(1.0, 1, 0.0);
    let cfg = StudyConfig { domain_factors: vec![1, 2], ..Default::default() };
    assert!(matches!(study_domain_truncation(&sc, &cfg), Err(Error::MarginViolation(_))));
}

#[test]
fn contraction_ratios_and_gronwall_horizons() {
    let cfg = StudyConfig { horizons: vec![0.05, 0.1, 0.2], ..Default::default() };
    let res = study_contraction(&small(), &cfg).unwrap();
    assert_eq!(res.rows.len(), 3);
    assert!(res.spread < CONTRACTION_SPREAD_MAX, "{:?}", res.rows);
    assert!(res.gronwall.windows(2).all(|w| w[1].1 >= w[0].1), "{:?}", res.gronwall);
}

#[test]
fn estimate_monitor_is_uniform_in_beta() {
    let cfg = StudyConfig { monitor_betas: vec![0.2, 0.1, 0.05], ..Default::default() };
    let (bundles, spread) = estimate_monitor(&small(), &cfg).unwrap();
    assert_eq!(bundles.len(), 3);
    assert!(bundles.iter().all(|b| b.total.is_finite() && b.total > 0.0));
    assert!(spread < MONITOR_SPREAD_MAX, "{spread}");
}

#[test]
fn study_config_validation() {
    let bad = [
        StudyConfig { beta_schedule: vec![], ..Default::default() },
        StudyConfig { beta_schedule: vec![1.5], ..Default::default() },
        StudyConfig { deltas: vec![-1e-3], ..Default::default() },
        StudyConfig { domain_factors: vec![1], ..Default::default() },
        StudyConfig { save_stride: 0, ..Default::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    assert!(StudyConfig::default().validate().is_ok());
}

#[test]
fn degenerate_fit_rejected() {
    assert!(matches!(RateFit::fit(&[(0.1, 0.0), (0.05, 1.0)]), Err(Error::DegenerateFit(_))));
    assert!(matches!(RateFit::fit(&[(0.1, 1.0)]), Err(Error::DegenerateFit(_))));
}
