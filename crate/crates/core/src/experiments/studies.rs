use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::dynamics::{run_system, EnergyReport, InitialData, MemorySaver, Scheme, State};
use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, inner_unchecked, Field, Grid};
use crate::operators::dual_norm;
use crate::spectral::SpectralPlan;

use super::metrics::{trapezoid, ErrorBundle, ObservationWindow, RateFit, WINDOW_MARGIN};
use super::report::{num, StudyReport, Table};
use super::scenario::{FieldProfile, GridSpec, Scenario};

/// Pass thresholds, pinned.
pub const BETA_SLOPE_MIN: f64 = 0.45;
pub const CAUCHY_SPREAD_MAX: f64 = 2.0;
pub const CONTRACTION_SPREAD_MAX: f64 = 0.10;
pub const MONITOR_SPREAD_MAX: f64 = 0.05;
/// Relative amplitude below which a Gaussian bump counts as outside its support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Study schedules; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub beta_schedule: Vec<f64>,
    pub lambda_schedule: Vec<f64>,
    pub eps_schedule: Vec<f64>,
    /// Domain multipliers; consecutive entries should double.
    pub domain_factors: Vec<usize>,
    /// Spacing divisor of the h-refinement repeat (1 disables it).
    pub refine: usize,
    /// Observation window `[[lo, hi], ...]`; defaults to a 10% inset of the base grid.
    pub window: Option<Vec<[f64; 2]>>,
    pub deltas: Vec<f64>,
    /// Horizons, as multiples of `t_end`, for the Gronwall-constant check.
    pub horizons: Vec<f64>,
    pub monitor_betas: Vec<f64>,
    pub save_stride: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            beta_schedule: (0..6).map(|k| 0.2 * 0.5f64.powi(k)).collect(),
            lambda_schedule: vec![0.1, 0.05, 0.025, 0.0125],
            eps_schedule: vec![0.1, 0.05, 0.025, 0.0125],
            domain_factors: vec![1, 2, 4, 8],
            refine: 2,
            window: None,
            deltas: vec![1e-2, 1e-3, 1e-4],
            horizons: vec![0.5, 1.0, 2.0],
            monitor_betas: vec![0.2, 0.1, 0.05, 0.025],
            save_stride: 1,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: &[f64]| {
            if v.is_empty() || v.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                Err(Error::invalid(name, "entries must be positive and finite"))
            } else {
                Ok(())
            }
        };
        positive("beta_schedule", &self.beta_schedule)?;
        if self.beta_schedule.iter().any(|&b| b >= 1.0) {
            return Err(Error::invalid("beta_schedule", "entries must lie in (0, 1)"));
        }
        positive("lambda_schedule", &self.lambda_schedule)?;
        positive("eps_schedule", &self.eps_schedule)?;
        positive("deltas", &self.deltas)?;
        positive("horizons", &self.horizons)?;
        positive("monitor_betas", &self.monitor_betas)?;
        if self.domain_factors.len() < 2 || self.domain_factors.contains(&0) {
            return Err(Error::invalid("domain_factors", "need at least two positive factors"));
        }
        if self.refine == 0 {
            return Err(Error::invalid("refine", "must be at least 1"));
        }
        if self.save_stride == 0 {
            return Err(Error::invalid("save_stride", "must be at least 1"));
        }
        Ok(())
    }

    fn window_for(&self, grid: &Grid) -> Result<ObservationWindow> {
        let w = match &self.window {
            Some(b) => ObservationWindow::new(b.iter().map(|x| (x[0], x[1])).collect())?,
            None => ObservationWindow::inset(grid, WINDOW_MARGIN)?,
        };
        w.check_inside(grid)?;
        Ok(w)
    }
}

/// Saved states and ledger of one run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub states: Vec<State>,
    pub report: EnergyReport,
}

/// Backward-Euler run of `scenario` from `init` on `plan`'s grid.
pub fn simulate(plan: &Arc<SpectralPlan>, scenario: &Scenario, init: &InitialData, stride: usize) -> Result<Simulation> {
    let model = scenario.build_model(plan.clone())?;
    let mut saver = MemorySaver::new(stride);
    let out = run_system(&model, init, Scheme::BackwardEuler, &mut saver)?;
    Ok(Simulation {
        states: saver.states,
        report: out.report,
    })
}

fn label(prefix: &str, v: f64) -> String {
    format!("{prefix}_{v:e}")
}

fn setup(scenario: &Scenario) -> Result<(Arc<Grid>, Arc<SpectralPlan>, InitialData)> {
    scenario.validate()?;
    let grid = scenario.build_grid()?;
    let plan = Arc::new(SpectralPlan::new(grid.clone()));
    let init = scenario.build_initial(&grid)?;
    Ok((grid, plan, init))
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

// ---------------------------------------------------------------- β → 0 rate

#[derive(Clone, Debug)]
pub struct BetaRateResult {
    pub bundles: Vec<(f64, ErrorBundle)>,
    pub fit: RateFit,
    pub decreasing: bool,
    pub ledgers: Vec<(String, EnergyReport)>,
}

impl BetaRateResult {
    pub fn passed(&self) -> bool {
        self.fit.slope >= BETA_SLOPE_MIN && self.decreasing
    }

    pub fn report(&self) -> StudyReport {
        let mut t = Table::new(&["beta", "e_mu", "e_phi", "e_sigma_inf", "e_sigma_l2v", "e_theta", "total"]);
        for (b, e) in &self.bundles {
            t.push(vec![num(*b), num(e.e_mu), num(e.e_phi), num(e.e_sigma_inf), num(e.e_sigma_l2v), num(e.e_theta), num(e.total)]);
        }
        StudyReport {
            name: "study-beta",
            passed: self.passed(),
            verdict: format!(
                "slope = {:.6} (min {BETA_SLOPE_MIN}), intercept = {:.6e}, decades = {:.3}, strictly decreasing = {}",
                self.fit.slope,
                self.fit.intercept,
                self.fit.decades(),
                self.decreasing
            ),
            summary: t,
            series: vec![("beta_vs_total".into(), self.fit.points.clone())],
            ledgers: self.ledgers.clone(),
        }
    }
}

/// Error bundle of each `β` run against the `β = 0` run, with a log-log fit.
pub fn study_beta_rate(scenario: &Scenario, cfg: &StudyConfig) -> Result<BetaRateResult> {
    cfg.validate()?;
    let (_, plan, init) = setup(scenario)?;
    let mut runs: Vec<f64> = vec![0.0];
    runs.extend(&cfg.beta_schedule);
    let sims = runs
        .par_iter()
        .map(|&b| simulate(&plan, &scenario.with_params(|p| p.beta = b), &init, cfg.save_stride))
        .collect::<Result<Vec<Simulation>>>()?;
    let alpha = scenario.params.alpha;
    let reference = &sims[0];
    let bundles = cfg
        .beta_schedule
        .iter()
        .zip(&sims[1..])
        .map(|(&b, s)| Ok((b, ErrorBundle::compute(&plan, alpha, &s.states, &reference.states)?)))
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<f64> = bundles.iter().map(|(_, e)| e.total).collect();
    let fit = RateFit::fit(&bundles.iter().map(|(b, e)| (*b, e.total)).collect::<Vec<_>>())?;
    let ledgers = runs.iter().zip(&sims).map(|(&b, s)| (label("beta", b), s.report.clone())).collect();
    Ok(BetaRateResult {
        decreasing: strictly_decreasing(&totals),
        bundles,
        fit,
        ledgers,
    })
}

// ---------------------------------------------------------------- Cauchy pairs

#[derive(Clone, Debug)]
pub struct CauchyResult {
    /// `(β, η, bundle, total/(√β + √η))`
    pub pairs: Vec<(f64, f64, ErrorBundle, f64)>,
    pub c_fit: f64,
    pub spread: f64,
    pub ledgers: Vec<(String, EnergyReport)>,
}

impl CauchyResult {
    pub fn passed(&self) -> bool {
        self.spread < CAUCHY_SPREAD_MAX
    }

    pub fn report(&self) -> StudyReport {
        let mut t = Table::new(&["beta", "eta", "total", "ratio", "envelope"]);
        for (b, e, bundle, r) in &self.pairs {
            t.push(vec![num(*b), num(*e), num(bundle.total), num(*r), num(self.c_fit * (b.sqrt() + e.sqrt()))]);
        }
        StudyReport {
            name: "study-cauchy",
            passed: self.passed(),
            verdict: format!("C_fit = {:.6e}, spread = {:.6} (max {CAUCHY_SPREAD_MAX})", self.c_fit, self.spread),
            summary: t,
            series: vec![(
                "sqrt_sum_vs_difference".into(),
                self.pairs.iter().map(|(b, e, x, _)| (b.sqrt() + e.sqrt(), x.total)).collect(),
            )],
            ledgers: self.ledgers.clone(),
        }
    }
}

/// Differences between consecutive members of the `β` schedule.
pub fn study_beta_cauchy(scenario: &Scenario, cfg: &StudyConfig) -> Result<CauchyResult> {
    cfg.validate()?;
    if cfg.beta_schedule.len() < 2 {
        return Err(Error::invalid("beta_schedule", "need at least two values for pairs"));
    }
    let (_, plan, init) = setup(scenario)?;
    let sims = cfg
        .beta_schedule
        .par_iter()
        .map(|&b| simulate(&plan, &scenario.with_params(|p| p.beta = b), &init, cfg.save_stride))
        .collect::<Result<Vec<Simulation>>>()?;
    let alpha = scenario.params.alpha;
    let mut pairs = Vec::new();
    for k in 0..cfg.beta_schedule.len() - 1 {
        let (b, e) = (cfg.beta_schedule[k], cfg.beta_schedule[k + 1]);
        let bundle = ErrorBundle::compute(&plan, alpha, &sims[k].states, &sims[k + 1].states)?;
        pairs.push((b, e, bundle, bundle.total / (b.sqrt() + e.sqrt())));
    }
    let c_fit = pairs.iter().map(|p| p.3).fold(0.0, f64::max);
    let c_min = pairs.iter().map(|p| p.3).fold(f64::INFINITY, f64::min);
    if !(c_min > 0.0) {
        return Err(Error::DegenerateFit("a pair difference vanished".into()));
    }
    let ledgers = cfg
        .beta_schedule
        .iter()
        .zip(&sims)
        .map(|(&b, s)| (label("beta", b), s.report.clone()))
        .collect();
    Ok(CauchyResult {
        pairs,
        c_fit,
        spread: c_fit / c_min,
        ledgers,
    })
}

// ---------------------------------------------------------------- λ and ε consistency

#[derive(Clone, Debug)]
pub struct ConsistencyResult {
    pub parameter: &'static str,
    /// `(value, windowed ‖φ_value(T) − φ_ref(T)‖_H)`
    pub distances: Vec<(f64, f64)>,
    pub decreasing: bool,
    pub fit: Option<RateFit>,
    pub ledgers: Vec<(String, EnergyReport)>,
}

impl ConsistencyResult {
    pub fn passed(&self) -> bool {
        self.decreasing
    }

    pub fn report(&self) -> StudyReport {
        let mut t = Table::new(&[self.parameter, "distance"]);
        for (v, d) in &self.distances {
            t.push(vec![num(*v), num(*d)]);
        }
        StudyReport {
            name: if self.parameter == "lambda" { "study-lambda" } else { "study-epsilon" },
            passed: self.passed(),
            verdict: format!(
                "strictly decreasing = {}, slope = {}",
                self.decreasing,
                self.fit.as_ref().map_or("n/a".into(), |f| format!("{:.6}", f.slope))
            ),
            summary: t,
            series: vec![(format!("{}_vs_distance", self.parameter), self.distances.clone())],
            ledgers: self.ledgers.clone(),
        }
    }
}

fn consistency(
    scenario: &Scenario,
    cfg: &StudyConfig,
    parameter: &'static str,
    schedule: &[f64],
    set: impl Fn(&mut crate::dynamics::SystemParams, f64) + Sync,
) -> Result<ConsistencyResult> {
    cfg.validate()?;
    let (grid, plan, init) = setup(scenario)?;
    let window = cfg.window_for(&grid)?;
    let mut values = vec![0.0];
    values.extend(schedule);
    let finals = values
        .par_iter()
        .map(|&v| {
            let sc = scenario.with_params(|p| set(p, v));
            let model = sc.build_model(plan.clone())?;
            let out = run_system(&model, &init, Scheme::BackwardEuler, &mut crate::dynamics::NullSaver)?;
            Ok((out.final_state, out.report))
        })
        .collect::<Result<Vec<(State, EnergyReport)>>>()?;
    let reference = &finals[0].0.phi;
    let distances: Vec<(f64, f64)> = schedule
        .iter()
        .zip(&finals[1..])
        .map(|(&v, (s, _))| (v, window.norm_h(&s.phi.sub(reference))))
        .collect();
    let d: Vec<f64> = distances.iter().map(|p| p.1).collect();
    Ok(ConsistencyResult {
        parameter,
        decreasing: strictly_decreasing(&d),
        fit: RateFit::fit(&distances).ok(),
        distances,
        ledgers: values
            .iter()
            .zip(&finals)
            .map(|(&v, (_, r))| (label(parameter, v), r.clone()))
            .collect(),
    })
}

/// Windowed `H` distance of `φ(T)` between Yosida-Laplacian runs and the `λ = 0` run.
pub fn study_lambda(scenario: &Scenario, cfg: &StudyConfig) -> Result<ConsistencyResult> {
    if scenario.params.beta <= 0.0 {
        return Err(Error::invalid("beta", "the lambda study needs beta > 0"));
    }
    consistency(scenario, cfg, "lambda", &cfg.lambda_schedule, |p, v| p.lambda = v)
}

/// Windowed `H` distance of `φ(T)` between Yosida-graph runs and the exact-graph run.
pub fn study_epsilon(scenario: &Scenario, cfg: &StudyConfig) -> Result<ConsistencyResult> {
    if scenario.params.beta <= 0.0 {
        return Err(Error::invalid("beta", "the epsilon study needs beta > 0"));
    }
    consistency(scenario, cfg, "eps", &cfg.eps_schedule, |p, v| p.eps = v)
}

// ---------------------------------------------------------------- domain truncation

#[derive(Clone, Debug)]
pub struct TruncationResult {
    /// `(domain factor, max over μ, φ, σ of the windowed H difference to the next factor)`
    pub differences: Vec<(usize, f64)>,
    pub refined: Vec<(usize, f64)>,
    pub decreasing: bool,
    pub refined_decreasing: bool,
    pub ledgers: Vec<(String, EnergyReport)>,
}

impl TruncationResult {
    pub fn passed(&self) -> bool {
        self.decreasing && self.refined_decreasing
    }

    pub fn report(&self) -> StudyReport {
        let mut t = Table::new(&["factor", "difference", "difference_refined"]);
        for (i, (f, d)) in self.differences.iter().enumerate() {
            let r = self.refined.get(i).map_or("nan".to_string(), |x| num(x.1));
            t.push(vec![f.to_string(), num(*d), r]);
        }
        StudyReport {
            name: "study-domain",
            passed: self.passed(),
            verdict: format!(
                "strictly decreasing = {}, refined ordering preserved = {}",
                self.decreasing, self.refined_decreasing
            ),
            summary: t,
            series: vec![(
                "factor_vs_difference".into(),
                self.differences.iter().map(|(f, d)| (*f as f64, *d)).collect(),
            )],
            ledgers: self.ledgers.clone(),
        }
    }
}

/// Enlarged grid around the same center with the same spacing.
fn scaled_grid(base: &Grid, factor: usize, refine: usize) -> Result<GridSpec> {
    let nd = base.ndim();
    let l = base.lengths();
    let dims: Vec<usize> = (0..nd).map(|d| (base.dims()[d] - 1) * factor * refine + 1).collect();
    let spacing: Vec<f64> = (0..nd).map(|d| base.spacing()[d] / refine as f64).collect();
    let origin: Vec<f64> = (0..nd)
        .map(|d| base.origin()[d] + 0.5 * l[d] - 0.5 * factor as f64 * l[d])
        .collect();
    if (0..nd).any(|d| !((factor - 1) * (base.dims()[d] - 1)).is_multiple_of(2)) {
        return Err(Error::invalid("domain_factors", "enlarged domains must stay node-aligned; use an odd node count"));
    }
    Ok(GridSpec {
        dims,
        spacing: Some(spacing),
        lengths: None,
        origin: Some(origin),
    })
}

fn check_support(scenario: &Scenario, window: &ObservationWindow) -> Result<()> {
    for (name, prof) in scenario.initial.profiles() {
        match prof {
            FieldProfile::Constant { .. } => {}
            FieldProfile::GaussianBump { .. } => {
                let (c, r) = prof.support_radius(SUPPORT_THRESHOLD).expect("bump has support");
                for (d, (a, b)) in window.bounds.iter().enumerate() {
                    if c[d] - r < *a || c[d] + r > *b {
                        return Err(Error::MarginViolation(format!(
                            "initial {name} bump (radius {r:.4}) leaves the window [{a}, {b}] on axis {d}"
                        )));
                    }
                }
            }
            _ => {
                return Err(Error::MarginViolation(format!(
                    "initial {name} must be constant or a Gaussian bump for truncation studies"
                )))
            }
        }
    }
    Ok(())
}

/// Labelled energy ledgers of the runs behind a study.
type Ledgers = Vec<(String, EnergyReport)>;

fn truncation_series(scenario: &Scenario, cfg: &StudyConfig, base: &Grid, window: &ObservationWindow, refine: usize) -> Result<(Vec<(usize, f64)>, Ledgers)> {
    let finals = cfg
        .domain_factors
        .par_iter()
        .map(|&f| {
            let mut sc = scenario.clone();
            sc.grid = scaled_grid(base, f, refine)?;
            let grid = sc.build_grid()?;
            let plan = Arc::new(SpectralPlan::new(grid.clone()));
            let init = sc.build_initial(&grid)?;
            let model = sc.build_model(plan)?;
            let out = run_system(&model, &init, Scheme::BackwardEuler, &mut crate::dynamics::NullSaver)?;
            Ok((out.final_state, out.report))
        })
        .collect::<Result<Vec<(State, EnergyReport)>>>()?;
    let mut diffs = Vec::new();
    for k in 0..finals.len() - 1 {
        let (a, b) = (&finals[k].0, &finals[k + 1].0);
        let d = [
            window.distance_aligned(&a.mu, &b.mu)?,
            window.distance_aligned(&a.phi, &b.phi)?,
            window.distance_aligned(&a.sigma, &b.sigma)?,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        diffs.push((cfg.domain_factors[k], d));
    }
    let ledgers = cfg
        .domain_factors
        .iter()
        .zip(&finals)
        .map(|(f, (_, r))| (format!("domain_x{f}_refine{refine}"), r.clone()))
        .collect();
    Ok((diffs, ledgers))
}

/// Windowed differences at `T` between runs on enlarged copies of the domain.
pub fn study_domain_truncation(scenario: &Scenario, cfg: &StudyConfig) -> Result<TruncationResult> {
    cfg.validate()?;
    scenario.validate()?;
    let base = scenario.grid.build()?;
    let window = cfg.window_for(&base)?;
    check_support(scenario, &window)?;
    let (differences, mut ledgers) = truncation_series(scenario, cfg, &base, &window, 1)?;
    let (refined, more) = if cfg.refine > 1 {
        truncation_series(scenario, cfg, &base, &window, cfg.refine)?
    } else {
        (differences.clone(), Vec::new())
    };
    ledgers.extend(more);
    let d: Vec<f64> = differences.iter().map(|x| x.1).collect();
    let r: Vec<f64> = refined.iter().map(|x| x.1).collect();
    Ok(TruncationResult {
        decreasing: strictly_decreasing(&d),
        refined_decreasing: strictly_decreasing(&r),
        differences,
        refined,
        ledgers,
    })
}

// ---------------------------------------------------------------- contraction

#[derive(Clone, Debug)]
pub struct ContractionResult {
    /// `(δ, Q(T), Q(T)/δ²)` with `Q = ½‖θ̄‖²_{V*} + ½‖σ̄‖²_H`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Relative spread `max/min − 1` of the ratios.
    pub spread: f64,
    /// `(horizon, sup_{t ≤ horizon} Q(t)/Q(0))` for the smallest δ.
    pub gronwall: Vec<(f64, f64)>,
    pub ledgers: Vec<(String, EnergyReport)>,
}

impl ContractionResult {
    pub fn passed(&self) -> bool {
        self.spread <= CONTRACTION_SPREAD_MAX && self.gronwall.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    pub fn report(&self) -> StudyReport {
        let mut t = Table::new(&["delta", "final_q", "ratio"]);
        for (d, q, r) in &self.rows {
            t.push(vec![num(*d), num(*q), num(*r)]);
        }
        let g: Vec<String> = self.gronwall.iter().map(|(h, c)| format!("{h}:{c:.6}")).collect();
        StudyReport {
            name: "study-contraction",
            passed: self.passed(),
            verdict: format!(
                "ratio spread = {:.6} (max {CONTRACTION_SPREAD_MAX}), gronwall constants = [{}]",
                self.spread,
                g.join(", ")
            ),
            summary: t,
            series: vec![
                ("delta_vs_ratio".into(), self.rows.iter().map(|r| (r.0, r.2)).collect()),
                ("horizon_vs_gronwall".into(), self.gronwall.clone()),
            ],
            ledgers: self.ledgers.clone(),
        }
    }
}

/// `½‖αμ̄ + φ̄ + σ̄‖²_{V*} + ½‖σ̄‖²_H` for the difference of two states.
pub fn contraction_quantity(plan: &SpectralPlan, alpha: f64, a: &State, b: &State) -> Result<f64> {
    let theta = a.theta(alpha).sub(&b.theta(alpha));
    let sig = a.sigma.sub(&b.sigma);
    let dn = dual_norm(plan, &theta)?;
    Ok(0.5 * dn * dn + 0.5 * inner_unchecked(&sig, &sig))
}

/// Smooth perturbation normalized so that `‖θ̄‖_{V*} + ‖σ̄‖_H = 1`.
pub fn unit_perturbation(plan: &SpectralPlan, alpha: f64, grid: &Arc<Grid>) -> Result<(Field, Field, Field)> {
    let nd = grid.ndim();
    // Nonzero means keep part of the perturbation in the conserved θ-mass.
    let modes = |k: usize, offset: f64| FieldProfile::Cosine {
        amplitude: 1.0,
        modes: (0..nd).map(|d| if d == 0 { k } else { 0 }).collect(),
        offset,
    };
    let mu = modes(1, 0.2).sample(grid, 0)?;
    let phi = modes(2, 0.5).sample(grid, 0)?;
    let sigma = modes(3, -0.3).sample(grid, 0)?;
    let theta = phi.add(&sigma).axpy(alpha, &mu);
    let n = dual_norm(plan, &theta)? + inner_unchecked(&sigma, &sigma).sqrt();
    Ok((mu.scale(1.0 / n), phi.scale(1.0 / n), sigma.scale(1.0 / n)))
}

/// Final-time difference of runs perturbed by `δ` in the contraction metric.
pub fn study_contraction(scenario: &Scenario, cfg: &StudyConfig) -> Result<ContractionResult> {
    cfg.validate()?;
    let (grid, plan, init) = setup(scenario)?;
    let alpha = scenario.params.alpha;
    let t_max = cfg.horizons.iter().cloned().fold(1.0, f64::max) * scenario.params.t_end;
    let long = scenario.with_params(|p| p.t_end = t_max);
    let (pm, pf, ps) = unit_perturbation(&plan, alpha, &grid)?;
    let mut deltas = vec![0.0];
    deltas.extend(&cfg.deltas);
    let sims = deltas
        .par_iter()
        .map(|&d| {
            let data = InitialData::new(init.mu0.axpy(d, &pm), init.phi0.axpy(d, &pf), init.sigma0.axpy(d, &ps))?
                .with_smoothing(init.smoothing_eps);
            simulate(&plan, &long, &data, 1)
        })
        .collect::<Result<Vec<Simulation>>>()?;
    let base = &sims[0].states;
    let t_end = scenario.params.t_end;
    let mut rows = Vec::new();
    for (&d, s) in cfg.deltas.iter().zip(&sims[1..]) {
        let at_t = s
            .states
            .iter()
            .zip(base)
            .find(|(x, _)| (x.t - t_end).abs() <= 1e-9 * t_end.max(1.0))
            .ok_or_else(|| Error::invalid("t_end", "final time is not a saved step"))?;
        let q = contraction_quantity(&plan, alpha, at_t.0, at_t.1)?;
        rows.push((d, q, q / (d * d)));
    }
    let rmax = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let rmin = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let smallest = cfg
        .deltas
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &d)| if d < acc.1 { (i, d) } else { acc })
        .0;
    let pert = &sims[1 + smallest].states;
    let q: Vec<(f64, f64)> = pert
        .iter()
        .zip(base)
        .map(|(x, y)| Ok((x.t, contraction_quantity(&plan, alpha, x, y)?)))
        .collect::<Result<_>>()?;
    let q0 = q[0].1;
    let mut horizons = cfg.horizons.clone();
    horizons.sort_by(f64::total_cmp);
    let gronwall = horizons
        .iter()
        .map(|&h| {
            let lim = h * t_end * (1.0 + 1e-12);
            (h, q.iter().filter(|(t, _)| *t <= lim).map(|(_, v)| v / q0).fold(0.0, f64::max))
        })
        .collect();
    Ok(ContractionResult {
        spread: rmax / rmin - 1.0,
        rows,
        gronwall,
        ledgers: deltas.iter().zip(&sims).map(|(&d, s)| (label("delta", d), s.report.clone())).collect(),
    })
}

// ---------------------------------------------------------------- estimate monitor

/// Norms bounded uniformly in `β`: `sup α^{1/2}‖μ‖_H`, `‖∇μ‖_{L²(H)}`,
/// `β^{1/2}‖φ_t‖_{L²(H)}`, `sup ‖φ‖_V`, `sup ‖σ‖_H`, `‖∇σ‖_{L²(H)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateBundle {
    pub beta: f64,
    pub values: [f64; 6],
    pub total: f64,
}

pub fn estimate_bundle(alpha: f64, beta: f64, states: &[State]) -> EstimateBundle {
    let mut v = [0.0f64; 6];
    let t: Vec<f64> = states.iter().map(|s| s.t).collect();
    let gmu: Vec<f64> = states.iter().map(|s| grad_norm_sq(&s.mu)).collect();
    let gsig: Vec<f64> = states.iter().map(|s| grad_norm_sq(&s.sigma)).collect();
    let mut phit = 0.0;
    for w in states.windows(2) {
        let d = w[1].phi.sub(&w[0].phi);
        phit += inner_unchecked(&d, &d) / (w[1].t - w[0].t);
    }
    for s in states {
        v[0] = v[0].max((alpha * inner_unchecked(&s.mu, &s.mu)).sqrt());
        v[3] = v[3].max((inner_unchecked(&s.phi, &s.phi) + grad_norm_sq(&s.phi)).sqrt());
        v[4] = v[4].max(inner_unchecked(&s.sigma, &s.sigma).sqrt());
    }
    v[1] = trapezoid(&t, &gmu).sqrt();
    v[2] = (beta * phit).sqrt();
    v[5] = trapezoid(&t, &gsig).sqrt();
    EstimateBundle {
        beta,
        values: v,
        total: v.iter().sum(),
    }
}

/// Estimate bundles for each `β` in `cfg.monitor_betas` and their relative spread
/// `max/min − 1` of the totals.
pub fn estimate_monitor(scenario: &Scenario, cfg: &StudyConfig) -> Result<(Vec<EstimateBundle>, f64)> {
    cfg.validate()?;
    let (_, plan, init) = setup(scenario)?;
    let bundles = cfg
        .monitor_betas
        .par_iter()
        .map(|&b| {
            let s = simulate(&plan, &scenario.with_params(|p| p.beta = b), &init, 1)?;
            Ok(estimate_bundle(scenario.params.alpha, b, &s.states))
        })
        .collect::<Result<Vec<_>>>()?;
    let hi = bundles.iter().map(|b| b.total).fold(0.0, f64::max);
    let lo = bundles.iter().map(|b| b.total).fold(f64::INFINITY, f64::min);
    Ok((bundles, hi / lo - 1.0))
}
