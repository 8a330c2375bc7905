//! Resolvents, Yosida approximations and fractional powers of the Neumann
//! Laplacian, all realized as exact spectral multipliers on the discrete
//! operator, together with the Riesz map `F = I − Δ_h` and the dual norm
//! `‖f‖_{V*} = ⟨f, J₁f⟩^{1/2}`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, inner_unchecked, laplacian_unchecked, norm_h, norm_v, Field, Grid};
use crate::spectral::SpectralPlan;

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be positive, got {v}")))
    }
}

fn check_finite(f: &Field) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("operator input"))
    }
}

/// `J_λ = (I − λΔ)^{-1}` bound to a plan.
#[derive(Clone, Debug)]
pub struct ResolventOp {
    plan: Arc<SpectralPlan>,
    lambda: f64,
}

impl ResolventOp {
    pub fn new(plan: Arc<SpectralPlan>, lambda: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        Ok(ResolventOp { plan, lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn multiplier(&self, kappa: f64) -> f64 {
        1.0 / (1.0 + self.lambda * kappa)
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        check_finite(f)?;
        let l = self.lambda;
        self.plan.apply_symbol(f, |k| 1.0 / (1.0 + l * k))
    }
}

pub fn resolvent(plan: &SpectralPlan, lambda: f64, f: &Field) -> Result<Field> {
    check_positive("lambda", lambda)?;
    check_finite(f)?;
    plan.apply_symbol(f, |k| 1.0 / (1.0 + lambda * k))
}

/// `(−Δ)_λ f = (f − J_λ f)/λ`, symbol `κ/(1+λκ)`.
pub fn yosida_laplacian(plan: &SpectralPlan, lambda: f64, f: &Field) -> Result<Field> {
    check_positive("lambda", lambda)?;
    check_finite(f)?;
    plan.apply_symbol(f, |k| k / (1.0 + lambda * k))
}

/// `(I − εΔ)^{-1/2} f`.
pub fn sqrt_resolvent(plan: &SpectralPlan, eps: f64, f: &Field) -> Result<Field> {
    check_positive("eps", eps)?;
    check_finite(f)?;
    plan.apply_symbol(f, |k| 1.0 / (1.0 + eps * k).sqrt())
}

/// `((−Δ)_λ)^{1/2} f`.
pub fn sqrt_yosida_laplacian(plan: &SpectralPlan, lambda: f64, f: &Field) -> Result<Field> {
    check_positive("lambda", lambda)?;
    check_finite(f)?;
    plan.apply_symbol(f, |k| (k / (1.0 + lambda * k)).sqrt())
}

/// `F f = (I − Δ_h) f`, the discrete Riesz map `V → V*` restricted to `H`.
pub fn riesz_apply(f: &Field) -> Result<Field> {
    check_finite(f)?;
    Ok(f.sub(&laplacian_unchecked(f)))
}

/// `F^{-1} = J₁`.
pub fn riesz_invert(plan: &SpectralPlan, f: &Field) -> Result<Field> {
    resolvent(plan, 1.0, f)
}

/// Dual-norm evaluator bound to a plan.
#[derive(Clone, Debug)]
pub struct DualNormContext {
    plan: Arc<SpectralPlan>,
}

impl DualNormContext {
    pub fn new(plan: Arc<SpectralPlan>) -> Self {
        DualNormContext { plan }
    }

    pub fn plan(&self) -> &Arc<SpectralPlan> {
        &self.plan
    }

    pub fn norm(&self, f: &Field) -> Result<f64> {
        dual_norm(&self.plan, f)
    }
}

/// `‖f‖_{V*} = ⟨f, J₁ f⟩_H^{1/2}`.
pub fn dual_norm(plan: &SpectralPlan, f: &Field) -> Result<f64> {
    let j = riesz_invert(plan, f)?;
    let sq = inner_unchecked(f, &j);
    if sq < -1e-14 {
        return Err(Error::NegativeRadicand(sq));
    }
    Ok(sq.max(0.0).sqrt())
}

/// Outcome of one randomized identity check.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityCheck {
    pub name: String,
    pub trials: usize,
    /// Largest relative violation over all trials (0 when an inequality holds).
    pub max_violation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub dims: Vec<usize>,
    pub tol: f64,
    pub checks: Vec<IdentityCheck>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn max_violation(&self) -> f64 {
        self.checks.iter().map(|c| c.max_violation).fold(0.0, f64::max)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "grid = {:?}", self.dims)?;
        writeln!(f, "tol = {:e}", self.tol)?;
        writeln!(f, "identity,trials,max_violation,status")?;
        for c in &self.checks {
            writeln!(
                f,
                "{},{},{:e},{}",
                c.name,
                c.trials,
                c.max_violation,
                if c.passed { "pass" } else { "fail" }
            )?;
        }
        Ok(())
    }
}

/// Randomized check of the resolvent identities behind the dual-norm calculus:
///
/// * `‖J₁^{1/2} v‖_H ≤ ‖v‖_H`
/// * `‖J₁^{1/2} v‖_V = ‖v‖_H`
/// * `‖J₁^{1/2} v‖_H = ‖v‖_{V*}`
/// * `‖(−Δ)_λ^{1/2} v‖_H ≤ ‖v‖_V` for each `λ` in `lambdas`
///
/// Violations are measured relative to the right-hand side. A check passes when
/// its maximal violation does not exceed `tol`.
pub fn verify_resolvent_identities(grid: Arc<Grid>, n_trials: usize, tol: f64, lambdas: &[f64], seed: u64) -> Result<VerificationReport> {
    if n_trials < 10 {
        return Err(Error::invalid("n_trials", "need at least 10 trials"));
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("tol", "must be nonnegative"));
    }
    for &l in lambdas {
        check_positive("lambda", l)?;
    }
    let plan = SpectralPlan::new(grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut contraction = 0.0f64;
    let mut isometry = 0.0f64;
    let mut dual = 0.0f64;
    let mut yosida = vec![0.0f64; lambdas.len()];
    for _ in 0..n_trials {
        let v = Field::from_raw(grid.clone(), (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let vh = norm_h(&v);
        let vv = norm_v(&v);
        let half = sqrt_resolvent(&plan, 1.0, &v)?;
        let half_h = norm_h(&half);
        contraction = contraction.max(((half_h - vh) / vh).max(0.0));
        isometry = isometry.max(((grad_norm_sq(&half) + half_h * half_h).sqrt() - vh).abs() / vh);
        let dn = dual_norm(&plan, &v)?;
        dual = dual.max((half_h - dn).abs() / dn);
        for (viol, &l) in yosida.iter_mut().zip(lambdas) {
            let y = norm_h(&sqrt_yosida_laplacian(&plan, l, &v)?);
            *viol = viol.max(((y - vv) / vv).max(0.0));
        }
    }
    let mut checks = vec![
        IdentityCheck {
            name: "tool2_contraction".into(),
            trials: n_trials,
            max_violation: contraction,
            passed: contraction <= tol,
        },
        IdentityCheck {
            name: "tool3_isometry".into(),
            trials: n_trials,
            max_violation: isometry,
            passed: isometry <= tol,
        },
        IdentityCheck {
            name: "toolplus_dual_norm".into(),
            trials: n_trials,
            max_violation: dual,
            passed: dual <= tol,
        },
    ];
    for (viol, &l) in yosida.iter().zip(lambdas) {
        checks.push(IdentityCheck {
            name: format!("tool4_yosida(lambda={l})"),
            trials: n_trials,
            max_violation: *viol,
            passed: *viol <= tol,
        });
    }
    Ok(VerificationReport {
        dims: grid.dims().to_vec(),
        tol,
        checks,
    })
}
