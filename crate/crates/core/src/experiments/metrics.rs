use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::grid::{grad_norm_sq, inner_unchecked, Field, Grid};
use crate::operators::dual_norm;
use crate::spectral::SpectralPlan;

/// Distances between two trajectories sampled on the same saved steps.
///
/// `L²` time norms use the trapezoidal rule over saved times, `L∞` the max
/// over saved times.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorBundle {
    /// `‖μ₁ − μ₂‖_{L²(H)}`
    pub e_mu: f64,
    /// `‖φ₁ − φ₂‖_{L²(V)}`
    pub e_phi: f64,
    /// `‖σ₁ − σ₂‖_{L∞(H)}`
    pub e_sigma_inf: f64,
    /// `‖σ₁ − σ₂‖_{L²(V)}`
    pub e_sigma_l2v: f64,
    /// `‖θ₁ − θ₂‖_{L∞(V*)}`, `θ = αμ + φ + σ`
    pub e_theta: f64,
    pub total: f64,
}

impl ErrorBundle {
    pub const HEADER: &'static str = "e_mu,e_phi,e_sigma_inf,e_sigma_l2v,e_theta,total";

    pub fn csv(&self) -> String {
        format!(
            "{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
            self.e_mu, self.e_phi, self.e_sigma_inf, self.e_sigma_l2v, self.e_theta, self.total
        )
    }

    pub fn compute(plan: &SpectralPlan, alpha: f64, a: &[State], b: &[State]) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::invalid("trajectory", "trajectories need the same nonzero number of saved steps"));
        }
        let mut mu_sq = Vec::with_capacity(a.len());
        let mut phi_sq = Vec::with_capacity(a.len());
        let mut sig_v_sq = Vec::with_capacity(a.len());
        let mut times = Vec::with_capacity(a.len());
        let (mut sig_inf, mut theta_inf) = (0.0f64, 0.0f64);
        for (x, y) in a.iter().zip(b) {
            if (x.t - y.t).abs() > 1e-12 * (1.0 + x.t.abs()) {
                return Err(Error::invalid("trajectory", format!("saved times differ: {} vs {}", x.t, y.t)));
            }
            x.phi.check_grid(&y.phi)?;
            let dmu = x.mu.sub(&y.mu);
            let dphi = x.phi.sub(&y.phi);
            let dsig = x.sigma.sub(&y.sigma);
            let sig_h = inner_unchecked(&dsig, &dsig);
            mu_sq.push(inner_unchecked(&dmu, &dmu));
            phi_sq.push(inner_unchecked(&dphi, &dphi) + grad_norm_sq(&dphi));
            sig_v_sq.push(sig_h + grad_norm_sq(&dsig));
            sig_inf = sig_inf.max(sig_h.sqrt());
            theta_inf = theta_inf.max(dual_norm(plan, &x.theta(alpha).sub(&y.theta(alpha)))?);
            times.push(x.t);
        }
        let e_mu = trapezoid(&times, &mu_sq).sqrt();
        let e_phi = trapezoid(&times, &phi_sq).sqrt();
        let e_sigma_l2v = trapezoid(&times, &sig_v_sq).sqrt();
        Ok(ErrorBundle {
            e_mu,
            e_phi,
            e_sigma_inf: sig_inf,
            e_sigma_l2v,
            e_theta: theta_inf,
            total: e_mu + e_phi + sig_inf + e_sigma_l2v + theta_inf,
        })
    }
}

pub fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tw, fw)| 0.5 * (tw[1] - tw[0]) * (fw[0] + fw[1]))
        .sum()
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
}

impl RateFit {
    pub fn fit(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::DegenerateFit(format!("need at least 2 points, got {}", points.len())));
        }
        if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
            return Err(Error::DegenerateFit(format!("nonpositive or non-finite point {p:?}")));
        }
        let n = points.len() as f64;
        let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
        let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::DegenerateFit("all abscissae coincide".into()));
        }
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        Ok(RateFit {
            points: points.to_vec(),
            slope,
            intercept: (my - slope * mx).exp(),
        })
    }

    /// Decades spanned by the abscissae.
    pub fn decades(&self) -> f64 {
        let (lo, hi) = self
            .points
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
        (hi / lo).log10()
    }
}

/// Axis-aligned sub-box `[lo_d, hi_d]` used for windowed comparisons.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationWindow {
    pub bounds: Vec<(f64, f64)>,
}

/// Minimal margin between a window and the domain boundary, per side, as a
/// fraction of the domain length.
pub const WINDOW_MARGIN: f64 = 0.1;

impl ObservationWindow {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.iter().any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(Error::invalid("window", "bounds must be finite with lo < hi"));
        }
        Ok(ObservationWindow { bounds })
    }

    /// The box leaving exactly `margin·L` on every side.
    pub fn inset(grid: &Grid, margin: f64) -> Result<Self> {
        let l = grid.lengths();
        ObservationWindow::new(
            (0..grid.ndim())
                .map(|d| (grid.origin()[d] + margin * l[d], grid.origin()[d] + (1.0 - margin) * l[d]))
                .collect(),
        )
    }

    /// Errors unless the window keeps a margin of at least 10% on every side.
    pub fn check_inside(&self, grid: &Grid) -> Result<()> {
        if self.bounds.len() != grid.ndim() {
            return Err(Error::invalid("window", "axis count mismatch"));
        }
        let l = grid.lengths();
        for d in 0..grid.ndim() {
            let (a, b) = self.bounds[d];
            let lo = grid.origin()[d];
            let hi = lo + l[d];
            let m = WINDOW_MARGIN * l[d] * (1.0 - 1e-12);
            if a - lo < m || hi - b < m {
                return Err(Error::MarginViolation(format!(
                    "window [{a}, {b}] on axis {d} leaves less than 10% of [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        let tol = 1e-12;
        self.bounds.iter().enumerate().all(|(d, (a, b))| x[d] >= a - tol && x[d] <= b + tol)
    }

    /// `(Σ_{x_i ∈ window} w_i f_i²)^{1/2}`.
    pub fn norm_h(&self, f: &Field) -> f64 {
        let g = f.grid();
        f.values()
            .iter()
            .zip(g.weights())
            .enumerate()
            .filter(|(k, _)| self.contains(&g.coords(*k)))
            .map(|(_, (v, w))| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Windowed `H` distance of fields on different grids with the same spacing
    /// and node-aligned origins.
    pub fn distance_aligned(&self, a: &Field, b: &Field) -> Result<f64> {
        let (ga, gb) = (a.grid(), b.grid());
        if ga.ndim() != gb.ndim() || ga.spacing().iter().zip(gb.spacing()).any(|(x, y)| (x - y).abs() > 1e-12 * x) {
            return Err(Error::GridMismatch);
        }
        let sb = gb.strides();
        let mut acc = 0.0;
        for k in 0..ga.len() {
            let x = ga.coords(k);
            if !self.contains(&x) {
                continue;
            }
            let mut flat = 0usize;
            for d in 0..ga.ndim() {
                let pos = (x[d] - gb.origin()[d]) / gb.spacing()[d];
                let i = pos.round();
                if (pos - i).abs() > 1e-6 || i < 0.0 || i as usize >= gb.dims()[d] {
                    return Err(Error::GridMismatch);
                }
                flat += i as usize * sb[d];
            }
            let w: f64 = (0..ga.ndim()).map(|d| ga.spacing()[d]).product();
            let diff = a.values()[k] - b.values()[flat];
            acc += w * diff * diff;
        }
        Ok(acc.sqrt())
    }
}
