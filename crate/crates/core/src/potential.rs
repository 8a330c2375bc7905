//! Scalar convex analysis for the phase nonlinearity.
//!
//! The potential splits as `G = B̂ + π̂` with `B̂` convex (graph `B = ∂B̂`,
//! possibly steep or multivalued) and `π = π̂'` Lipschitz. Everything the
//! solvers need from `B` goes through its resolvent `J_ε = (I + εB)^{-1}`,
//! which is total because `s ↦ s + εB(s)` is strictly increasing.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

const RESOLVENT_MAX_ITER: usize = 200;

/// Value of the (possibly multivalued) graph `B` at a point: the closed
/// interval `[lo, hi]`. Single-valued points have `lo == hi`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphValue {
    pub lo: f64,
    pub hi: f64,
}

impl GraphValue {
    pub fn single(v: f64) -> Self {
        GraphValue { lo: v, hi: v }
    }

    pub fn is_single(&self) -> bool {
        self.lo == self.hi
    }

    /// Distance from `v` to the interval.
    pub fn distance(&self, v: f64) -> f64 {
        if v < self.lo {
            self.lo - v
        } else if v > self.hi {
            v - self.hi
        } else {
            0.0
        }
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.distance(v) <= tol
    }
}

/// `G(r) = C_G (r⁴ − 2r²)`, split as `B̂ = C_G r⁴`, `π̂ = −2 C_G r²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuarticSpec")]
pub struct QuarticExample {
    pub c_g: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuarticSpec {
    c_g: f64,
}

impl TryFrom<QuarticSpec> for QuarticExample {
    type Error = Error;
    fn try_from(s: QuarticSpec) -> Result<Self> {
        QuarticExample::new(s.c_g)
    }
}

impl QuarticExample {
    pub fn new(c_g: f64) -> Result<Self> {
        if !(c_g.is_finite() && c_g > 0.0) {
            return Err(Error::invalid("c_g", format!("must be positive, got {c_g}")));
        }
        Ok(QuarticExample { c_g })
    }

    /// `C_G ∈ (0, 1/4)`, the range in which the split satisfies all standing conditions.
    pub fn is_admissible(&self) -> bool {
        self.c_g > 0.0 && self.c_g < 0.25
    }

    pub fn g(&self, r: f64) -> f64 {
        self.c_g * (r.powi(4) - 2.0 * r * r)
    }
}

/// Piecewise-linear monotone graph given by knots, plus a linear perturbation
/// `π(r) = −pi_slope · r`.
///
/// Knots are `(r, b)` pairs sorted by `r` with `b` nondecreasing. Repeating an
/// abscissa produces a vertical segment (a corner of `B̂`). Outside the knot
/// range the first/last segment is extended linearly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableSpec", into = "TableSpec")]
pub struct TablePotential {
    knots: Vec<(f64, f64)>,
    breaks: Vec<f64>,
    left: Vec<f64>,
    right: Vec<f64>,
    cumulative: Vec<f64>,
    offset: f64,
    pub pi_slope: f64,
}

/// Serialized form: the knots as given.
#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableSpec {
    knots: Vec<(f64, f64)>,
    #[serde(default)]
    pi_slope: f64,
}

impl TryFrom<TableSpec> for TablePotential {
    type Error = Error;
    fn try_from(s: TableSpec) -> Result<Self> {
        TablePotential::new(&s.knots, s.pi_slope)
    }
}

impl From<TablePotential> for TableSpec {
    fn from(t: TablePotential) -> Self {
        TableSpec { knots: t.knots, pi_slope: t.pi_slope }
    }
}

impl TablePotential {
    pub fn new(knots: &[(f64, f64)], pi_slope: f64) -> Result<Self> {
        if knots.iter().any(|(r, b)| !r.is_finite() || !b.is_finite()) || !pi_slope.is_finite() {
            return Err(Error::NonFinite("potential table"));
        }
        let mut breaks: Vec<f64> = Vec::new();
        let mut left: Vec<f64> = Vec::new();
        let mut right: Vec<f64> = Vec::new();
        let mut prev_b = f64::NEG_INFINITY;
        for &(r, b) in knots {
            if b < prev_b {
                return Err(Error::invalid("table", "graph values must be nondecreasing"));
            }
            prev_b = b;
            match breaks.last() {
                Some(&last) if r < last => {
                    return Err(Error::invalid("table", "abscissae must be sorted"));
                }
                Some(&last) if r == last => {
                    *right.last_mut().unwrap() = b;
                }
                _ => {
                    breaks.push(r);
                    left.push(b);
                    right.push(b);
                }
            }
        }
        if breaks.len() < 2 {
            return Err(Error::invalid("table", "need at least two distinct abscissae"));
        }
        let mut cumulative = vec![0.0; breaks.len()];
        for i in 1..breaks.len() {
            let w = breaks[i] - breaks[i - 1];
            cumulative[i] = cumulative[i - 1] + 0.5 * w * (right[i - 1] + left[i]);
        }
        let mut table = TablePotential {
            knots: knots.to_vec(),
            breaks,
            left,
            right,
            cumulative,
            offset: 0.0,
            pi_slope,
        };
        table.offset = table.antiderivative(0.0);
        Ok(table)
    }

    fn slope_left(&self) -> f64 {
        (self.left[1] - self.right[0]) / (self.breaks[1] - self.breaks[0])
    }

    fn slope_right(&self) -> f64 {
        let m = self.breaks.len() - 1;
        (self.left[m] - self.right[m - 1]) / (self.breaks[m] - self.breaks[m - 1])
    }

    fn locate(&self, r: f64) -> std::result::Result<usize, usize> {
        self.breaks.binary_search_by(|x| x.partial_cmp(&r).unwrap())
    }

    fn eval(&self, r: f64) -> GraphValue {
        let m = self.breaks.len() - 1;
        if r < self.breaks[0] {
            return GraphValue::single(self.left[0] + self.slope_left() * (r - self.breaks[0]));
        }
        if r > self.breaks[m] {
            return GraphValue::single(self.right[m] + self.slope_right() * (r - self.breaks[m]));
        }
        match self.locate(r) {
            Ok(i) => GraphValue {
                lo: self.left[i],
                hi: self.right[i],
            },
            Err(i) => {
                let (x0, x1) = (self.breaks[i - 1], self.breaks[i]);
                let t = (r - x0) / (x1 - x0);
                GraphValue::single(self.right[i - 1] + t * (self.left[i] - self.right[i - 1]))
            }
        }
    }

    fn slope(&self, r: f64) -> f64 {
        let m = self.breaks.len() - 1;
        if r < self.breaks[0] {
            return self.slope_left();
        }
        if r >= self.breaks[m] {
            return self.slope_right();
        }
        let i = match self.locate(r) {
            Ok(i) => i + 1,
            Err(i) => i,
        };
        (self.left[i] - self.right[i - 1]) / (self.breaks[i] - self.breaks[i - 1])
    }

    /// `∫_{x₀}^{r} B`, with `x₀` the first break.
    fn antiderivative(&self, r: f64) -> f64 {
        let m = self.breaks.len() - 1;
        if r <= self.breaks[0] {
            let d = r - self.breaks[0];
            return self.left[0] * d + 0.5 * self.slope_left() * d * d;
        }
        if r >= self.breaks[m] {
            let d = r - self.breaks[m];
            return self.cumulative[m] + self.right[m] * d + 0.5 * self.slope_right() * d * d;
        }
        let i = match self.locate(r) {
            Ok(i) => return self.cumulative[i],
            Err(i) => i - 1,
        };
        let d = r - self.breaks[i];
        let v = self.eval(r).lo;
        self.cumulative[i] + 0.5 * d * (self.right[i] + v)
    }

    fn bhat(&self, r: f64) -> f64 {
        self.antiderivative(r) - self.offset
    }

    fn corners(&self) -> impl Iterator<Item = (f64, GraphValue)> + '_ {
        (0..self.breaks.len())
            .filter(|&i| self.left[i] < self.right[i])
            .map(|i| {
                (
                    self.breaks[i],
                    GraphValue {
                        lo: self.left[i],
                        hi: self.right[i],
                    },
                )
            })
    }
}

/// The convex/Lipschitz split of the phase potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialSpec {
    Quartic(QuarticExample),
    /// `B̂ = ¼((r²−1)⁺)²`, `π̂ = ¼((1−r²)⁺)²`: the classical double well.
    ClassicalSplit,
    CustomTable(TablePotential),
}

impl fmt::Display for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialSpec::Quartic(q) => write!(f, "quartic(c_g={})", q.c_g),
            PotentialSpec::ClassicalSplit => write!(f, "classical-split"),
            PotentialSpec::CustomTable(t) => {
                write!(f, "custom-table({} breaks, pi_slope={})", t.breaks.len(), t.pi_slope)
            }
        }
    }
}

impl PotentialSpec {
    pub fn quartic(c_g: f64) -> Result<Self> {
        Ok(PotentialSpec::Quartic(QuarticExample::new(c_g)?))
    }

    pub fn bhat(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Quartic(q) => q.c_g * r.powi(4),
            PotentialSpec::ClassicalSplit => {
                let t = (r * r - 1.0).max(0.0);
                0.25 * t * t
            }
            PotentialSpec::CustomTable(t) => t.bhat(r),
        }
    }

    pub fn graph(&self, r: f64) -> GraphValue {
        match self {
            PotentialSpec::Quartic(q) => GraphValue::single(4.0 * q.c_g * r.powi(3)),
            PotentialSpec::ClassicalSplit => GraphValue::single(r * (r * r - 1.0).max(0.0)),
            PotentialSpec::CustomTable(t) => t.eval(r),
        }
    }

    /// Single-valued selection of `B`: the midpoint of the graph interval.
    pub fn selection(&self, r: f64) -> f64 {
        let g = self.graph(r);
        0.5 * (g.lo + g.hi)
    }

    /// Derivative of the selection away from corners (one-sided at kinks).
    fn graph_slope(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Quartic(q) => 12.0 * q.c_g * r * r,
            PotentialSpec::ClassicalSplit => {
                if r.abs() > 1.0 {
                    3.0 * r * r - 1.0
                } else {
                    0.0
                }
            }
            PotentialSpec::CustomTable(t) => t.slope(r),
        }
    }

    pub fn pi(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Quartic(q) => -4.0 * q.c_g * r,
            PotentialSpec::ClassicalSplit => -r * (1.0 - r * r).max(0.0),
            PotentialSpec::CustomTable(t) => -t.pi_slope * r,
        }
    }

    pub fn pihat(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Quartic(q) => -2.0 * q.c_g * r * r,
            PotentialSpec::ClassicalSplit => {
                let t = (1.0 - r * r).max(0.0);
                0.25 * t * t
            }
            PotentialSpec::CustomTable(t) => -0.5 * t.pi_slope * r * r,
        }
    }

    /// Declared bound on `‖π'‖_∞`.
    pub fn pi_lip(&self) -> f64 {
        match self {
            PotentialSpec::Quartic(q) => 4.0 * q.c_g,
            PotentialSpec::ClassicalSplit => 2.0,
            PotentialSpec::CustomTable(t) => t.pi_slope.abs(),
        }
    }

    pub fn g(&self, r: f64) -> f64 {
        self.bhat(r) + self.pihat(r)
    }

    fn corner_solution(&self, eps: f64, r: f64) -> Option<f64> {
        match self {
            PotentialSpec::CustomTable(t) => t
                .corners()
                .find(|(x, g)| r >= x + eps * g.lo && r <= x + eps * g.hi)
                .map(|(x, _)| x),
            _ => None,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::invalid("eps", format!("must be positive, got {eps}")));
    }
    Ok(())
}

/// `J_ε^B(r)`: the unique `s` with `s + εB(s) ∋ r`.
///
/// Safeguarded Newton on a geometrically grown bracket, falling back to
/// bisection whenever the Newton iterate leaves the bracket or stalls.
pub fn resolvent_scalar(pot: &PotentialSpec, eps: f64, r: f64) -> Result<f64> {
    check_eps(eps)?;
    if !r.is_finite() {
        return Err(Error::NonFinite("resolvent argument"));
    }
    if let Some(s) = pot.corner_solution(eps, r) {
        return Ok(s);
    }
    let h = |s: f64| s + eps * pot.selection(s) - r;
    let scale = r.abs().max(1.0);
    let tol = 1e-15 * scale;

    let mut s = r;
    let mut hs = h(s);
    if hs == 0.0 {
        return Ok(s);
    }
    // Grow a bracket [lo, hi] with h(lo) < 0 < h(hi).
    let (mut lo, mut hi) = (r, r);
    let mut width = scale;
    if hs > 0.0 {
        loop {
            lo = r - width;
            if h(lo) < 0.0 {
                break;
            }
            hi = lo;
            width *= 2.0;
            if !width.is_finite() {
                return Err(Error::ResolventNotConverged { r, eps, iterations: 0 });
            }
        }
    } else {
        loop {
            hi = r + width;
            if h(hi) > 0.0 {
                break;
            }
            lo = hi;
            width *= 2.0;
            if !width.is_finite() {
                return Err(Error::ResolventNotConverged { r, eps, iterations: 0 });
            }
        }
    }
    // Start from the bracket end nearest the root estimate.
    s = s.clamp(lo, hi);
    hs = h(s);
    for _ in 0..RESOLVENT_MAX_ITER {
        if hs.abs() <= tol {
            return Ok(s);
        }
        if hs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            return Ok(if h(lo).abs() < h(hi).abs() { lo } else { hi });
        }
        let deriv = 1.0 + eps * pot.graph_slope(s);
        let newton = s - hs / deriv;
        let candidate = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let hc = h(candidate);
        // Require a decrease by half, otherwise bisect.
        if hc.abs() > 0.5 * hs.abs() && candidate == newton {
            let mid = 0.5 * (lo + hi);
            let hm = h(mid);
            s = mid;
            hs = hm;
        } else {
            s = candidate;
            hs = hc;
        }
    }
    if hs.abs() <= 1e-12 * scale {
        return Ok(s);
    }
    Err(Error::ResolventNotConverged {
        r,
        eps,
        iterations: RESOLVENT_MAX_ITER,
    })
}

/// Residual of the resolvent inclusion: distance from `r` to `s + εB(s)`.
pub fn resolvent_residual(pot: &PotentialSpec, eps: f64, r: f64, s: f64) -> f64 {
    let g = pot.graph(s);
    GraphValue {
        lo: s + eps * g.lo,
        hi: s + eps * g.hi,
    }
    .distance(r)
}

/// Yosida approximation `B_ε(r) = (r − J_ε^B(r)) / ε`.
pub fn yosida_scalar(pot: &PotentialSpec, eps: f64, r: f64) -> Result<f64> {
    let s = resolvent_scalar(pot, eps, r)?;
    Ok((r - s) / eps)
}

/// Moreau envelope `B̂_ε(r) = |r − J_ε(r)|²/(2ε) + B̂(J_ε(r))`.
pub fn moreau_envelope(pot: &PotentialSpec, eps: f64, r: f64) -> Result<f64> {
    let s = resolvent_scalar(pot, eps, r)?;
    Ok((r - s) * (r - s) / (2.0 * eps) + pot.bhat(s))
}

/// `G_ε'(r) = B_ε(r) + π(r)`.
pub fn g_eps_prime(pot: &PotentialSpec, eps: f64, r: f64) -> Result<f64> {
    Ok(yosida_scalar(pot, eps, r)? + pot.pi(r))
}

/// `G_ε(r) = B̂_ε(r) + π̂(r)`.
pub fn g_eps(pot: &PotentialSpec, eps: f64, r: f64) -> Result<f64> {
    Ok(moreau_envelope(pot, eps, r)? + pot.pihat(r))
}

/// Lower bound `−(L/2) r² − 2Lε r²` on `G_ε`, with `L = ‖π'‖_∞`.
pub fn g_eps_lower_bound(pot: &PotentialSpec, eps: f64, r: f64) -> f64 {
    let l = pot.pi_lip();
    -0.5 * l * r * r - 2.0 * l * eps * r * r
}

/// Heuristic flag for regularization parameters too large for the energy
/// coercivity argument: `ε ≥ (1 − L) / (8L)`.
pub fn epsilon_warning(pot: &PotentialSpec, eps: f64) -> bool {
    let l = pot.pi_lip();
    l > 0.0 && eps >= (1.0 - l) / (8.0 * l)
}

/// `B̂_ε` bundled with its base potential.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizedPotential {
    pub base: PotentialSpec,
    pub epsilon: f64,
}

impl RegularizedPotential {
    pub fn new(base: PotentialSpec, epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        Ok(RegularizedPotential { base, epsilon })
    }

    pub fn bhat(&self, r: f64) -> Result<f64> {
        moreau_envelope(&self.base, self.epsilon, r)
    }

    pub fn b(&self, r: f64) -> Result<f64> {
        yosida_scalar(&self.base, self.epsilon, r)
    }

    /// Resolvent of the Yosida approximation itself:
    /// `(I + τB_ε)^{-1} = ε/(ε+τ) I + τ/(ε+τ) J_{ε+τ}^B`.
    pub fn resolvent(&self, tau: f64, r: f64) -> Result<f64> {
        let e = self.epsilon;
        let s = resolvent_scalar(&self.base, e + tau, r)?;
        Ok((e * r + tau * s) / (e + tau))
    }
}

/// One sampled condition check.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    /// Condition label: `C1`, `C2` or `C4`.
    pub condition: &'static str,
    pub key: &'static str,
    pub passed: bool,
    /// Sample point at which the check failed.
    pub witness: Option<f64>,
    /// Measured quantity (violation size or estimated constant).
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub potential: String,
    pub range: (f64, f64),
    pub n_samples: usize,
    /// Declared `‖π'‖_∞`.
    pub pi_prime_sup: f64,
    /// Largest secant slope of `π` between consecutive samples.
    pub pi_lip_empirical: f64,
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Condition labels with at least one failing check, in order.
    pub fn failed_conditions(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for c in self.checks.iter().filter(|c| !c.passed) {
            if !out.contains(&c.condition) {
                out.push(c.condition);
            }
        }
        out
    }

    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("potential = {}\n", self.potential));
        s.push_str(&format!("range = [{}, {}]\n", self.range.0, self.range.1));
        s.push_str(&format!("n_samples = {}\n", self.n_samples));
        s.push_str(&format!("pi_prime_sup = {}\n", self.pi_prime_sup));
        s.push_str(&format!("pi_lip_empirical = {}\n", self.pi_lip_empirical));
        for c in &self.checks {
            let status = if c.passed { "pass" } else { "fail" };
            match c.witness {
                Some(w) => s.push_str(&format!(
                    "{}.{} = {} value={:e} witness={}\n",
                    c.condition, c.key, status, c.value, w
                )),
                None => s.push_str(&format!("{}.{} = {} value={:e}\n", c.condition, c.key, status, c.value)),
            }
        }
        s.push_str(&format!("all_pass = {}\n", self.all_pass()));
        s.push_str(&format!("failed = {}\n", self.failed_conditions().join(",")));
        s
    }
}

/// Sampling-based check of the standing assumptions on the potential split.
pub fn check_conditions(pot: &PotentialSpec, range: (f64, f64), n_samples: usize) -> Result<ConditionReport> {
    let (a, b) = range;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::invalid("sample_range", format!("degenerate range [{a}, {b}]")));
    }
    if n_samples < 100 {
        return Err(Error::invalid("n_samples", "need at least 100 samples"));
    }
    let mut samples: Vec<f64> = (0..n_samples)
        .map(|i| a + (b - a) * i as f64 / (n_samples - 1) as f64)
        .collect();
    if a < 0.0 && b > 0.0 && !samples.contains(&0.0) {
        samples.push(0.0);
        samples.sort_by(|x, y| x.partial_cmp(y).unwrap());
    }
    let tol = 1e-12;
    let l = pot.pi_lip();
    let mut checks = Vec::new();

    let bhat0 = pot.bhat(0.0);
    checks.push(ConditionCheck {
        condition: "C1",
        key: "bhat_zero",
        passed: bhat0.abs() <= tol,
        witness: (bhat0.abs() > tol).then_some(0.0),
        value: bhat0.abs(),
    });

    let worst_neg = samples
        .iter()
        .map(|&r| (r, pot.bhat(r)))
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
        .unwrap();
    checks.push(ConditionCheck {
        condition: "C1",
        key: "bhat_nonneg",
        passed: worst_neg.1 >= -tol,
        witness: (worst_neg.1 < -tol).then_some(worst_neg.0),
        value: (-worst_neg.1).max(0.0),
    });

    let mut mono_violation = 0.0;
    let mut mono_witness = None;
    for w in samples.windows(2) {
        let (ga, gb) = (pot.graph(w[0]), pot.graph(w[1]));
        let v = ga.hi - gb.lo;
        if v > mono_violation {
            mono_violation = v;
            mono_witness = Some(w[0]);
        }
    }
    let mono_ok = mono_violation <= tol;
    checks.push(ConditionCheck {
        condition: "C1",
        key: "monotone",
        passed: mono_ok,
        witness: if mono_ok { None } else { mono_witness },
        value: mono_violation,
    });

    let pi0 = pot.pi(0.0);
    checks.push(ConditionCheck {
        condition: "C2",
        key: "pi_zero",
        passed: pi0.abs() <= tol,
        witness: (pi0.abs() > tol).then_some(0.0),
        value: pi0.abs(),
    });

    let pihat0 = pot.pihat(0.0);
    checks.push(ConditionCheck {
        condition: "C2",
        key: "pihat_zero",
        passed: pihat0.abs() <= tol,
        witness: (pihat0.abs() > tol).then_some(0.0),
        value: pihat0.abs(),
    });

    let mut lip = 0.0f64;
    let mut lip_at = samples[0];
    for w in samples.windows(2) {
        let slope = (pot.pi(w[1]) - pot.pi(w[0])).abs() / (w[1] - w[0]);
        if slope > lip {
            lip = slope;
            lip_at = w[0];
        }
    }
    let lip_ok = lip <= l * (1.0 + 1e-9) + tol;
    checks.push(ConditionCheck {
        condition: "C2",
        key: "lipschitz",
        passed: lip_ok,
        witness: if lip_ok { None } else { Some(lip_at) },
        value: lip,
    });

    checks.push(ConditionCheck {
        condition: "C4",
        key: "pi_lip_below_one",
        passed: l < 1.0,
        witness: None,
        value: l,
    });

    let worst_coercive = samples
        .iter()
        .map(|&r| (r, pot.g(r) + 0.5 * l * r * r))
        .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
        .unwrap();
    let coercive_ok = worst_coercive.1 >= -tol * (1.0 + worst_coercive.0 * worst_coercive.0);
    checks.push(ConditionCheck {
        condition: "C4",
        key: "coercive",
        passed: coercive_ok,
        witness: if coercive_ok { None } else { Some(worst_coercive.0) },
        value: (-worst_coercive.1).max(0.0),
    });

    Ok(ConditionReport {
        potential: pot.to_string(),
        range,
        n_samples,
        pi_prime_sup: l,
        pi_lip_empirical: lip,
        checks,
    })
}
