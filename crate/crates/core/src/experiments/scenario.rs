use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::dynamics::{InitialData, Model, SystemParams};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::potential::PotentialSpec;
use crate::spectral::SpectralPlan;

/// Box grid description. Exactly one of `spacing` / `lengths` must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
}

impl GridSpec {
    pub fn unit(dims: &[usize]) -> Self {
        GridSpec {
            dims: dims.to_vec(),
            spacing: None,
            lengths: Some(vec![1.0; dims.len()]),
            origin: None,
        }
    }

    pub fn build(&self) -> Result<Grid> {
        let origin = self.origin.clone().unwrap_or_else(|| vec![0.0; self.dims.len()]);
        let spacing = match (&self.spacing, &self.lengths) {
            (Some(h), None) => h.clone(),
            (None, Some(l)) => {
                if l.len() != self.dims.len() {
                    return Err(Error::invalid("lengths", "axis count mismatch"));
                }
                if l.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                    return Err(Error::invalid("lengths", "lengths must be positive and finite"));
                }
                self.dims.iter().zip(l).map(|(&n, &x)| x / (n.max(2) - 1) as f64).collect()
            }
            _ => return Err(Error::invalid("spacing", "give exactly one of `spacing` or `lengths`")),
        };
        Grid::new(&self.dims, &spacing, &origin)
    }
}

/// Built-in initial profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldProfile {
    Constant {
        value: f64,
    },
    /// `offset + amplitude·exp(−|x − center|²/(2 width²))`.
    GaussianBump {
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + amplitude·Π_d cos(π k_d (x_d − o_d)/L_d)`.
    Cosine {
        amplitude: f64,
        modes: Vec<usize>,
        #[serde(default)]
        offset: f64,
    },
    /// Independent uniform values in `[offset − amplitude, offset + amplitude]`.
    RandomSeeded {
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default)]
        offset: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl FieldProfile {
    pub fn validate(&self, name: &'static str, ndim: usize) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        let ok = match self {
            FieldProfile::Constant { value } => finite(*value),
            FieldProfile::GaussianBump {
                amplitude,
                center,
                width,
                offset,
            } => {
                if center.len() != ndim {
                    return Err(Error::invalid(name, format!("center needs {ndim} coordinates")));
                }
                finite(*amplitude) && finite(*offset) && width.is_finite() && *width > 0.0 && center.iter().all(|c| c.is_finite())
            }
            FieldProfile::Cosine { amplitude, modes, offset } => {
                if modes.len() != ndim {
                    return Err(Error::invalid(name, format!("modes needs {ndim} entries")));
                }
                finite(*amplitude) && finite(*offset)
            }
            FieldProfile::RandomSeeded { amplitude, offset, .. } => finite(*amplitude) && finite(*offset),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(name, "profile parameters must be finite (width > 0)"))
        }
    }

    /// Samples the profile; `seed_shift` is mixed into random seeds.
    pub fn sample(&self, grid: &Arc<Grid>, seed_shift: u64) -> Result<Field> {
        match self {
            FieldProfile::Constant { value } => Ok(Field::constant(grid.clone(), *value)),
            FieldProfile::GaussianBump {
                amplitude,
                center,
                width,
                offset,
            } => Field::from_fn(grid.clone(), |x| {
                let r2: f64 = center.iter().enumerate().map(|(d, c)| (x[d] - c).powi(2)).sum();
                offset + amplitude * (-r2 / (2.0 * width * width)).exp()
            }),
            FieldProfile::Cosine { amplitude, modes, offset } => {
                let lengths = grid.lengths();
                let origin = grid.origin().to_vec();
                Field::from_fn(grid.clone(), |x| {
                    let p: f64 = modes
                        .iter()
                        .enumerate()
                        .map(|(d, &k)| (std::f64::consts::PI * k as f64 * (x[d] - origin[d]) / lengths[d]).cos())
                        .product();
                    offset + amplitude * p
                })
            }
            FieldProfile::RandomSeeded { seed, amplitude, offset } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(seed_shift));
                let values = (0..grid.len()).map(|_| offset + amplitude * rng.gen_range(-1.0..=1.0)).collect();
                Field::new(grid.clone(), values)
            }
        }
    }

    /// Support radius outside of which the profile deviates from its offset by
    /// less than `rel · amplitude`; `None` for profiles without compact decay.
    pub fn support_radius(&self, rel: f64) -> Option<(Vec<f64>, f64)> {
        match self {
            FieldProfile::Constant { .. } => None,
            FieldProfile::GaussianBump { center, width, .. } => {
                Some((center.clone(), width * (2.0 * (1.0 / rel).ln()).sqrt()))
            }
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub mu: FieldProfile,
    pub phi: FieldProfile,
    pub sigma: FieldProfile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_eps: Option<f64>,
}

impl InitialSpec {
    pub fn validate(&self, ndim: usize) -> Result<()> {
        self.mu.validate("initial.mu", ndim)?;
        self.phi.validate("initial.phi", ndim)?;
        self.sigma.validate("initial.sigma", ndim)?;
        if let Some(e) = self.smoothing_eps {
            if !(e.is_finite() && e >= 0.0) {
                return Err(Error::invalid("smoothing_eps", "must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &Arc<Grid>, seed: u64) -> Result<InitialData> {
        Ok(InitialData::new(
            self.mu.sample(grid, seed)?,
            self.phi.sample(grid, seed.wrapping_add(1))?,
            self.sigma.sample(grid, seed.wrapping_add(2))?,
        )?
        .with_smoothing(self.smoothing_eps))
    }

    /// Profiles whose nontrivial part must lie inside an observation window.
    pub fn profiles(&self) -> [(&'static str, &FieldProfile); 3] {
        [("mu", &self.mu), ("phi", &self.phi), ("sigma", &self.sigma)]
    }
}

/// A complete single-run description: grid, nonlinearity, parameters and data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub params: SystemParams,
    pub initial: InitialSpec,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.build()?;
        self.params.validate()?;
        self.initial.validate(grid.ndim())
    }

    pub fn build_grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(self.grid.build()?))
    }

    pub fn build_model(&self, plan: Arc<SpectralPlan>) -> Result<Model> {
        Model::new(plan, self.potential.clone(), self.params.clone())
    }

    pub fn build_initial(&self, grid: &Arc<Grid>) -> Result<InitialData> {
        self.initial.sample(grid, self.seed)
    }

    pub fn with_params(&self, f: impl FnOnce(&mut SystemParams)) -> Scenario {
        let mut s = self.clone();
        f(&mut s.params);
        s
    }
}
