use std::path::PathBuf;

use serde::Deserialize;
use tumorch_core::experiments::{GridSpec, InitialSpec, Scenario, StudyConfig};
use tumorch_core::{Error, PotentialSpec, Result, SystemParams};

/// Largest node count accepted from a configuration file.
pub const MAX_NODES: usize = 1 << 24;

/// One configuration file. Sections a command does not use may be omitted.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub grid: Option<GridSpec>,
    pub potential: Option<PotentialSpec>,
    pub params: Option<SystemParams>,
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub check: CheckSection,
    #[serde(default)]
    pub study: StudyConfig,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Snapshot every `save_stride` steps; the final step is always written.
    pub save_stride: usize,
    pub snapshots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, save_stride: 10, snapshots: true }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub dims: Vec<usize>,
    pub lengths: Option<Vec<f64>>,
    pub trials: usize,
    pub tol: f64,
    pub lambdas: Vec<f64>,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { dims: vec![16], lengths: None, trials: 100, tol: 1e-10, lambdas: vec![1.0, 0.1, 0.01] }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    pub range: [f64; 2],
    pub samples: usize,
}

impl Default for CheckSection {
    fn default() -> Self {
        CheckSection { range: [-5.0, 5.0], samples: 2001 }
    }
}

fn check_nodes(name: &'static str, dims: &[usize]) -> Result<()> {
    let n = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    match n {
        Some(n) if n <= MAX_NODES => Ok(()),
        _ => Err(Error::invalid(name, format!("at most {MAX_NODES} nodes are supported"))),
    }
}

impl Config {
    pub fn parse(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    fn section<'a, T>(v: &'a Option<T>, name: &'static str) -> Result<&'a T> {
        v.as_ref().ok_or_else(|| Error::invalid(name, "section is required by this command"))
    }

    pub fn potential(&self) -> Result<&PotentialSpec> {
        Self::section(&self.potential, "potential")
    }

    /// Checks sizes before anything is allocated, then the full scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let grid = Self::section(&self.grid, "grid")?;
        check_nodes("grid.dims", &grid.dims)?;
        if self.output.save_stride == 0 {
            return Err(Error::invalid("output.save_stride", "must be at least 1"));
        }
        let sc = Scenario {
            grid: grid.clone(),
            potential: self.potential()?.clone(),
            params: Self::section(&self.params, "params")?.clone(),
            initial: Self::section(&self.initial, "initial")?.clone(),
            seed: self.seed,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn verify_grid(&self) -> Result<GridSpec> {
        let v = &self.verify;
        check_nodes("verify.dims", &v.dims)?;
        if !(v.tol >= 0.0) {
            return Err(Error::invalid("verify.tol", "must be nonnegative"));
        }
        Ok(match &v.lengths {
            Some(l) => GridSpec { dims: v.dims.clone(), spacing: None, lengths: Some(l.clone()), origin: None },
            None => GridSpec::unit(&v.dims),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("[params]\nalpha = 0.1\nbeta = 0.1\nt_end = 1.0\ndt = 0.1\ngamma = 2.0\n").is_err());
        assert!(Config::parse("colour = 1\n").is_err());
        assert!(Config::parse("[potential]\nkind = \"quartic\"\nc_g = 0.2\nextra = 1\n").is_err());
    }

    #[test]
    fn node_limit_checked_before_building() {
        let c = Config::parse("[verify]\ndims = [100000, 100000]\n").unwrap();
        assert!(c.verify_grid().is_err());
        let c = Config::parse("[grid]\ndims = [4294967296, 4294967296]\n").unwrap();
        assert!(matches!(c.scenario(), Err(Error::InvalidParameter { name: "grid.dims", .. })));
    }

    #[test]
    fn missing_sections_named() {
        let c = Config::default();
        assert!(matches!(c.scenario(), Err(Error::InvalidParameter { name: "grid", .. })));
        assert!(matches!(c.potential(), Err(Error::InvalidParameter { name: "potential", .. })));
    }

    #[test]
    fn potential_values_validated_on_parse() {
        assert!(Config::parse("[potential]\nkind = \"quartic\"\nc_g = -1.0\n").is_err());
        let c = Config::parse("[potential]\nkind = \"custom-table\"\nknots = [[-1.0, -1.0], [1.0, 1.0]]\n").unwrap();
        assert!(c.potential().is_ok());
        assert!(Config::parse("[potential]\nkind = \"custom-table\"\nknots = [[1.0, 1.0], [-1.0, -1.0]]\n").is_err());
    }
}
