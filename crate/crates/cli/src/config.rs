//! Experiment configuration: JSON file, command-line overrides, validation.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use levymax::calculus::{HolderClass, HolderVariant};
use levymax::discrete_diff::FrameMode;
use levymax::grid::Grid;
use levymax::operators::{zoo, GridOperator, LinearGridOperator, OperatorDump, ZooSpec};
use levymax::point::{BoxDomain, Point};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Grid,
    Extend,
    Rates,
    Gcp,
    Minmax,
    Levy,
    Corrector,
    Extremal,
    Study,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Grid => "grid",
            Experiment::Extend => "extend",
            Experiment::Rates => "rates",
            Experiment::Gcp => "gcp",
            Experiment::Minmax => "minmax",
            Experiment::Levy => "levy",
            Experiment::Corrector => "corrector",
            Experiment::Extremal => "extremal",
            Experiment::Study => "study",
        }
    }

    pub fn randomized(self) -> bool {
        matches!(self, Experiment::Gcp | Experiment::Minmax | Experiment::Extremal | Experiment::Study)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: Option<usize>,
    pub level: Option<u32>,
    /// Levels for multi-level experiments.
    pub levels: Option<Vec<u32>>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub beta: f64,
    pub variant: Option<HolderVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    /// Zoo name with default parameters.
    Name(String),
    /// Linear operator written by `LinearGridOperator::dump`.
    File {
        file: PathBuf,
    },
    Zoo(ZooSpec),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Allowed |slope − γ| for rate checks.
    pub rate_band: Option<f64>,
    /// Min-max representation residual.
    pub residual: Option<f64>,
    /// Extremal inequality tolerance.
    pub extremal: Option<f64>,
    /// Randomized trial counts (GCP touching pairs, extremal triples).
    pub trials: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CriterionSel {
    One(u8),
    All(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub experiment: Option<Experiment>,
    pub grid: Option<GridSpec>,
    pub class: Option<ClassSpec>,
    pub operator: Option<OperatorSpec>,
    /// Test function name from the zoo.
    pub function: Option<String>,
    /// Base point for pointwise experiments; snapped to the nearest grid point.
    pub point: Option<Vec<f64>>,
    pub frame_mode: Option<FrameMode>,
    pub criterion: Option<CriterionSel>,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("malformed config {}: {e}", path.display())))
    }

    /// Fields set in `o` replace those of `self`.
    pub fn overlay(mut self, o: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if o.$f.is_some() { self.$f = o.$f; } )* };
        }
        take!(seed, experiment, class, operator, function, point, frame_mode, criterion, output_dir);
        if let Some(g) = o.grid {
            let mut base = self.grid.unwrap_or_default();
            macro_rules! take_grid {
                ($($f:ident),*) => { $( if g.$f.is_some() { base.$f = g.$f; } )* };
            }
            take_grid!(dim, level, levels, lo, hi);
            self.grid = Some(base);
        }
        let t = o.tolerances;
        macro_rules! take_tol {
            ($($f:ident),*) => { $( if t.$f.is_some() { self.tolerances.$f = t.$f; } )* };
        }
        take_tol!(rate_band, residual, extremal, trials);
        self
    }

    /// Checks everything that can be checked before any artifact is written.
    pub fn validate(&self, exp: Experiment) -> Result<(), ConfigError> {
        if self.experiment.is_some_and(|e| e != exp) {
            return err(format!(
                "config names experiment {:?} but the {} subcommand was invoked",
                self.experiment.map(|e| e.name()).unwrap_or_default(),
                exp.name()
            ));
        }
        if exp.randomized() && self.seed.is_none() {
            return err(format!("--seed is required for the randomized experiment {}", exp.name()));
        }
        if let Some(c) = &self.class {
            self.holder_class(c.beta)?;
        }
        if let Some(OperatorSpec::File { file }) = &self.operator {
            if !file.is_file() {
                return err(format!("operator file {} does not exist", file.display()));
            }
        }
        if let Some(CriterionSel::All(s)) = &self.criterion {
            if s != "all" {
                return err(format!("criterion must be 1..=12 or \"all\", got {s:?}"));
            }
        }
        if let Some(CriterionSel::One(k)) = &self.criterion {
            if !(1..=12).contains(k) {
                return err(format!("criterion must be 1..=12 or \"all\", got {k}"));
            }
        }
        self.domain()?;
        Ok(())
    }

    pub fn holder_class(&self, default_beta: f64) -> Result<HolderClass, ConfigError> {
        let (beta, variant) = match &self.class {
            Some(c) => (c.beta, c.variant),
            None => (default_beta, None),
        };
        let r = match variant {
            Some(v) => HolderClass::new(beta, v),
            None => HolderClass::from_beta(beta),
        };
        r.map_err(|e| ConfigError(e.to_string()))
    }

    pub fn dim(&self) -> usize {
        self.grid.as_ref().and_then(|g| g.dim).unwrap_or(1)
    }

    pub fn domain(&self) -> Result<BoxDomain, ConfigError> {
        let d = self.dim();
        if d != 1 && d != 2 {
            return err(format!("dimension must be 1 or 2, got {d}"));
        }
        let g = self.grid.clone().unwrap_or_default();
        let lo = g.lo.unwrap_or_else(|| vec![0.0; d]);
        let hi = g.hi.unwrap_or_else(|| vec![1.0; d]);
        if lo.len() != d || hi.len() != d {
            return err(format!("box corners must have {d} coordinates"));
        }
        BoxDomain::new(&lo, &hi).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn level(&self, default: u32) -> u32 {
        self.grid.as_ref().and_then(|g| g.level).unwrap_or(default)
    }

    pub fn levels(&self, default: &[u32]) -> Vec<u32> {
        self.grid.as_ref().and_then(|g| g.levels.clone()).unwrap_or_else(|| default.to_vec())
    }

    pub fn grid_at(&self, level: u32) -> Result<Arc<Grid>, ConfigError> {
        Ok(Grid::cartesian(self.domain()?, level).map_err(|e| ConfigError(e.to_string()))?.shared())
    }

    /// The configured point, or the box center, snapped to the grid.
    pub fn base_point(&self, grid: &Grid) -> Result<Point, ConfigError> {
        let p = match &self.point {
            Some(c) => Point::from_slice(c).map_err(|e| ConfigError(e.to_string()))?,
            None => grid.domain().center(),
        };
        Ok(grid.point(grid.nearest(&p).0))
    }

    pub fn operator_on(&self, grid: Arc<Grid>, default: &str) -> Result<GridOperator, ConfigError> {
        let spec = match self.operator.clone() {
            None => ZooSpec::by_name(default, grid.dim()).map_err(|e| ConfigError(e.to_string()))?,
            Some(OperatorSpec::Name(n)) => ZooSpec::by_name(&n, grid.dim()).map_err(|e| ConfigError(e.to_string()))?,
            Some(OperatorSpec::Zoo(z)) => z,
            Some(OperatorSpec::File { file }) => {
                let text = std::fs::read_to_string(&file)
                    .map_err(|e| ConfigError(format!("cannot read operator file {}: {e}", file.display())))?;
                let dump: OperatorDump = serde_json::from_str(&text)
                    .map_err(|e| ConfigError(format!("malformed operator file {}: {e}", file.display())))?;
                let l = LinearGridOperator::from_dump(grid, &dump).map_err(|e| ConfigError(e.to_string()))?;
                return Ok(GridOperator::Linear(l));
            }
        };
        zoo(&spec, grid).map_err(|e| ConfigError(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlay_prefers_flags() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"seed": 1, "grid": {"dim": 2, "level": 3}, "tolerances": {"residual": 1e-9}}"#)
                .unwrap();
        let flags = ExperimentConfig {
            seed: Some(9),
            grid: Some(GridSpec { level: Some(1), ..Default::default() }),
            ..Default::default()
        };
        let c = file.overlay(flags);
        assert_eq!(c.seed, Some(9));
        assert_eq!(c.dim(), 2);
        assert_eq!(c.level(0), 1);
        assert_eq!(c.tolerances.residual, Some(1e-9));
    }

    #[test]
    fn validation() {
        let c = ExperimentConfig::default();
        assert!(c.validate(Experiment::Rates).is_ok());
        assert!(c.validate(Experiment::Gcp).is_err());
        let bad = ExperimentConfig {
            class: Some(ClassSpec { beta: 1.5, variant: Some(HolderVariant::Holder) }),
            ..Default::default()
        };
        assert!(bad.validate(Experiment::Rates).is_err());
        let missing = ExperimentConfig {
            operator: Some(OperatorSpec::File { file: "/nonexistent/op.json".into() }),
            ..Default::default()
        };
        assert!(missing.validate(Experiment::Rates).is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sed": 1}"#).is_err());
    }

    #[test]
    fn variant_tags() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"class": {"beta": 1.5, "variant": "c1alpha"}}"#).unwrap();
        assert_eq!(c.class.unwrap().variant, Some(HolderVariant::C1Alpha));
        assert!(serde_json::from_str::<ClassSpec>(r#"{"beta": 2.5, "variant": "c2alpha"}"#).is_ok());
    }

    #[test]
    fn operator_specs() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"operator": "isaacs"}"#).unwrap();
        assert_eq!(c.operator, Some(OperatorSpec::Name("isaacs".into())));
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"operator": {"name": "fractional", "order": 0.7}}"#).unwrap();
        assert!(matches!(c.operator, Some(OperatorSpec::Zoo(ZooSpec::Fractional { .. }))));
    }
}
