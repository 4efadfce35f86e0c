use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{PointSet, RowModel};
use crate::error::{Error, Result};
use crate::rng::{self, Gaussian};

/// Largest `ε` accepted in tail grids.
pub const EPSILON_CEILING: f64 = 0.5;

/// What the bin width is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DeltaScale {
    #[default]
    Absolute,
    MeanDist,
    Diam,
    Nu,
}

/// Bin width as `value × scale(S)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSpec {
    pub value: f64,
    #[serde(default)]
    pub relative_to: DeltaScale,
}

impl DeltaSpec {
    pub fn absolute(value: f64) -> Self {
        Self {
            value,
            relative_to: DeltaScale::Absolute,
        }
    }

    pub fn relative(value: f64, relative_to: DeltaScale) -> Self {
        Self { value, relative_to }
    }

    pub fn resolve(&self, points: &PointSet) -> Result<f64> {
        let scale = match self.relative_to {
            DeltaScale::Absolute => 1.0,
            DeltaScale::MeanDist => points.mean_distance(),
            DeltaScale::Diam => points.diam(),
            DeltaScale::Nu => points
                .nu()
                .ok_or_else(|| Error::Config("nu is undefined: no two distinct points".into()))?,
        };
        let delta = self.value * scale;
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Config(format!(
                "resolved bin width {delta} is not positive"
            )));
        }
        Ok(delta)
    }
}

/// Point cloud generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PointGen {
    /// i.i.d. standard normal coordinates
    #[default]
    GaussianCloud,
    /// uniform on the unit sphere
    SphereShell,
    /// unit-spaced integer lattice in the first `min(N, 3)` coordinates
    Grid,
}

impl PointGen {
    pub fn generate(self, count: usize, dim: usize, seed: u64) -> Result<PointSet> {
        let mut g = Gaussian::new(rng::stream(seed, 0));
        let points = match self {
            PointGen::GaussianCloud => (0..count)
                .map(|_| {
                    let mut p = vec![0.0; dim];
                    g.fill(&mut p);
                    p
                })
                .collect(),
            PointGen::SphereShell => (0..count)
                .map(|_| {
                    let mut p = vec![0.0; dim];
                    g.fill_direction(&mut p);
                    p
                })
                .collect(),
            PointGen::Grid => {
                let axes = dim.min(3);
                let side = (1..)
                    .find(|s: &usize| s.pow(axes as u32) >= count)
                    .unwrap_or(1);
                (0..count)
                    .map(|idx| {
                        let mut p = vec![0.0; dim];
                        let mut rest = idx;
                        for coord in p.iter_mut().take(axes) {
                            *coord = (rest % side) as f64;
                            rest /= side;
                        }
                        p
                    })
                    .collect()
            }
        };
        PointSet::new(points)
    }
}

fn default_epsilon_grid() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.2]
}

fn default_gdelta_grid() -> usize {
    crate::gdelta::DEFAULT_GRID
}

fn default_tail_pair() -> [usize; 2] {
    [0, 1]
}

/// Parameters of a distortion or tail experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// number of points `S`
    pub points: usize,
    /// ambient dimension `N`
    pub dim: usize,
    pub m_sweep: Vec<usize>,
    pub delta: DeltaSpec,
    #[serde(default)]
    pub point_gen: PointGen,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_epsilon_grid")]
    pub epsilon_grid: Vec<f64>,
    #[serde(default)]
    pub row_model: RowModel,
    /// also record one-bit sketch distances
    #[serde(default)]
    pub binary: bool,
    #[serde(default = "default_gdelta_grid")]
    pub gdelta_grid: usize,
    #[serde(default = "default_tail_pair")]
    pub tail_pair: [usize; 2],
}

const POINT_STREAM: u64 = 0x9013;
const PROJECTOR_STREAM: u64 = 0x9e7a;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.points < 2 {
            return bad(format!("need at least 2 points, got {}", self.points));
        }
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.m_sweep.is_empty() {
            return bad("m_sweep is empty".into());
        }
        if self.m_sweep[0] == 0 || self.m_sweep.windows(2).any(|w| w[0] >= w[1]) {
            return bad("m_sweep must be positive and strictly increasing".into());
        }
        if self.trials == 0 {
            return bad("trials must be positive".into());
        }
        if !(self.delta.value.is_finite() && self.delta.value > 0.0) {
            return bad(format!("delta value {} is not positive", self.delta.value));
        }
        if let Some(e) = self
            .epsilon_grid
            .iter()
            .find(|e| !(0.0..=EPSILON_CEILING).contains(*e))
        {
            return bad(format!("epsilon {e} outside [0, {EPSILON_CEILING}]"));
        }
        let [i, j] = self.tail_pair;
        if i == j || i >= self.points || j >= self.points {
            return bad(format!(
                "tail_pair {:?} is not a pair of distinct points",
                self.tail_pair
            ));
        }
        if self.row_model == RowModel::UniformSphere && self.dim < 2 {
            return bad("uniform-sphere rows need dim >= 2".into());
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn point_seed(&self) -> u64 {
        rng::derive_seed(self.seed, &[POINT_STREAM])
    }

    pub fn projector_seed(&self, m: usize, trial: usize) -> u64 {
        rng::derive_seed(self.seed, &[PROJECTOR_STREAM, m as u64, trial as u64])
    }

    pub fn generate_points(&self) -> Result<PointSet> {
        self.point_gen
            .generate(self.points, self.dim, self.point_seed())
    }
}
