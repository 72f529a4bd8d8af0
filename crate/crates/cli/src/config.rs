//! JSON problem configuration.
//!
//! ```json
//! {
//!   "space": {"builder": "interval", "n": 800, "length": 1.0},
//!   "marginals": [
//!     {"profile": "gaussian", "center": 0.3, "scale": 0.02},
//!     {"profile": "gaussian", "center": 0.7, "scale": 0.02}
//!   ],
//!   "eps": 0.2,
//!   "tol": 1e-12,
//!   "max_iter": 50000,
//!   "floor": null,
//!   "K": 64,
//!   "seed": 7,
//!   "sweep": {"eps_list": [0.4, 0.2, 0.1, 0.05], "n": 800}
//! }
//! ```
//!
//! `space.builder` is one of `circle`, `interval` (fields `n`, `length`) or
//! `graph` (field `path` to an edge-list file). Marginals are either named
//! profiles or inline `{"values": [...]}` vectors (normalized against the
//! reference measure). The gaussian profile is `exp(-(x-center)²/scale)`.
//! `sweep` is only needed by the `sweep` command; its entries are paired
//! with `n` (a scalar) or `n_schedule` (one grid size per eps).

use std::path::{Path, PathBuf};

use entrolab_core::density::{Density, Profile};
use entrolab_core::space::Space;
use ndarray::Array1;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(tag = "builder", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Circle { n: usize, length: f64 },
    Interval { n: usize, length: f64 },
    Graph { path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Uniform,
    Gaussian { center: f64, scale: f64 },
    Sine { amplitude: f64, frequency: f64 },
    Cosine { amplitude: f64, frequency: f64 },
}

impl ProfileSpec {
    pub fn to_profile(&self) -> Profile {
        match *self {
            ProfileSpec::Uniform => Profile::Uniform,
            ProfileSpec::Gaussian { center, scale } => Profile::Gaussian { center, scale },
            ProfileSpec::Sine { amplitude, frequency } => Profile::Sine { amplitude, frequency },
            ProfileSpec::Cosine { amplitude, frequency } => {
                Profile::Cosine { amplitude, frequency }
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MarginalSpec {
    Named(ProfileSpec),
    Inline { values: Vec<f64> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub eps_list: Vec<f64>,
    /// One grid size for the whole schedule...
    #[serde(default)]
    pub n: Option<usize>,
    /// ...or one per eps entry.
    #[serde(default)]
    pub n_schedule: Option<Vec<usize>>,
}

fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    50_000
}
fn default_time_steps() -> usize {
    64
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub space: SpaceSpec,
    pub marginals: Vec<MarginalSpec>,
    pub eps: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub floor: Option<f64>,
    #[serde(rename = "K", default = "default_time_steps")]
    pub time_steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

impl ProblemSpec {
    pub fn parse(text: &str) -> Result<ProblemSpec, CliError> {
        let spec: ProblemSpec =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), CliError> {
        if !(self.eps > 0.0) {
            return Err(CliError::Config(format!(
                "config: eps must be positive, got {}",
                self.eps
            )));
        }
        if self.marginals.len() != 2 {
            return Err(CliError::Config(format!(
                "config: exactly two marginals required, got {}",
                self.marginals.len()
            )));
        }
        if let Some(delta) = self.floor {
            if !(0.0..=1.0).contains(&delta) {
                return Err(CliError::Config(format!(
                    "config: floor must lie in [0, 1], got {delta}"
                )));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.eps_list.is_empty() {
                return Err(CliError::Config("config: sweep.eps_list is empty".into()));
            }
            match (&sweep.n, &sweep.n_schedule) {
                (Some(_), None) => {}
                (None, Some(ns)) if ns.len() == sweep.eps_list.len() => {}
                (None, Some(_)) => {
                    return Err(CliError::Config(
                        "config: sweep.n_schedule must match eps_list in length".into(),
                    ))
                }
                _ => {
                    return Err(CliError::Config(
                        "config: sweep needs either n or n_schedule".into(),
                    ))
                }
            }
        }
        Ok(())
    }

    pub fn build_space(&self, config_dir: &Path) -> Result<Space, CliError> {
        match &self.space {
            SpaceSpec::Circle { n, length } => {
                Space::circle_grid(*n, *length).map_err(CliError::config_stage)
            }
            SpaceSpec::Interval { n, length } => {
                Space::interval_grid(*n, *length).map_err(CliError::config_stage)
            }
            SpaceSpec::Graph { path } => {
                let resolved = if path.is_relative() {
                    config_dir.join(path)
                } else {
                    path.clone()
                };
                let text = std::fs::read_to_string(&resolved).map_err(|e| {
                    CliError::Config(format!("config: cannot read {}: {e}", resolved.display()))
                })?;
                Space::from_edge_list(&text).map_err(CliError::config_stage)
            }
        }
    }

    pub fn build_marginal(&self, space: &Space, index: usize) -> Result<Density, CliError> {
        let density = match &self.marginals[index] {
            MarginalSpec::Named(profile) => {
                Density::from_profile(space, &profile.to_profile()).map_err(CliError::config_stage)
            }
            MarginalSpec::Inline { values } => {
                Density::normalized(space, Array1::from_vec(values.clone()))
                    .map_err(CliError::config_stage)
            }
        }?;
        match self.floor {
            Some(delta) => density.with_floor(space, delta).map_err(CliError::config_stage),
            None => Ok(density),
        }
    }

    pub fn sweep_profiles(&self) -> Result<(Profile, Profile), CliError> {
        let named = |m: &MarginalSpec| match m {
            MarginalSpec::Named(p) => Ok(p.to_profile()),
            MarginalSpec::Inline { .. } => Err(CliError::Config(
                "config: sweep marginals must be named profiles (they are re-sampled per grid)"
                    .into(),
            )),
        };
        Ok((named(&self.marginals[0])?, named(&self.marginals[1])?))
    }
}

/// FNV-1a of the config bytes; stamped into reports for provenance.
pub fn config_hash(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}
