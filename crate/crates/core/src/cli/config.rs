//! JSON run configuration. Unknown keys are rejected at every level and the
//! physical parameters `v`, `r`, `gamma`, `n_cells` have no defaults.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Direction, SweepMode, DEFAULT_DT, DEFAULT_T_MAX, DEFAULT_ZERO_PEAK_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::{Boundary, DisorderTarget, LatticeParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winding: Option<WindingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svd_scan: Option<SvdScanConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_phase: Option<SweepPhaseConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub v: f64,
    pub r: f64,
    pub gamma: f64,
    pub n_cells: usize,
    pub boundary: Boundary,
}

impl ModelConfig {
    pub fn params(&self) -> Result<LatticeParams> {
        LatticeParams::new(self.v, self.r, self.gamma, self.n_cells, self.boundary)
    }
}

/// Either an inclusive evenly spaced range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range(RangeGrid),
    Values(ValuesGrid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValuesGrid {
    pub values: Vec<f64>,
}

impl Grid {
    pub fn range(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range(RangeGrid { start, stop, points })
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let out = match self {
            Grid::Values(v) => v.values.clone(),
            Grid::Range(g) => match g.points {
                0 => Vec::new(),
                1 => vec![g.start],
                n => (0..n).map(|i| g.start + (g.stop - g.start) * i as f64 / (n - 1) as f64).collect(),
            },
        };
        if out.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid contains non-finite values".into()));
        }
        Ok(out)
    }
}

fn default_zero_tol() -> f64 {
    1e-8
}

fn default_gap_tol() -> f64 {
    1e-3
}

fn default_samples() -> usize {
    crate::topology::DEFAULT_SAMPLES
}

fn default_t_max() -> f64 {
    DEFAULT_T_MAX
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_threshold() -> f64 {
    DEFAULT_ZERO_PEAK_THRESHOLD
}

fn default_span() -> f64 {
    2.0 * PI
}

fn default_directions() -> Vec<Direction> {
    vec![Direction::Forward]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub v_grid: Grid,
    #[serde(default)]
    pub phi: f64,
    /// Relative tolerance `σ_min/σ_max` for flagging the zero mode.
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub v: f64,
    pub r: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBatch {
    pub count: usize,
    pub seed: u64,
    pub v_range: [f64; 2],
    pub r_range: [f64; 2],
    pub gamma_range: [f64; 2],
    /// Draws closer than this to an EP boundary (`||±γ/2 − v| − r|`) are
    /// redrawn.
    pub min_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindingConfig {
    #[serde(default)]
    pub parameter_sets: Vec<ParamSet>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_batch: Option<RandomBatch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    pub targets: Vec<DisorderTarget>,
    pub d_grid: Grid,
    pub seed: u64,
    /// When set, per-seed transition points are computed for seeds
    /// `seed, seed + 1, …`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_seeds: Option<usize>,
    /// Absolute `|E|` below which the edge pair counts as pinned at zero.
    #[serde(default = "default_zero_tol")]
    pub zero_tol: f64,
    /// Bulk real gap below which the band gap counts as closed.
    #[serde(default = "default_gap_tol")]
    pub gap_tol: f64,
    #[serde(default)]
    pub independent_cross_hopping: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvdScanConfig {
    pub n_list: Vec<usize>,
    pub v_grid: Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolvePreset {
    /// `v = r = 0.5γ`, five cells: the defective zero mode is excited.
    Defective,
    /// `v = 1.5γ`, `r = 0.5γ`, five cells: no zero mode.
    Trivial,
}

impl EvolvePreset {
    pub fn params(self) -> LatticeParams {
        let v = match self {
            EvolvePreset::Defective => 0.5,
            EvolvePreset::Trivial => 1.5,
        };
        LatticeParams { v, r: 0.5, gamma: 1.0, n_cells: 5, boundary: Boundary::Open }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<EvolvePreset>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Basis index excited at `t = 0` (0 is `α₁`).
    #[serde(default)]
    pub excite: usize,
    /// Basis index whose amplitude is Fourier analysed.
    #[serde(default)]
    pub site: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPhaseConfig {
    pub k_values: Vec<f64>,
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
    pub mode: SweepMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn model(&self) -> Result<LatticeParams> {
        self.model.as_ref().ok_or_else(|| Error::Config("missing `model` section".into()))?.params()
    }
}

pub(crate) fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| Error::Config(format!("missing `{name}` section")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "schema_version": 1,
        "model": {"v": 0.5, "r": 0.5, "gamma": 1.0, "n_cells": 30, "boundary": "open"},
        "spectrum": {"v_grid": {"start": 0.0, "stop": 2.0, "points": 21}}
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::from_json(BASE).unwrap();
        assert_eq!(cfg.spectrum.as_ref().unwrap().v_grid.values().unwrap().len(), 21);
        let again = RunConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = BASE.replace("\"n_cells\": 30", "\"n_cells\": 30, \"extra\": 1");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::Config(_))));
        let bad = BASE.replace("\"schema_version\": 1", "\"schema_version\": 1, \"colour\": 2");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn physical_parameters_are_required() {
        let bad = BASE.replace("\"gamma\": 1.0, ", "");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn wrong_schema_version() {
        let bad = BASE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn empty_grid_is_an_error() {
        let g = Grid::Values(ValuesGrid { values: vec![] });
        assert!(matches!(g.values(), Err(Error::Config(_))));
        assert!(Grid::range(0.0, 1.0, 0).values().is_err());
    }
}
