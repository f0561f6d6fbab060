//! Scenario configuration: a flat JSON object, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::field::graded_grid;

/// Environment variable overriding `output_dir`.
pub const OUTPUT_ENV: &str = "PEAKON_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Verify,
    Linear,
    Nonlinear,
    Instability,
    Multipeakon,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Verify => "verify",
            Scenario::Linear => "linear",
            Scenario::Nonlinear => "nonlinear",
            Scenario::Instability => "instability",
            Scenario::Multipeakon => "multipeakon",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "verify" => Scenario::Verify,
            "linear" => Scenario::Linear,
            "nonlinear" => Scenario::Nonlinear,
            "instability" => Scenario::Instability,
            "multipeakon" => Scenario::Multipeakon,
            other => {
                return Err(format!(
                    "unknown scenario `{other}` (expected verify, linear, nonlinear, \
                     instability or multipeakon)"
                ))
            }
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Scenario,
    #[serde(default, alias = "L")]
    domain_half_width: Option<f64>,
    #[serde(default, alias = "N")]
    nodes: Option<usize>,
    #[serde(default)]
    h_min: Option<f64>,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    t_end: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    mu: Option<f64>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

/// A validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub domain_half_width: f64,
    pub nodes: usize,
    pub h_min: f64,
    pub dt: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub mu: f64,
    pub output_dir: PathBuf,
}

impl ScenarioConfig {
    /// Defaults for a scenario, as if `{"scenario": ...}` had been loaded.
    pub fn defaults(scenario: Scenario) -> Self {
        Self::resolve(RawConfig {
            scenario,
            domain_half_width: None,
            nodes: None,
            h_min: None,
            dt: None,
            t_end: None,
            epsilon: None,
            mu: None,
            output_dir: None,
        })
        .expect("defaults are valid")
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let epsilon = raw.epsilon.unwrap_or(0.25);
        let mu = raw.mu.unwrap_or(0.01);
        let t_end = raw.t_end.unwrap_or(match raw.scenario {
            Scenario::Verify => 0.0,
            Scenario::Linear => 5.0,
            Scenario::Nonlinear => 1.0,
            Scenario::Instability => {
                std::f64::consts::LN_2 - 2.0 * epsilon.ln() + 1.0
            }
            Scenario::Multipeakon => 10.0,
        });
        let cfg = Self {
            scenario: raw.scenario,
            domain_half_width: raw.domain_half_width.unwrap_or(30.0),
            nodes: raw.nodes.unwrap_or(8001),
            h_min: raw.h_min.unwrap_or(mu / 10.0),
            dt: raw.dt.unwrap_or(1e-3),
            t_end,
            epsilon,
            mu,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.domain_half_width > 5.0 && self.domain_half_width.is_finite()) {
            return bad(format!(
                "domain_half_width = {} must exceed 5",
                self.domain_half_width
            ));
        }
        if self.nodes < 3 || self.nodes % 2 == 0 {
            return bad(format!(
                "nodes = {} must be odd and at least 3 so that a node sits at 0",
                self.nodes
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be non-negative", self.t_end));
        }
        if !(self.h_min > 0.0 && self.h_min.is_finite()) {
            return bad(format!("h_min = {} must be positive", self.h_min));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 0.5) {
            return bad(format!("epsilon = {} must lie in (0, 0.5]", self.epsilon));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return bad(format!("mu = {} must lie in (0, 1]", self.mu));
        }
        Ok(())
    }

    /// Graded grid on `[-L, L]` with spacing `h_min` at the peak.
    pub fn grid(&self) -> Result<Vec<f64>> {
        graded_grid(self.domain_half_width, self.nodes, self.h_min)
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// `output_dir`, unless `PEAKON_OUT` is set.
    pub fn effective_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.clone(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
        Error::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    ScenarioConfig::resolve(raw)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
