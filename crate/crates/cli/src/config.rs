//! Run configuration: a TOML file with per-run flag overrides.
//!
//! Every block is optional; missing values fall back to the Black-Scholes
//! setup with 90 daily fixings. `RunConfig::effective` fills in all defaults
//! so that dumping it gives a file which reproduces the run exactly.

use std::path::{Path, PathBuf};

use asianrec::domain::DEFAULT_DAYS_PER_YEAR;
use asianrec::{FftConfig, GridSpec, Market, ModelParams, RecursionConfig, Schedule, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBlock {
    pub n_obs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_days: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default = "default_days_per_year")]
    pub days_per_year: u32,
}

fn default_days_per_year() -> u32 {
    DEFAULT_DAYS_PER_YEAR
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        Self {
            n_obs: 90,
            period_days: Some(1.0),
            tau: None,
            days_per_year: DEFAULT_DAYS_PER_YEAR,
        }
    }
}

impl ScheduleBlock {
    pub fn schedule(&self) -> Result<Schedule, CliError> {
        match (self.period_days, self.tau) {
            (Some(days), None) => Ok(Schedule::from_days(self.n_obs, days, self.days_per_year)),
            (None, Some(tau)) => Ok(Schedule {
                days_per_year: self.days_per_year,
                ..Schedule::new(self.n_obs, tau)
            }),
            (Some(_), Some(_)) => Err(CliError::Config(
                "schedule: give either period_days or tau, not both".into(),
            )),
            (None, None) => Err(CliError::Config(
                "schedule: one of period_days or tau is required".into(),
            )),
        }
    }
}

/// Grid overrides; unset fields take the model's default grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub w_min: Option<f64>,
    pub w_max: Option<f64>,
    pub w_step: Option<f64>,
    pub k_min: Option<f64>,
    pub k_max: Option<f64>,
    pub k_step: Option<f64>,
}

impl GridBlock {
    fn resolve(&self, base: GridSpec) -> GridSpec {
        GridSpec {
            w_min: self.w_min.unwrap_or(base.w_min),
            w_max: self.w_max.unwrap_or(base.w_max),
            w_step: self.w_step.unwrap_or(base.w_step),
            k_min: self.k_min.unwrap_or(base.k_min),
            k_max: self.k_max.unwrap_or(base.k_max),
            k_step: self.k_step.unwrap_or(base.k_step),
        }
    }

    fn full(spec: GridSpec) -> Self {
        Self {
            w_min: Some(spec.w_min),
            w_max: Some(spec.w_max),
            w_step: Some(spec.w_step),
            k_min: Some(spec.k_min),
            k_max: Some(spec.k_max),
            k_step: Some(spec.k_step),
        }
    }
}

/// Recursion knobs other than the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecursionBlock {
    pub interpolation: asianrec::interp::Interpolation,
    pub stencil: asianrec::Stencil,
    pub extrapolate: bool,
    pub clamp_negative_second_deriv: bool,
    pub align_strike_grid: bool,
}

impl Default for RecursionBlock {
    fn default() -> Self {
        let d = RecursionConfig::new(GridSpec::black_scholes_default());
        Self {
            interpolation: d.interpolation,
            stencil: d.stencil,
            extrapolate: d.extrapolate,
            clamp_negative_second_deriv: d.clamp_negative_second_deriv,
            align_strike_grid: d.align_strike_grid,
        }
    }
}

fn default_strikes() -> Vec<f64> {
    (0..9).map(|i| 80.0 + 5.0 * i as f64).collect()
}

fn default_model() -> ModelParams {
    ModelParams::BlackScholes { sigma: 0.2 }
}

fn default_market() -> Market {
    Market::new(100.0, 0.05)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_strikes")]
    pub strikes: Vec<f64>,
    #[serde(default)]
    pub output: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default = "default_model")]
    pub model: ModelParams,
    #[serde(default = "default_market")]
    pub market: Market,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub recursion: RecursionBlock,
    #[serde(default)]
    pub fft: FftConfig,
    #[serde(default)]
    pub mc: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml::from_str("").expect("empty config parses")
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.resolve(GridSpec::default_for(&self.model))
    }

    pub fn recursion_config(&self) -> RecursionConfig {
        RecursionConfig {
            grid: self.grid_spec(),
            interpolation: self.recursion.interpolation,
            stencil: self.recursion.stencil,
            extrapolate: self.recursion.extrapolate,
            clamp_negative_second_deriv: self.recursion.clamp_negative_second_deriv,
            align_strike_grid: self.recursion.align_strike_grid,
        }
    }

    /// The same configuration with every default written out.
    pub fn effective(&self) -> Self {
        Self {
            grid: GridBlock::full(self.grid_spec()),
            ..self.clone()
        }
    }
}
