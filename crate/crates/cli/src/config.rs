//! Run configuration: one TOML file per run, echoed into every output
//! directory and hashed to tag the artifacts.

use std::path::{Path, PathBuf};

use bursty_core::fpt::DEFAULT_K_TERMS;
use bursty_core::returns::{DEFAULT_FILTER_WINDOW, DEFAULT_LAMBDA2, DEFAULT_SAMPLE_DT};
use bursty_core::sde::{DEFAULT_BURN_IN, DEFAULT_KAPPA, DEFAULT_MAX_STEPS};
use bursty_core::{Model, SimConfig, StopRule};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Analyze,
    Fpt,
    Returns,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Analyze => "analyze",
            Command::Fpt => "fpt",
            Command::Returns => "returns",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Filled from the subcommand when absent; must agree with it otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fpt: Option<FptSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returns: Option<ReturnsSection>,
}

fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_burn_in() -> f64 {
    DEFAULT_BURN_IN
}
fn default_max_steps() -> u64 {
    DEFAULT_MAX_STEPS
}
fn one() -> u64 {
    1
}
fn yes() -> bool {
    true
}
fn ten() -> usize {
    10
}
fn ten_u64() -> u64 {
    10
}
fn default_k_terms() -> usize {
    DEFAULT_K_TERMS
}
fn default_points() -> usize {
    200
}
fn default_lambda2() -> f64 {
    DEFAULT_LAMBDA2
}
fn default_sample_dt() -> f64 {
    DEFAULT_SAMPLE_DT
}
fn default_filter_window() -> f64 {
    DEFAULT_FILTER_WINDOW
}
fn default_returns_threshold() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default = "default_burn_in")]
    pub burn_in: f64,
    pub seed: u64,
    #[serde(default = "one")]
    pub realizations: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
    /// Required by `simulate` and simulated `analyze`; `returns` derives its
    /// own duration from `returns.minutes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopRule>,
    /// `simulate` only: store each realization as `path_NNN.csv`.
    #[serde(default = "yes")]
    pub write_path: bool,
}

impl SimSection {
    pub fn sim_config(&self, stop: StopRule) -> SimConfig {
        SimConfig { kappa: self.kappa, x0: self.x0, burn_in: self.burn_in, seed: self.seed, stop, max_steps: self.max_steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsdSection {
    /// Grid spacing in scaled time.
    pub dt: f64,
    pub segment: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    #[serde(default = "ten")]
    pub bins_per_decade: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overlay {
    pub eta: f64,
    pub lambda: f64,
    #[serde(default = "default_k_terms")]
    pub k_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Series to analyze, one realization per file. Empty: simulate from
    /// `[model]` and `[sim]` without storing paths.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<PathBuf>,
    pub threshold: f64,
    /// Detect bursts of `|x|` in input files (simulated complex models
    /// always use `|x|`).
    #[serde(default)]
    pub absolute: bool,
    /// Conversion for `t_seconds` inputs; defaults to the model's value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_t_sq: Option<f64>,
    #[serde(default = "ten")]
    pub bins_per_decade: usize,
    /// Smallest duration kept in the histogram and the overlay; defaults to
    /// the shortest observed burst.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_fit: Option<[f64; 2]>,
    /// Duration range for the peak-duration and size-duration fits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter_fit: Option<[f64; 2]>,
    /// Peak-excess range for the size-peak fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_peak_fit: Option<[f64; 2]>,
    #[serde(default = "ten_u64")]
    pub min_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd: Option<PsdSection>,
    /// Analytic duration densities; taken from a simple `[model]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay: Option<Overlay>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FptSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_y: Option<f64>,
    pub t_min: f64,
    /// Grid end; defaults to ten crossover times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Explicit evaluation times; replace the logarithmic grid.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    #[serde(default = "default_k_terms")]
    pub k_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnsSection {
    pub r0_bar: f64,
    /// Length of the return series in sampling intervals.
    pub intervals: u64,
    pub q_seed: u64,
    #[serde(default = "default_lambda2")]
    pub lambda2: f64,
    /// Sampling interval in seconds; also the volatility averaging window.
    #[serde(default = "default_sample_dt")]
    pub sample_dt: f64,
    /// Moving-average window in seconds for the `|r|` burst analysis.
    #[serde(default = "default_filter_window")]
    pub filter_window: f64,
    #[serde(default = "default_returns_threshold")]
    pub threshold: f64,
    #[serde(default = "ten")]
    pub bins_per_decade: usize,
    #[serde(default = "yes")]
    pub write_returns: bool,
}

fn invalid<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Validation(msg.into()))
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Validation(msg) => CliError::Validation(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// Binds the config to `command`, makes input paths absolute relative to
    /// `base` and checks that the sections the command needs are present.
    pub fn resolve(mut self, command: Command, base: &Path) -> CliResult<Self> {
        match self.command {
            Some(c) if c != command => {
                return invalid(format!("config is for `{}`, not `{}`", c.name(), command.name()));
            }
            _ => self.command = Some(command),
        }
        if let Some(a) = self.analysis.as_mut() {
            for p in a.inputs.iter_mut() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
                *p = std::path::absolute(&*p).map_err(|e| CliError::io(p.clone(), e))?;
            }
        }
        self.validate()?;
        Ok(self)
    }

    pub fn command(&self) -> Command {
        self.command.expect("resolved config carries its command")
    }

    pub fn validate(&self) -> CliResult<()> {
        let command = match self.command {
            Some(c) => c,
            None => return invalid("missing `command`"),
        };
        if let Some(m) = &self.model {
            m.validate()?;
        }
        let need = |present: bool, name: &str| {
            if present {
                Ok(())
            } else {
                invalid(format!("`{}` needs a [{name}] section", command.name()))
            }
        };
        match command {
            Command::Simulate => {
                need(self.model.is_some(), "model")?;
                need(self.sim.is_some(), "sim")?;
                self.checked_sim_config()?;
            }
            Command::Analyze => {
                need(self.analysis.is_some(), "analysis")?;
                let a = self.analysis.as_ref().unwrap();
                if a.inputs.is_empty() {
                    need(self.model.is_some(), "model")?;
                    need(self.sim.is_some(), "sim")?;
                    self.checked_sim_config()?;
                }
                if !a.threshold.is_finite() {
                    return invalid("analysis.threshold must be finite");
                }
                if a.bins_per_decade == 0 {
                    return invalid("analysis.bins_per_decade must be at least 1");
                }
                if let Some(t) = a.t_min {
                    if !(t > 0.0) {
                        return invalid(format!("analysis.t_min must be positive (got {t})"));
                    }
                }
                if let Some(s) = a.sigma_t_sq {
                    if !(s > 0.0) {
                        return invalid("analysis.sigma_t_sq must be positive");
                    }
                }
                for r in [a.duration_fit, a.scatter_fit, a.size_peak_fit].into_iter().flatten() {
                    if !(r[0] < r[1]) {
                        return invalid(format!("fit range [{}, {}] is empty", r[0], r[1]));
                    }
                }
            }
            Command::Fpt => {
                need(self.fpt.is_some(), "fpt")?;
                let f = self.fpt.as_ref().unwrap();
                let by_model = f.eta.is_some() || f.lambda.is_some() || f.h_x.is_some();
                let by_index = f.nu.is_some() || f.h_y.is_some();
                if by_model == by_index {
                    return invalid("give either eta, lambda and h_x or nu and h_y in [fpt]");
                }
                if by_model && (f.eta.is_none() || f.lambda.is_none() || f.h_x.is_none()) {
                    return invalid("[fpt] needs all of eta, lambda and h_x");
                }
                if by_index && (f.nu.is_none() || f.h_y.is_none()) {
                    return invalid("[fpt] needs both nu and h_y");
                }
                if f.times.is_empty() && f.points < 2 {
                    return invalid("fpt.points must be at least 2");
                }
            }
            Command::Returns => {
                need(self.returns.is_some(), "returns")?;
                need(self.sim.is_some(), "sim")?;
                if !matches!(self.model, Some(Model::Complex(_))) {
                    return invalid("`returns` needs a complex [model]");
                }
                let s = self.sim.as_ref().unwrap();
                if s.stop.is_some() {
                    return invalid("`returns` derives its stop rule from returns.intervals; remove sim.stop");
                }
                if s.realizations != 1 {
                    return invalid("`returns` simulates a single realization");
                }
                let r = self.returns.as_ref().unwrap();
                if r.intervals == 0 || !(r.sample_dt > 0.0) || !(r.filter_window >= r.sample_dt) {
                    return invalid("need returns.intervals >= 1 and filter_window >= sample_dt > 0");
                }
                if r.bins_per_decade == 0 {
                    return invalid("returns.bins_per_decade must be at least 1");
                }
            }
        }
        Ok(())
    }

    fn checked_sim_config(&self) -> CliResult<SimConfig> {
        let s = self.sim.as_ref().unwrap();
        let stop = match s.stop {
            Some(stop) => stop,
            None => return invalid("[sim] needs a stop rule"),
        };
        if s.realizations == 0 {
            return invalid("sim.realizations must be at least 1");
        }
        let cfg = s.sim_config(stop);
        cfg.validate(self.model.as_ref().unwrap())?;
        Ok(cfg)
    }

    /// Canonical TOML text; the config hash is computed over these bytes.
    pub fn canonical(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Validation(format!("config cannot be serialized: {e}")))
    }

    pub fn hash(&self) -> CliResult<String> {
        Ok(sha256_hex(self.canonical()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
