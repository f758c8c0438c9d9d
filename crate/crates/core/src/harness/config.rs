//! Experiment configuration: one TOML file with a strict schema.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelBank, KernelSpec};
use crate::stable::StableParams;
use crate::stats::{make_trig_functional, Functional};

/// A kernel as written in the config file, tagged by `family`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelRecord {
    /// `e^{-λx} 1_{x ≥ 0}`; `alpha` overrides the certified tail exponent (default 8).
    Ou {
        lambda: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
    /// Linear fractional stable noise kernel; β is taken from the driver.
    Lfsn {
        hurst: f64,
    },
    TruncatedPowerLaw {
        kappa: f64,
        alpha: f64,
    },
    /// `1_{[0,1)}`, i.i.d. increments at integer times.
    Indicator {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<f64>,
    },
}

impl KernelRecord {
    pub fn to_spec(&self, beta: f64) -> Result<KernelSpec> {
        match *self {
            KernelRecord::Ou { lambda, alpha: None } => KernelSpec::ou(lambda),
            KernelRecord::Ou { lambda, alpha: Some(a) } => KernelSpec::ou_with_alpha(lambda, a),
            KernelRecord::Lfsn { hurst } => KernelSpec::lfsn(hurst, beta),
            KernelRecord::TruncatedPowerLaw { kappa, alpha } => KernelSpec::truncated_power_law(kappa, alpha),
            KernelRecord::Indicator { alpha: None } => Ok(KernelSpec::indicator()),
            KernelRecord::Indicator { alpha: Some(a) } => KernelSpec::indicator_with_alpha(a),
        }
    }
}

/// Rows `u_i` of the trig functional `a_i cos(⟨u_i, x⟩ + θ_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub freqs: Vec<Vec<f64>>,
    /// Defaults to zeros.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
    /// Defaults to ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amps: Option<Vec<f64>>,
}

/// Which exact law supplies the centring and `Σ²` of the CLT experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLaw {
    /// The simulated lattice process (exact for what is simulated).
    #[default]
    Lattice,
    /// The continuous-time moving average.
    Continuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Relative scale tolerance for `plan_grid`.
    pub grid: f64,
    /// Covariance series stops once its tail bound is below this fraction of the largest variance.
    pub covariance_tail: f64,
    pub max_lag: usize,
    /// Half-width of the accepted slope window around the prediction.
    pub slope_window: f64,
    pub reference_law: ReferenceLaw,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            grid: 1e-2,
            covariance_tail: 1e-2,
            max_lag: 4096,
            slope_window: 0.15,
            reference_law: ReferenceLaw::Lattice,
        }
    }
}

/// Settings of the `rates` study of the `A_n` integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub p: f64,
    pub q: f64,
    pub n_list: Vec<usize>,
    pub slope_window: f64,
    /// 1-based kernel pairs `(j, k)`; empty means every `(i, i)`.
    pub pairs: Vec<[usize; 2]>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self { p: 2.0, q: 3.0, n_list: vec![64, 128, 256, 512], slope_window: 0.1, pairs: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RhoConfig {
    pub k_max: usize,
}

impl Default for RhoConfig {
    fn default() -> Self {
        Self { k_max: 128 }
    }
}

fn default_n_list() -> Vec<usize> {
    vec![256, 512, 1024, 2048, 4096]
}

fn default_replications() -> usize {
    2000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("reports")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub driver: StableParams,
    pub kernels: Vec<KernelRecord>,
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub tolerance: ToleranceConfig,
    #[serde(default)]
    pub rates: RatesConfig,
    #[serde(default)]
    pub rho: RhoConfig,
}

fn config_err(path: impl Into<String>, message: impl ToString) -> Error {
    Error::Config { path: path.into(), message: message.to_string() }
}

fn check_increasing(path: &str, list: &[usize]) -> Result<()> {
    if list.len() < 2 {
        return Err(config_err(path, "needs at least 2 entries"));
    }
    if list[0] == 0 {
        return Err(config_err(path, "entries must be positive"));
    }
    if let Some(i) = list.windows(2).position(|w| w[1] <= w[0]) {
        return Err(config_err(format!("{path}[{}]", i + 1), "must be strictly increasing"));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| config_err("", e.message()))?;
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            config_err(path, e.into_inner().message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| config_err("", e))
    }

    pub fn validate(&self) -> Result<()> {
        self.driver.validate().map_err(|e| config_err("driver", e))?;
        check_increasing("n_list", &self.n_list)?;
        if self.replications < 100 {
            return Err(config_err("replications", format!("must be at least 100, got {}", self.replications)));
        }
        if self.kernels.is_empty() {
            return Err(config_err("kernels", "at least one kernel is required"));
        }
        for (i, k) in self.kernels.iter().enumerate() {
            k.to_spec(self.driver.beta).map_err(|e| config_err(format!("kernels[{i}]"), e))?;
        }
        let m = self.kernels.len();
        let d = self.functional.freqs.len();
        if d == 0 {
            return Err(config_err("functional.freqs", "needs at least one row"));
        }
        if let Some(i) = self.functional.freqs.iter().position(|r| r.len() != m) {
            return Err(config_err(
                format!("functional.freqs[{i}]"),
                format!("row length must equal the number of kernels ({m})"),
            ));
        }
        for (name, v) in [("phases", &self.functional.phases), ("amps", &self.functional.amps)] {
            if let Some(v) = v {
                if v.len() != d {
                    return Err(config_err(
                        format!("functional.{name}"),
                        format!("length must equal the number of rows ({d})"),
                    ));
                }
            }
        }
        self.functional_spec().map_err(|e| config_err("functional", e))?;
        let t = &self.tolerance;
        if !(t.grid > 0.0) {
            return Err(config_err("tolerance.grid", "must be positive"));
        }
        if !(t.covariance_tail > 0.0) {
            return Err(config_err("tolerance.covariance_tail", "must be positive"));
        }
        if t.max_lag == 0 {
            return Err(config_err("tolerance.max_lag", "must be positive"));
        }
        if !(t.slope_window > 0.0) {
            return Err(config_err("tolerance.slope_window", "must be positive"));
        }
        check_increasing("rates.n_list", &self.rates.n_list)?;
        if !(1.0..=2.0).contains(&self.rates.p) {
            return Err(config_err("rates.p", "must lie in [1, 2]"));
        }
        if !(self.rates.q > 2.0) {
            return Err(config_err("rates.q", "must exceed 2"));
        }
        if let Some(i) = self.rates.pairs.iter().position(|p| p.iter().any(|j| *j == 0 || *j > m)) {
            return Err(config_err(format!("rates.pairs[{i}]"), format!("indices must lie in 1..={m}")));
        }
        if self.rho.k_max == 0 {
            return Err(config_err("rho.k_max", "must be positive"));
        }
        Ok(())
    }

    pub fn bank(&self) -> Result<KernelBank> {
        let kernels = self.kernels.iter().map(|k| k.to_spec(self.driver.beta)).collect::<Result<Vec<_>>>()?;
        KernelBank::new(kernels)
    }

    pub fn functional_spec(&self) -> Result<Functional> {
        let d = self.functional.freqs.len();
        let m = self.kernels.len();
        let flat: Vec<f64> = self.functional.freqs.iter().flatten().copied().collect();
        make_trig_functional(
            DMatrix::from_row_slice(d, m, &flat),
            self.functional.phases.clone().unwrap_or_else(|| vec![0.0; d]),
            self.functional.amps.clone().unwrap_or_else(|| vec![1.0; d]),
        )
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_toml_str(&text)
}

pub fn save_config(config: &ExperimentConfig, path: &Path) -> Result<()> {
    std::fs::write(path, config.to_toml_string()?)?;
    Ok(())
}
