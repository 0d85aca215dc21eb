//! Flat TOML configuration.
//!
//! Every key is optional and falls back to the reference scenario. Powers and
//! SINR targets may be given in dB; a linear key wins when both are present.

use std::path::Path;

use bwpc_core::model::{self, LinkTargets, NetworkParams, SlotConfig};
use bwpc_core::montecarlo::{SimWindow, DEFAULT_R_HARVEST, DEFAULT_R_INTERF};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    lambda: Option<f64>,
    #[serde(rename = "M")]
    antennas: Option<i64>,
    rho: Option<f64>,
    #[serde(rename = "P_T")]
    p_t: Option<f64>,
    #[serde(rename = "P_T_dBm")]
    p_t_dbm: Option<f64>,
    eta: Option<f64>,
    d0: Option<f64>,
    r_o: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    #[serde(rename = "N0")]
    n0: Option<f64>,
    #[serde(rename = "N0_dBm")]
    n0_dbm: Option<f64>,
    #[serde(rename = "T1")]
    t1: Option<f64>,
    #[serde(rename = "T2")]
    t2: Option<f64>,
    #[serde(rename = "gamma_R")]
    gamma_r: Option<f64>,
    #[serde(rename = "gamma_R_dB")]
    gamma_r_db: Option<f64>,
    #[serde(rename = "E_C")]
    e_c: Option<f64>,
    eps_e: Option<f64>,
    eps_i: Option<f64>,
    #[serde(rename = "R_harvest")]
    r_harvest: Option<f64>,
    #[serde(rename = "R_interf")]
    r_interf: Option<f64>,
}

/// Fully resolved configuration, in linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub params: NetworkParams,
    pub slot: SlotConfig,
    pub targets: LinkTargets,
    pub r_harvest: f64,
    pub r_interf: f64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            params: NetworkParams::default(),
            slot: SlotConfig::default(),
            targets: LinkTargets::default(),
            r_harvest: DEFAULT_R_HARVEST,
            r_interf: DEFAULT_R_INTERF,
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::from_toml(&text).map_err(|e| match e {
            ConfigError::Parse { message, .. } => ConfigError::Parse {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        let d = Config::default();
        let antennas = match raw.antennas {
            None => d.params.antennas,
            Some(m) if m >= 1 => m as usize,
            Some(m) => {
                return Err(ConfigError::Invalid(format!(
                    "M must be at least 1, got {m}"
                )))
            }
        };
        let params = NetworkParams {
            lambda: raw.lambda.unwrap_or(d.params.lambda),
            antennas,
            rho: raw.rho.unwrap_or(d.params.rho),
            p_t: raw
                .p_t
                .or(raw.p_t_dbm.map(model::dbm_to_mw))
                .unwrap_or(d.params.p_t),
            eta: raw.eta.unwrap_or(d.params.eta),
            d0: raw.d0.unwrap_or(d.params.d0),
            r_o: raw.r_o.unwrap_or(d.params.r_o),
            alpha: raw.alpha.unwrap_or(d.params.alpha),
            beta: raw.beta.unwrap_or(d.params.beta),
            n0: raw
                .n0
                .or(raw.n0_dbm.map(model::dbm_to_mw))
                .unwrap_or(d.params.n0),
        };
        let slot = SlotConfig::new(raw.t1.unwrap_or(d.slot.t1), raw.t2.unwrap_or(d.slot.t2));
        let targets = LinkTargets {
            gamma_r: raw
                .gamma_r
                .or(raw.gamma_r_db.map(model::db_to_linear))
                .unwrap_or(d.targets.gamma_r),
            e_c: raw.e_c.unwrap_or(d.targets.e_c),
            eps_e: raw.eps_e.unwrap_or(d.targets.eps_e),
            eps_i: raw.eps_i.unwrap_or(d.targets.eps_i),
        };
        let config = Config {
            params,
            slot,
            targets,
            r_harvest: raw.r_harvest.unwrap_or(d.r_harvest),
            r_interf: raw.r_interf.unwrap_or(d.r_interf),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        model::validate(&self.params, &self.slot, &self.targets).map_err(|e| {
            let msgs: Vec<String> = e.violations.iter().map(|v| v.to_string()).collect();
            ConfigError::Invalid(msgs.join("; "))
        })?;
        self.joint_window().validate(&self.params).map_err(|_| {
            ConfigError::Invalid(format!(
                "R_harvest must be at least r_o ({}) and R_interf at least d0 ({})",
                self.params.r_o, self.params.d0
            ))
        })
    }

    pub fn energy_window(&self) -> SimWindow {
        SimWindow::energy(&self.params, &self.slot, self.r_harvest)
    }

    pub fn joint_window(&self) -> SimWindow {
        SimWindow::joint(&self.params, &self.slot, self.r_harvest, self.r_interf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_reference_scenario() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn db_keys_convert_and_linear_keys_win() {
        let c = Config::from_toml("gamma_R_dB = 10\nP_T_dBm = 30\nN0_dBm = -90").unwrap();
        assert!((c.targets.gamma_r - 10.0).abs() < 1e-12);
        assert!((c.params.p_t - 1000.0).abs() < 1e-9);
        assert!((c.params.n0 - 1e-9).abs() < 1e-21);
        let c = Config::from_toml("gamma_R = 2\ngamma_R_dB = 10").unwrap();
        assert_eq!(c.targets.gamma_r, 2.0);
    }

    #[test]
    fn violations_are_named() {
        let err = Config::from_toml("alpha = 2").unwrap_err().to_string();
        assert!(err.contains("alpha"), "{err}");
        let err = Config::from_toml("M = 0").unwrap_err().to_string();
        assert!(err.contains('M'), "{err}");
        assert!(Config::from_toml("R_harvest = 1").is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            Config::from_toml("lamda = 0.1"),
            Err(ConfigError::Parse { .. })
        ));
    }
}
