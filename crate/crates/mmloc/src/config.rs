//! System parameters and the flat `section.key = value` configuration format.
//!
//! Values are stored in SI units. The text format uses engineering units
//! (dBm, dBm/Hz, dBi, per-km densities) and converts on ingestion.

use crate::initial_access::AccessPolicy;
use crate::optimizer::OptimizationSpec;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Largest supported Nakagami shape.
pub const MAX_NAKAGAMI: u32 = 16;

/// How the Nakagami power tail enters the coverage expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcdfForm {
    /// Alternating binomial sum from Alzer's bound on the Gamma CDF.
    Alzer,
    /// Exact Gamma tail through derivatives of the interference Laplace transform.
    Exact,
}

impl fmt::Display for CcdfForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CcdfForm::Alzer => "alzer",
            CcdfForm::Exact => "exact",
        })
    }
}

/// Physical and model parameters of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// BS density per metre of road.
    pub lambda: f64,
    /// Transmit power, W.
    pub p_t: f64,
    /// BS height, m.
    pub h_b: f64,
    /// Path-loss intercept.
    pub k_pl: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub n_los: u32,
    pub n_nlos: u32,
    /// LOS ball radius, m.
    pub d_s: f64,
    /// Hz.
    pub bandwidth: f64,
    /// Thermal noise density, W/Hz.
    pub noise_psd: f64,
    /// Carrier, Hz.
    pub f_c: f64,
    /// Reference gain (linear).
    pub g0: f64,
    /// Sidelobe fraction.
    pub eps_sidelobe: f64,
    /// Service phase duration, s.
    pub t_frame: f64,
    /// Initial access duration, s.
    pub t_init: f64,
    /// Noise power seen by the range and angle estimators, W.
    pub est_noise: f64,
    /// Elements of the UE array used for angle-of-arrival estimation.
    pub ue_loc_elements: usize,
    /// Misalignment threshold as a fraction of the UE beamwidth.
    pub nu_factor: f64,
    /// Largest dictionary size.
    pub n_max: usize,
    pub ccdf: CcdfForm,
}

/// Free-space intercept at 1 m for carrier `f_c`.
pub fn free_space_intercept(f_c: f64) -> f64 {
    (SPEED_OF_LIGHT / (4.0 * PI * f_c)).powi(2)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let f_c = 28e9;
        Self {
            lambda: 0.01,
            p_t: dbm_to_watts(30.0),
            h_b: 10.0,
            k_pl: free_space_intercept(f_c),
            alpha_los: 2.0,
            alpha_nlos: 4.0,
            n_los: 3,
            n_nlos: 2,
            d_s: 20.0,
            bandwidth: 1e9,
            noise_psd: dbm_to_watts(-174.0),
            f_c,
            g0: 1.0,
            eps_sidelobe: 0.01,
            t_frame: 1e-3,
            t_init: 1e-4,
            est_noise: dbm_to_watts(20.5),
            ue_loc_elements: 16,
            nu_factor: 0.5,
            n_max: 32,
            ccdf: CcdfForm::Exact,
        }
    }
}

impl NetworkConfig {
    /// Thermal noise power over the band, W.
    pub fn noise_power(&self) -> f64 {
        self.noise_psd * self.bandwidth
    }

    /// Sidelobe gain g = G0·ε.
    pub fn sidelobe_gain(&self) -> f64 {
        self.g0 * self.eps_sidelobe
    }

    /// Mean cell extent 1/(2λ).
    pub fn mean_cell(&self) -> f64 {
        0.5 / self.lambda
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("network.lambda_per_km", self.lambda),
            ("radio.tx_power_dbm", self.p_t),
            ("network.bs_height_m", self.h_b),
            ("radio.path_loss_db", self.k_pl),
            ("network.alpha_los", self.alpha_los),
            ("network.los_radius_m", self.d_s),
            ("radio.bandwidth_hz", self.bandwidth),
            ("radio.carrier_hz", self.f_c),
            ("antenna.g0_dbi", self.g0),
            ("antenna.sidelobe_fraction", self.eps_sidelobe),
            ("frame.t_frame_s", self.t_frame),
            ("localization.nu_factor", self.nu_factor),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::invalid(key, "must be positive and finite"));
            }
        }
        if self.noise_psd < 0.0 || self.est_noise < 0.0 || self.t_init < 0.0 {
            return Err(ConfigError::invalid(
                "radio",
                "noise and durations must be non-negative",
            ));
        }
        if self.eps_sidelobe >= 1.0 {
            return Err(ConfigError::invalid(
                "antenna.sidelobe_fraction",
                "must be below 1",
            ));
        }
        if self.alpha_nlos < self.alpha_los {
            return Err(ConfigError::invalid(
                "network.alpha_nlos",
                "must be at least alpha_los",
            ));
        }
        for (key, n) in [
            ("network.nakagami_los", self.n_los),
            ("network.nakagami_nlos", self.n_nlos),
        ] {
            if n == 0 || n > MAX_NAKAGAMI {
                return Err(ConfigError::invalid(
                    key,
                    format!("shape must be an integer in 1..={MAX_NAKAGAMI}"),
                ));
            }
        }
        if self.n_max == 0 {
            return Err(ConfigError::invalid(
                "dictionary.n_max",
                "must be at least 1",
            ));
        }
        if self.ue_loc_elements == 0 {
            return Err(ConfigError::invalid(
                "antenna.ue_loc_elements",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Settings consumed by the experiment runner that are not model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub seed: u64,
    pub trials: usize,
    /// SINR threshold, linear.
    pub threshold: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 100_000,
            threshold: db_to_linear(5.0),
        }
    }
}

/// Everything a run needs.
#[derive(Debug, Clone, Default)]
pub struct Config {
    pub network: NetworkConfig,
    pub access: AccessPolicy,
    pub optimizer: OptimizationSpec,
    pub run: RunSettings,
    path_loss_fixed: bool,
    /// Text of every assignment, echoed verbatim so that unit conversions
    /// do not perturb a re-read configuration.
    given: BTreeMap<String, String>,
}

impl PartialEq for Config {
    fn eq(&self, other: &Self) -> bool {
        self.network == other.network
            && self.access == other.access
            && self.optimizer == other.optimizer
            && self.run == other.run
            && self.path_loss_fixed == other.path_loss_fixed
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
}

impl ConfigError {
    pub fn invalid(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// The offending key, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey(k) => Some(k),
            ConfigError::Invalid { key, .. } => Some(key),
            ConfigError::Syntax { .. } => None,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::invalid(key, format!("`{value}` is not a finite number")))
}

fn parse_count(key: &str, value: &str) -> Result<usize, ConfigError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| ConfigError::invalid(key, format!("`{value}` is not a non-negative integer")))
}

/// Every recognised key, in echo order.
pub const KEYS: &[&str] = &[
    "network.lambda_per_km",
    "network.bs_height_m",
    "network.los_radius_m",
    "network.alpha_los",
    "network.alpha_nlos",
    "network.nakagami_los",
    "network.nakagami_nlos",
    "radio.tx_power_dbm",
    "radio.noise_psd_dbm_hz",
    "radio.bandwidth_hz",
    "radio.carrier_hz",
    "radio.path_loss_db",
    "antenna.g0_dbi",
    "antenna.sidelobe_fraction",
    "antenna.ue_loc_elements",
    "localization.noise_dbm",
    "localization.nu_factor",
    "frame.t_frame_s",
    "frame.t_init_s",
    "dictionary.n_max",
    "coverage.ccdf",
    "coverage.threshold_db",
    "access.delta_bs",
    "access.delta_ma",
    "access.delta_d_m2",
    "access.delta_psi_rad2",
    "access.max_iter",
    "access.symbol_s",
    "access.initial_sigma_d2_m2",
    "access.initial_theta_u_rad",
    "access.ref_fraction",
    "access.ref_psi_rad",
    "optimizer.eps_bs",
    "optimizer.eps_ma",
    "optimizer.beta_step",
    "optimizer.rate_bps",
    "optimizer.theta_u_beta",
    "run.seed",
    "montecarlo.trials",
];

impl Config {
    /// Parse a configuration file body on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.network.validate()?;
        self.access.validate()?;
        self.optimizer.validate()?;
        if !(self.run.threshold > 0.0) {
            return Err(ConfigError::invalid(
                "coverage.threshold_db",
                "must be finite",
            ));
        }
        Ok(())
    }

    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let n = &mut self.network;
        let f = || parse_f64(key, value);
        match key {
            "network.lambda_per_km" => n.lambda = f()? / 1000.0,
            "network.lambda_per_m" => n.lambda = f()?,
            "network.bs_height_m" => n.h_b = f()?,
            "network.los_radius_m" => n.d_s = f()?,
            "network.alpha_los" => n.alpha_los = f()?,
            "network.alpha_nlos" => n.alpha_nlos = f()?,
            "network.nakagami_los" => n.n_los = parse_count(key, value)? as u32,
            "network.nakagami_nlos" => n.n_nlos = parse_count(key, value)? as u32,
            "radio.tx_power_dbm" => n.p_t = dbm_to_watts(f()?),
            "radio.noise_psd_dbm_hz" => n.noise_psd = dbm_to_watts(f()?),
            "radio.bandwidth_hz" => n.bandwidth = f()?,
            "radio.carrier_hz" => {
                n.f_c = f()?;
                if !self.path_loss_fixed {
                    n.k_pl = free_space_intercept(n.f_c);
                }
            }
            "radio.path_loss_db" => {
                n.k_pl = db_to_linear(f()?);
                self.path_loss_fixed = true;
            }
            "antenna.g0_dbi" => n.g0 = db_to_linear(f()?),
            "antenna.sidelobe_fraction" => n.eps_sidelobe = f()?,
            "antenna.ue_loc_elements" => n.ue_loc_elements = parse_count(key, value)?,
            "localization.noise_dbm" => n.est_noise = dbm_to_watts(f()?),
            "localization.nu_factor" => n.nu_factor = f()?,
            "frame.t_frame_s" => n.t_frame = f()?,
            "frame.t_init_s" => n.t_init = f()?,
            "dictionary.n_max" => n.n_max = parse_count(key, value)?,
            "coverage.ccdf" => {
                n.ccdf = match value {
                    "alzer" => CcdfForm::Alzer,
                    "exact" => CcdfForm::Exact,
                    _ => return Err(ConfigError::invalid(key, "expected `alzer` or `exact`")),
                }
            }
            "coverage.threshold_db" => self.run.threshold = db_to_linear(f()?),
            "access.delta_bs" => self.access.delta_bs = f()?,
            "access.delta_ma" => self.access.delta_ma = f()?,
            "access.delta_d_m2" => self.access.delta_d = f()?,
            "access.delta_psi_rad2" => self.access.delta_psi = f()?,
            "access.max_iter" => self.access.max_iter = parse_count(key, value)?,
            "access.symbol_s" => self.access.symbol_duration = f()?,
            "access.initial_sigma_d2_m2" => self.access.initial_sigma_d2 = f()?,
            "access.initial_theta_u_rad" => self.access.initial_theta_u = f()?,
            "access.ref_fraction" => self.access.ref_fraction = f()?,
            "access.ref_psi_rad" => self.access.ref_psi = f()?,
            "optimizer.eps_bs" => self.optimizer.eps_bs = f()?,
            "optimizer.eps_ma" => self.optimizer.eps_ma = f()?,
            "optimizer.beta_step" => self.optimizer.beta_step = f()?,
            "optimizer.rate_bps" => self.optimizer.rate = f()?,
            "optimizer.theta_u_beta" => self.optimizer.theta_u_beta = f()?,
            "run.seed" => {
                self.run.seed = value
                    .parse()
                    .map_err(|_| ConfigError::invalid(key, "expected an unsigned integer"))?
            }
            "montecarlo.trials" => self.run.trials = parse_count(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        let alias = match key {
            "network.lambda_per_km" => "network.lambda_per_m",
            "network.lambda_per_m" => "network.lambda_per_km",
            _ => "",
        };
        self.given.remove(alias);
        self.given.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    /// Current value of `key` in configuration-file units.
    pub fn get(&self, key: &str) -> Option<String> {
        if let Some(v) = self.given.get(key) {
            return Some(v.clone());
        }
        let n = &self.network;
        let v = match key {
            "network.lambda_per_km" => n.lambda * 1000.0,
            "network.bs_height_m" => n.h_b,
            "network.los_radius_m" => n.d_s,
            "network.alpha_los" => n.alpha_los,
            "network.alpha_nlos" => n.alpha_nlos,
            "network.nakagami_los" => f64::from(n.n_los),
            "network.nakagami_nlos" => f64::from(n.n_nlos),
            "radio.tx_power_dbm" => watts_to_dbm(n.p_t),
            "radio.noise_psd_dbm_hz" => watts_to_dbm(n.noise_psd),
            "radio.bandwidth_hz" => n.bandwidth,
            "radio.carrier_hz" => n.f_c,
            "radio.path_loss_db" => linear_to_db(n.k_pl),
            "antenna.g0_dbi" => linear_to_db(n.g0),
            "antenna.sidelobe_fraction" => n.eps_sidelobe,
            "antenna.ue_loc_elements" => n.ue_loc_elements as f64,
            "localization.noise_dbm" => watts_to_dbm(n.est_noise),
            "localization.nu_factor" => n.nu_factor,
            "frame.t_frame_s" => n.t_frame,
            "frame.t_init_s" => n.t_init,
            "dictionary.n_max" => n.n_max as f64,
            "coverage.ccdf" => return Some(n.ccdf.to_string()),
            "coverage.threshold_db" => linear_to_db(self.run.threshold),
            "access.delta_bs" => self.access.delta_bs,
            "access.delta_ma" => self.access.delta_ma,
            "access.delta_d_m2" => self.access.delta_d,
            "access.delta_psi_rad2" => self.access.delta_psi,
            "access.max_iter" => self.access.max_iter as f64,
            "access.symbol_s" => self.access.symbol_duration,
            "access.initial_sigma_d2_m2" => self.access.initial_sigma_d2,
            "access.initial_theta_u_rad" => self.access.initial_theta_u,
            "access.ref_fraction" => self.access.ref_fraction,
            "access.ref_psi_rad" => self.access.ref_psi,
            "optimizer.eps_bs" => self.optimizer.eps_bs,
            "optimizer.eps_ma" => self.optimizer.eps_ma,
            "optimizer.beta_step" => self.optimizer.beta_step,
            "optimizer.rate_bps" => self.optimizer.rate,
            "optimizer.theta_u_beta" => self.optimizer.theta_u_beta,
            "run.seed" => return Some(self.run.seed.to_string()),
            "montecarlo.trials" => return Some(self.run.trials.to_string()),
            _ => return None,
        };
        Some(format!("{v}"))
    }

    /// The configuration as `key = value` lines, re-parseable by [`Config::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for &k in KEYS {
            let line = match k {
                "network.lambda_per_km" if self.given.contains_key("network.lambda_per_m") => {
                    format!(
                        "network.lambda_per_m = {}",
                        self.given["network.lambda_per_m"]
                    )
                }
                // derived from the carrier unless pinned; echoed for reference only
                "radio.path_loss_db" if !self.path_loss_fixed => {
                    format!("# {k} = {}", self.get(k).unwrap_or_default())
                }
                _ => match self.get(k) {
                    Some(v) => format!("{k} = {v}"),
                    None => continue,
                },
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_follow_the_parameter_table() {
        let c = NetworkConfig::default();
        assert_relative_eq!(c.p_t, 1.0, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(c.noise_psd), -174.0, max_relative = 1e-12);
        assert_eq!((c.alpha_los, c.alpha_nlos), (2.0, 4.0));
        assert_eq!(c.d_s, 20.0);
        assert_eq!(c.bandwidth, 1e9);
        c.validate().unwrap();
    }

    #[test]
    fn units_convert_at_the_boundary() {
        let cfg = Config::from_text(
            "network.lambda_per_km = 20\nradio.tx_power_dbm = 40 # ten watts\nantenna.g0_dbi = 15\n",
        )
        .unwrap();
        assert_relative_eq!(cfg.network.lambda, 0.02, max_relative = 1e-12);
        assert_relative_eq!(cfg.network.p_t, 10.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.network.g0, 31.622_776_601_683_8, max_relative = 1e-12);
        let per_m = Config::from_text("network.lambda_per_m = 0.02").unwrap();
        assert_relative_eq!(per_m.network.lambda, 0.02);
    }

    #[test]
    fn unknown_and_bad_values_name_the_key() {
        let e = Config::from_text("network.lambda = 3").unwrap_err();
        assert_eq!(e.key(), Some("network.lambda"));
        let e = Config::from_text("radio.bandwidth_hz = wide").unwrap_err();
        assert_eq!(e.key(), Some("radio.bandwidth_hz"));
        let e = Config::from_text("antenna.sidelobe_fraction = 1.5").unwrap_err();
        assert_eq!(e.key(), Some("antenna.sidelobe_fraction"));
        assert!(matches!(
            Config::from_text("nonsense"),
            Err(ConfigError::Syntax { line: 1 })
        ));
    }

    #[test]
    fn carrier_sets_intercept_unless_pinned() {
        let c = Config::from_text("radio.carrier_hz = 60e9").unwrap();
        assert_relative_eq!(c.network.k_pl, free_space_intercept(60e9));
        let c = Config::from_text("radio.path_loss_db = -70\nradio.carrier_hz = 60e9").unwrap();
        assert_relative_eq!(c.network.k_pl, 1e-7, max_relative = 1e-12);
    }

    #[test]
    fn echo_round_trips() {
        let mut c = Config::default();
        c.set("network.lambda_per_km", "37").unwrap();
        c.set("coverage.ccdf", "alzer").unwrap();
        c.set("access.delta_d_m2", "0.01").unwrap();
        c.set("radio.tx_power_dbm", "23.7").unwrap();
        c.set("localization.noise_dbm", "-17.3").unwrap();
        c.set("radio.carrier_hz", "73e9").unwrap();
        let back = Config::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.network.ccdf, CcdfForm::Alzer);
        let mut per_m = Config::default();
        per_m.set("network.lambda_per_m", "0.0123").unwrap();
        assert_eq!(Config::from_text(&per_m.to_text()).unwrap(), per_m);
        assert_eq!(
            Config::from_text(&Config::default().to_text()).unwrap(),
            Config::default()
        );
        for k in KEYS {
            assert!(c.get(k).is_some(), "{k}");
        }
    }
}
