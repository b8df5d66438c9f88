//! Scenario configuration: a declarative TOML file with documented defaults.
//!
//! Every field has a default, so an empty file is a valid scenario. Unknown
//! keys are rejected, and parse errors carry the offending line. Power-type
//! fields are written in dBm (the customary unit) and converted to watts
//! exactly once, when the runtime [`EnvConfig`] is built; everything
//! downstream is linear SI.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{GainModel, RadioConstants};
use crate::compression::CompressionTable;
use crate::ddpg::DdpgHyper;
use crate::distortion::AiTaskConstants;
use crate::env::{EnvConfig, Phase};
use crate::error::{Error, Result};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Radio section, in the units a link budget is usually quoted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioSection {
    pub noise_psd_dbm_hz: f64,
    pub power_cap_dbm: f64,
    pub bandwidth_cap_hz: f64,
    pub interference_w: f64,
    pub shadow_fading_db_sigma: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            noise_psd_dbm_hz: -174.0,
            power_cap_dbm: 10.0,
            bandwidth_cap_hz: 10.0e6,
            interference_w: 0.0,
            shadow_fading_db_sigma: 8.0,
        }
    }
}

/// Downstream-task constants and the resilience targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AiSection {
    pub lipschitz_l: f64,
    pub convexity_mu: f64,
    pub learning_rate_eta: f64,
    pub decision_boundary_w: f64,
    pub posterior_confidence: f64,
    pub training_rounds_n: u32,
    pub epsilon_learn_target: f64,
    pub epsilon_inf_target: f64,
}

impl Default for AiSection {
    fn default() -> Self {
        Self {
            lipschitz_l: 10.0,
            convexity_mu: 10.0,
            learning_rate_eta: 0.3,
            decision_boundary_w: 1.0,
            posterior_confidence: 1.0,
            training_rounds_n: 10,
            epsilon_learn_target: 1.0,
            epsilon_inf_target: 0.1,
        }
    }
}

/// Distortion sources other than compression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistortionSection {
    pub model_variance: f64,
    pub data_variance: f64,
    /// Derive the channel-model variance from the link's inverse SNR
    /// instead of the constant above.
    pub model_variance_from_snr: bool,
}

impl Default for DistortionSection {
    fn default() -> Self {
        Self {
            model_variance: 0.01,
            data_variance: 0.0,
            model_variance_from_snr: false,
        }
    }
}

/// Reward shaping and environment behavior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSection {
    pub lambda: f64,
    pub reference_rate_bps: f64,
    pub violation_penalty: f64,
    pub mandatory_selection: bool,
}

impl Default for RewardSection {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            reference_rate_bps: 1.0e6,
            violation_penalty: 10.0,
            mandatory_selection: false,
        }
    }
}

/// Learner hyperparameters; mirrors [`DdpgHyper`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpgSection {
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub warmup_episodes: u32,
    pub train_episodes: u32,
    pub steps_per_episode: u32,
    pub buffer_capacity: usize,
    pub ou_theta: f64,
    pub ou_sigma: f64,
    pub ou_decay: f64,
    pub momentum: f64,
    pub grad_clip: f64,
}

impl Default for DdpgSection {
    fn default() -> Self {
        let h = DdpgHyper::default();
        Self {
            lr_actor: h.lr_actor,
            lr_critic: h.lr_critic,
            gamma: h.gamma,
            tau: h.tau,
            batch: h.batch,
            warmup_episodes: h.warmup_episodes,
            train_episodes: h.train_episodes,
            steps_per_episode: h.steps_per_episode,
            buffer_capacity: h.buffer_capacity,
            ou_theta: h.ou_theta,
            ou_sigma: h.ou_sigma,
            ou_decay: h.ou_decay,
            momentum: h.momentum,
            grad_clip: h.grad_clip,
        }
    }
}

/// The whole scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub user_count: usize,
    pub region_side_km: f64,
    pub gain_model: GainModel,
    pub payload_bits: f64,
    /// Optional measured ratio-to-loss table; the built-in measurement is
    /// used when absent.
    pub compression_table_path: Option<PathBuf>,
    pub phase: Phase,
    pub seed: u64,
    pub eval_runs: u32,
    /// Per-user data counts weighting the pooled variance; empty means
    /// equal weights.
    pub user_data_counts: Vec<u64>,
    pub radio: RadioSection,
    pub ai: AiSection,
    pub distortion: DistortionSection,
    pub reward: RewardSection,
    pub ddpg: DdpgSection,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            user_count: 10,
            region_side_km: 1.0,
            gain_model: GainModel::Empirical,
            payload_bits: 24528.0,
            compression_table_path: None,
            phase: Phase::Inference,
            seed: 42,
            eval_runs: 10,
            user_data_counts: Vec::new(),
            radio: RadioSection::default(),
            ai: AiSection::default(),
            distortion: DistortionSection::default(),
            reward: RewardSection::default(),
            ddpg: DdpgSection::default(),
        }
    }
}

impl SystemConfig {
    /// Loads and validates a scenario file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let cfg: SystemConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes the effective configuration, defaults included.
    pub fn dump(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// FNV-1a hash of the effective configuration dump, for provenance
    /// lines in result files. Stable across runs and platforms.
    pub fn hash(&self) -> u64 {
        fnv1a(self.dump().as_bytes())
    }

    pub fn validate(&self) -> Result<()> {
        self.radio_constants().validate()?;
        self.ai_constants()?;
        if self.user_count == 0 {
            return Err(Error::Config("user_count: must be positive".into()));
        }
        if !(self.payload_bits > 0.0) {
            return Err(Error::Config("payload_bits: must be positive".into()));
        }
        if !self.user_data_counts.is_empty() && self.user_data_counts.len() != self.user_count {
            return Err(Error::Config(format!(
                "user_data_counts: expected {} entries or none, got {}",
                self.user_count,
                self.user_data_counts.len()
            )));
        }
        let d = &self.ddpg;
        if !(d.gamma > 0.0 && d.gamma <= 1.0) {
            return Err(Error::Config("ddpg.gamma: must lie in (0, 1]".into()));
        }
        if !(d.tau > 0.0 && d.tau < 1.0) {
            return Err(Error::Config("ddpg.tau: must lie in (0, 1)".into()));
        }
        if d.batch == 0 || d.buffer_capacity == 0 || d.steps_per_episode == 0 {
            return Err(Error::Config(
                "ddpg.batch/buffer_capacity/steps_per_episode: must be positive".into(),
            ));
        }
        if !(d.ou_decay > 0.0 && d.ou_decay <= 1.0) {
            return Err(Error::Config("ddpg.ou_decay: must lie in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn radio_constants(&self) -> RadioConstants {
        RadioConstants {
            noise_psd_n0: dbm_to_watts(self.radio.noise_psd_dbm_hz),
            interference_i: self.radio.interference_w,
            bandwidth_cap_bmax: self.radio.bandwidth_cap_hz,
            power_cap_pmax: dbm_to_watts(self.radio.power_cap_dbm),
            shadow_fading_db_sigma: self.radio.shadow_fading_db_sigma,
        }
    }

    pub fn ai_constants(&self) -> Result<AiTaskConstants> {
        AiTaskConstants::new(
            self.ai.lipschitz_l,
            self.ai.convexity_mu,
            self.ai.learning_rate_eta,
            self.ai.decision_boundary_w,
            self.ai.posterior_confidence,
            self.ai.training_rounds_n,
        )
    }

    pub fn load_table(&self) -> Result<CompressionTable> {
        match &self.compression_table_path {
            Some(path) => CompressionTable::from_path(path),
            None => Ok(CompressionTable::default_table()),
        }
    }

    pub fn hyper(&self) -> DdpgHyper {
        let d = &self.ddpg;
        DdpgHyper {
            lr_actor: d.lr_actor,
            lr_critic: d.lr_critic,
            gamma: d.gamma,
            tau: d.tau,
            batch: d.batch,
            warmup_episodes: d.warmup_episodes,
            train_episodes: d.train_episodes,
            steps_per_episode: d.steps_per_episode,
            buffer_capacity: d.buffer_capacity,
            ou_theta: d.ou_theta,
            ou_sigma: d.ou_sigma,
            ou_decay: d.ou_decay,
            momentum: d.momentum,
            grad_clip: d.grad_clip,
        }
    }

    /// Builds the runtime scenario: table loaded, dBm converted, data
    /// counts defaulted to equal.
    pub fn env_config(&self) -> Result<EnvConfig> {
        let counts = if self.user_data_counts.is_empty() {
            vec![100; self.user_count]
        } else {
            self.user_data_counts.clone()
        };
        let cfg = EnvConfig {
            user_count: self.user_count,
            region_side_km: self.region_side_km,
            gain_model: self.gain_model,
            radio: self.radio_constants(),
            payload_bits: self.payload_bits,
            table: self.load_table()?,
            ai: self.ai_constants()?,
            epsilon_learn: self.ai.epsilon_learn_target,
            epsilon_inf: self.ai.epsilon_inf_target,
            model_variance: self.distortion.model_variance,
            data_variance: self.distortion.data_variance,
            model_variance_from_snr: self.distortion.model_variance_from_snr,
            lambda: self.reward.lambda,
            reference_rate_bps: self.reward.reference_rate_bps,
            violation_penalty: self.reward.violation_penalty,
            mandatory_selection: self.reward.mandatory_selection,
            user_data_counts: counts,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_scenario() {
        let cfg = SystemConfig::default();
        assert_eq!(cfg.user_count, 10);
        assert_eq!(cfg.radio.power_cap_dbm, 10.0);
        assert_eq!(cfg.radio.noise_psd_dbm_hz, -174.0);
        let rc = cfg.radio_constants();
        assert!((rc.power_cap_pmax - 0.01).abs() < 1e-15);
        assert!((rc.noise_psd_n0 - 10f64.powf(-20.4)).abs() < 1e-25);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn empty_file_is_default() {
        let cfg = SystemConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, SystemConfig::default());
    }

    #[test]
    fn dbm_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(0.0) - 1e-3).abs() < 1e-18);
        assert!((watts_to_dbm(0.01) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = SystemConfig::from_toml_str("not_a_key = 5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not_a_key"), "message was: {msg}");
    }

    #[test]
    fn malformed_numeric_names_the_key() {
        let err = SystemConfig::from_toml_str("user_count = \"ten\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("user_count"), "message was: {msg}");
    }

    #[test]
    fn dump_round_trips() {
        let mut cfg = SystemConfig::default();
        cfg.user_count = 5;
        cfg.radio.power_cap_dbm = 15.0;
        cfg.ddpg.train_episodes = 7;
        let dumped = cfg.dump();
        let reloaded = SystemConfig::from_toml_str(&dumped).unwrap();
        assert_eq!(cfg, reloaded);
        assert_eq!(cfg.hash(), reloaded.hash());
    }

    #[test]
    fn hash_tracks_content() {
        let a = SystemConfig::default();
        let mut b = SystemConfig::default();
        b.seed = 43;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn cross_field_validation() {
        let mut cfg = SystemConfig::default();
        cfg.ai.convexity_mu = 50.0; // exceeds L
        assert!(cfg.validate().is_err());

        let mut cfg = SystemConfig::default();
        cfg.user_data_counts = vec![1, 2, 3];
        assert!(cfg.validate().is_err());

        let mut cfg = SystemConfig::default();
        cfg.ddpg.tau = 1.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn env_config_defaults_equal_data_counts() {
        let cfg = SystemConfig::default();
        let env_cfg = cfg.env_config().unwrap();
        assert_eq!(env_cfg.user_data_counts, vec![100; 10]);
        assert!((env_cfg.energy_scale_j() - 0.01 * 24528.0 / 1.0e6).abs() < 1e-15);
    }
}
