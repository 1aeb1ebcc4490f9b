//! Run configuration, loaded from a single JSON document.

use crate::returns::{MixerConfig, MixerMode, ReturnsError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Mixer(#[from] ReturnsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Mixer selection as written in the config file. `window` may be omitted,
/// in which case the trainer window applies; if both are given they must
/// agree.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct MixerSpec {
    pub mode: MixerMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
}

/// Everything one training run needs. Unknown keys are rejected; omitted
/// keys fall back to the desk-scale defaults.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub env_name: String,
    pub mixer: MixerSpec,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_total_steps")]
    pub total_steps: u64,
    #[serde(default = "default_lr_initial")]
    pub lr_initial: f64,
    #[serde(default = "default_true")]
    pub lr_anneal_to_zero: bool,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_eval_interval")]
    pub eval_interval_steps: u64,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_eval_step_cap")]
    pub eval_step_cap: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_grad_clip")]
    pub grad_clip_norm: f64,
    /// Prediction-only mode: act uniformly at random and update the critic
    /// (and, in `car` mode, the confidence head) while the policy stays
    /// frozen.
    #[serde(default)]
    pub freeze_policy: bool,
}

fn default_workers() -> usize {
    1
}
fn default_total_steps() -> u64 {
    300_000
}
fn default_lr_initial() -> f64 {
    1e-3
}
fn default_true() -> bool {
    true
}
fn default_gamma() -> f64 {
    0.99
}
fn default_beta() -> f64 {
    0.01
}
fn default_window() -> usize {
    20
}
fn default_eval_interval() -> u64 {
    10_000
}
fn default_eval_episodes() -> usize {
    20
}
fn default_eval_step_cap() -> usize {
    500
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn default_grad_clip() -> f64 {
    40.0
}

impl TrainConfig {
    pub fn from_json(json: &str) -> Result<Self, ConfigError> {
        let config: TrainConfig = serde_json::from_str(json)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Minimal config for the given environment and mixer, desk-scale
    /// defaults everywhere else.
    pub fn new(env_name: &str, mixer: MixerConfig) -> Self {
        TrainConfig {
            env_name: env_name.to_string(),
            mixer: MixerSpec {
                mode: mixer.mode,
                lambda: mixer.lambda,
                window: None,
            },
            workers: default_workers(),
            total_steps: default_total_steps(),
            lr_initial: default_lr_initial(),
            lr_anneal_to_zero: true,
            gamma: default_gamma(),
            beta: default_beta(),
            window: mixer.window,
            eval_interval_steps: default_eval_interval(),
            eval_episodes: default_eval_episodes(),
            eval_step_cap: default_eval_step_cap(),
            seeds: default_seeds(),
            grad_clip_norm: default_grad_clip(),
            freeze_policy: false,
        }
    }

    /// The resolved kernel-level mixer config.
    pub fn mixer_config(&self) -> MixerConfig {
        MixerConfig {
            mode: self.mixer.mode,
            lambda: self.mixer.lambda,
            window: self.mixer.window.unwrap_or(self.window),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be >= 1".into()));
        }
        if self.window == 0 {
            return Err(ConfigError::Invalid("window must be >= 1".into()));
        }
        if self.total_steps == 0 {
            return Err(ConfigError::Invalid("total_steps must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(ConfigError::Invalid(format!(
                "gamma {} outside [0, 1)",
                self.gamma
            )));
        }
        if !(self.lr_initial >= 0.0 && self.lr_initial.is_finite()) {
            return Err(ConfigError::Invalid("lr_initial must be >= 0".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(ConfigError::Invalid("beta must be >= 0".into()));
        }
        if !(self.grad_clip_norm > 0.0) {
            return Err(ConfigError::Invalid("grad_clip_norm must be > 0".into()));
        }
        if self.eval_interval_steps == 0 || self.eval_episodes == 0 || self.eval_step_cap == 0 {
            return Err(ConfigError::Invalid(
                "eval_interval_steps, eval_episodes, eval_step_cap must be >= 1".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must be non-empty".into()));
        }
        if let Some(w) = self.mixer.window {
            if w != self.window {
                return Err(ConfigError::Invalid(format!(
                    "mixer.window {w} disagrees with window {}",
                    self.window
                )));
            }
        }
        self.mixer_config().validate()?;
        Ok(())
    }
}

/// Linearly annealed learning rate on the shared environment-step counter:
/// `lr_initial * max(0, 1 - step / total_steps)`, or constant when annealing
/// is disabled.
pub fn anneal_lr(global_step: u64, config: &TrainConfig) -> f64 {
    if !config.lr_anneal_to_zero {
        return config.lr_initial;
    }
    let frac = 1.0 - global_step as f64 / config.total_steps as f64;
    config.lr_initial * frac.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let config =
            TrainConfig::from_json(r#"{"env_name": "random_walk", "mixer": {"mode": "nstep"}}"#)
                .unwrap();
        assert_eq!(config.workers, 1);
        assert_eq!(config.total_steps, 300_000);
        assert_eq!(config.lr_initial, 1e-3);
        assert_eq!(config.gamma, 0.99);
        assert_eq!(config.beta, 0.01);
        assert_eq!(config.window, 20);
        assert_eq!(config.eval_interval_steps, 10_000);
        assert_eq!(config.eval_episodes, 20);
        assert_eq!(config.eval_step_cap, 500);
        assert_eq!(config.seeds, vec![0, 1, 2]);
        assert_eq!(config.grad_clip_norm, 40.0);
        assert!(!config.freeze_policy);
        assert_eq!(config.mixer_config().window, 20);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = TrainConfig::from_json(
            r#"{"env_name": "random_walk", "mixer": {"mode": "nstep"}, "warp_drive": 9}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("warp_drive"));
    }

    #[test]
    fn lambda_presence_is_enforced_both_ways() {
        assert!(TrainConfig::from_json(
            r#"{"env_name": "random_walk", "mixer": {"mode": "lambda"}}"#
        )
        .is_err());
        assert!(TrainConfig::from_json(
            r#"{"env_name": "random_walk", "mixer": {"mode": "car", "lambda": 0.9}}"#
        )
        .is_err());
        let ok = TrainConfig::from_json(
            r#"{"env_name": "random_walk", "mixer": {"mode": "lambda", "lambda": 0.9}}"#,
        )
        .unwrap();
        assert_eq!(ok.mixer_config().lambda, Some(0.9));
    }

    #[test]
    fn zero_workers_rejected() {
        assert!(TrainConfig::from_json(
            r#"{"env_name": "random_walk", "mixer": {"mode": "nstep"}, "workers": 0}"#
        )
        .is_err());
    }

    #[test]
    fn mixer_window_must_agree() {
        assert!(TrainConfig::from_json(
            r#"{"env_name": "x", "mixer": {"mode": "nstep", "window": 10}, "window": 20}"#
        )
        .is_err());
        let ok = TrainConfig::from_json(
            r#"{"env_name": "x", "mixer": {"mode": "nstep", "window": 20}, "window": 20}"#,
        )
        .unwrap();
        assert_eq!(ok.mixer_config().window, 20);
    }

    #[test]
    fn annealing_schedule() {
        let mut config = TrainConfig::new("random_walk", MixerConfig::nstep(20));
        config.total_steps = 100_000;
        assert_eq!(anneal_lr(0, &config), 1e-3);
        assert_eq!(anneal_lr(50_000, &config), 5e-4);
        assert_eq!(anneal_lr(100_000, &config), 0.0);
        assert_eq!(anneal_lr(150_000, &config), 0.0);
        config.lr_anneal_to_zero = false;
        assert_eq!(anneal_lr(99_999, &config), 1e-3);
    }
}
