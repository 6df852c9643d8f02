//! Run configuration shared by every command.
//!
//! Values are layered: built-in defaults, then a JSON config file, then
//! `METARCA_*` environment variables, then command-line flags. Each layer is
//! a [`ConfigLayer`] whose unset fields leave the layer below untouched.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcg::BeliefConfig;
use crate::online::{DiagnoseParams, Ranker};

pub const ENV_PREFIX: &str = "METARCA_";
pub const CONFIG_ENV: &str = "METARCA_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("environment variable {name}={value:?}: {message}")]
    Env {
        name: String,
        value: String,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Paths {
    pub ontology: Option<PathBuf>,
    pub mcg: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    pub z_threshold: f64,
    pub theta_p: f64,
    pub k_max: usize,
    pub ranker: Ranker,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        let d = DiagnoseParams::default();
        Self {
            z_threshold: d.z_threshold,
            theta_p: d.theta_p,
            k_max: d.k_max,
            ranker: d.ranker,
            epsilon: d.epsilon,
            max_iters: d.max_iters,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GlobalConfig {
    pub paths: Paths,
    pub belief: BeliefConfig,
    pub online: OnlineConfig,
}

/// One layer of overrides. Field names double as config-file keys and, upper
/// cased with the `METARCA_` prefix, as environment variable names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub ontology: Option<PathBuf>,
    pub mcg: Option<PathBuf>,
    pub aliases: Option<PathBuf>,
    pub lambda_fr: Option<f64>,
    pub lambda_da: Option<f64>,
    pub decay_k: Option<f64>,
    pub p0: Option<f64>,
    pub z_threshold: Option<f64>,
    pub theta_p: Option<f64>,
    pub k_max: Option<usize>,
    pub ranker: Option<Ranker>,
    pub epsilon: Option<f64>,
    pub max_iters: Option<usize>,
}

impl ConfigLayer {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Reads `METARCA_<FIELD>` variables through `lookup`, which is
    /// `std::env::var` in the binary and a map in tests.
    pub fn from_env(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        fn parse<T: std::str::FromStr>(name: &str, value: String) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.trim().parse().map_err(|e: T::Err| ConfigError::Env {
                name: name.to_string(),
                value: value.clone(),
                message: e.to_string(),
            })
        }
        let var = |field: &str| {
            let name = format!("{ENV_PREFIX}{}", field.to_uppercase());
            lookup(&name).filter(|v| !v.is_empty()).map(|v| (name, v))
        };
        let path = |field: &str| var(field).map(|(_, v)| PathBuf::from(v));
        let num = |field: &str| var(field).map(|(n, v)| parse::<f64>(&n, v)).transpose();
        let count = |field: &str| var(field).map(|(n, v)| parse::<usize>(&n, v)).transpose();
        Ok(Self {
            ontology: path("ontology"),
            mcg: path("mcg"),
            aliases: path("aliases"),
            lambda_fr: num("lambda_fr")?,
            lambda_da: num("lambda_da")?,
            decay_k: num("decay_k")?,
            p0: num("p0")?,
            z_threshold: num("z_threshold")?,
            theta_p: num("theta_p")?,
            k_max: count("k_max")?,
            ranker: var("ranker").map(|(n, v)| parse::<Ranker>(&n, v)).transpose()?,
            epsilon: num("epsilon")?,
            max_iters: count("max_iters")?,
        })
    }

    fn apply(&self, c: &mut GlobalConfig) {
        macro_rules! set {
            ($($field:ident => $target:expr),* $(,)?) => {
                $(if let Some(v) = &self.$field { $target = v.clone(); })*
            };
        }
        for (layer, target) in [
            (&self.ontology, &mut c.paths.ontology),
            (&self.mcg, &mut c.paths.mcg),
            (&self.aliases, &mut c.paths.aliases),
        ] {
            if layer.is_some() {
                target.clone_from(layer);
            }
        }
        set! {
            lambda_fr => c.belief.lambda_fr,
            lambda_da => c.belief.lambda_da,
            decay_k => c.belief.decay_k,
            p0 => c.belief.p0,
            z_threshold => c.online.z_threshold,
            theta_p => c.online.theta_p,
            k_max => c.online.k_max,
            ranker => c.online.ranker,
            epsilon => c.online.epsilon,
            max_iters => c.online.max_iters,
        }
    }
}

impl GlobalConfig {
    /// Applies `layers` over the defaults, lowest precedence first, and
    /// validates the result.
    pub fn layered(layers: &[&ConfigLayer]) -> Result<Self, ConfigError> {
        let mut c = GlobalConfig::default();
        for layer in layers {
            layer.apply(&mut c);
        }
        c.validate()?;
        Ok(c)
    }

    /// Defaults < `file` < environment < `flags`.
    pub fn resolve(
        file: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
        flags: &ConfigLayer,
    ) -> Result<Self, ConfigError> {
        let file = match file {
            Some(p) => ConfigLayer::load(p)?,
            None => ConfigLayer::default(),
        };
        let env = ConfigLayer::from_env(env)?;
        Self::layered(&[&file, &env, flags])
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.belief.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let o = &self.online;
        if !(o.z_threshold.is_finite() && o.z_threshold > 0.0) {
            return Err(ConfigError::Invalid(format!("z_threshold must be positive, got {}", o.z_threshold)));
        }
        if !(0.0..1.0).contains(&o.theta_p) {
            return Err(ConfigError::Invalid(format!("theta_p must lie in [0, 1), got {}", o.theta_p)));
        }
        if !(o.epsilon.is_finite() && o.epsilon > 0.0) {
            return Err(ConfigError::Invalid(format!("epsilon must be positive, got {}", o.epsilon)));
        }
        if o.max_iters == 0 {
            return Err(ConfigError::Invalid("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    pub fn diagnose_params(&self) -> DiagnoseParams {
        let o = &self.online;
        DiagnoseParams {
            z_threshold: o.z_threshold,
            theta_p: o.theta_p,
            k_max: o.k_max,
            ranker: o.ranker,
            epsilon: o.epsilon,
            max_iters: o.max_iters,
            fusion: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let m: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| m.get(k).cloned()
    }

    #[test]
    fn defaults_are_exact() {
        let c = GlobalConfig::resolve(None, env(&[]), &ConfigLayer::default()).unwrap();
        assert_eq!(c.belief.lambda_fr, 0.5);
        assert_eq!(c.belief.lambda_da, 0.05);
        assert_eq!(c.belief.decay_k, 0.005);
        assert_eq!(c.belief.p0, 0.5);
        assert_eq!(c.online.z_threshold, 3.0);
        assert_eq!(c.online.theta_p, 0.3);
        assert_eq!(c.online.k_max, 5);
        assert_eq!(c.online.ranker, Ranker::Ccb);
        assert_eq!(c.online.epsilon, 1e-6);
        assert_eq!(c.online.max_iters, 100);
    }

    #[test]
    fn flags_beat_env_beat_file() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"theta_p": 0.1, "k_max": 3, "p0": 0.4}"#).unwrap();
        let e = env(&[("METARCA_THETA_P", "0.2"), ("METARCA_K_MAX", "4")]);
        let flags = ConfigLayer {
            theta_p: Some(0.25),
            ..ConfigLayer::default()
        };
        let c = GlobalConfig::resolve(Some(&file), e, &flags).unwrap();
        assert_eq!(c.online.theta_p, 0.25);
        assert_eq!(c.online.k_max, 4);
        assert_eq!(c.belief.p0, 0.4);
    }

    #[test]
    fn bad_env_value_names_the_variable() {
        let err = ConfigLayer::from_env(env(&[("METARCA_RANKER", "random")])).unwrap_err();
        assert!(err.to_string().contains("METARCA_RANKER"));
    }

    #[test]
    fn unknown_file_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.json");
        std::fs::write(&file, r#"{"theta": 0.1}"#).unwrap();
        assert!(matches!(ConfigLayer::load(&file), Err(ConfigError::Parse { .. })));
    }

    #[test]
    fn out_of_domain_values_fail_validation() {
        let flags = ConfigLayer {
            p0: Some(1.0),
            ..ConfigLayer::default()
        };
        assert!(GlobalConfig::resolve(None, env(&[]), &flags).is_err());
    }
}
