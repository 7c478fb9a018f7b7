//! JSON run configuration. Every key is optional; command-line flags win
//! over the file. The shape is published in `schema/config.schema.json`.

use std::path::{Path, PathBuf};

use g2flow::coflow::AnsatzParams;
use g2flow::torus::G2Model;
use serde::{Deserialize, Serialize};

pub const SCHEMA_PATH: &str = "schema/config.schema.json";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub epsilon: Option<f64>,
    #[serde(rename = "A")]
    pub a_mod: Option<f64>,
    pub c0: Option<f64>,
    pub rm0_sq: Option<f64>,
    pub t_end: Option<f64>,
    pub tol: Option<f64>,
    pub grid_n: Option<usize>,
    pub modes: Option<usize>,
    pub model: Option<G2Model>,
    pub output_path: Option<PathBuf>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source} (see {SCHEMA_PATH})")]
    Parse { path: PathBuf, source: serde_json::Error },
    #[error("{0} (see {SCHEMA_PATH})")]
    Invalid(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let config: Config =
            serde_json::from_str(&text).map_err(|source| ConfigError::Parse { path: path.into(), source })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        path.map_or_else(|| Ok(Config::default()), Self::load)
    }

    /// Range checks the schema states but serde cannot.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(ConfigError::Invalid(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        let nonnegative = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x >= 0.0) => {
                Err(ConfigError::Invalid(format!("{name} must be nonnegative, got {x}")))
            }
            _ => Ok(()),
        };
        positive("epsilon", self.epsilon)?;
        positive("t_end", self.t_end)?;
        positive("tol", self.tol)?;
        nonnegative("c0", self.c0)?;
        nonnegative("rm0_sq", self.rm0_sq)?;
        nonnegative("amplitude", self.amplitude)?;
        if self.a_mod.is_some_and(|a| !a.is_finite()) {
            return Err(ConfigError::Invalid("A must be finite".into()));
        }
        if let Some(n) = self.grid_n {
            if n < 4 || n % 2 != 0 {
                return Err(ConfigError::Invalid(format!("grid_n must be even and at least 4, got {n}")));
            }
        }
        if self.modes == Some(0) {
            return Err(ConfigError::Invalid("modes must be at least 1".into()));
        }
        Ok(())
    }

    /// Overlay values given on the command line.
    pub fn merged(mut self, over: Config) -> Result<Self, ConfigError> {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(epsilon, a_mod, c0, rm0_sq, t_end, tol, grid_n, modes, model, output_path, amplitude, seed);
        self.validate()?;
        Ok(self)
    }

    pub fn params(&self) -> Result<AnsatzParams, ConfigError> {
        let (Some(epsilon), Some(a_mod)) = (self.epsilon, self.a_mod) else {
            return Err(ConfigError::Invalid("both epsilon and A are required".into()));
        };
        let p = AnsatzParams { epsilon, a_mod, c0: self.c0.unwrap_or(0.0), rm0_sq: self.rm0_sq.unwrap_or(0.0) };
        p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<Config>(r#"{"epsilon": 1, "epsilom": 2}"#).unwrap_err();
        assert!(err.to_string().contains("epsilom"));
    }

    #[test]
    fn flags_override_file() {
        let file: Config = serde_json::from_str(r#"{"epsilon": 1, "A": 0.5, "tol": 1e-9}"#).unwrap();
        let merged = file.merged(Config { a_mod: Some(2.0), ..Default::default() }).unwrap();
        assert_eq!((merged.epsilon, merged.a_mod, merged.tol), (Some(1.0), Some(2.0), Some(1e-9)));
        assert!(Config { epsilon: Some(-1.0), ..Default::default() }.validate().is_err());
        assert!(Config { grid_n: Some(7), ..Default::default() }.validate().is_err());
    }

    #[test]
    fn schema_lists_exactly_the_config_keys() {
        let schema: serde_json::Value =
            serde_json::from_str(include_str!("../../../schema/config.schema.json")).unwrap();
        assert_eq!(schema["additionalProperties"], false);
        let mut in_schema: Vec<String> = schema["properties"].as_object().unwrap().keys().cloned().collect();
        in_schema.sort();
        let full = Config {
            epsilon: Some(1.0),
            a_mod: Some(0.0),
            c0: Some(0.0),
            rm0_sq: Some(0.0),
            t_end: Some(1.0),
            tol: Some(1e-10),
            grid_n: Some(16),
            modes: Some(2),
            model: Some(G2Model::Product),
            output_path: Some("x".into()),
            amplitude: Some(0.05),
            seed: Some(1),
        };
        let mut in_struct: Vec<String> =
            serde_json::to_value(full).unwrap().as_object().unwrap().keys().cloned().collect();
        in_struct.sort();
        assert_eq!(in_schema, in_struct);
    }
}
