//! Experiment configuration, read from TOML.
//!
//! Required keys are checked by dotted path before typed deserialisation so
//! that a missing key is reported by name (`model.N`, `run.t_final`, ...).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sislab_core::analysis::level_of;
use sislab_core::{
    DynamicsThresholds, ErrorNorm, Expectation, ModelParams, ParameterSet, SchemeKind,
};

use crate::error::CliError;

const REQUIRED: &[&str] = &[
    "model.N",
    "model.beta",
    "model.sigma",
    "model.I0",
    "scheme.alpha",
    "scheme.theta",
    "scheme.step_sizes",
    "run.n_paths",
    "run.base_seed",
    "run.t_final",
    "run.h_reference",
    "outputs.dir",
    "outputs.prefix",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub scheme: SchemeSection,
    pub run: RunSection,
    pub outputs: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSection>,
}

/// `mu_plus_gamma` may be given directly or as separate `mu` and `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(rename = "N")]
    pub n: f64,
    pub beta: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_plus_gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "I0")]
    pub i0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub alpha: f64,
    pub theta: f64,
    pub step_sizes: Vec<f64>,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<String>,
}

fn default_schemes() -> Vec<String> {
    vec!["lcm".to_owned()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub n_paths: usize,
    pub base_seed: u64,
    pub t_final: f64,
    pub h_reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSection {
    /// `sup` (default) or `terminal`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    /// `auto` (default), `extinction` or `persistence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extinction_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_crossings: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    /// Initial values to sweep; defaults to `model.I0`.
    #[serde(default, rename = "I0s", skip_serializing_if = "Option::is_none")]
    pub i0s: Option<Vec<f64>>,
    pub sets: Vec<SetSection>,
}

/// A parameter set sharing `model.N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSection {
    pub label: String,
    pub beta: f64,
    pub sigma: f64,
    pub mu_plus_gamma: f64,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let table: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(e.message().to_owned()))?;
        for key in REQUIRED {
            if lookup(&table, key).is_none() {
                return Err(CliError::Config(format!("missing required key `{key}`")));
            }
        }
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    fn validate(&self) -> Result<(), CliError> {
        self.model()?;
        self.scheme_kinds()?;
        self.norm()?;
        self.thresholds()?;
        if self.scheme.step_sizes.is_empty() {
            return Err(CliError::Config("`scheme.step_sizes` is empty".into()));
        }
        if self.run.n_paths == 0 {
            return Err(CliError::Config("`run.n_paths` must be at least 1".into()));
        }
        for &h in &self.scheme.step_sizes {
            level_of(h, self.run.h_reference).map_err(|_| {
                CliError::Config(format!(
                    "`scheme.step_sizes` entry {h} is not a power-of-two multiple of `run.h_reference` = {}",
                    self.run.h_reference
                ))
            })?;
        }
        if let Some(trunc) = &self.truncation {
            self.parameter_sets()?;
            if trunc.i0s.as_ref().is_some_and(Vec::is_empty) {
                return Err(CliError::Config("`truncation.I0s` is empty".into()));
            }
        }
        Ok(())
    }

    pub fn mu_plus_gamma(&self) -> Result<f64, CliError> {
        let m = &self.model;
        match (m.mu_plus_gamma, m.mu, m.gamma) {
            (Some(v), None, None) => Ok(v),
            (None, Some(mu), Some(gamma)) => Ok(mu + gamma),
            (Some(_), _, _) => Err(CliError::Config(
                "`model.mu_plus_gamma` conflicts with `model.mu`/`model.gamma`".into(),
            )),
            (None, None, _) => Err(CliError::Config(
                "missing required key `model.mu_plus_gamma` (or `model.mu` and `model.gamma`)"
                    .into(),
            )),
            (None, Some(_), None) => Err(CliError::Config(
                "missing required key `model.gamma`".into(),
            )),
        }
    }

    pub fn model(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        ModelParams::new(m.n, m.beta, m.sigma, self.mu_plus_gamma()?, m.i0)
            .map_err(|e| CliError::Config(format!("model: {e}")))
    }

    pub fn scheme_kinds(&self) -> Result<Vec<SchemeKind>, CliError> {
        if self.scheme.schemes.is_empty() {
            return Err(CliError::Config("`scheme.schemes` is empty".into()));
        }
        self.scheme
            .schemes
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Config(format!("scheme.schemes: {e}")))
            })
            .collect()
    }

    pub fn norm(&self) -> Result<ErrorNorm, CliError> {
        match self.convergence.as_ref().and_then(|c| c.norm.as_deref()) {
            None => Ok(ErrorNorm::default()),
            Some(s) => s
                .parse()
                .map_err(|e| CliError::Config(format!("convergence.norm: {e}"))),
        }
    }

    pub fn thresholds(&self) -> Result<DynamicsThresholds, CliError> {
        let mut t = DynamicsThresholds::default();
        let Some(d) = &self.dynamics else {
            return Ok(t);
        };
        t.expectation = match d.expect.as_deref() {
            None | Some("auto") => Expectation::Auto,
            Some("extinction") => Expectation::Extinction,
            Some("persistence") => Expectation::Persistence,
            Some(other) => {
                return Err(CliError::Config(format!(
                    "`dynamics.expect` must be auto, extinction or persistence, got `{other}`"
                )))
            }
        };
        t.min_horizon = d.min_horizon.unwrap_or(t.min_horizon);
        t.margin = d.margin.unwrap_or(t.margin);
        t.extinction_floor = d.extinction_floor.unwrap_or(t.extinction_floor);
        t.min_crossings = d.min_crossings.unwrap_or(t.min_crossings);
        if !(t.margin >= 0.0 && t.margin < 1.0) {
            return Err(CliError::Config(
                "`dynamics.margin` must lie in [0, 1)".into(),
            ));
        }
        Ok(t)
    }

    pub fn parameter_sets(&self) -> Result<Vec<ParameterSet>, CliError> {
        let trunc = self
            .truncation
            .as_ref()
            .ok_or_else(|| CliError::Config("missing required key `truncation.sets`".into()))?;
        if trunc.sets.is_empty() {
            return Err(CliError::Config("`truncation.sets` is empty".into()));
        }
        trunc
            .sets
            .iter()
            .map(|s| {
                let model = ModelParams::new(
                    self.model.n,
                    s.beta,
                    s.sigma,
                    s.mu_plus_gamma,
                    self.model.i0,
                )
                .map_err(|e| CliError::Config(format!("truncation set `{}`: {e}", s.label)))?;
                Ok(ParameterSet {
                    label: s.label.clone(),
                    model,
                })
            })
            .collect()
    }

    pub fn truncation_i0s(&self) -> Vec<f64> {
        self.truncation
            .as_ref()
            .and_then(|t| t.i0s.clone())
            .unwrap_or_else(|| vec![self.model.i0])
    }
}

fn lookup<'a>(table: &'a toml::Table, dotted: &str) -> Option<&'a toml::Value> {
    let mut parts = dotted.split('.');
    let mut value = table.get(parts.next()?)?;
    for part in parts {
        value = value.as_table()?.get(part)?;
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
N = 100.0
beta = 0.5
sigma = 0.03
mu = 20.0
gamma = 25.0
I0 = 10.0

[scheme]
alpha = 0.1
theta = 2.0
step_sizes = [0.25, 0.125]

[run]
n_paths = 10
base_seed = 7
t_final = 1.0
h_reference = 0.0078125

[outputs]
dir = "out"
prefix = "t"
"#;

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.mu_plus_gamma().unwrap(), 45.0);
        assert_eq!(c.scheme_kinds().unwrap(), vec![SchemeKind::Lcm]);
        assert_eq!(c.norm().unwrap(), ErrorNorm::Sup);
        assert_eq!(c.truncation_i0s(), vec![10.0]);
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn shipped_configs_round_trip() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut seen = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let c = ExperimentConfig::load(&path).unwrap();
                assert_eq!(
                    ExperimentConfig::parse(&c.to_toml()).unwrap(),
                    c,
                    "{}",
                    path.display()
                );
                seen += 1;
            }
        }
        assert!(seen >= 5);
    }

    #[test]
    fn missing_keys_are_named() {
        for (line, key) in [
            ("N = 100.0", "`model.N`"),
            ("t_final = 1.0", "`run.t_final`"),
            ("prefix = \"t\"", "`outputs.prefix`"),
        ] {
            let err = ExperimentConfig::parse(&MINIMAL.replace(line, "")).unwrap_err();
            assert!(matches!(err, CliError::Config(_)));
            assert!(err.to_string().contains(key), "{err}");
        }
        let err = ExperimentConfig::parse(&MINIMAL.replace("mu = 20.0", "")).unwrap_err();
        assert!(err.to_string().contains("model.mu_plus_gamma"), "{err}");
    }

    #[test]
    fn rejects_bad_values() {
        let off_grid = MINIMAL.replace("[0.25, 0.125]", "[0.3]");
        assert!(ExperimentConfig::parse(&off_grid).is_err());
        let unknown = MINIMAL.replace("prefix = \"t\"", "prefix = \"t\"\nextra = 1");
        assert!(ExperimentConfig::parse(&unknown).is_err());
        let both = MINIMAL.replace("mu = 20.0", "mu = 20.0\nmu_plus_gamma = 45.0");
        assert!(ExperimentConfig::parse(&both).is_err());
        let bad_scheme = MINIMAL.replace("step_sizes", "schemes = [\"euler\"]\nstep_sizes");
        assert!(ExperimentConfig::parse(&bad_scheme).is_err());
        let bad_n = MINIMAL.replace("N = 100.0", "N = -1.0");
        assert!(matches!(
            ExperimentConfig::parse(&bad_n),
            Err(CliError::Config(_))
        ));
    }
}
