use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ArmlError, Result};
use crate::oracle::GaussianFamilySpec;
use crate::reweight::TaskWeights;
use crate::trainer::TrainerConfig;

use super::synthetic::{GaussianFamilyGen, RegressionGen};

fn default_gamma() -> f64 {
    1.5
}

/// Which weighting scheme drives `alpha`. Step sizes come from
/// `trainer.weight_lr`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReweighterSpec {
    Arml {
        /// Decay of an EMA over gradient snapshots; off when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snapshot_ema: Option<f64>,
    },
    Uniform,
    Fixed {
        weights: TaskWeights,
    },
    Adaloss,
    Gradnorm {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Cosine,
    OlAux,
    Grid {
        candidates: Vec<TaskWeights>,
    },
}

impl Default for ReweighterSpec {
    fn default() -> Self {
        ReweighterSpec::Arml { snapshot_ema: None }
    }
}

fn default_noise_scale() -> f64 {
    0.25
}

/// Where the Gaussian family comes from: inline or generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySource {
    Inline(GaussianFamilySpec),
    Generate(GaussianFamilyGen),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianProblem {
    pub family: FamilySource,
    /// Number of main-task observations.
    pub main_n: usize,
    /// Observation covariance is `main_noise_scale * Σ`.
    #[serde(default = "default_noise_scale")]
    pub main_noise_scale: f64,
    #[serde(default)]
    pub data_seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Logistic,
    Mlp,
}

fn default_model() -> ModelKind {
    ModelKind::Linear
}

fn default_noise_var() -> f64 {
    0.25
}

fn default_init_std() -> f64 {
    0.1
}

/// How datasets are turned into task likelihoods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default = "default_model")]
    pub kind: ModelKind,
    /// Hidden layer sizes for `mlp`; the output layer is a per-task head.
    #[serde(default)]
    pub hidden: Vec<usize>,
    /// Observation noise variance of the squared-loss models.
    #[serde(default = "default_noise_var")]
    pub noise_var: f64,
    /// Std of the random initialization of network weights.
    #[serde(default = "default_init_std")]
    pub init_std: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            kind: default_model(),
            hidden: Vec::new(),
            noise_var: default_noise_var(),
            init_std: default_init_std(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionProblem {
    pub data: RegressionGen,
    #[serde(default)]
    pub model: ModelSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvProblem {
    pub main: PathBuf,
    pub aux: Vec<PathBuf>,
    #[serde(default)]
    pub validation: Option<PathBuf>,
    #[serde(default)]
    pub model: ModelSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Gaussian(GaussianProblem),
    Regression(RegressionProblem),
    Csv(CsvProblem),
}

fn default_n_batches() -> usize {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    #[serde(default = "default_n_batches")]
    pub n_batches: usize,
    /// Step size for the comparison; the first scheduled one by default.
    #[serde(default)]
    pub lr: Option<f64>,
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        DiagnosticsSpec {
            n_batches: default_n_batches(),
            lr: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub trainer: TrainerConfig,
    #[serde(default)]
    pub reweighter: ReweighterSpec,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(ArmlError::validation(
                "name",
                "must be non-empty and use only [A-Za-z0-9._-]",
            ));
        }
        self.trainer.validate()?;
        match &self.reweighter {
            ReweighterSpec::Arml {
                snapshot_ema: Some(d),
            } if !(0.0..1.0).contains(d) => {
                return Err(ArmlError::validation("reweighter.snapshot_ema", "must be in [0, 1)"));
            }
            ReweighterSpec::Gradnorm { gamma } if !(*gamma > 0.0) => {
                return Err(ArmlError::validation("reweighter.gamma", "must be > 0"));
            }
            ReweighterSpec::Grid { candidates } if candidates.is_empty() => {
                return Err(ArmlError::validation("reweighter.candidates", "needs at least one candidate"));
            }
            _ => {}
        }
        let k = self.problem.num_aux();
        let check_k = |field: &str, w: &TaskWeights| {
            if w.k() != k {
                Err(ArmlError::validation(
                    field,
                    format!("has {} weights for {k} auxiliary tasks", w.k()),
                ))
            } else {
                Ok(())
            }
        };
        match &self.reweighter {
            ReweighterSpec::Fixed { weights } => check_k("reweighter.weights", weights)?,
            ReweighterSpec::Grid { candidates } => {
                for c in candidates {
                    check_k("reweighter.candidates", c)?;
                }
            }
            _ => {}
        }
        if self.diagnostics.n_batches < 2 {
            return Err(ArmlError::validation("diagnostics.n_batches", "must be >= 2"));
        }
        if let Some(lr) = self.diagnostics.lr {
            if !(lr > 0.0) {
                return Err(ArmlError::validation("diagnostics.lr", "must be > 0"));
            }
        }
        self.problem.validate()
    }
}

fn prefixed(prefix: &str, e: ArmlError) -> ArmlError {
    match e {
        ArmlError::Validation { field, message } => ArmlError::Validation {
            field: format!("{prefix}.{field}"),
            message,
        },
        other => other,
    }
}

impl ProblemSpec {
    pub fn num_aux(&self) -> usize {
        match self {
            ProblemSpec::Gaussian(g) => match &g.family {
                FamilySource::Inline(s) => s.tasks.len(),
                FamilySource::Generate(gen) => gen.k,
            },
            ProblemSpec::Regression(r) => r.data.relevance.len(),
            ProblemSpec::Csv(c) => c.aux.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ProblemSpec::Gaussian(g) => {
                if g.main_n == 0 {
                    return Err(ArmlError::validation("problem.main_n", "must be >= 1"));
                }
                if !(g.main_noise_scale > 0.0) {
                    return Err(ArmlError::validation("problem.main_noise_scale", "must be > 0"));
                }
                match &g.family {
                    FamilySource::Generate(gen) => gen.validate().map_err(|e| prefixed("problem.family.generate", e)),
                    FamilySource::Inline(s) => {
                        if s.tasks.is_empty() {
                            return Err(ArmlError::validation("problem.family.inline.tasks", "must not be empty"));
                        }
                        Ok(())
                    }
                }
            }
            ProblemSpec::Regression(r) => {
                r.data.validate().map_err(|e| prefixed("problem.data", e))?;
                r.model.validate()
            }
            ProblemSpec::Csv(c) => {
                if c.aux.is_empty() {
                    return Err(ArmlError::validation("problem.aux", "needs at least one auxiliary dataset"));
                }
                let paths = std::iter::once(("problem.main", &c.main))
                    .chain(c.aux.iter().map(|p| ("problem.aux", p)))
                    .chain(c.validation.iter().map(|p| ("problem.validation", p)));
                for (field, p) in paths {
                    if !p.is_file() {
                        return Err(ArmlError::validation(field, format!("file {} does not exist", p.display())));
                    }
                }
                c.model.validate()
            }
        }
    }
}

impl ModelSpec {
    fn validate(&self) -> Result<()> {
        if !(self.noise_var > 0.0) {
            return Err(ArmlError::validation("problem.model.noise_var", "must be > 0"));
        }
        if !(self.init_std >= 0.0) {
            return Err(ArmlError::validation("problem.model.init_std", "must be >= 0"));
        }
        match self.kind {
            ModelKind::Mlp if self.hidden.is_empty() => Err(ArmlError::validation(
                "problem.model.hidden",
                "an mlp needs at least one hidden layer",
            )),
            ModelKind::Linear | ModelKind::Logistic if !self.hidden.is_empty() => Err(ArmlError::validation(
                "problem.model.hidden",
                "only mlp models take hidden layers",
            )),
            _ if self.hidden.contains(&0) => {
                Err(ArmlError::validation("problem.model.hidden", "layer sizes must be >= 1"))
            }
            _ => Ok(()),
        }
    }
}

/// Marker of a run manifest; [`load_config`] accepts manifests too.
pub const MANIFEST_KIND: &str = "arml-run-manifest";

fn split_missing_field(path: &str, message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    let name = &rest[..rest.find('`')?];
    Some(if path.is_empty() || path == "." {
        name.to_string()
    } else {
        format!("{path}.{name}")
    })
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    match serde_path_to_error::deserialize::<_, ExperimentConfig>(de) {
        Ok(cfg) => Ok(cfg),
        Err(err) => {
            let field = err.path().to_string();
            let inner = err.into_inner();
            if let Ok(value) = serde_json::from_str::<serde_json::Value>(text) {
                if value.get("kind").and_then(|k| k.as_str()) == Some(MANIFEST_KIND) {
                    if let Some(cfg) = value.get("config") {
                        let echoed = serde_json::to_string_pretty(cfg).expect("value serializes");
                        return parse_config(&echoed, path);
                    }
                }
            }
            let message = inner.to_string();
            if inner.is_data() {
                let field = split_missing_field(&field, &message).unwrap_or(field);
                Err(ArmlError::validation(field, message))
            } else {
                Err(ArmlError::Parse {
                    path: path.to_path_buf(),
                    line: inner.line(),
                    column: inner.column(),
                    message,
                })
            }
        }
    }
}

/// Reads, parses and validates a config. Relative dataset paths resolve
/// against the config file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ArmlError::io(path, e))?;
    let mut cfg = parse_config(&text, path)?;
    if let ProblemSpec::Csv(c) = &mut cfg.problem {
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut c.main);
        c.aux.iter_mut().for_each(fix);
        c.validation.iter_mut().for_each(fix);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "tiny",
        "trainer": {"iterations": 10},
        "problem": {"kind": "gaussian", "main_n": 10,
                    "family": {"generate": {"dim": 2, "k": 2}}}
    }"#;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        let cfg = parse_config(text, Path::new("cfg.json"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn minimal_gets_defaults() {
        let cfg = parse(MINIMAL).unwrap();
        assert_eq!(cfg.trainer.weight_lr, 0.005);
        assert_eq!(cfg.reweighter, ReweighterSpec::Arml { snapshot_ema: None });
        assert_eq!(cfg.trainer.batch_size_main, 64);
        assert_eq!(cfg.diagnostics.n_batches, 200);
    }

    #[test]
    fn missing_iterations_is_named() {
        let text = MINIMAL.replace(r#""iterations": 10"#, r#""seed": 1"#);
        match parse(&text).unwrap_err() {
            ArmlError::Validation { field, .. } => assert_eq!(field, "trainer.iterations"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace(r#""iterations": 10"#, r#""iterations": 10, "momentum": 0.9"#);
        match parse(&text).unwrap_err() {
            ArmlError::Validation { field, message } => {
                assert_eq!(field, "trainer.momentum");
                assert!(message.contains("unknown field"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let text = "{\n  \"name\": \"x\",\n  oops\n}";
        match parse(text).unwrap_err() {
            ArmlError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_violation_is_named() {
        let text = MINIMAL.replace(r#""iterations": 10"#, r#""iterations": 10, "weight_lr": -1"#);
        match parse(&text).unwrap_err() {
            ArmlError::Validation { field, .. } => assert_eq!(field, "trainer.weight_lr"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_candidates_must_match_k() {
        let text = MINIMAL.replace(
            r#""name": "tiny","#,
            r#""name": "tiny", "reweighter": {"kind": "grid", "candidates": [[1, 1, 1]]},"#,
        );
        match parse(&text).unwrap_err() {
            ArmlError::Validation { field, .. } => assert_eq!(field, "reweighter.candidates"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_csv_file_is_named() {
        let text = r#"{
            "name": "csv", "trainer": {"iterations": 1},
            "problem": {"kind": "csv", "main": "/no/such/main.csv", "aux": ["/no/such/aux.csv"]}
        }"#;
        match parse(text).unwrap_err() {
            ArmlError::Validation { field, .. } => assert_eq!(field, "problem.main"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse(MINIMAL).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }
}
