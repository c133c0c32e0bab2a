//! The JSON task configuration read by every command except `eval`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::{self, Deserializer};
use serde::Deserialize;

use progind::chains::{ShardStrategy, SyncPolicy};
use progind::grammar::{default_float_pool, GrammarConfig, ProductionWeights};
use progind::inference::Problem;
use progind::lang::{Primitives, Type};
use progind::likelihood::{
    parse_observations, AbcKernel, AnnealSchedule, LikelihoodConfig, NoiseModel, Observations, TaskKind,
};
use progind::TaskSignature;

use crate::Failure;

pub const SCHEMA: u64 = 1;

/// A type written as an s-expression string, e.g. `"int"` or `"(-> int int)"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TypeName(pub Type);

impl<'de> Deserialize<'de> for TypeName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse::<Type>()
            .map(TypeName)
            .map_err(|_| de::Error::custom(format!("unknown type `{s}`")))
    }
}

/// A float pool entry: a number, or one of the names `"pi"` and `"e"`.
#[derive(Clone, Copy, Debug)]
pub struct PoolFloat(pub f64);

impl<'de> Deserialize<'de> for PoolFloat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(PoolFloat(x)),
            Raw::Name(n) if n == "pi" => Ok(PoolFloat(PI)),
            Raw::Name(n) if n == "e" => Ok(PoolFloat(E)),
            Raw::Name(n) => Err(de::Error::custom(format!("unknown float constant `{n}`"))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSection {
    pub kind: TaskKind,
    #[serde(default)]
    pub inputs: Vec<TypeName>,
    pub output: TypeName,
    /// JSON-lines file, relative to the config file.
    pub observations: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrammarSection {
    pub weights: ProductionWeights,
    pub type_weights: BTreeMap<String, ProductionWeights>,
    pub int_pool: Vec<i64>,
    pub float_pool: Vec<PoolFloat>,
    pub bool_pool: Vec<bool>,
    pub let_types: Vec<(TypeName, f64)>,
    pub max_depth: usize,
    pub max_let_nesting: usize,
    pub adaptor: bool,
    pub alpha: f64,
    pub discount: f64,
    /// Subset of the standard library; all of it when absent.
    pub primitives: Option<Vec<String>>,
}

impl Default for GrammarSection {
    fn default() -> Self {
        let g = GrammarConfig::default();
        GrammarSection {
            weights: g.weights,
            type_weights: BTreeMap::new(),
            int_pool: g.int_pool,
            float_pool: default_float_pool().into_iter().map(PoolFloat).collect(),
            bool_pool: g.bool_pool,
            let_types: g.let_types.into_iter().map(|(t, w)| (TypeName(t), w)).collect(),
            max_depth: g.max_depth,
            max_let_nesting: g.max_let_nesting,
            adaptor: g.adaptor_enabled,
            alpha: g.alpha,
            discount: g.discount,
            primitives: None,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LikelihoodSection {
    pub noise: NoiseModel,
    pub kernel: AbcKernel,
    pub sampler_runs: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainsSection {
    pub n_chains: usize,
    pub iterations: u64,
    pub thinning: u64,
    pub sync_period: u64,
    pub shard: ShardStrategy,
}

impl Default for ChainsSection {
    fn default() -> Self {
        ChainsSection {
            n_chains: 1,
            iterations: 10_000,
            thinning: 10,
            sync_period: 1000,
            shard: ShardStrategy::RoundRobin,
        }
    }
}

fn default_budget() -> u64 {
    10_000
}

fn default_predict_runs() -> usize {
    100
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub schema: u64,
    pub seed: u64,
    pub task: TaskSection,
    #[serde(default)]
    pub grammar: GrammarSection,
    #[serde(default)]
    pub likelihood: LikelihoodSection,
    #[serde(default)]
    pub anneal: AnnealSchedule,
    #[serde(default)]
    pub chains: ChainsSection,
    /// Evaluation step budget per model run.
    #[serde(default = "default_budget")]
    pub budget: u64,
    /// Relative to the config file.
    pub output_dir: PathBuf,
    /// Inputs at which to report the posterior predictive distribution.
    #[serde(default)]
    pub predict: Vec<Vec<serde_json::Value>>,
    #[serde(default = "default_predict_runs")]
    pub predict_runs: usize,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A parsed config plus the directory its relative paths resolve against.
#[derive(Debug)]
pub struct Loaded {
    pub config: TaskConfig,
    pub base: PathBuf,
}

pub fn parse(text: &str) -> Result<TaskConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: TaskConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            ConfigError(e.inner().to_string())
        } else {
            ConfigError(format!("{path}: {}", e.inner()))
        }
    })?;
    config.check()?;
    Ok(config)
}

pub fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    let config = parse(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { config, base })
}

impl TaskConfig {
    fn check(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError(m));
        if self.schema != SCHEMA {
            return fail(format!(
                "schema: unsupported version {}, expected {SCHEMA}",
                self.schema
            ));
        }
        let sig = self.signature();
        for (i, t) in sig.inputs.iter().enumerate() {
            if !t.is_base() {
                return fail(format!(
                    "task.inputs[{i}]: only int, float and bool inputs are supported, got {t}"
                ));
            }
        }
        if !sig.output.is_base() {
            return fail(format!(
                "task.output: only int, float and bool outputs are supported, got {}",
                sig.output
            ));
        }
        if self.task.kind == TaskKind::Sampler && !sig.inputs.is_empty() {
            return fail("task.inputs: sampler tasks take no inputs".into());
        }
        for key in self.grammar.type_weights.keys() {
            if key.parse::<Type>().is_err() {
                return fail(format!("grammar.type_weights: unknown type `{key}`"));
            }
        }
        self.grammar_config()
            .map_err(|e| ConfigError(format!("grammar: {e}")))?;
        self.likelihood_config()
            .validate()
            .map_err(|e| ConfigError(format!("likelihood: {e}")))?;
        let c = &self.chains;
        if c.n_chains == 0 {
            return fail("chains.n_chains: must be at least 1".into());
        }
        if c.iterations == 0 {
            return fail("chains.iterations: must be at least 1".into());
        }
        if c.thinning == 0 {
            return fail("chains.thinning: must be at least 1".into());
        }
        if c.sync_period == 0 {
            return fail("chains.sync_period: must be at least 1".into());
        }
        if self.budget == 0 {
            return fail("budget: must be at least 1".into());
        }
        if self.predict_runs == 0 {
            return fail("predict_runs: must be at least 1".into());
        }
        for (i, input) in self.predict.iter().enumerate() {
            self.parse_inputs(input)
                .map_err(|e| ConfigError(format!("predict[{i}]: {e}")))?;
        }
        Ok(())
    }

    pub fn signature(&self) -> TaskSignature {
        TaskSignature::new(
            self.task.inputs.iter().map(|t| t.0.clone()).collect(),
            self.task.output.0.clone(),
        )
    }

    pub fn grammar_config(&self) -> Result<GrammarConfig, String> {
        let g = &self.grammar;
        let primitives = match &g.primitives {
            None => Primitives::standard(),
            Some(names) => Primitives::standard().restrict(names).map_err(|e| e.to_string())?,
        };
        let type_weights = g
            .type_weights
            .iter()
            .map(|(k, w)| {
                k.parse::<Type>()
                    .map(|t| (t, *w))
                    .map_err(|_| format!("unknown type `{k}`"))
            })
            .collect::<Result<_, _>>()?;
        let cfg = GrammarConfig {
            weights: g.weights,
            type_weights,
            int_pool: g.int_pool.clone(),
            float_pool: g.float_pool.iter().map(|x| x.0).collect(),
            bool_pool: g.bool_pool.clone(),
            let_types: g.let_types.iter().map(|(t, w)| (t.0.clone(), *w)).collect(),
            max_depth: g.max_depth,
            max_let_nesting: g.max_let_nesting,
            adaptor_enabled: g.adaptor,
            alpha: g.alpha,
            discount: g.discount,
            primitives: Arc::new(primitives),
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn likelihood_config(&self) -> LikelihoodConfig {
        LikelihoodConfig {
            noise: self.likelihood.noise,
            kernel: self.likelihood.kernel,
            sampler_runs: self.likelihood.sampler_runs,
            anneal: self.anneal,
        }
    }

    pub fn sync(&self) -> SyncPolicy {
        SyncPolicy {
            period: self.chains.sync_period,
        }
    }

    /// The `p` at which results are reported: the schedule's value at the
    /// last iteration.
    pub fn final_p(&self) -> f64 {
        self.anneal.at(self.chains.iterations - 1)
    }

    pub fn parse_inputs(&self, raw: &[serde_json::Value]) -> Result<Vec<progind::lang::Value>, String> {
        let sig = self.signature();
        if raw.len() != sig.inputs.len() {
            return Err(format!("expected {} inputs, got {}", sig.inputs.len(), raw.len()));
        }
        raw.iter()
            .zip(&sig.inputs)
            .map(|(v, t)| progind::likelihood::value_from_json(v, t))
            .collect()
    }
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base.join(p)
    }

    pub fn observations(&self) -> Result<Observations, Failure> {
        let path = self.resolve(&self.config.task.observations);
        let text = std::fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        parse_observations(&text, self.config.task.kind, &self.config.signature())
            .map_err(|e| Failure::Observations(format!("{}: {e}", path.display())))
    }

    /// The inference problem this config describes, over `observations`.
    pub fn problem_with(&self, observations: Observations) -> Problem {
        let c = &self.config;
        Problem {
            signature: c.signature(),
            observations,
            grammar: c.grammar_config().expect("validated at load"),
            likelihood: c.likelihood_config(),
            budget: c.budget,
        }
    }
}
