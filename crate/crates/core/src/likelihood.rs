//! Noisy observation likelihoods and the annealing schedule for `p`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use crate::lang::{apply_model, Closure, EvalOutcome, Expr, Primitives, Type, Value};
use crate::task::TaskSignature;

#[derive(Clone, Debug, PartialEq)]
pub struct IoPair {
    pub inputs: Vec<Value>,
    pub output: Value,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observations {
    Io(Vec<IoPair>),
    /// Draws from the target distribution; the model takes no inputs.
    Samples(Vec<Value>),
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Io(v) => v.len(),
            Observations::Samples(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The observations at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Observations {
        match self {
            Observations::Io(v) => Observations::Io(indices.iter().map(|&i| v[i].clone()).collect()),
            Observations::Samples(v) => Observations::Samples(indices.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("observation line {line}: {message}")]
pub struct ObservationError {
    pub line: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    IoPairs,
    Sampler,
}

/// Converts a JSON number or boolean to a value of type `ty`.
pub fn value_from_json(v: &Json, ty: &Type) -> Result<Value, String> {
    match (ty, v) {
        (Type::Int, Json::Number(n)) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| format!("expected an integer, got {n}")),
        (Type::Float, Json::Number(n)) => n
            .as_f64()
            .map(Value::Float)
            .ok_or_else(|| format!("expected a float, got {n}")),
        (Type::Bool, Json::Bool(b)) => Ok(Value::Bool(*b)),
        (Type::Func(..), _) => Err(format!("values of type {ty} cannot be observed")),
        _ => Err(format!("expected a value of type {ty}, got {v}")),
    }
}

/// Parses JSON-lines observations: `{"in": [...], "out": v}` per line for
/// IO tasks, `{"sample": v}` for sampler tasks. Blank lines are skipped.
pub fn parse_observations(text: &str, kind: TaskKind, sig: &TaskSignature) -> Result<Observations, ObservationError> {
    let mut pairs = Vec::new();
    let mut samples = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fail = |message: String| ObservationError { line, message };
        if raw.trim().is_empty() {
            continue;
        }
        let json: Json = serde_json::from_str(raw).map_err(|e| fail(e.to_string()))?;
        let obj = json.as_object().ok_or_else(|| fail("expected a JSON object".into()))?;
        match kind {
            TaskKind::IoPairs => {
                if obj.len() != 2 {
                    return Err(fail("expected exactly the keys \"in\" and \"out\"".into()));
                }
                let ins = obj
                    .get("in")
                    .and_then(Json::as_array)
                    .ok_or_else(|| fail("missing \"in\" list".into()))?;
                if ins.len() != sig.inputs.len() {
                    return Err(fail(format!("expected {} inputs, got {}", sig.inputs.len(), ins.len())));
                }
                let inputs = ins
                    .iter()
                    .zip(&sig.inputs)
                    .map(|(v, t)| value_from_json(v, t))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(fail)?;
                let out = obj.get("out").ok_or_else(|| fail("missing \"out\"".into()))?;
                let output = value_from_json(out, &sig.output).map_err(fail)?;
                pairs.push(IoPair { inputs, output });
            }
            TaskKind::Sampler => {
                if obj.len() != 1 {
                    return Err(fail("expected exactly the key \"sample\"".into()));
                }
                let v = obj.get("sample").ok_or_else(|| fail("missing \"sample\"".into()))?;
                samples.push(value_from_json(v, &sig.output).map_err(fail)?);
            }
        }
    }
    Ok(match kind {
        TaskKind::IoPairs => Observations::Io(pairs),
        TaskKind::Sampler => Observations::Samples(samples),
    })
}

/// Binomial observation noise with success probability `p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub p: f64,
    pub match_tolerance: f64,
    /// Model runs per likelihood evaluation (`M`).
    pub runs: usize,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p: 0.9,
            match_tolerance: 1e-9,
            runs: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbcKernel {
    pub epsilon: f64,
    pub bins: usize,
}

impl Default for AbcKernel {
    fn default() -> Self {
        AbcKernel {
            epsilon: 0.05,
            bins: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnealKind {
    Constant,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnealSchedule {
    pub kind: AnnealKind,
    pub p0: f64,
    pub p_max: f64,
    pub gamma: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            kind: AnnealKind::Constant,
            p0: 0.9,
            p_max: 1.0 - 1e-9,
            gamma: 0.999,
        }
    }
}

impl AnnealSchedule {
    pub fn constant(p: f64) -> Self {
        AnnealSchedule {
            p0: p,
            ..Default::default()
        }
    }

    /// Success probability at iteration `t`.
    pub fn at(&self, t: u64) -> f64 {
        match self.kind {
            AnnealKind::Constant => self.p0,
            AnnealKind::Geometric => {
                let exp = i32::try_from(t).unwrap_or(i32::MAX);
                (1.0 - (1.0 - self.p0) * self.gamma.powi(exp)).min(self.p_max)
            }
        }
    }
}

pub fn anneal(schedule: &AnnealSchedule, t: u64) -> f64 {
    schedule.at(t)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LikelihoodError {
    #[error("noise p must lie in (0, 1], got {0}")]
    P(f64),
    #[error("runs must be at least 1")]
    Runs,
    #[error("match tolerance must be finite and non-negative")]
    Tolerance,
    #[error("epsilon must be positive and finite")]
    Epsilon,
    #[error("bins must be at least 1")]
    Bins,
    #[error("anneal schedule: {0}")]
    Anneal(String),
}

/// Everything needed to turn a program and its observations into a
/// log-likelihood.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LikelihoodConfig {
    pub noise: NoiseModel,
    pub kernel: AbcKernel,
    /// Model draws per ABC evaluation; `None` draws as many as there are
    /// observed samples.
    pub sampler_runs: Option<usize>,
    pub anneal: AnnealSchedule,
}

impl LikelihoodConfig {
    pub fn validate(&self) -> Result<(), LikelihoodError> {
        let n = &self.noise;
        if !(n.p > 0.0 && n.p <= 1.0) {
            return Err(LikelihoodError::P(n.p));
        }
        if n.runs == 0 || self.sampler_runs == Some(0) {
            return Err(LikelihoodError::Runs);
        }
        if !(n.match_tolerance.is_finite() && n.match_tolerance >= 0.0) {
            return Err(LikelihoodError::Tolerance);
        }
        if !(self.kernel.epsilon.is_finite() && self.kernel.epsilon > 0.0) {
            return Err(LikelihoodError::Epsilon);
        }
        if self.kernel.bins == 0 {
            return Err(LikelihoodError::Bins);
        }
        let a = &self.anneal;
        if !(a.p0 > 0.0 && a.p0 <= 1.0) {
            return Err(LikelihoodError::Anneal(format!("p0 must lie in (0, 1], got {}", a.p0)));
        }
        if a.kind == AnnealKind::Geometric {
            if !(a.gamma > 0.0 && a.gamma < 1.0) {
                return Err(LikelihoodError::Anneal(format!(
                    "gamma must lie in (0, 1), got {}",
                    a.gamma
                )));
            }
            if !(a.p_max >= a.p0 && a.p_max <= 1.0 - 1e-9) {
                return Err(LikelihoodError::Anneal(format!(
                    "p_max must lie in [p0, 1 - 1e-9], got {}",
                    a.p_max
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of running a model against its observations, reusable across
/// values of `p`.
#[derive(Clone, Debug, PartialEq)]
pub enum Fit {
    /// Matches per run out of `n` IO pairs.
    Matches { counts: Vec<usize>, n: usize },
    /// A log-likelihood that does not depend on `p`.
    Fixed(f64),
}

impl Fit {
    pub fn log_lik(&self, p: f64) -> f64 {
        match self {
            Fit::Fixed(v) => *v,
            Fit::Matches { counts, n } => {
                let logs: Vec<f64> = counts.iter().map(|&k| binomial_log_pmf(*n, k, p)).collect();
                log_mean_exp(&logs)
            }
        }
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// `log C(n,k) p^k (1-p)^(n-k)` with `0^0 = 1`.
pub fn binomial_log_pmf(n: usize, k: usize, p: f64) -> f64 {
    assert!(k <= n, "k = {k} exceeds n = {n}");
    let term = |count: usize, prob: f64| if count == 0 { 0.0 } else { count as f64 * prob.ln() };
    ln_choose(n, k) + term(k, p) + term(n - k, 1.0 - p)
}

pub fn log_mean_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || xs.is_empty() {
        return f64::NEG_INFINITY;
    }
    m + (xs.iter().map(|x| (x - m).exp()).sum::<f64>() / xs.len() as f64).ln()
}

/// Equal values; floats within `tol`.
pub fn values_match(got: &Value, want: &Value, tol: f64) -> bool {
    match (got, want) {
        (Value::Float(a), Value::Float(b)) => a == b || (a - b).abs() <= tol,
        _ => got == want,
    }
}

/// True when `expr` calls no stochastic primitive.
pub fn is_deterministic(expr: &Expr, prims: &Primitives) -> bool {
    let here = match expr {
        Expr::App(f, _) => prims.get(f).is_none_or(|p| p.deterministic),
        _ => true,
    };
    here && expr.children().into_iter().all(|c| is_deterministic(c, prims))
}

pub fn fit_io(
    model: &Arc<Closure>,
    obs: &[IoPair],
    noise: &NoiseModel,
    prims: &Primitives,
    rng: &mut dyn RngCore,
    budget: u64,
) -> Fit {
    let runs = if is_deterministic(&model.body, prims) {
        1
    } else {
        noise.runs
    };
    let counts = (0..runs)
        .map(|_| {
            obs.iter()
                .filter(|o| match apply_model(model, &o.inputs, prims, rng, budget) {
                    EvalOutcome::Ok(v) => values_match(&v, &o.output, noise.match_tolerance),
                    _ => false,
                })
                .count()
        })
        .collect();
    Fit::Matches { counts, n: obs.len() }
}

/// Log of the mean over runs of the Binomial likelihood of the match count.
pub fn loglik_io(
    model: &Arc<Closure>,
    obs: &[IoPair],
    noise: &NoiseModel,
    prims: &Primitives,
    rng: &mut dyn RngCore,
    budget: u64,
) -> f64 {
    fit_io(model, obs, noise, prims, rng, budget).log_lik(noise.p)
}

/// L1 distance between the normalized histograms of two non-empty samples.
/// Discrete values get one bin each; floats share `bins` equal-width bins
/// over the joint range.
pub fn histogram_l1(a: &[Value], b: &[Value], bins: usize) -> f64 {
    let continuous = a.iter().chain(b).any(|v| matches!(v, Value::Float(_)));
    let key = |v: &Value| -> i128 {
        match v {
            Value::Int(i) => i128::from(*i),
            Value::Bool(x) => i128::from(*x),
            _ => 0,
        }
    };
    let mut hist: BTreeMap<i128, (usize, usize)> = BTreeMap::new();
    if continuous {
        let xs = || a.iter().chain(b).filter_map(Value::as_f64);
        let lo = xs().fold(f64::INFINITY, f64::min);
        let hi = xs().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / bins as f64;
        let bin = |v: &Value| -> i128 {
            let x = v.as_f64().unwrap_or(lo);
            if !width.is_finite() || width <= 0.0 {
                return 0;
            }
            (((x - lo) / width).floor() as i128).clamp(0, bins as i128 - 1)
        };
        for v in a {
            hist.entry(bin(v)).or_default().0 += 1;
        }
        for v in b {
            hist.entry(bin(v)).or_default().1 += 1;
        }
    } else {
        for v in a {
            hist.entry(key(v)).or_default().0 += 1;
        }
        for v in b {
            hist.entry(key(v)).or_default().1 += 1;
        }
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    hist.values().map(|&(x, y)| (x as f64 / na - y as f64 / nb).abs()).sum()
}

/// Draws `runs` model outputs; `None` when more than half fail.
pub fn draw_samples(
    model: &Arc<Closure>,
    runs: usize,
    prims: &Primitives,
    rng: &mut dyn RngCore,
    budget: u64,
) -> Option<Vec<Value>> {
    let draws = if is_deterministic(&model.body, prims) { 1 } else { runs };
    let mut ok = Vec::with_capacity(runs);
    let mut failed = 0;
    for _ in 0..draws {
        match apply_model(model, &[], prims, rng, budget) {
            EvalOutcome::Ok(v) => ok.push(v),
            _ => failed += 1,
        }
    }
    if 2 * failed > draws || ok.is_empty() {
        return None;
    }
    if draws == 1 {
        ok = vec![ok[0].clone(); runs];
    }
    Some(ok)
}

/// ABC log-likelihood `-L1 / epsilon` of a zero-input sampler model.
pub fn loglik_distribution(
    model: &Arc<Closure>,
    obs: &[Value],
    kernel: &AbcKernel,
    runs: usize,
    prims: &Primitives,
    rng: &mut dyn RngCore,
    budget: u64,
) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    match draw_samples(model, runs, prims, rng, budget) {
        None => f64::NEG_INFINITY,
        Some(s) => {
            let d = histogram_l1(&s, obs, kernel.bins);
            if d == 0.0 {
                0.0
            } else {
                -d / kernel.epsilon
            }
        }
    }
}

impl LikelihoodConfig {
    /// Runs the model on the observations. An empty observation set fits
    /// every model with log-likelihood 0.
    pub fn fit(
        &self,
        sig: &TaskSignature,
        body: &Expr,
        obs: &Observations,
        prims: &Primitives,
        rng: &mut dyn RngCore,
        budget: u64,
    ) -> Fit {
        if obs.is_empty() {
            return Fit::Fixed(0.0);
        }
        let model = sig.model(body);
        match obs {
            Observations::Io(pairs) => fit_io(&model, pairs, &self.noise, prims, rng, budget),
            Observations::Samples(values) => {
                let runs = self.sampler_runs.unwrap_or(values.len());
                Fit::Fixed(loglik_distribution(
                    &model,
                    values,
                    &self.kernel,
                    runs,
                    prims,
                    rng,
                    budget,
                ))
            }
        }
    }
}
