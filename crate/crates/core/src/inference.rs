//! Metropolis-Hastings over program bodies with subtree regeneration.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grammar::{commit, normalize, AdaptorState, Choice, Context, GenTrace, GrammarConfig, GrammarError, Rules};
use crate::lang::{apply_model, format_float, EvalOutcome, Expr, NodePath, Primitives, Type, Value, ValueKey};
use crate::likelihood::{Fit, LikelihoodConfig, Observations};
use crate::task::TaskSignature;

/// Everything a chain needs besides its own settings.
#[derive(Clone, Debug)]
pub struct Problem {
    pub signature: TaskSignature,
    pub observations: Observations,
    pub grammar: GrammarConfig,
    pub likelihood: LikelihoodConfig,
    /// Evaluation step budget per model run.
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MhConfig {
    pub iterations: u64,
    pub thinning: u64,
    pub seed: u64,
}

/// Current MH state: a body over `x1 .. xn` and its cached scores.
#[derive(Clone, Debug, PartialEq)]
pub struct ProgramTrace {
    pub expr: Expr,
    pub gen: GenTrace,
    pub log_prior: f64,
    pub fit: Fit,
    pub log_lik: f64,
}

impl ProgramTrace {
    pub fn log_posterior(&self) -> f64 {
        self.log_prior + self.log_lik
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSample {
    pub iter: u64,
    pub expr: Expr,
    pub log_prior: f64,
    pub log_lik: f64,
    pub p: f64,
}

impl PosteriorSample {
    pub fn log_posterior(&self) -> f64 {
        self.log_prior + self.log_lik
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ChainStats {
    pub proposed: u64,
    pub accepted: u64,
    /// Proposals the grammar could not complete (counted as rejections).
    pub failed: u64,
}

impl ChainStats {
    pub fn accept_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// A regeneration move: replace the subtree at `site` by `subtree`.
#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub site: NodePath,
    pub subtree: Expr,
    pub candidate: Expr,
    pub log_q_fwd: f64,
    pub log_q_rev: f64,
    /// Derivation of `subtree`, with sites relative to it.
    pub gen: GenTrace,
}

/// Preorder call sites of a body: path, requested type, context.
pub fn sites(expr: &Expr, sig: &TaskSignature, prims: &Primitives) -> Vec<(Vec<usize>, Type, Context)> {
    fn go(
        e: &Expr,
        ty: &Type,
        ctx: &Context,
        prims: &Primitives,
        path: &mut Vec<usize>,
        out: &mut Vec<(Vec<usize>, Type, Context)>,
    ) {
        out.push((path.clone(), ty.clone(), ctx.clone()));
        if let Some(kids) = ctx.children(e, ty, prims) {
            for (i, (child, (t, c))) in e.children().into_iter().zip(kids).enumerate() {
                path.push(i);
                go(child, &t, &c, prims, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::with_capacity(expr.node_count());
    go(expr, &sig.output, &sig.root_context(), prims, &mut Vec::new(), &mut out);
    out
}

/// Renders a float for the JSON logs: 17 significant digits, or a string
/// for non-finite values.
pub fn json_float(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else if x.is_nan() {
        "\"nan\"".into()
    } else if x > 0.0 {
        "\"inf\"".into()
    } else {
        "\"-inf\"".into()
    }
}

pub fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// One line of a chain log.
pub fn log_line(s: &PosteriorSample, accept_rate: f64) -> String {
    format!(
        "{{\"iter\":{},\"log_prior\":{},\"log_lik\":{},\"p\":{},\"accept_rate\":{},\"expr\":{}}}",
        s.iter,
        json_float(s.log_prior),
        json_float(s.log_lik),
        json_float(s.p),
        json_float(accept_rate),
        json_string(&s.expr.to_string())
    )
}

/// Final summary of one chain.
#[derive(Clone, Debug)]
pub struct ChainResult {
    pub samples: Vec<PosteriorSample>,
    /// Highest `log_prior + log_lik` seen, with the likelihood at the final `p`.
    pub map: ProgramTrace,
    pub map_iter: u64,
    pub stats: ChainStats,
    /// JSON-lines log of the recorded samples.
    pub log: String,
    pub adaptor: AdaptorState,
}

/// A single MH chain. Steps are numbered from 0; the state after step `t`
/// is reported as iteration `t + 1` and the initial state as iteration 0.
pub struct Chain<'p> {
    pub problem: &'p Problem,
    pub observations: Observations,
    rules: Rules<'p>,
    pub adaptor: AdaptorState,
    rng: ChaCha8Rng,
    pub trace: ProgramTrace,
    sites: Vec<(Vec<usize>, Type, Context)>,
    cfg: MhConfig,
    t: u64,
    p_final: f64,
    stats: ChainStats,
    samples: Vec<PosteriorSample>,
    map: (ProgramTrace, u64),
    log: String,
}

impl<'p> Chain<'p> {
    /// Draws the initial program from the prior and seats it in `adaptor`.
    pub fn new(
        problem: &'p Problem,
        observations: Observations,
        cfg: MhConfig,
        adaptor: AdaptorState,
    ) -> Result<Chain<'p>, GrammarError> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let rules = Rules::new(&problem.grammar);
        let root = problem.signature.root_context();
        let (expr, gen) = rules.sample(&problem.signature.output, &root, &adaptor, &mut rng)?;
        Ok(Self::start(problem, observations, cfg, adaptor, rules, rng, expr, gen))
    }

    /// Starts from a given body instead of a prior draw.
    pub fn from_program(
        problem: &'p Problem,
        observations: Observations,
        cfg: MhConfig,
        adaptor: AdaptorState,
        body: &Expr,
    ) -> Chain<'p> {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let rules = Rules::new(&problem.grammar);
        let expr = normalize(body, &problem.signature.root_context());
        Self::start(
            problem,
            observations,
            cfg,
            adaptor,
            rules,
            rng,
            expr,
            GenTrace::default(),
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn start(
        problem: &'p Problem,
        observations: Observations,
        cfg: MhConfig,
        mut adaptor: AdaptorState,
        rules: Rules<'p>,
        mut rng: ChaCha8Rng,
        expr: Expr,
        gen: GenTrace,
    ) -> Chain<'p> {
        let sig = &problem.signature;
        let root = sig.root_context();
        commit(&expr, &sig.output, &root, &problem.grammar, &mut adaptor, 1);
        let log_prior = rules.score_normal(&expr, &sig.output, &root, &adaptor);
        let fit = problem.likelihood.fit(
            sig,
            &expr,
            &observations,
            &problem.grammar.primitives,
            &mut rng,
            problem.budget,
        );
        let p0 = problem.likelihood.anneal.at(0);
        let p_final = problem.likelihood.anneal.at(cfg.iterations.saturating_sub(1));
        let trace = ProgramTrace {
            log_lik: fit.log_lik(p0),
            expr,
            gen,
            log_prior,
            fit,
        };
        let sites = sites(&trace.expr, sig, &problem.grammar.primitives);
        let map = Self::at_p(&trace, p_final);
        Chain {
            problem,
            observations,
            rules,
            adaptor,
            rng,
            trace,
            sites,
            cfg,
            t: 0,
            p_final,
            stats: ChainStats::default(),
            samples: Vec::new(),
            map: (map, 0),
            log: String::new(),
        }
    }

    fn at_p(trace: &ProgramTrace, p: f64) -> ProgramTrace {
        ProgramTrace {
            log_lik: trace.fit.log_lik(p),
            ..trace.clone()
        }
    }

    pub fn steps_done(&self) -> u64 {
        self.t
    }

    pub fn stats(&self) -> ChainStats {
        self.stats
    }

    pub fn rng(&mut self) -> &mut dyn RngCore {
        &mut self.rng
    }

    /// Prior of a body under the chain's current adaptor.
    pub fn score_prior(&self, body: &Expr) -> f64 {
        let sig = &self.problem.signature;
        self.rules.score(body, &sig.output, &sig.root_context(), &self.adaptor)
    }

    /// Builds the move that puts `subtree` at `site`, with both proposal
    /// densities under the current adaptor.
    pub fn proposal_at(&self, site: &[usize], subtree: Expr, gen: GenTrace) -> Option<Proposal> {
        let (_, ty, ctx) = self.sites.iter().find(|s| s.0 == site)?;
        let old = self.trace.expr.at(site)?;
        let candidate = self.trace.expr.replaced(site, subtree.clone())?;
        let log_q_fwd = -(self.sites.len() as f64).ln() + self.rules.score_normal(&subtree, ty, ctx, &self.adaptor);
        let log_q_rev = -(candidate.node_count() as f64).ln() + self.rules.score_normal(old, ty, ctx, &self.adaptor);
        Some(Proposal {
            site: NodePath(site.to_vec()),
            subtree,
            candidate,
            log_q_fwd,
            log_q_rev,
            gen,
        })
    }

    /// Picks a node uniformly and regenerates it from the grammar.
    pub fn propose(&mut self) -> Result<Proposal, GrammarError> {
        let i = self.rng.gen_range(0..self.sites.len());
        let (path, ty, ctx) = &self.sites[i];
        let (subtree, gen) = self.rules.sample(ty, ctx, &self.adaptor, &mut self.rng)?;
        let path = path.clone();
        Ok(self.proposal_at(&path, subtree, gen).expect("site exists"))
    }

    /// Scores the candidate of `proposal` at `p`: (log_prior, fit).
    pub fn evaluate(&mut self, proposal: &Proposal) -> (f64, Fit) {
        let sig = &self.problem.signature;
        let lp = self
            .rules
            .score_normal(&proposal.candidate, &sig.output, &sig.root_context(), &self.adaptor);
        if lp == f64::NEG_INFINITY {
            return (lp, Fit::Fixed(f64::NEG_INFINITY));
        }
        let fit = self.problem.likelihood.fit(
            sig,
            &proposal.candidate,
            &self.observations,
            &self.problem.grammar.primitives,
            &mut self.rng,
            self.problem.budget,
        );
        (lp, fit)
    }

    /// Makes the candidate the current state and moves the adaptor counts.
    pub fn accept(&mut self, proposal: Proposal, fit: Fit, p: f64) {
        let sig = &self.problem.signature;
        let root = sig.root_context();
        let g = &self.problem.grammar;
        commit(&proposal.candidate, &sig.output, &root, g, &mut self.adaptor, 1);
        commit(&self.trace.expr, &sig.output, &root, g, &mut self.adaptor, -1);

        let site = &proposal.site.0;
        let mut gen: Vec<Choice> = Vec::with_capacity(self.trace.gen.len() + proposal.gen.len());
        let mut inserted = false;
        for c in self.trace.gen.choices.drain(..) {
            if c.site.0.starts_with(site) {
                if !inserted {
                    gen.extend(proposal.gen.choices.iter().map(|n| Choice {
                        site: NodePath([site.as_slice(), &n.site.0].concat()),
                        ..n.clone()
                    }));
                    inserted = true;
                }
            } else {
                gen.push(c);
            }
        }
        self.trace.expr = proposal.candidate;
        self.trace.gen = GenTrace { choices: gen };
        self.trace.fit = fit;
        self.trace.log_lik = self.trace.fit.log_lik(p);
        self.trace.log_prior = self
            .rules
            .score_normal(&self.trace.expr, &sig.output, &root, &self.adaptor);
        self.sites = sites(&self.trace.expr, sig, &g.primitives);
    }

    /// Replaces the adaptor (after a synchronization) and rescores the prior.
    pub fn set_adaptor(&mut self, adaptor: AdaptorState) {
        self.adaptor = adaptor;
        let sig = &self.problem.signature;
        self.trace.log_prior =
            self.rules
                .score_normal(&self.trace.expr, &sig.output, &sig.root_context(), &self.adaptor);
    }

    /// One MH transition at step `t`. Returns whether it accepted.
    pub fn step(&mut self) -> bool {
        let t = self.t;
        let p = self.problem.likelihood.anneal.at(t);
        self.stats.proposed += 1;
        let accepted = match self.propose() {
            Err(_) => {
                self.stats.failed += 1;
                false
            }
            Ok(prop) => {
                let (lp, fit) = self.evaluate(&prop);
                let ll = fit.log_lik(p);
                let cur = self.trace.log_prior + self.trace.fit.log_lik(p);
                let log_alpha = (lp + ll) - cur + (prop.log_q_rev - prop.log_q_fwd);
                if lp + ll == f64::NEG_INFINITY || log_alpha.is_nan() {
                    false
                } else if log_alpha >= 0.0 || self.rng.gen::<f64>().ln() < log_alpha {
                    self.accept(prop, fit, p);
                    true
                } else {
                    false
                }
            }
        };
        if accepted {
            self.stats.accepted += 1;
        } else {
            self.trace.log_lik = self.trace.fit.log_lik(p);
        }
        self.t += 1;

        let iter = self.t;
        let at_final = Self::at_p(&self.trace, self.p_final);
        if at_final.log_posterior() > self.map.0.log_posterior() {
            self.map = (at_final, iter);
        }
        if iter.is_multiple_of(self.cfg.thinning) {
            let s = PosteriorSample {
                iter,
                expr: self.trace.expr.clone(),
                log_prior: self.trace.log_prior,
                log_lik: self.trace.log_lik,
                p,
            };
            let _ = writeln!(self.log, "{}", log_line(&s, self.stats.accept_rate()));
            self.samples.push(s);
        }
        accepted
    }

    /// Steps until `t` reaches `min(until, iterations)`.
    pub fn run_until(&mut self, until: u64) {
        while self.t < until.min(self.cfg.iterations) {
            self.step();
        }
    }

    pub fn finish(self) -> ChainResult {
        ChainResult {
            samples: self.samples,
            map: self.map.0,
            map_iter: self.map.1,
            stats: self.stats,
            log: self.log,
            adaptor: self.adaptor,
        }
    }
}

/// Runs one chain for `cfg.iterations` steps on all observations.
pub fn run_chain(problem: &Problem, cfg: MhConfig, adaptor: AdaptorState) -> Result<ChainResult, GrammarError> {
    let mut chain = Chain::new(problem, problem.observations.clone(), cfg, adaptor)?;
    chain.run_until(cfg.iterations);
    Ok(chain.finish())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Outcome {
    Value(ValueKey),
    Failure,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Value(v) => v.fmt(f),
            Outcome::Failure => f.write_str("failure"),
        }
    }
}

/// Posterior predictive at `input`: each body is run `runs` times and every
/// run carries mass `1 / (bodies * runs)`.
pub fn predict(
    bodies: &[Expr],
    sig: &TaskSignature,
    input: &[Value],
    runs: usize,
    prims: &Primitives,
    rng: &mut dyn RngCore,
    budget: u64,
) -> BTreeMap<Outcome, f64> {
    let mut counts: BTreeMap<Outcome, u64> = BTreeMap::new();
    for body in bodies {
        let model = sig.model(body);
        for _ in 0..runs {
            let o = match apply_model(&model, input, prims, rng, budget) {
                EvalOutcome::Ok(v) => ValueKey::of(&v).map_or(Outcome::Failure, Outcome::Value),
                _ => Outcome::Failure,
            };
            *counts.entry(o).or_default() += 1;
        }
    }
    let total = (bodies.len() * runs) as f64;
    counts.into_iter().map(|(k, c)| (k, c as f64 / total)).collect()
}
