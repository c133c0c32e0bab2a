//! Parallel chains over observation shards with periodic adaptor merges.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{AdaptorState, GrammarError, Rules};
use crate::inference::{Chain, ChainResult, MhConfig, Problem, ProgramTrace};
use crate::lang::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShardStrategy {
    RoundRobin,
    RandomWithSeed,
    FullReplication,
}

impl fmt::Display for ShardStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShardStrategy::RoundRobin => "round_robin",
            ShardStrategy::RandomWithSeed => "random_with_seed",
            ShardStrategy::FullReplication => "full_replication",
        })
    }
}

impl FromStr for ShardStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "round_robin" => Ok(ShardStrategy::RoundRobin),
            "random_with_seed" => Ok(ShardStrategy::RandomWithSeed),
            "full_replication" => Ok(ShardStrategy::FullReplication),
            other => Err(format!("unknown shard strategy `{other}`")),
        }
    }
}

/// Splits observation indices `0..n_obs` into `n_chains` sorted shards.
pub fn partition_observations(n_obs: usize, n_chains: usize, strategy: ShardStrategy, seed: u64) -> Vec<Vec<usize>> {
    assert!(n_chains >= 1, "at least one chain is required");
    let mut order: Vec<usize> = (0..n_obs).collect();
    match strategy {
        ShardStrategy::FullReplication => return vec![order; n_chains],
        ShardStrategy::RandomWithSeed => order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        ShardStrategy::RoundRobin => {}
    }
    let mut shards = vec![Vec::new(); n_chains];
    for (pos, i) in order.into_iter().enumerate() {
        shards[pos % n_chains].push(i);
    }
    for s in &mut shards {
        s.sort_unstable();
    }
    shards
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    pub id: usize,
    pub seed: u64,
    pub shard: Vec<usize>,
}

/// Chain `i` gets seed `master + i` and shard `i`.
pub fn chain_specs(master_seed: u64, shards: Vec<Vec<usize>>) -> Vec<ChainSpec> {
    shards
        .into_iter()
        .enumerate()
        .map(|(id, shard)| ChainSpec {
            id,
            seed: master_seed.wrapping_add(id as u64),
            shard,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyncPolicy {
    /// Iterations between merges.
    pub period: u64,
}

#[derive(Debug)]
pub struct ParallelResult {
    /// Indexed by chain id.
    pub chains: Vec<Result<ChainResult, GrammarError>>,
    pub global: AdaptorState,
}

/// Merges per-chain changes since `base` in chain order:
/// `base + sum(gains) - sum(losses)`, clamped at zero.
pub fn merge_deltas<'a>(base: &AdaptorState, states: impl IntoIterator<Item = &'a AdaptorState>) -> AdaptorState {
    let mut gained = AdaptorState::new();
    let mut lost = AdaptorState::new();
    for s in states {
        let (g, l) = s.diff(base);
        gained.absorb(&g);
        lost.absorb(&l);
    }
    base.merge(&gained).saturating_sub(&lost)
}

/// Runs one chain per spec. Chains advance independently for `sync.period`
/// iterations, then their adaptor changes are merged into the global state,
/// which every chain adopts before continuing.
pub fn run_parallel(
    problem: &Problem,
    specs: &[ChainSpec],
    iterations: u64,
    thinning: u64,
    sync: SyncPolicy,
) -> ParallelResult {
    assert!(sync.period >= 1, "sync period must be at least 1");
    let mut global = AdaptorState::new();
    let mut slots: Vec<Result<Chain<'_>, GrammarError>> = specs
        .iter()
        .map(|s| {
            let cfg = MhConfig {
                iterations,
                thinning,
                seed: s.seed,
            };
            Chain::new(problem, problem.observations.subset(&s.shard), cfg, global.clone())
        })
        .collect();

    let mut t = 0;
    loop {
        let end = (t + sync.period).min(iterations);
        let live: Vec<&mut Chain<'_>> = slots.iter_mut().filter_map(|s| s.as_mut().ok()).collect();
        if live.len() == 1 {
            live.into_iter().for_each(|c| c.run_until(end));
        } else {
            std::thread::scope(|scope| {
                for c in live {
                    scope.spawn(move || c.run_until(end));
                }
            });
        }
        let merged = merge_deltas(
            &global,
            slots.iter().filter_map(|s| s.as_ref().ok()).map(|c| &c.adaptor),
        );
        for c in slots.iter_mut().filter_map(|s| s.as_mut().ok()) {
            c.set_adaptor(merged.clone());
        }
        global = merged;
        t = end;
        if t >= iterations {
            break;
        }
    }
    ParallelResult {
        chains: slots.into_iter().map(|s| s.map(Chain::finish)).collect(),
        global,
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainsError {
    #[error("all chains failed: {0}")]
    AllChainsFailed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Best {
    pub chain: usize,
    pub iter: u64,
    pub expr: Expr,
    pub log_prior: f64,
    pub log_lik: f64,
}

impl Best {
    pub fn log_posterior(&self) -> f64 {
        self.log_prior + self.log_lik
    }
}

/// Rescores `trace` on the full observation set at `p` under `adaptor`.
pub fn rescore_full(problem: &Problem, trace: &ProgramTrace, adaptor: &AdaptorState, p: f64, seed: u64) -> (f64, f64) {
    let sig = &problem.signature;
    let rules = Rules::new(&problem.grammar);
    let log_prior = rules.score(&trace.expr, &sig.output, &sig.root_context(), adaptor);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit = problem.likelihood.fit(
        sig,
        &trace.expr,
        &problem.observations,
        &problem.grammar.primitives,
        &mut rng,
        problem.budget,
    );
    (log_prior, fit.log_lik(p))
}

/// The chain MAP with the highest full-data posterior at the final `p`.
/// Ties go to the lower chain id.
pub fn best_of(
    problem: &Problem,
    specs: &[ChainSpec],
    result: &ParallelResult,
    iterations: u64,
) -> Result<Best, ChainsError> {
    let p = problem.likelihood.anneal.at(iterations.saturating_sub(1));
    let mut best: Option<Best> = None;
    let mut errors = Vec::new();
    for (spec, r) in specs.iter().zip(&result.chains) {
        match r {
            Err(e) => errors.push(format!("chain {}: {e}", spec.id)),
            Ok(c) => {
                let (log_prior, log_lik) = rescore_full(problem, &c.map, &result.global, p, spec.seed);
                let cand = Best {
                    chain: spec.id,
                    iter: c.map_iter,
                    expr: c.map.expr.clone(),
                    log_prior,
                    log_lik,
                };
                if best.as_ref().is_none_or(|b| cand.log_posterior() > b.log_posterior()) {
                    best = Some(cand);
                }
            }
        }
    }
    best.ok_or_else(|| ChainsError::AllChainsFailed(errors.join("; ")))
}
