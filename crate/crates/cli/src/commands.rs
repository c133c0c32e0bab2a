use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use progind::chains::{best_of, chain_specs, partition_observations, run_parallel, ChainSpec, ParallelResult};
use progind::grammar::{commit, sample_expr, score_expr, AdaptorState};
use progind::inference::{json_float, json_string, predict};
use progind::lang::{apply_model, eval as run_expr, format_float, typecheck, Closure, Env, Expr, Primitives};
use progind::likelihood::{value_from_json, Observations};

use crate::config;
use crate::Failure;

fn read_program(source: &str) -> Result<Expr, Failure> {
    let text = if source == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Io(format!("standard input: {e}")))?;
        s
    } else {
        fs::read_to_string(source).map_err(|e| Failure::Io(format!("{source}: {e}")))?
    };
    text.trim().parse::<Expr>().map_err(|e| Failure::Parse(e.to_string()))
}

/// Plain-text rendering of a score: 17 significant digits, or `-inf`.
fn number(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        json_float(x).trim_matches('"').to_string()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn print(out: &str) -> Result<(), Failure> {
    io::stdout()
        .lock()
        .write_all(out.as_bytes())
        .map_err(|e| Failure::Io(format!("standard output: {e}")))
}

pub fn induce(path: &Path) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let c = &loaded.config;
    let observations = loaded.observations()?;
    let problem = loaded.problem_with(observations);
    let shards = partition_observations(problem.observations.len(), c.chains.n_chains, c.chains.shard, c.seed);
    let specs = chain_specs(c.seed, shards);
    let result = run_parallel(&problem, &specs, c.chains.iterations, c.chains.thinning, c.sync());

    let dir = loaded.resolve(&c.output_dir);
    fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    for (spec, r) in specs.iter().zip(&result.chains) {
        if let Ok(chain) = r {
            write_file(&dir.join(format!("chain-{}.jsonl", spec.id)), &chain.log)?;
        }
    }
    write_file(&dir.join("adaptor.json"), &(result.global.to_canonical_json() + "\n"))?;

    let best =
        best_of(&problem, &specs, &result, c.chains.iterations).map_err(|e| Failure::AllChainsFailed(e.to_string()))?;
    let mut predictions = Vec::new();
    if !c.predict.is_empty() {
        let bodies: Vec<Expr> = result
            .chains
            .iter()
            .flatten()
            .flat_map(|chain| chain.samples.iter().map(|s| s.expr.clone()))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        for raw in &c.predict {
            let input = c.parse_inputs(raw).map_err(Failure::Config)?;
            let dist = predict(
                &bodies,
                &problem.signature,
                &input,
                c.predict_runs,
                &problem.grammar.primitives,
                &mut rng,
                problem.budget,
            );
            let input_json = serde_json::to_string(raw).expect("json values serialize");
            predictions.push((input_json, dist));
        }
    }

    let mut out = String::new();
    let _ = writeln!(out, "{{");
    let _ = writeln!(out, "  \"schema\": {},", config::SCHEMA);
    let _ = writeln!(out, "  \"signature\": {},", json_string(&problem.signature.to_string()));
    let _ = writeln!(out, "  \"p\": {},", json_float(c.final_p()));
    let _ = writeln!(out, "  \"best\": {{");
    let _ = writeln!(out, "    \"chain\": {},", best.chain);
    let _ = writeln!(out, "    \"iter\": {},", best.iter);
    let _ = writeln!(out, "    \"expr\": {},", json_string(&best.expr.to_string()));
    let _ = writeln!(
        out,
        "    \"program\": {},",
        json_string(&problem.signature.as_lambda(&best.expr).to_string())
    );
    let _ = writeln!(out, "    \"log_prior\": {},", json_float(best.log_prior));
    let _ = writeln!(out, "    \"log_lik\": {},", json_float(best.log_lik));
    let _ = writeln!(out, "    \"log_posterior\": {}", json_float(best.log_posterior()));
    let _ = writeln!(out, "  }},");
    let _ = writeln!(out, "  \"chains\": [");
    let lines = chain_summaries(&specs, &result);
    let _ = writeln!(out, "{}", lines.join(",\n"));
    let _ = write!(out, "  ]");
    if !predictions.is_empty() {
        let _ = writeln!(out, ",\n  \"predictions\": [");
        let items: Vec<String> = predictions
            .iter()
            .map(|(input, dist)| {
                let entries: Vec<String> = dist
                    .iter()
                    .map(|(k, p)| format!("{}: {}", json_string(&k.to_string()), json_float(*p)))
                    .collect();
                format!(
                    "    {{\"input\": {input}, \"distribution\": {{{}}}}}",
                    entries.join(", ")
                )
            })
            .collect();
        let _ = writeln!(out, "{}", items.join(",\n"));
        let _ = write!(out, "  ]");
    }
    let _ = writeln!(out, "\n}}");
    write_file(&dir.join("result.json"), &out)
}

fn chain_summaries(specs: &[ChainSpec], result: &ParallelResult) -> Vec<String> {
    specs
        .iter()
        .zip(&result.chains)
        .map(|(spec, r)| match r {
            Ok(chain) => format!(
                "    {{\"id\": {}, \"seed\": {}, \"shard_size\": {}, \"accept_rate\": {}, \"proposed\": {}, \"accepted\": {}}}",
                spec.id,
                spec.seed,
                spec.shard.len(),
                json_float(chain.stats.accept_rate()),
                chain.stats.proposed,
                chain.stats.accepted
            ),
            Err(e) => format!(
                "    {{\"id\": {}, \"seed\": {}, \"shard_size\": {}, \"error\": {}}}",
                spec.id,
                spec.seed,
                spec.shard.len(),
                json_string(&e.to_string())
            ),
        })
        .collect()
}

pub fn sample_grammar(path: &Path, n: u64) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let problem = loaded.problem_with(Observations::Io(Vec::new()));
    let sig = &problem.signature;
    let ctx = sig.root_context();
    let mut adaptor = AdaptorState::new();
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.config.seed);
    let mut out = String::new();
    for _ in 0..n {
        let (expr, _) = sample_expr(&sig.output, &ctx, &problem.grammar, &adaptor, &mut rng)
            .map_err(|e| Failure::Config(format!("grammar: {e}")))?;
        commit(&expr, &sig.output, &ctx, &problem.grammar, &mut adaptor, 1);
        let _ = writeln!(out, "{expr}");
    }
    print(&out)
}

pub fn score(path: &Path, program: &str, adaptor: Option<&Path>) -> Result<(), Failure> {
    let loaded = config::load(path)?;
    let c = &loaded.config;
    let expr = read_program(program)?;
    let observations = loaded.observations()?;
    let problem = loaded.problem_with(observations);
    let sig = &problem.signature;
    let body = sig.body_of(&expr);
    let scope = sig.scope();
    let ty = typecheck(&body, scope.vars(), scope.this(), &problem.grammar.primitives)
        .map_err(|e| Failure::Type(e.to_string()))?;
    if ty != sig.output {
        return Err(Failure::Type(format!(
            "program has type {ty}, the task expects {}",
            sig.output
        )));
    }
    let snapshot = match adaptor {
        None => AdaptorState::new(),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            AdaptorState::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
    };
    let log_prior = score_expr(&body, &sig.output, &sig.root_context(), &problem.grammar, &snapshot);
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let fit = problem.likelihood.fit(
        sig,
        &body,
        &problem.observations,
        &problem.grammar.primitives,
        &mut rng,
        problem.budget,
    );
    let log_lik = fit.log_lik(c.final_p());
    print(&format!(
        "log_prior {}\nlog_lik {}\n",
        number(log_prior),
        number(log_lik)
    ))
}

pub fn eval(program: &str, inputs: &str, seed: u64, budget: u64) -> Result<(), Failure> {
    let expr = read_program(program)?;
    let raw: Vec<serde_json::Value> =
        serde_json::from_str(inputs).map_err(|e| Failure::Usage(format!("--inputs must be a JSON list: {e}")))?;
    let prims = Primitives::standard();
    typecheck(&expr, &[], None, &prims).map_err(|e| Failure::Type(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcome = match expr {
        Expr::Lam(params, ret, body) => {
            if raw.len() != params.len() {
                return Err(Failure::Usage(format!(
                    "the program takes {} inputs, got {}",
                    params.len(),
                    raw.len()
                )));
            }
            let args = raw
                .iter()
                .zip(&params)
                .map(|(v, (_, t))| value_from_json(v, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(Failure::Usage)?;
            let model = Arc::new(Closure {
                params,
                ret,
                body: *body,
                env: Env::new(),
            });
            apply_model(&model, &args, &prims, &mut rng, budget)
        }
        other => {
            if !raw.is_empty() {
                return Err(Failure::Usage("inputs given to a program that is not a lambda".into()));
            }
            run_expr(&other, &Env::new(), &prims, &mut rng, budget)
        }
    };
    print(&format!("{outcome}\n"))
}
