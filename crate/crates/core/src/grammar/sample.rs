use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore};

use super::adaptor::AdaptorState;
use super::config::{GrammarConfig, ProductionKind};
use super::rules::Rules;
use super::scope::decanonicalize;
use super::{Choice, ChoiceKind, Context, GenTrace, GrammarError};
use crate::lang::{Expr, NodePath, Type};

/// Draws a `ty` expression at `ctx`. The adaptor is read, never updated;
/// commit the result with [`super::commit`] to seat it.
pub fn sample_expr(
    ty: &Type,
    ctx: &Context,
    cfg: &GrammarConfig,
    adaptor: &AdaptorState,
    rng: &mut dyn RngCore,
) -> Result<(Expr, GenTrace), GrammarError> {
    Rules::new(cfg).sample(ty, ctx, adaptor, rng)
}

fn pick(weights: &[f64], rng: &mut dyn RngCore) -> usize {
    if weights.len() == 1 {
        return 0;
    }
    WeightedIndex::new(weights).expect("positive weights").sample(rng)
}

impl Rules<'_> {
    pub fn sample(
        &self,
        ty: &Type,
        ctx: &Context,
        adaptor: &AdaptorState,
        rng: &mut dyn RngCore,
    ) -> Result<(Expr, GenTrace), GrammarError> {
        let mut trace = GenTrace::default();
        let mut path = Vec::new();
        let e = self.draw(ty, ctx, adaptor, rng, &mut path, &mut trace)?;
        Ok((e, trace))
    }

    fn record(trace: &mut GenTrace, path: &[usize], kind: ChoiceKind, logprob: f64) {
        trace.choices.push(Choice {
            site: NodePath(path.to_vec()),
            kind,
            logprob,
        });
    }

    fn draw(
        &self,
        ty: &Type,
        ctx: &Context,
        adaptor: &AdaptorState,
        rng: &mut dyn RngCore,
        path: &mut Vec<usize>,
        trace: &mut GenTrace,
    ) -> Result<Expr, GrammarError> {
        let unsat = || GrammarError::Unsatisfiable {
            key: ctx.key(ty).to_string(),
            depth: ctx.depth,
        };
        let mut lp = 0.0;
        if let Some(seating) = self.seating(ty, ctx, adaptor) {
            let mut weights: Vec<f64> = seating.tables.iter().map(|t| t.2).collect();
            weights.push(seating.fresh);
            let i = pick(&weights, rng);
            if i < seating.tables.len() {
                let (_, table, w) = seating.tables[i];
                Self::record(trace, path, ChoiceKind::Reuse, w.ln());
                return Ok(decanonicalize(&table.expr, &ctx.scope));
            }
            lp = seating.fresh.ln();
        }

        let prods = self.productions(ty, ctx);
        if prods.is_empty() {
            return Err(unsat());
        }
        let total: f64 = prods.iter().map(|p| p.1).sum();
        let weights: Vec<f64> = prods.iter().map(|p| p.1).collect();
        let (kind, w) = prods[pick(&weights, rng)];
        lp += (w / total).ln();
        let here = trace.choices.len();
        Self::record(trace, path, ChoiceKind::Base(kind), lp);
        let mut child = |i: usize, t: &Type, c: &Context, rng: &mut dyn RngCore, trace: &mut GenTrace| {
            path.push(i);
            let r = self.draw(t, c, adaptor, rng, path, trace);
            path.pop();
            r
        };

        let (expr, choice_lp) = match kind {
            ProductionKind::Constant => match ty {
                Type::Func(params, ret) => {
                    let body_ctx = ctx.lambda_body(ty);
                    let names = &body_ctx.scope.vars()[body_ctx.scope.vars().len() - params.len()..];
                    let params = names.to_vec();
                    let body = child(0, ret, &body_ctx, rng, trace)?;
                    (Expr::Lam(params, (**ret).clone(), Box::new(body)), 0.0)
                }
                _ => {
                    let n = self.cfg.pool_len(ty);
                    let i = rng.gen_range(0..n);
                    let e = match ty {
                        Type::Int => Expr::Int(self.cfg.int_pool[i]),
                        Type::Float => Expr::Float(self.cfg.float_pool[i]),
                        _ => Expr::Bool(self.cfg.bool_pool[i]),
                    };
                    (e, -(n as f64).ln())
                }
            },
            ProductionKind::Variable => {
                let vars: Vec<_> = ctx.scope.vars_of(ty).cloned().collect();
                let i = rng.gen_range(0..vars.len());
                (Expr::Var(vars[i].clone()), -(vars.len() as f64).ln())
            }
            ProductionKind::Application => {
                let callees = self.callees(ty, ctx);
                let (name, params) = &callees[rng.gen_range(0..callees.len())];
                let inner = ctx.deeper();
                let mut args = Vec::with_capacity(params.len());
                for (i, p) in params.iter().enumerate() {
                    args.push(child(i, p, &inner, rng, trace)?);
                }
                (Expr::App(name.clone(), args), -(callees.len() as f64).ln())
            }
            ProductionKind::Let => {
                let options = self.let_types(ty, ctx);
                let weights: Vec<f64> = options.iter().map(|o| o.1).collect();
                let k = pick(&weights, rng);
                let (lt, lw) = &options[k];
                let total: f64 = weights.iter().sum();
                let name = ctx.scope.fresh_name();
                let bound = child(0, lt, &ctx.let_bound(), rng, trace)?;
                let body = child(1, ty, &ctx.let_body(lt), rng, trace)?;
                let e = Expr::Let(name, lt.clone(), Box::new(bound), Box::new(body));
                (e, (lw / total).ln())
            }
            ProductionKind::If => {
                let inner = ctx.deeper();
                let c = child(0, &Type::Bool, &inner, rng, trace)?;
                let t = child(1, ty, &inner, rng, trace)?;
                let e = child(2, ty, &inner, rng, trace)?;
                (Expr::if_then_else(c, t, e), 0.0)
            }
            ProductionKind::Recur => {
                let params = match ctx.scope.this() {
                    Some(Type::Func(params, _)) => params.clone(),
                    _ => return Err(unsat()),
                };
                let inner = ctx.deeper();
                let mut args = Vec::with_capacity(params.len());
                for (i, p) in params.iter().enumerate() {
                    args.push(child(i, p, &inner, rng, trace)?);
                }
                (Expr::Recur(args), 0.0)
            }
        };
        trace.choices[here].logprob += choice_lp;
        Ok(expr)
    }
}
