use super::adaptor::AdaptorState;
use super::config::{GrammarConfig, ProductionKind};
use super::rules::Rules;
use super::scope::{canonicalize, decanonicalize};
use super::Context;
use crate::lang::{typecheck, Expr, Type};

/// Renames every binder to the name the sampler would have chosen at
/// `ctx`, leaving the meaning unchanged.
pub fn normalize(expr: &Expr, ctx: &Context) -> Expr {
    decanonicalize(&canonicalize(expr, &ctx.scope), &ctx.scope)
}

/// Log prior of `expr` as a `ty` expression at `ctx`, marginalizing over
/// reuse and fresh generation at every node. `-inf` when the grammar
/// cannot produce it.
pub fn score_expr(expr: &Expr, ty: &Type, ctx: &Context, cfg: &GrammarConfig, adaptor: &AdaptorState) -> f64 {
    Rules::new(cfg).score(expr, ty, ctx, adaptor)
}

/// Seats (`delta = 1`) or unseats (`delta = -1`) every node of `expr`
/// at its own key. Unseating a missing table is ignored.
pub fn commit(expr: &Expr, ty: &Type, ctx: &Context, cfg: &GrammarConfig, adaptor: &mut AdaptorState, delta: i8) {
    if !cfg.adaptor_enabled {
        return;
    }
    let expr = normalize(expr, ctx);
    walk(&expr, ty, ctx, cfg, &mut |e, t, c| {
        let key = c.key(t);
        let canon = canonicalize(e, &c.scope);
        if delta > 0 {
            adaptor.increment(&key, &canon);
        } else {
            let _ = adaptor.decrement(&key, &canon);
        }
    });
}

fn walk(expr: &Expr, ty: &Type, ctx: &Context, cfg: &GrammarConfig, f: &mut dyn FnMut(&Expr, &Type, &Context)) {
    f(expr, ty, ctx);
    if let Some(kids) = ctx.children(expr, ty, &cfg.primitives) {
        for (child, (t, c)) in expr.children().into_iter().zip(kids) {
            walk(child, &t, &c, cfg, f);
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Rules<'_> {
    /// See [`score_expr`].
    pub fn score(&self, expr: &Expr, ty: &Type, ctx: &Context, adaptor: &AdaptorState) -> f64 {
        let scope = ctx.scope.vars();
        match typecheck(expr, scope, ctx.scope.this(), &self.cfg.primitives) {
            Ok(t) if t == *ty => self.score_normal(&normalize(expr, ctx), ty, ctx, adaptor),
            _ => f64::NEG_INFINITY,
        }
    }

    /// Scores an expression already in normalized naming.
    pub(crate) fn score_normal(&self, expr: &Expr, ty: &Type, ctx: &Context, adaptor: &AdaptorState) -> f64 {
        let Some(seating) = self.seating(ty, ctx, adaptor) else {
            return self.base_score(expr, ty, ctx, adaptor);
        };
        let text = canonicalize(expr, &ctx.scope).to_string();
        let reuse = seating
            .tables
            .iter()
            .find(|(s, _, _)| *s == text)
            .map_or(f64::NEG_INFINITY, |t| t.2.ln());
        let fresh = if seating.fresh > 0.0 {
            seating.fresh.ln() + self.base_score(expr, ty, ctx, adaptor)
        } else {
            f64::NEG_INFINITY
        };
        log_add(reuse, fresh)
    }

    fn base_score(&self, expr: &Expr, ty: &Type, ctx: &Context, adaptor: &AdaptorState) -> f64 {
        const NONE: f64 = f64::NEG_INFINITY;
        let kind = match expr {
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Lam(..) => ProductionKind::Constant,
            Expr::Var(_) => ProductionKind::Variable,
            Expr::App(..) => ProductionKind::Application,
            Expr::Let(..) => ProductionKind::Let,
            Expr::If(..) => ProductionKind::If,
            Expr::Recur(..) => ProductionKind::Recur,
        };
        let prods = self.productions(ty, ctx);
        let Some(&(_, w)) = prods.iter().find(|p| p.0 == kind) else {
            return NONE;
        };
        let total: f64 = prods.iter().map(|p| p.1).sum();
        let mut lp = (w / total).ln();

        lp += match expr {
            Expr::Int(v) if *ty == Type::Int && self.cfg.int_pool.contains(v) => -(self.cfg.int_pool.len() as f64).ln(),
            Expr::Float(v) if *ty == Type::Float && self.cfg.float_pool.iter().any(|p| p.to_bits() == v.to_bits()) => {
                -(self.cfg.float_pool.len() as f64).ln()
            }
            Expr::Bool(v) if *ty == Type::Bool && self.cfg.bool_pool.contains(v) => {
                -(self.cfg.bool_pool.len() as f64).ln()
            }
            Expr::Lam(..) => 0.0,
            Expr::Var(name) if ctx.scope.lookup(name) == Some(ty) => -(ctx.scope.vars_of(ty).count() as f64).ln(),
            Expr::App(f, _) => {
                let callees = self.callees(ty, ctx);
                if !callees.iter().any(|(n, _)| n == f) {
                    return NONE;
                }
                -(callees.len() as f64).ln()
            }
            Expr::Let(_, lt, _, _) => {
                let options = self.let_types(ty, ctx);
                let total: f64 = options.iter().map(|o| o.1).sum();
                match options.iter().find(|o| o.0 == *lt) {
                    Some((_, w)) => (w / total).ln(),
                    None => return NONE,
                }
            }
            Expr::If(..) | Expr::Recur(..) => 0.0,
            _ => return NONE,
        };

        let Some(kids) = ctx.children(expr, ty, &self.cfg.primitives) else {
            return NONE;
        };
        for (child, (t, c)) in expr.children().into_iter().zip(kids) {
            lp += self.score_normal(child, &t, &c, adaptor);
            if lp == NONE {
                return NONE;
            }
        }
        lp
    }
}
