use std::cell::RefCell;
use std::collections::HashMap;

use super::adaptor::{AdaptorState, Table};
use super::config::{GrammarConfig, ProductionKind};
use super::Context;
use crate::lang::{Symbol, Type};

/// Applicability rules of the grammar for one configuration. Derivability
/// checks are memoized, so keep one `Rules` per chain rather than per call.
pub struct Rules<'a> {
    pub cfg: &'a GrammarConfig,
    memo: RefCell<HashMap<(Type, Context), bool>>,
}

/// Adaptor mass at one call site, restricted to tables that fit the
/// remaining depth. All weights are already divided by the normalizer.
pub(crate) struct Seating<'t> {
    pub tables: Vec<(&'t str, &'t Table, f64)>,
    pub fresh: f64,
}

impl<'a> Rules<'a> {
    pub fn new(cfg: &'a GrammarConfig) -> Self {
        Rules {
            cfg,
            memo: RefCell::new(HashMap::new()),
        }
    }

    /// True when some production can complete a `ty` expression here.
    pub fn derivable(&self, ty: &Type, ctx: &Context) -> bool {
        let key = (ty.clone(), ctx.clone());
        if let Some(&v) = self.memo.borrow().get(&key) {
            return v;
        }
        let v = ProductionKind::ALL
            .iter()
            .any(|&k| self.cfg.weights_for(ty).get(k) > 0.0 && self.applicable(k, ty, ctx));
        self.memo.borrow_mut().insert(key, v);
        v
    }

    /// Applicable productions with positive weight, in fixed order.
    pub fn productions(&self, ty: &Type, ctx: &Context) -> Vec<(ProductionKind, f64)> {
        let w = self.cfg.weights_for(ty);
        ProductionKind::ALL
            .iter()
            .filter(|&&k| w.get(k) > 0.0 && self.applicable(k, ty, ctx))
            .map(|&k| (k, w.get(k)))
            .collect()
    }

    fn applicable(&self, kind: ProductionKind, ty: &Type, ctx: &Context) -> bool {
        let room = ctx.depth < self.cfg.max_depth;
        match kind {
            ProductionKind::Constant => match ty {
                Type::Func(_, ret) => room && self.derivable(ret, &ctx.lambda_body(ty)),
                _ => self.cfg.pool_len(ty) > 0,
            },
            ProductionKind::Variable => ctx.scope.has_var_of(ty),
            _ if !(room && ty.is_base()) => false,
            ProductionKind::Application => !self.callees(ty, ctx).is_empty(),
            ProductionKind::Let => ctx.let_depth < self.cfg.max_let_nesting && !self.let_types(ty, ctx).is_empty(),
            ProductionKind::If => {
                let inner = ctx.deeper();
                self.derivable(&Type::Bool, &inner) && self.derivable(ty, &inner)
            }
            ProductionKind::Recur => match ctx.scope.this() {
                Some(Type::Func(params, ret)) if **ret == *ty => {
                    let inner = ctx.deeper();
                    params.iter().all(|p| self.derivable(p, &inner))
                }
                _ => false,
            },
        }
    }

    /// Functions that can be applied to produce `ty`: primitives not hidden
    /// by a scope variable, then scope variables of function type.
    pub fn callees(&self, ty: &Type, ctx: &Context) -> Vec<(Symbol, Vec<Type>)> {
        if ctx.depth >= self.cfg.max_depth {
            return Vec::new();
        }
        let inner = ctx.deeper();
        let ok = |params: &[Type]| params.iter().all(|p| self.derivable(p, &inner));
        let mut out = Vec::new();
        for p in self.cfg.primitives.iter() {
            if p.ret() == ty && ctx.scope.lookup(&p.name).is_none() && ok(p.params()) {
                out.push((p.name.clone(), p.params().to_vec()));
            }
        }
        for (name, t) in ctx.scope.vars() {
            if let Type::Func(params, ret) = t {
                if **ret == *ty && ok(params) {
                    out.push((name.clone(), params.clone()));
                }
            }
        }
        out
    }

    /// Types a `let` producing `ty` may bind here, with their weights.
    pub fn let_types(&self, ty: &Type, ctx: &Context) -> Vec<(Type, f64)> {
        let bound = ctx.let_bound();
        self.cfg
            .let_types
            .iter()
            .filter(|(t, w)| *w > 0.0 && self.derivable(t, &bound) && self.derivable(ty, &ctx.let_body(t)))
            .cloned()
            .collect()
    }

    /// Reuse and new-table probabilities at a call site, or `None` when the
    /// adaptor is off or has nothing at this key.
    pub(crate) fn seating<'t>(&self, ty: &Type, ctx: &Context, adaptor: &'t AdaptorState) -> Option<Seating<'t>> {
        if !self.cfg.adaptor_enabled {
            return None;
        }
        let tables = adaptor.tables(&ctx.key(ty))?;
        let (alpha, d) = (self.cfg.alpha, self.cfg.discount);
        let n = tables.total() as f64;
        let fits = |t: &Table| {
            ctx.depth + t.height <= self.cfg.max_depth && ctx.let_depth + t.let_height <= self.cfg.max_let_nesting
        };
        let mut fitting: Vec<(&str, &Table, f64)> = tables
            .iter()
            .filter(|(_, t)| fits(t))
            .map(|(s, t)| (s.as_str(), t, (t.count as f64 - d) / (n + alpha)))
            .collect();
        let mut fresh = if self.derivable(ty, ctx) {
            (alpha + d * tables.len() as f64) / (n + alpha)
        } else {
            0.0
        };
        let z = fitting.iter().map(|(_, _, w)| w).sum::<f64>() + fresh;
        if z <= 0.0 {
            return None;
        }
        for entry in &mut fitting {
            entry.2 /= z;
        }
        fresh /= z;
        Some(Seating { tables: fitting, fresh })
    }
}
