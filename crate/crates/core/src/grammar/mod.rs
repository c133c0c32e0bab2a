//! Typed stochastic grammar over [`Expr`] with a Pitman-Yor adaptor.
//!
//! The sampler and the scorer share one set of applicability rules
//! ([`Rules`]) so that the log-probability of a sampled derivation is
//! exactly what [`score_expr`] recovers from the tree.

pub mod adaptor;
pub mod config;
mod rules;
mod sample;
pub mod scope;
mod score;

use std::fmt;

use thiserror::Error;

pub use adaptor::{AdaptorError, AdaptorState, Table, Tables};
pub use config::{default_float_pool, ConfigError, GrammarConfig, ProductionKind, ProductionWeights};
pub use rules::Rules;
pub use sample::sample_expr;
pub use scope::{canonicalize, decanonicalize, AdaptorKey, Scope, ScopeSignature};
pub use score::{commit, normalize, score_expr};

use crate::lang::{Expr, NodePath, Primitives, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("no derivation available for {key} at depth {depth}")]
    Unsatisfiable { key: String, depth: usize },
}

/// Position of a grammar call: visible scope and how deep we are.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Context {
    pub scope: Scope,
    pub depth: usize,
    pub let_depth: usize,
}

impl Context {
    pub fn root(scope: Scope) -> Context {
        Context {
            scope,
            depth: 0,
            let_depth: 0,
        }
    }

    pub fn key(&self, ty: &Type) -> AdaptorKey {
        AdaptorKey::new(ty, &self.scope)
    }

    fn deeper(&self) -> Context {
        Context {
            scope: self.scope.clone(),
            depth: self.depth + 1,
            let_depth: self.let_depth,
        }
    }

    fn let_bound(&self) -> Context {
        Context {
            scope: self.scope.clone(),
            depth: self.depth + 1,
            let_depth: self.let_depth + 1,
        }
    }

    fn let_body(&self, ty: &Type) -> Context {
        Context {
            scope: self.scope.push(self.scope.fresh_name(), ty.clone()),
            depth: self.depth + 1,
            let_depth: self.let_depth + 1,
        }
    }

    fn lambda_body(&self, fty: &Type) -> Context {
        let (params, _) = fty.as_func().expect("lambda type is a function");
        let mut scope = self.scope.clone();
        for t in params {
            scope = scope.push(scope.fresh_name(), t.clone());
        }
        Context {
            scope: scope.with_this(Some(fty.clone())),
            depth: self.depth + 1,
            let_depth: self.let_depth,
        }
    }

    /// Requested type and context of every child of `expr`, which must be
    /// in normalized naming (see [`normalize`]). `None` when `expr` does not
    /// fit `ty` structurally.
    pub fn children(&self, expr: &Expr, ty: &Type, prims: &Primitives) -> Option<Vec<(Type, Context)>> {
        Some(match expr {
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Var(_) => Vec::new(),
            Expr::App(f, args) => {
                let sig = match self.scope.lookup(f) {
                    Some(t) => t.clone(),
                    None => prims.get(f)?.signature.clone(),
                };
                let (params, _) = sig.as_func()?;
                if params.len() != args.len() {
                    return None;
                }
                params.iter().map(|t| (t.clone(), self.deeper())).collect()
            }
            Expr::Let(_, t, _, _) => vec![(t.clone(), self.let_bound()), (ty.clone(), self.let_body(t))],
            Expr::If(..) => vec![
                (Type::Bool, self.deeper()),
                (ty.clone(), self.deeper()),
                (ty.clone(), self.deeper()),
            ],
            Expr::Recur(args) => {
                let (params, _) = self.scope.this()?.as_func()?;
                if params.len() != args.len() {
                    return None;
                }
                params.iter().map(|t| (t.clone(), self.deeper())).collect()
            }
            Expr::Lam(_, ret, _) => vec![(ret.clone(), self.lambda_body(ty))],
        })
    }
}

/// How one node of a derivation was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoiceKind {
    /// Copied from an adaptor table.
    Reuse,
    /// Drawn from the base grammar with this production.
    Base(ProductionKind),
}

impl fmt::Display for ChoiceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChoiceKind::Reuse => f.write_str("reuse"),
            ChoiceKind::Base(k) => k.fmt(f),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub site: NodePath,
    pub kind: ChoiceKind,
    /// Log-probability of everything decided at this node, including the
    /// adaptor's reuse/new-table draw.
    pub logprob: f64,
}

/// Per-node record of a sampled derivation, in preorder.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GenTrace {
    pub choices: Vec<Choice>,
}

impl GenTrace {
    pub fn log_prob(&self) -> f64 {
        self.choices.iter().map(|c| c.logprob).sum()
    }

    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }
}
