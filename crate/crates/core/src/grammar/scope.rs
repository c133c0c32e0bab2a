use std::fmt;
use std::str::FromStr;

use crate::lang::sexpr::ParseError;
use crate::lang::{sym, Expr, Symbol, Type};

/// Variables visible at a grammar call site plus the type `recur` would
/// call. Later entries shadow earlier ones; pushing a name already present
/// drops the older entry.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Scope {
    vars: Vec<(Symbol, Type)>,
    this: Option<Type>,
}

impl Scope {
    pub fn new(vars: Vec<(Symbol, Type)>, this: Option<Type>) -> Scope {
        let mut scope = Scope { vars: Vec::new(), this };
        for (n, t) in vars {
            scope.push_mut(n, t);
        }
        scope
    }

    /// `x1 .. xn` typed by `inputs`, with `recur` calling the whole model.
    pub fn for_task(inputs: &[Type], output: &Type) -> Scope {
        let vars = inputs
            .iter()
            .enumerate()
            .map(|(i, t)| (sym(&format!("x{}", i + 1)), t.clone()))
            .collect();
        Scope::new(vars, Some(Type::func(inputs.to_vec(), output.clone())))
    }

    fn push_mut(&mut self, name: Symbol, ty: Type) {
        self.vars.retain(|(n, _)| *n != name);
        self.vars.push((name, ty));
    }

    pub fn push(&self, name: Symbol, ty: Type) -> Scope {
        let mut s = self.clone();
        s.push_mut(name, ty);
        s
    }

    pub fn with_this(&self, this: Option<Type>) -> Scope {
        Scope {
            vars: self.vars.clone(),
            this,
        }
    }

    pub fn vars(&self) -> &[(Symbol, Type)] {
        &self.vars
    }

    pub fn this(&self) -> Option<&Type> {
        self.this.as_ref()
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.vars.iter().find(|(n, _)| &**n == name).map(|(_, t)| t)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|(n, _)| &**n == name)
    }

    pub fn vars_of<'a>(&'a self, ty: &'a Type) -> impl Iterator<Item = &'a Symbol> + 'a {
        self.vars.iter().filter(move |(_, t)| t == ty).map(|(n, _)| n)
    }

    pub fn has_var_of(&self, ty: &Type) -> bool {
        self.vars.iter().any(|(_, t)| t == ty)
    }

    /// Name for a newly bound variable: the first `v<k>` with `k >= len`
    /// that is not already visible.
    pub fn fresh_name(&self) -> Symbol {
        let mut k = self.vars.len();
        loop {
            let name = format!("v{k}");
            if self.lookup(&name).is_none() {
                return sym(&name);
            }
            k += 1;
        }
    }

    pub fn signature(&self) -> ScopeSignature {
        ScopeSignature {
            types: self.vars.iter().map(|(_, t)| t.clone()).collect(),
            this: self.this.clone(),
        }
    }
}

/// Name-free description of a scope: the positional list of variable types
/// and the `recur` type. Alpha-equivalent scopes have equal signatures.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScopeSignature {
    pub types: Vec<Type>,
    pub this: Option<Type>,
}

/// Memo key of the adaptor: requested type in a scope signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AdaptorKey {
    pub ty: Type,
    pub scope: ScopeSignature,
}

impl AdaptorKey {
    pub fn new(ty: &Type, scope: &Scope) -> AdaptorKey {
        AdaptorKey {
            ty: ty.clone(),
            scope: scope.signature(),
        }
    }
}

/// Rendered as `(key <type> (scope <type>...) (self <type>|none))`.
impl fmt::Display for AdaptorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(key {} (scope", self.ty)?;
        for t in &self.scope.types {
            write!(f, " {t}")?;
        }
        match &self.scope.this {
            Some(t) => write!(f, ") (self {t}))"),
            None => f.write_str(") (self none))"),
        }
    }
}

impl FromStr for AdaptorKey {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| ParseError {
            offset: 0,
            message: format!("malformed adaptor key: {m}"),
        };
        let inner = s
            .strip_prefix("(key ")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| bad("expected `(key ...)`"))?;
        let scope_at = inner.find(" (scope").ok_or_else(|| bad("missing scope"))?;
        let ty: Type = inner[..scope_at].parse()?;
        let rest = &inner[scope_at + 1..];
        let self_at = rest.rfind(" (self ").ok_or_else(|| bad("missing self"))?;
        let scope_txt = rest[..self_at]
            .strip_prefix("(scope")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| bad("malformed scope"))?;
        let types = split_types(scope_txt)?;
        let self_txt = rest[self_at + 1..]
            .strip_prefix("(self ")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| bad("malformed self"))?;
        let this = if self_txt == "none" {
            None
        } else {
            Some(self_txt.parse()?)
        };
        Ok(AdaptorKey {
            ty,
            scope: ScopeSignature { types, this },
        })
    }
}

fn split_types(s: &str) -> Result<Vec<Type>, ParseError> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = None;
    for (i, c) in s.char_indices() {
        match c {
            '(' => {
                if depth == 0 {
                    start.get_or_insert(i);
                }
                depth += 1;
            }
            ')' => depth = depth.saturating_sub(1),
            c if c.is_whitespace() && depth == 0 => {
                if let Some(st) = start.take() {
                    out.push(s[st..i].parse()?);
                }
            }
            _ => {
                start.get_or_insert(i);
            }
        }
    }
    if let Some(st) = start {
        out.push(s[st..].parse()?);
    }
    Ok(out)
}

/// Renames free variables to `s<i>` (their scope position) and bound
/// variables to `b<j>` (binding order, preorder) so that alpha-equivalent
/// expressions in equivalent scopes become identical.
pub fn canonicalize(expr: &Expr, scope: &Scope) -> Expr {
    let mut names: Vec<(Symbol, Symbol)> = scope
        .vars()
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (n.clone(), sym(&format!("s{i}"))))
        .collect();
    let mut next = 0usize;
    rename(expr, &mut names, &mut next)
}

fn rename(expr: &Expr, names: &mut Vec<(Symbol, Symbol)>, next: &mut usize) -> Expr {
    let resolve = |names: &Vec<(Symbol, Symbol)>, n: &Symbol| {
        names.iter().rev().find(|(from, _)| from == n).map(|(_, to)| to.clone())
    };
    match expr {
        Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) => expr.clone(),
        Expr::Var(n) => Expr::Var(resolve(names, n).unwrap_or_else(|| n.clone())),
        Expr::App(f, args) => {
            let f = resolve(names, f).unwrap_or_else(|| f.clone());
            Expr::App(f, args.iter().map(|a| rename(a, names, next)).collect())
        }
        Expr::Let(n, t, bound, body) => {
            let bound = rename(bound, names, next);
            let fresh = sym(&format!("b{next}"));
            *next += 1;
            names.push((n.clone(), fresh.clone()));
            let body = rename(body, names, next);
            names.pop();
            Expr::Let(fresh, t.clone(), Box::new(bound), Box::new(body))
        }
        Expr::If(c, t, e) => Expr::if_then_else(rename(c, names, next), rename(t, names, next), rename(e, names, next)),
        Expr::Recur(args) => Expr::Recur(args.iter().map(|a| rename(a, names, next)).collect()),
        Expr::Lam(params, ret, body) => {
            let depth = names.len();
            let mut renamed = Vec::with_capacity(params.len());
            for (n, t) in params {
                let fresh = sym(&format!("b{next}"));
                *next += 1;
                names.push((n.clone(), fresh.clone()));
                renamed.push((fresh, t.clone()));
            }
            let body = rename(body, names, next);
            names.truncate(depth);
            Expr::Lam(renamed, ret.clone(), Box::new(body))
        }
    }
}

/// Inverse of [`canonicalize`] for `scope`: free variables get the scope's
/// names and bound variables the names the sampler would pick.
pub fn decanonicalize(canonical: &Expr, scope: &Scope) -> Expr {
    let mut names: Vec<(Symbol, Symbol)> = scope
        .vars()
        .iter()
        .enumerate()
        .map(|(i, (n, _))| (sym(&format!("s{i}")), n.clone()))
        .collect();
    restore(canonical, scope, &mut names)
}

fn restore(expr: &Expr, scope: &Scope, names: &mut Vec<(Symbol, Symbol)>) -> Expr {
    let resolve = |names: &Vec<(Symbol, Symbol)>, n: &Symbol| {
        names.iter().rev().find(|(from, _)| from == n).map(|(_, to)| to.clone())
    };
    match expr {
        Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) => expr.clone(),
        Expr::Var(n) => Expr::Var(resolve(names, n).unwrap_or_else(|| n.clone())),
        Expr::App(f, args) => {
            let f = resolve(names, f).unwrap_or_else(|| f.clone());
            Expr::App(f, args.iter().map(|a| restore(a, scope, names)).collect())
        }
        Expr::Let(n, t, bound, body) => {
            let bound = restore(bound, scope, names);
            let fresh = scope.fresh_name();
            let inner = scope.push(fresh.clone(), t.clone());
            names.push((n.clone(), fresh.clone()));
            let body = restore(body, &inner, names);
            names.pop();
            Expr::Let(fresh, t.clone(), Box::new(bound), Box::new(body))
        }
        Expr::If(c, t, e) => Expr::if_then_else(
            restore(c, scope, names),
            restore(t, scope, names),
            restore(e, scope, names),
        ),
        Expr::Recur(args) => Expr::Recur(args.iter().map(|a| restore(a, scope, names)).collect()),
        Expr::Lam(params, ret, body) => {
            let depth = names.len();
            let mut inner = scope.clone();
            let mut renamed = Vec::with_capacity(params.len());
            for (n, t) in params {
                let fresh = inner.fresh_name();
                inner = inner.push(fresh.clone(), t.clone());
                names.push((n.clone(), fresh.clone()));
                renamed.push((fresh, t.clone()));
            }
            let fty = Type::func(params.iter().map(|(_, t)| t.clone()).collect(), ret.clone());
            let body = restore(body, &inner.with_this(Some(fty)), names);
            names.truncate(depth);
            Expr::Lam(renamed, ret.clone(), Box::new(body))
        }
    }
}
