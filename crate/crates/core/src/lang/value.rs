use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::lang::expr::{Expr, Symbol};
use crate::lang::sexpr::format_float;
use crate::lang::types::Type;

/// Runtime values.
#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Closure(Arc<Closure>),
}

/// A lambda together with the environment it was created in.
#[derive(Debug)]
pub struct Closure {
    pub params: Vec<(Symbol, Type)>,
    pub ret: Type,
    pub body: Expr,
    pub env: Env,
}

impl Closure {
    pub fn ty(&self) -> Type {
        Type::func(self.params.iter().map(|(_, t)| t.clone()).collect(), self.ret.clone())
    }
}

impl Value {
    pub fn ty(&self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Float(_) => Type::Float,
            Value::Bool(_) => Type::Bool,
            Value::Closure(c) => c.ty(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(x) => Some(*x),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Closure(_) => None,
        }
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Closure(a), Value::Closure(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => f.write_str(&format_float(*x)),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Closure(c) => write!(f, "#<closure {}>", c.ty()),
        }
    }
}

/// Totally ordered key for first-order values, used to build histograms and
/// predictive distributions. Floats are ordered by `total_cmp`.
#[derive(Clone, Copy, Debug)]
pub enum ValueKey {
    Bool(bool),
    Int(i64),
    Float(f64),
}

impl ValueKey {
    pub fn of(v: &Value) -> Option<ValueKey> {
        match v {
            Value::Int(i) => Some(ValueKey::Int(*i)),
            Value::Float(x) => Some(ValueKey::Float(*x)),
            Value::Bool(b) => Some(ValueKey::Bool(*b)),
            Value::Closure(_) => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            ValueKey::Bool(_) => 0,
            ValueKey::Int(_) => 1,
            ValueKey::Float(_) => 2,
        }
    }
}

impl PartialEq for ValueKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ValueKey {}

impl PartialOrd for ValueKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ValueKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ValueKey::Bool(a), ValueKey::Bool(b)) => a.cmp(b),
            (ValueKey::Int(a), ValueKey::Int(b)) => a.cmp(b),
            (ValueKey::Float(a), ValueKey::Float(b)) => a.total_cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl fmt::Display for ValueKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKey::Bool(b) => write!(f, "{b}"),
            ValueKey::Int(i) => write!(f, "{i}"),
            ValueKey::Float(x) => f.write_str(&format_float(*x)),
        }
    }
}

/// Lexical environment: a persistent chain of frames. Inner frames shadow
/// outer ones and extending never mutates a shared frame.
#[derive(Clone, Debug, Default)]
pub struct Env(Option<Arc<Frame>>);

#[derive(Debug)]
struct Frame {
    bindings: Vec<(Symbol, Type, Value)>,
    parent: Env,
}

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn extend(&self, bindings: Vec<(Symbol, Type, Value)>) -> Env {
        Env(Some(Arc::new(Frame {
            bindings,
            parent: self.clone(),
        })))
    }

    pub fn bind(&self, name: Symbol, ty: Type, value: Value) -> Env {
        self.extend(vec![(name, ty, value)])
    }

    pub fn lookup(&self, name: &str) -> Option<(&Type, &Value)> {
        let mut cur = self.0.as_deref();
        while let Some(frame) = cur {
            if let Some((_, t, v)) = frame.bindings.iter().rev().find(|(n, _, _)| &**n == name) {
                return Some((t, v));
            }
            cur = frame.parent.0.as_deref();
        }
        None
    }

    /// Type projection, outermost binding first, shadowed names removed.
    pub fn scope(&self) -> Vec<(Symbol, Type)> {
        let mut frames = Vec::new();
        let mut cur = self.0.as_deref();
        while let Some(frame) = cur {
            frames.push(frame);
            cur = frame.parent.0.as_deref();
        }
        let mut out: Vec<(Symbol, Type)> = Vec::new();
        for frame in frames.into_iter().rev() {
            for (n, t, _) in &frame.bindings {
                out.retain(|(m, _)| m != n);
                out.push((n.clone(), t.clone()));
            }
        }
        out
    }
}
