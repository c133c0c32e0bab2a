//! Budgeted call-by-value evaluator.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::lang::expr::Expr;
use crate::lang::stdlib::Primitives;
use crate::lang::value::{Closure, Env, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuntimeErrorKind {
    DivByZero,
    DomainError,
    UnboundSymbol,
    ArityMismatch,
    NumericOverflow,
}

impl fmt::Display for RuntimeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeErrorKind::DivByZero => "div-by-zero",
            RuntimeErrorKind::DomainError => "domain-error",
            RuntimeErrorKind::UnboundSymbol => "unbound-symbol",
            RuntimeErrorKind::ArityMismatch => "arity-mismatch",
            RuntimeErrorKind::NumericOverflow => "numeric-overflow",
        })
    }
}

/// Result of running a program. Evaluation never panics; every failure is
/// one of these.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalOutcome {
    Ok(Value),
    BudgetExceeded,
    RuntimeError(RuntimeErrorKind),
}

impl EvalOutcome {
    pub fn value(&self) -> Option<&Value> {
        match self {
            EvalOutcome::Ok(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for EvalOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalOutcome::Ok(v) => write!(f, "{v}"),
            EvalOutcome::BudgetExceeded => f.write_str("budget-exceeded"),
            EvalOutcome::RuntimeError(k) => write!(f, "{k}"),
        }
    }
}

enum Halt {
    Budget,
    Fault(RuntimeErrorKind),
}

impl From<RuntimeErrorKind> for Halt {
    fn from(k: RuntimeErrorKind) -> Self {
        Halt::Fault(k)
    }
}

impl From<Result<Value, Halt>> for EvalOutcome {
    fn from(r: Result<Value, Halt>) -> Self {
        match r {
            Ok(v) => EvalOutcome::Ok(v),
            Err(Halt::Budget) => EvalOutcome::BudgetExceeded,
            Err(Halt::Fault(k)) => EvalOutcome::RuntimeError(k),
        }
    }
}

// Recursion depth is bounded by the budget, not by the native stack.
const STACK_RED_ZONE: usize = 64 * 1024;
const STACK_GROWTH: usize = 1024 * 1024;

struct Machine<'a> {
    prims: &'a Primitives,
    rng: &'a mut dyn RngCore,
    steps_left: u64,
}

impl Machine<'_> {
    fn tick(&mut self) -> Result<(), Halt> {
        if self.steps_left == 0 {
            return Err(Halt::Budget);
        }
        self.steps_left -= 1;
        Ok(())
    }

    fn eval(&mut self, e: &Expr, env: &Env, this: Option<&Arc<Closure>>) -> Result<Value, Halt> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_GROWTH, || self.eval_node(e, env, this))
    }

    fn eval_args(&mut self, args: &[Expr], env: &Env, this: Option<&Arc<Closure>>) -> Result<Vec<Value>, Halt> {
        args.iter().map(|a| self.eval(a, env, this)).collect()
    }

    fn invoke(&mut self, f: &Arc<Closure>, args: Vec<Value>) -> Result<Value, Halt> {
        if args.len() != f.params.len() {
            return Err(RuntimeErrorKind::ArityMismatch.into());
        }
        let frame = f
            .params
            .iter()
            .zip(args)
            .map(|((n, t), v)| (n.clone(), t.clone(), v))
            .collect();
        let env = f.env.extend(frame);
        self.eval(&f.body, &env, Some(f))
    }

    fn eval_node(&mut self, e: &Expr, env: &Env, this: Option<&Arc<Closure>>) -> Result<Value, Halt> {
        self.tick()?;
        match e {
            Expr::Int(i) => Ok(Value::Int(*i)),
            Expr::Float(x) => Ok(Value::Float(*x)),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Var(name) => match env.lookup(name) {
                Some((_, v)) => Ok(v.clone()),
                None => Err(RuntimeErrorKind::UnboundSymbol.into()),
            },
            Expr::App(f, args) => {
                let args = self.eval_args(args, env, this)?;
                match env.lookup(f) {
                    Some((_, Value::Closure(c))) => {
                        let c = c.clone();
                        self.tick()?;
                        self.invoke(&c, args)
                    }
                    Some(_) => Err(RuntimeErrorKind::DomainError.into()),
                    None => match self.prims.get(f) {
                        Some(p) => Ok(p.call(&args, self.rng)?),
                        None => Err(RuntimeErrorKind::UnboundSymbol.into()),
                    },
                }
            }
            Expr::Let(name, ty, bound, body) => {
                let v = self.eval(bound, env, this)?;
                let env = env.bind(name.clone(), ty.clone(), v);
                self.eval(body, &env, this)
            }
            Expr::If(c, t, otherwise) => match self.eval(c, env, this)? {
                Value::Bool(true) => self.eval(t, env, this),
                Value::Bool(false) => self.eval(otherwise, env, this),
                _ => Err(RuntimeErrorKind::DomainError.into()),
            },
            Expr::Recur(args) => {
                let Some(f) = this else {
                    return Err(RuntimeErrorKind::UnboundSymbol.into());
                };
                let args = self.eval_args(args, env, this)?;
                self.tick()?;
                self.invoke(f, args)
            }
            Expr::Lam(params, ret, body) => Ok(Value::Closure(Arc::new(Closure {
                params: params.clone(),
                ret: ret.clone(),
                body: (**body).clone(),
                env: env.clone(),
            }))),
        }
    }
}

/// Evaluates `expr` in `env`. Every node visit costs one budget unit and
/// every closure or `recur` call one more; `BudgetExceeded` is returned when
/// a unit is needed and none is left.
pub fn eval(expr: &Expr, env: &Env, prims: &Primitives, rng: &mut dyn RngCore, budget: u64) -> EvalOutcome {
    let mut m = Machine {
        prims,
        rng,
        steps_left: budget,
    };
    m.eval(expr, env, None).into()
}

/// Applies a model closure to its inputs. The inputs are bound in a fresh
/// child frame of the closure environment and `recur` calls the model.
pub fn apply_model(
    model: &Arc<Closure>,
    inputs: &[Value],
    prims: &Primitives,
    rng: &mut dyn RngCore,
    budget: u64,
) -> EvalOutcome {
    if inputs.len() != model.params.len() {
        return EvalOutcome::RuntimeError(RuntimeErrorKind::ArityMismatch);
    }
    if inputs.iter().zip(&model.params).any(|(v, (_, t))| &v.ty() != t) {
        return EvalOutcome::RuntimeError(RuntimeErrorKind::DomainError);
    }
    let mut m = Machine {
        prims,
        rng,
        steps_left: budget,
    };
    m.invoke(model, inputs.to_vec()).into()
}
