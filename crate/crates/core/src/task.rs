use std::fmt;
use std::sync::Arc;

use crate::grammar::{canonicalize, decanonicalize, Context, Scope};
use crate::lang::{Closure, Env, Expr, Type};

/// Input and output types of the program being induced. The program is a
/// body over parameters `x1 .. xn`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaskSignature {
    pub inputs: Vec<Type>,
    pub output: Type,
}

impl TaskSignature {
    pub fn new(inputs: Vec<Type>, output: Type) -> Self {
        TaskSignature { inputs, output }
    }

    pub fn func_type(&self) -> Type {
        Type::func(self.inputs.clone(), self.output.clone())
    }

    pub fn scope(&self) -> Scope {
        Scope::for_task(&self.inputs, &self.output)
    }

    pub fn root_context(&self) -> Context {
        Context::root(self.scope())
    }

    /// Wraps a body into the closure that gets applied to observations.
    pub fn model(&self, body: &Expr) -> Arc<Closure> {
        Arc::new(Closure {
            params: self.scope().vars().to_vec(),
            ret: self.output.clone(),
            body: body.clone(),
            env: Env::new(),
        })
    }

    /// The full `(lambda ...)` form of a body.
    pub fn as_lambda(&self, body: &Expr) -> Expr {
        Expr::Lam(
            self.scope().vars().to_vec(),
            self.output.clone(),
            Box::new(body.clone()),
        )
    }

    /// Accepts either a bare body or a `lambda` matching this signature,
    /// whose parameters are renamed to `x1 .. xn`.
    pub fn body_of(&self, program: &Expr) -> Expr {
        match program {
            Expr::Lam(params, ret, body)
                if *ret == self.output && params.iter().map(|p| &p.1).eq(self.inputs.iter()) =>
            {
                let own = Scope::new(params.clone(), Some(self.func_type()));
                decanonicalize(&canonicalize(body, &own), &self.scope())
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for TaskSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.func_type().fmt(f)
    }
}
