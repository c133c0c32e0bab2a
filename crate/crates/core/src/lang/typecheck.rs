use thiserror::Error;

use crate::lang::expr::{Expr, NodePath, Symbol};
use crate::lang::stdlib::Primitives;
use crate::lang::types::Type;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("unbound symbol `{name}` at {path}")]
    UnboundSymbol { path: NodePath, name: String },
    #[error("type error at {path}: {message}")]
    IllTyped { path: NodePath, message: String },
}

impl TypeError {
    pub fn path(&self) -> &NodePath {
        match self {
            TypeError::UnboundSymbol { path, .. } | TypeError::IllTyped { path, .. } => path,
        }
    }
}

/// Infers the type of `expr` under `scope` (outermost first; later entries
/// shadow earlier ones). `self_sig` is the function type that `recur` calls.
pub fn typecheck(
    expr: &Expr,
    scope: &[(Symbol, Type)],
    self_sig: Option<&Type>,
    prims: &Primitives,
) -> Result<Type, TypeError> {
    let mut checker = Checker {
        prims,
        scope: scope.to_vec(),
        path: Vec::new(),
    };
    checker.infer(expr, self_sig)
}

struct Checker<'a> {
    prims: &'a Primitives,
    scope: Vec<(Symbol, Type)>,
    path: Vec<usize>,
}

impl Checker<'_> {
    fn ill<T>(&self, message: String) -> Result<T, TypeError> {
        Err(TypeError::IllTyped {
            path: NodePath(self.path.clone()),
            message,
        })
    }

    fn lookup(&self, name: &str) -> Option<&Type> {
        self.scope.iter().rev().find(|(n, _)| &**n == name).map(|(_, t)| t)
    }

    fn child(&mut self, i: usize, e: &Expr, self_sig: Option<&Type>) -> Result<Type, TypeError> {
        self.path.push(i);
        let r = self.infer(e, self_sig);
        self.path.pop();
        r
    }

    fn check_args(
        &mut self,
        what: &str,
        params: &[Type],
        args: &[Expr],
        self_sig: Option<&Type>,
    ) -> Result<(), TypeError> {
        if params.len() != args.len() {
            return self.ill(format!(
                "{what} expects {} argument(s), got {}",
                params.len(),
                args.len()
            ));
        }
        for (i, (p, a)) in params.iter().zip(args).enumerate() {
            let t = self.child(i, a, self_sig)?;
            if &t != p {
                self.path.push(i);
                let r = self.ill(format!("argument {} of {what} is {t}, expected {p}", i + 1));
                self.path.pop();
                return r;
            }
        }
        Ok(())
    }

    fn infer(&mut self, expr: &Expr, self_sig: Option<&Type>) -> Result<Type, TypeError> {
        match expr {
            Expr::Int(_) => Ok(Type::Int),
            Expr::Float(_) => Ok(Type::Float),
            Expr::Bool(_) => Ok(Type::Bool),
            Expr::Var(name) => self.lookup(name).cloned().ok_or_else(|| TypeError::UnboundSymbol {
                path: NodePath(self.path.clone()),
                name: name.to_string(),
            }),
            Expr::App(f, args) => {
                let sig = match self.lookup(f) {
                    Some(t) => t.clone(),
                    None => match self.prims.get(f) {
                        Some(p) => p.signature.clone(),
                        None => {
                            return Err(TypeError::UnboundSymbol {
                                path: NodePath(self.path.clone()),
                                name: f.to_string(),
                            })
                        }
                    },
                };
                let Type::Func(params, ret) = sig else {
                    return self.ill(format!("`{f}` has type {sig} and cannot be applied"));
                };
                self.check_args(&format!("`{f}`"), &params, args, self_sig)?;
                Ok(*ret)
            }
            Expr::Let(name, ty, bound, body) => {
                let bt = self.child(0, bound, self_sig)?;
                if &bt != ty {
                    return self.ill(format!("let binds `{name}` as {ty} but the bound expression is {bt}"));
                }
                self.scope.push((name.clone(), ty.clone()));
                let r = self.child(1, body, self_sig);
                self.scope.pop();
                r
            }
            Expr::If(c, t, e) => {
                let ct = self.child(0, c, self_sig)?;
                if ct != Type::Bool {
                    return self.ill(format!("if condition is {ct}, expected bool"));
                }
                let tt = self.child(1, t, self_sig)?;
                let et = self.child(2, e, self_sig)?;
                if tt != et {
                    return self.ill(format!("if branches differ: {tt} vs {et}"));
                }
                Ok(tt)
            }
            Expr::Recur(args) => {
                let Some(Type::Func(params, ret)) = self_sig else {
                    return self.ill("recur outside of a function".into());
                };
                self.check_args("recur", params, args, self_sig)?;
                Ok((**ret).clone())
            }
            Expr::Lam(params, ret, body) => {
                let fty = Type::func(params.iter().map(|(_, t)| t.clone()).collect(), ret.clone());
                let depth = self.scope.len();
                self.scope.extend(params.iter().cloned());
                let r = self.child(0, body, Some(&fty));
                self.scope.truncate(depth);
                let bt = r?;
                if &bt != ret {
                    return self.ill(format!("lambda declares {ret} but its body is {bt}"));
                }
                Ok(fty)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::expr::sym;

    fn check(src: &str, scope: &[(&str, Type)], self_sig: Option<&Type>) -> Result<Type, TypeError> {
        let scope: Vec<(Symbol, Type)> = scope.iter().map(|(n, t)| (sym(n), t.clone())).collect();
        typecheck(&src.parse().unwrap(), &scope, self_sig, &Primitives::standard())
    }

    #[test]
    fn worked_examples() {
        assert_eq!(check("3", &[], None), Ok(Type::Int));
        let scope = [("x1", Type::Int), ("x2", Type::Int)];
        assert_eq!(check("x1", &scope, None), Ok(Type::Int));
        let e = check("(+ 1 true)", &[], None).unwrap_err();
        assert_eq!(e.path(), &NodePath(vec![1]));
        assert!(e.to_string().contains("argument 2"), "{e}");
    }

    #[test]
    fn unbound_names() {
        assert!(matches!(
            check("(+ q 1)", &[], None),
            Err(TypeError::UnboundSymbol { name, .. }) if name == "q"
        ));
        assert!(matches!(
            check("(frobnicate 1)", &[], None),
            Err(TypeError::UnboundSymbol { .. })
        ));
    }

    #[test]
    fn if_and_recur_rules() {
        let sig = Type::func(vec![Type::Int], Type::Int);
        let scope = [("x1", Type::Int)];
        assert_eq!(check("(if (< x1 0) 0 x1)", &scope, None), Ok(Type::Int));
        assert!(check("(if x1 0 1)", &scope, None).is_err());
        assert!(check("(if true 0 false)", &scope, None).is_err());
        assert_eq!(check("(recur (- x1 1))", &scope, Some(&sig)), Ok(Type::Int));
        assert!(check("(recur (- x1 1))", &scope, None).is_err());
        assert!(check("(recur true)", &scope, Some(&sig)).is_err());
        assert!(check("(recur)", &scope, Some(&sig)).is_err());
    }

    #[test]
    fn let_lambda_and_local_functions() {
        let src = "(let ((f (-> int int) (lambda ((a int)) int (+ a 1)))) (f 41))";
        assert_eq!(check(src, &[], None), Ok(Type::Int));
        let lam = "(lambda ((x1 int) (x2 int)) int (+ x1 x2))";
        assert_eq!(
            check(lam, &[], None),
            Ok(Type::func(vec![Type::Int, Type::Int], Type::Int))
        );
        assert!(check("(lambda ((a int)) bool (+ a 1))", &[], None).is_err());
        assert!(check("(let ((y int true)) y)", &[], None).is_err());
        assert!(check("(let ((y int 1)) (y 2))", &[], None).is_err());
        // recur inside a lambda refers to that lambda
        let rec = "(lambda ((n int)) int (if (< n 1) 0 (recur (- n 1))))";
        assert!(check(rec, &[], None).is_ok());
    }

    #[test]
    fn scope_shadowing() {
        let scope = [("x", Type::Int), ("x", Type::Bool)];
        assert_eq!(check("x", &scope, None), Ok(Type::Bool));
        assert_eq!(check("(let ((x float 1.0)) x)", &scope, None), Ok(Type::Float));
    }
}
