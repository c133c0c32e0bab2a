use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::lang::sexpr::{self, ParseError};
use crate::lang::types::Type;

pub type Symbol = Arc<str>;

pub fn sym(s: &str) -> Symbol {
    Arc::from(s)
}

/// Abstract syntax of induced programs.
///
/// Each variant corresponds to exactly one grammar production, so the
/// derivation of a tree can be read off its shape. `Lam` is the constant
/// production for function types.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Int(i64),
    Float(f64),
    Bool(bool),
    Var(Symbol),
    App(Symbol, Vec<Expr>),
    Let(Symbol, Type, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Recur(Vec<Expr>),
    Lam(Vec<(Symbol, Type)>, Type, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(sym(name))
    }

    pub fn app(f: &str, args: Vec<Expr>) -> Expr {
        Expr::App(sym(f), args)
    }

    pub fn let_in(name: &str, ty: Type, bound: Expr, body: Expr) -> Expr {
        Expr::Let(sym(name), ty, Box::new(bound), Box::new(body))
    }

    pub fn if_then_else(cond: Expr, then: Expr, otherwise: Expr) -> Expr {
        Expr::If(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    pub fn lambda(params: Vec<(&str, Type)>, ret: Type, body: Expr) -> Expr {
        let params = params.into_iter().map(|(n, t)| (sym(n), t)).collect();
        Expr::Lam(params, ret, Box::new(body))
    }

    /// Children in canonical order: application and recur arguments,
    /// `[bound, body]` for let, `[cond, then, else]` for if, `[body]` for lambda.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Var(_) => Vec::new(),
            Expr::App(_, args) | Expr::Recur(args) => args.iter().collect(),
            Expr::Let(_, _, bound, body) => vec![bound, body],
            Expr::If(c, t, e) => vec![c, t, e],
            Expr::Lam(_, _, body) => vec![body],
        }
    }

    pub fn child_mut(&mut self, i: usize) -> Option<&mut Expr> {
        match self {
            Expr::Int(_) | Expr::Float(_) | Expr::Bool(_) | Expr::Var(_) => None,
            Expr::App(_, args) | Expr::Recur(args) => args.get_mut(i),
            Expr::Let(_, _, bound, body) => match i {
                0 => Some(bound),
                1 => Some(body),
                _ => None,
            },
            Expr::If(c, t, e) => match i {
                0 => Some(c),
                1 => Some(t),
                2 => Some(e),
                _ => None,
            },
            Expr::Lam(_, _, body) => (i == 0).then_some(&mut **body),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(|c| c.node_count()).sum::<usize>()
    }

    /// Longest root-to-leaf edge count; a leaf has height 0.
    pub fn height(&self) -> usize {
        self.children().iter().map(|c| 1 + c.height()).max().unwrap_or(0)
    }

    /// Largest number of `let` nodes on any root-to-leaf path.
    pub fn let_height(&self) -> usize {
        let below = self.children().iter().map(|c| c.let_height()).max().unwrap_or(0);
        below + usize::from(matches!(self, Expr::Let(..)))
    }

    pub fn at(&self, path: &[usize]) -> Option<&Expr> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i).and_then(|c| c.at(rest)),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Expr> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.child_mut(i).and_then(|c| c.at_mut(rest)),
        }
    }

    /// Copy of `self` with the subtree at `path` replaced.
    pub fn replaced(&self, path: &[usize], new: Expr) -> Option<Expr> {
        let mut out = self.clone();
        *out.at_mut(path)? = new;
        Some(out)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Float(x) => f.write_str(&sexpr::format_float(*x)),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Var(name) => f.write_str(name),
            Expr::App(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Expr::Let(name, ty, bound, body) => {
                write!(f, "(let (({name} {ty} {bound})) {body})")
            }
            Expr::If(c, t, e) => write!(f, "(if {c} {t} {e})"),
            Expr::Recur(args) => {
                f.write_str("(recur")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Expr::Lam(params, ret, body) => {
                f.write_str("(lambda (")?;
                for (i, (name, ty)) in params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "({name} {ty})")?;
                }
                write!(f, ") {ret} {body})")
            }
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        sexpr::parse_expr(s)
    }
}

/// Child-index path from the root of an expression.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("root")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Expr {
        "(let ((y int (uniform-int 0 9))) (+ y x1))".parse().unwrap()
    }

    #[test]
    fn shape_metrics() {
        let e = sample();
        assert_eq!(e.node_count(), 7);
        assert_eq!(e.height(), 2);
        assert_eq!(e.let_height(), 1);
        assert_eq!(Expr::Int(3).height(), 0);
    }

    #[test]
    fn paths_address_children() {
        let e = sample();
        assert_eq!(e.at(&[1, 1]), Some(&Expr::var("x1")));
        assert_eq!(e.at(&[0, 0]), Some(&Expr::Int(0)));
        assert!(e.at(&[2]).is_none());
        let r = e.replaced(&[1, 1], Expr::Int(4)).unwrap();
        assert_eq!(r.to_string(), "(let ((y int (uniform-int 0 9))) (+ y 4))");
        assert_eq!(NodePath(vec![1, 0]).to_string(), "root.1.0");
    }
}
