use std::fmt;
use std::str::FromStr;

use crate::lang::sexpr::{self, ParseError};

/// Types of the induced-program language.
///
/// `Func` is only used first-order by the grammar: parameters and result are
/// base types. The typechecker and evaluator accept arbitrary nesting.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    Float,
    Bool,
    Func(Vec<Type>, Box<Type>),
}

impl Type {
    pub fn func(params: Vec<Type>, ret: Type) -> Type {
        Type::Func(params, Box::new(ret))
    }

    pub fn is_base(&self) -> bool {
        !matches!(self, Type::Func(..))
    }

    pub fn is_first_order(&self) -> bool {
        match self {
            Type::Func(params, ret) => ret.is_base() && params.iter().all(Type::is_base),
            _ => true,
        }
    }

    pub fn as_func(&self) -> Option<(&[Type], &Type)> {
        match self {
            Type::Func(params, ret) => Some((params, ret)),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Float => f.write_str("float"),
            Type::Bool => f.write_str("bool"),
            Type::Func(params, ret) => {
                f.write_str("(->")?;
                for p in params {
                    write!(f, " {p}")?;
                }
                write!(f, " {ret})")
            }
        }
    }
}

impl FromStr for Type {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        sexpr::parse_type(s)
    }
}
