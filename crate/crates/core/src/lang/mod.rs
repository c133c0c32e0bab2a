//! The induced-program language: types, syntax, values and evaluation.

pub mod eval;
pub mod expr;
pub mod sexpr;
pub mod stdlib;
pub mod typecheck;
pub mod types;
pub mod value;

pub use eval::{apply_model, eval, EvalOutcome, RuntimeErrorKind};
pub use expr::{sym, Expr, NodePath, Symbol};
pub use sexpr::{format_float, parse_expr, parse_type, ParseError};
pub use stdlib::{standard_library, PrimitiveDef, Primitives, RegistryError};
pub use typecheck::{typecheck, TypeError};
pub use types::Type;
pub use value::{Closure, Env, Value, ValueKey};
