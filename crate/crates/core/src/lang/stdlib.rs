//! Primitive registry and the standard library of predefined methods.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::lang::eval::RuntimeErrorKind;
use crate::lang::expr::{sym, Symbol};
use crate::lang::types::Type;
use crate::lang::value::Value;

use RuntimeErrorKind::{ArityMismatch, DivByZero, DomainError, NumericOverflow};

pub type PrimFn = fn(&[Value], &mut dyn RngCore) -> Result<Value, RuntimeErrorKind>;

#[derive(Clone)]
pub struct PrimitiveDef {
    pub name: Symbol,
    /// Always a `Type::Func`.
    pub signature: Type,
    pub deterministic: bool,
    pub implementation: PrimFn,
}

impl PrimitiveDef {
    pub fn new(name: &str, params: &[Type], ret: Type, deterministic: bool, f: PrimFn) -> Self {
        PrimitiveDef {
            name: sym(name),
            signature: Type::func(params.to_vec(), ret),
            deterministic,
            implementation: f,
        }
    }

    pub fn params(&self) -> &[Type] {
        self.signature.as_func().expect("primitive signature").0
    }

    pub fn ret(&self) -> &Type {
        self.signature.as_func().expect("primitive signature").1
    }

    pub fn call(&self, args: &[Value], rng: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
        if args.len() != self.params().len() {
            return Err(ArityMismatch);
        }
        (self.implementation)(args, rng)
    }
}

impl fmt::Debug for PrimitiveDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PrimitiveDef")
            .field("name", &self.name)
            .field("signature", &self.signature.to_string())
            .field("deterministic", &self.deterministic)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("primitive `{0}` is defined twice")]
    Duplicate(String),
    #[error("unknown primitive `{0}`")]
    Unknown(String),
}

/// Ordered set of primitives with lookup by name. Order is registration
/// order and is what the grammar enumerates.
#[derive(Clone, Debug)]
pub struct Primitives {
    defs: Vec<PrimitiveDef>,
    by_name: HashMap<Symbol, usize>,
}

impl Primitives {
    pub fn new(defs: Vec<PrimitiveDef>) -> Result<Self, RegistryError> {
        let mut by_name = HashMap::with_capacity(defs.len());
        for (i, d) in defs.iter().enumerate() {
            if by_name.insert(d.name.clone(), i).is_some() {
                return Err(RegistryError::Duplicate(d.name.to_string()));
            }
        }
        Ok(Primitives { defs, by_name })
    }

    pub fn standard() -> Self {
        Primitives::new(standard_library()).expect("standard library names are unique")
    }

    /// Sub-registry keeping only `names`, in standard order.
    pub fn restrict<S: AsRef<str>>(&self, names: &[S]) -> Result<Self, RegistryError> {
        for n in names {
            if self.get(n.as_ref()).is_none() {
                return Err(RegistryError::Unknown(n.as_ref().to_string()));
            }
        }
        let keep = self
            .defs
            .iter()
            .filter(|d| names.iter().any(|n| n.as_ref() == &*d.name))
            .cloned()
            .collect();
        Primitives::new(keep)
    }

    pub fn get(&self, name: &str) -> Option<&PrimitiveDef> {
        self.by_name.get(name).map(|&i| &self.defs[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &PrimitiveDef> {
        self.defs.iter()
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }
}

impl Default for Primitives {
    fn default() -> Self {
        Primitives::standard()
    }
}

fn int(v: &Value) -> Result<i64, RuntimeErrorKind> {
    match v {
        Value::Int(i) => Ok(*i),
        _ => Err(DomainError),
    }
}

fn float(v: &Value) -> Result<f64, RuntimeErrorKind> {
    match v {
        Value::Float(x) => Ok(*x),
        _ => Err(DomainError),
    }
}

fn boolean(v: &Value) -> Result<bool, RuntimeErrorKind> {
    match v {
        Value::Bool(b) => Ok(*b),
        _ => Err(DomainError),
    }
}

fn ints(a: &[Value]) -> Result<(i64, i64), RuntimeErrorKind> {
    Ok((int(&a[0])?, int(&a[1])?))
}

fn floats(a: &[Value]) -> Result<(f64, f64), RuntimeErrorKind> {
    Ok((float(&a[0])?, float(&a[1])?))
}

fn checked(r: Option<i64>) -> Result<Value, RuntimeErrorKind> {
    r.map(Value::Int).ok_or(NumericOverflow)
}

fn real(x: f64) -> Result<Value, RuntimeErrorKind> {
    if x.is_nan() {
        Err(DomainError)
    } else if x.is_infinite() {
        Err(NumericOverflow)
    } else {
        Ok(Value::Float(x))
    }
}

fn int_div(a: &[Value], _: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    let (x, y) = ints(a)?;
    if y == 0 {
        return Err(DivByZero);
    }
    checked(x.checked_div(y))
}

fn int_mod(a: &[Value], _: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    let (x, y) = ints(a)?;
    if y == 0 {
        return Err(DivByZero);
    }
    checked(x.checked_rem_euclid(y))
}

fn floor(a: &[Value], _: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    const LIMIT: f64 = 9_223_372_036_854_775_808.0;
    let f = float(&a[0])?.floor();
    if (-LIMIT..LIMIT).contains(&f) {
        Ok(Value::Int(f as i64))
    } else {
        Err(NumericOverflow)
    }
}

fn flip(a: &[Value], rng: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    let p = float(&a[0])?;
    if !(0.0..=1.0).contains(&p) {
        return Err(DomainError);
    }
    Ok(Value::Bool(rng.gen::<f64>() < p))
}

fn uniform_continuous(a: &[Value], rng: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    let (lo, hi) = floats(a)?;
    if lo > hi {
        return Err(DomainError);
    }
    if lo == hi {
        return Ok(Value::Float(lo));
    }
    if !(hi - lo).is_finite() {
        return Err(NumericOverflow);
    }
    real(rng.gen_range(lo..hi))
}

fn uniform_int(a: &[Value], rng: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    let (lo, hi) = ints(a)?;
    if lo > hi {
        return Err(DomainError);
    }
    Ok(Value::Int(rng.gen_range(lo..=hi)))
}

fn gaussian(a: &[Value], rng: &mut dyn RngCore) -> Result<Value, RuntimeErrorKind> {
    let (mean, sd) = floats(a)?;
    if sd < 0.0 {
        return Err(DomainError);
    }
    let normal = Normal::new(mean, sd).map_err(|_| DomainError)?;
    real(normal.sample(rng))
}

/// The predefined methods available to the grammar.
///
/// Integer and float operations have distinct names (`+` vs `+.`) so that
/// every application node names exactly one signature.
pub fn standard_library() -> Vec<PrimitiveDef> {
    use Type::{Bool, Float, Int};
    let ii = [Int, Int];
    let ff = [Float, Float];
    let bb = [Bool, Bool];
    let p = PrimitiveDef::new;
    vec![
        p("+", &ii, Int, true, |a, _| {
            let (x, y) = ints(a)?;
            checked(x.checked_add(y))
        }),
        p("-", &ii, Int, true, |a, _| {
            let (x, y) = ints(a)?;
            checked(x.checked_sub(y))
        }),
        p("*", &ii, Int, true, |a, _| {
            let (x, y) = ints(a)?;
            checked(x.checked_mul(y))
        }),
        p("safe-div", &ii, Int, true, int_div),
        p("mod", &ii, Int, true, int_mod),
        p("abs", &[Int], Int, true, |a, _| checked(int(&a[0])?.checked_abs())),
        p("min", &ii, Int, true, |a, _| {
            let (x, y) = ints(a)?;
            Ok(Value::Int(x.min(y)))
        }),
        p("max", &ii, Int, true, |a, _| {
            let (x, y) = ints(a)?;
            Ok(Value::Int(x.max(y)))
        }),
        p("floor", &[Float], Int, true, floor),
        p("+.", &ff, Float, true, |a, _| {
            let (x, y) = floats(a)?;
            real(x + y)
        }),
        p("-.", &ff, Float, true, |a, _| {
            let (x, y) = floats(a)?;
            real(x - y)
        }),
        p("*.", &ff, Float, true, |a, _| {
            let (x, y) = floats(a)?;
            real(x * y)
        }),
        p("safe-div.", &ff, Float, true, |a, _| {
            let (x, y) = floats(a)?;
            if y == 0.0 {
                Err(DivByZero)
            } else {
                real(x / y)
            }
        }),
        p("abs.", &[Float], Float, true, |a, _| real(float(&a[0])?.abs())),
        p("min.", &ff, Float, true, |a, _| {
            let (x, y) = floats(a)?;
            real(x.min(y))
        }),
        p("max.", &ff, Float, true, |a, _| {
            let (x, y) = floats(a)?;
            real(x.max(y))
        }),
        p("exp", &[Float], Float, true, |a, _| real(float(&a[0])?.exp())),
        p("log", &[Float], Float, true, |a, _| {
            let x = float(&a[0])?;
            if x <= 0.0 {
                Err(DomainError)
            } else {
                real(x.ln())
            }
        }),
        p("to-float", &[Int], Float, true, |a, _| {
            Ok(Value::Float(int(&a[0])? as f64))
        }),
        p("<", &ii, Bool, true, |a, _| {
            let (x, y) = ints(a)?;
            Ok(Value::Bool(x < y))
        }),
        p("<=", &ii, Bool, true, |a, _| {
            let (x, y) = ints(a)?;
            Ok(Value::Bool(x <= y))
        }),
        p("=", &ii, Bool, true, |a, _| {
            let (x, y) = ints(a)?;
            Ok(Value::Bool(x == y))
        }),
        p("<.", &ff, Bool, true, |a, _| {
            let (x, y) = floats(a)?;
            Ok(Value::Bool(x < y))
        }),
        p("<=.", &ff, Bool, true, |a, _| {
            let (x, y) = floats(a)?;
            Ok(Value::Bool(x <= y))
        }),
        p("=.", &ff, Bool, true, |a, _| {
            let (x, y) = floats(a)?;
            Ok(Value::Bool(x == y))
        }),
        p("and", &bb, Bool, true, |a, _| {
            Ok(Value::Bool(boolean(&a[0])? && boolean(&a[1])?))
        }),
        p("or", &bb, Bool, true, |a, _| {
            Ok(Value::Bool(boolean(&a[0])? || boolean(&a[1])?))
        }),
        p("not", &[Bool], Bool, true, |a, _| Ok(Value::Bool(!boolean(&a[0])?))),
        p("flip", &[Float], Bool, false, flip),
        p("uniform-continuous", &ff, Float, false, uniform_continuous),
        p("uniform-int", &ii, Int, false, uniform_int),
        p("gaussian", &ff, Float, false, gaussian),
    ]
}
