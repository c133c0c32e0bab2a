use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Primitives, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProductionKind {
    /// Literal from the constant pool, or a `lambda` for function types.
    Constant,
    Variable,
    Application,
    Let,
    If,
    Recur,
}

impl ProductionKind {
    pub const ALL: [ProductionKind; 6] = [
        ProductionKind::Constant,
        ProductionKind::Variable,
        ProductionKind::Application,
        ProductionKind::Let,
        ProductionKind::If,
        ProductionKind::Recur,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProductionKind::Constant => "constant",
            ProductionKind::Variable => "variable",
            ProductionKind::Application => "application",
            ProductionKind::Let => "let",
            ProductionKind::If => "if",
            ProductionKind::Recur => "recur",
        }
    }
}

impl fmt::Display for ProductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unnormalized production weights. A weight of zero disables a production.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductionWeights {
    pub constant: f64,
    pub variable: f64,
    pub application: f64,
    #[serde(rename = "let")]
    pub let_: f64,
    #[serde(rename = "if")]
    pub if_: f64,
    pub recur: f64,
}

impl Default for ProductionWeights {
    fn default() -> Self {
        ProductionWeights {
            constant: 3.0,
            variable: 3.0,
            application: 2.0,
            let_: 1.0,
            if_: 1.0,
            recur: 0.5,
        }
    }
}

impl ProductionWeights {
    pub fn only(kinds: &[ProductionKind]) -> Self {
        let mut w = ProductionWeights {
            constant: 0.0,
            variable: 0.0,
            application: 0.0,
            let_: 0.0,
            if_: 0.0,
            recur: 0.0,
        };
        for &k in kinds {
            *w.get_mut(k) = 1.0;
        }
        w
    }

    pub fn get(&self, kind: ProductionKind) -> f64 {
        match kind {
            ProductionKind::Constant => self.constant,
            ProductionKind::Variable => self.variable,
            ProductionKind::Application => self.application,
            ProductionKind::Let => self.let_,
            ProductionKind::If => self.if_,
            ProductionKind::Recur => self.recur,
        }
    }

    pub fn get_mut(&mut self, kind: ProductionKind) -> &mut f64 {
        match kind {
            ProductionKind::Constant => &mut self.constant,
            ProductionKind::Variable => &mut self.variable,
            ProductionKind::Application => &mut self.application,
            ProductionKind::Let => &mut self.let_,
            ProductionKind::If => &mut self.if_,
            ProductionKind::Recur => &mut self.recur,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("production weight `{0}` must be finite and non-negative")]
    BadWeight(String),
    #[error("max_depth must be at least 1")]
    MaxDepth,
    #[error("max_let_nesting must be at least 1")]
    MaxLetNesting,
    #[error("discount must lie in [0, 1), got {0}")]
    Discount(f64),
    #[error("concentration must exceed -discount, got {0}")]
    Concentration(f64),
    #[error("constant pool for {0} contains a duplicate or non-finite value")]
    Pool(Type),
    #[error("let type {0} is not supported (base types and first-order functions only)")]
    LetType(Type),
}

#[derive(Clone, Debug)]
pub struct GrammarConfig {
    pub weights: ProductionWeights,
    /// Per requested type weights replacing `weights` entirely.
    pub type_weights: BTreeMap<Type, ProductionWeights>,
    pub int_pool: Vec<i64>,
    pub float_pool: Vec<f64>,
    pub bool_pool: Vec<bool>,
    /// Types a `let` may bind, with unnormalized weights.
    pub let_types: Vec<(Type, f64)>,
    pub max_depth: usize,
    pub max_let_nesting: usize,
    pub adaptor_enabled: bool,
    pub alpha: f64,
    pub discount: f64,
    pub primitives: Arc<Primitives>,
}

impl Default for GrammarConfig {
    fn default() -> Self {
        GrammarConfig {
            weights: ProductionWeights::default(),
            type_weights: BTreeMap::new(),
            int_pool: vec![-1, 0, 1, 2, 3, 5, 10],
            float_pool: default_float_pool(),
            bool_pool: vec![true, false],
            let_types: vec![
                (Type::Int, 1.0),
                (Type::Float, 1.0),
                (Type::Bool, 1.0),
                (Type::func(vec![Type::Int], Type::Int), 0.5),
            ],
            max_depth: 4,
            max_let_nesting: 2,
            adaptor_enabled: true,
            alpha: 1.0,
            discount: 0.1,
            primitives: Arc::new(Primitives::standard()),
        }
    }
}

pub fn default_float_pool() -> Vec<f64> {
    let mut pool: Vec<f64> = (0..=10).map(|i| f64::from(i) / 10.0).collect();
    pool.extend([2.0, PI, E]);
    pool
}

impl GrammarConfig {
    pub fn weights_for(&self, ty: &Type) -> &ProductionWeights {
        self.type_weights.get(ty).unwrap_or(&self.weights)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let all = std::iter::once(&self.weights).chain(self.type_weights.values());
        for w in all {
            for k in ProductionKind::ALL {
                let v = w.get(k);
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ConfigError::BadWeight(k.name().into()));
                }
            }
        }
        if self.max_depth < 1 {
            return Err(ConfigError::MaxDepth);
        }
        if self.max_let_nesting < 1 {
            return Err(ConfigError::MaxLetNesting);
        }
        if !(0.0..1.0).contains(&self.discount) {
            return Err(ConfigError::Discount(self.discount));
        }
        if !self.alpha.is_finite() || self.alpha <= -self.discount {
            return Err(ConfigError::Concentration(self.alpha));
        }
        if has_duplicates(&self.int_pool) || has_duplicates(&self.bool_pool) {
            let ty = if has_duplicates(&self.int_pool) {
                Type::Int
            } else {
                Type::Bool
            };
            return Err(ConfigError::Pool(ty));
        }
        let floats: Vec<u64> = self.float_pool.iter().map(|x| x.to_bits()).collect();
        if has_duplicates(&floats) || self.float_pool.iter().any(|x| !x.is_finite()) {
            return Err(ConfigError::Pool(Type::Float));
        }
        for (t, w) in &self.let_types {
            if !t.is_first_order() {
                return Err(ConfigError::LetType(t.clone()));
            }
            if !(w.is_finite() && *w >= 0.0) {
                return Err(ConfigError::BadWeight(format!("let type {t}")));
            }
        }
        Ok(())
    }

    pub fn pool_len(&self, ty: &Type) -> usize {
        match ty {
            Type::Int => self.int_pool.len(),
            Type::Float => self.float_pool.len(),
            Type::Bool => self.bool_pool.len(),
            Type::Func(..) => 0,
        }
    }
}

fn has_duplicates<T: PartialEq>(xs: &[T]) -> bool {
    xs.iter().enumerate().any(|(i, x)| xs[..i].contains(x))
}
