use std::collections::BTreeMap;

use serde_json::Value as Json;
use thiserror::Error;

use super::scope::AdaptorKey;
use crate::lang::{parse_expr, Expr, ParseError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptorError {
    #[error("decrement of absent table `{expr}` at {key}")]
    DecrementMissing { key: String, expr: String },
    #[error("malformed adaptor snapshot: {0}")]
    Snapshot(String),
}

impl From<ParseError> for AdaptorError {
    fn from(e: ParseError) -> Self {
        AdaptorError::Snapshot(e.to_string())
    }
}

/// One memoized expression (in canonical naming) and its customer count.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub expr: Expr,
    pub count: u64,
    pub height: usize,
    pub let_height: usize,
}

/// All tables of a key, indexed by the rendered canonical expression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tables {
    entries: BTreeMap<String, Table>,
    total: u64,
}

impl Tables {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&Table> {
        self.entries.get(canonical)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Table)> {
        self.entries.iter()
    }

    fn add(&mut self, text: String, expr: &Expr, count: u64) {
        if count == 0 {
            return;
        }
        self.total += count;
        self.entries
            .entry(text)
            .or_insert_with(|| Table {
                expr: expr.clone(),
                count: 0,
                height: expr.height(),
                let_height: expr.let_height(),
            })
            .count += count;
    }

    /// Removes up to `count` customers; returns how many were removed.
    fn remove(&mut self, text: &str, count: u64) -> u64 {
        let Some(t) = self.entries.get_mut(text) else {
            return 0;
        };
        let taken = t.count.min(count);
        t.count -= taken;
        if t.count == 0 {
            self.entries.remove(text);
        }
        self.total -= taken;
        taken
    }
}

/// Pitman-Yor table counts per adaptor key. Each distinct canonical
/// expression occupies exactly one table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdaptorState {
    keys: BTreeMap<AdaptorKey, Tables>,
}

impl AdaptorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn tables(&self, key: &AdaptorKey) -> Option<&Tables> {
        self.keys.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AdaptorKey, &Tables)> {
        self.keys.iter()
    }

    /// Total customers over all keys.
    pub fn total(&self) -> u64 {
        self.keys.values().map(Tables::total).sum()
    }

    pub fn count(&self, key: &AdaptorKey, canonical: &Expr) -> u64 {
        self.keys
            .get(key)
            .and_then(|t| t.get(&canonical.to_string()))
            .map_or(0, |t| t.count)
    }

    pub fn increment(&mut self, key: &AdaptorKey, canonical: &Expr) {
        self.keys
            .entry(key.clone())
            .or_default()
            .add(canonical.to_string(), canonical, 1);
    }

    pub fn decrement(&mut self, key: &AdaptorKey, canonical: &Expr) -> Result<(), AdaptorError> {
        let text = canonical.to_string();
        let missing = || AdaptorError::DecrementMissing {
            key: key.to_string(),
            expr: text.clone(),
        };
        let tables = self.keys.get_mut(key).ok_or_else(missing)?;
        if tables.remove(&text, 1) == 0 {
            return Err(missing());
        }
        if tables.is_empty() {
            self.keys.remove(key);
        }
        Ok(())
    }

    /// Applies a `+1` or `-1` to one table.
    pub fn update(&mut self, key: &AdaptorKey, canonical: &Expr, delta: i8) -> Result<(), AdaptorError> {
        match delta {
            1 => {
                self.increment(key, canonical);
                Ok(())
            }
            -1 => self.decrement(key, canonical),
            _ => panic!("adaptor delta must be +1 or -1, got {delta}"),
        }
    }

    /// Count-wise sum.
    pub fn merge(&self, other: &AdaptorState) -> AdaptorState {
        let mut out = self.clone();
        out.absorb(other);
        out
    }

    pub fn absorb(&mut self, other: &AdaptorState) {
        for (key, tables) in &other.keys {
            let dst = self.keys.entry(key.clone()).or_default();
            for (text, t) in &tables.entries {
                dst.add(text.clone(), &t.expr, t.count);
            }
        }
    }

    /// Count-wise difference, clamped at zero.
    pub fn saturating_sub(&self, other: &AdaptorState) -> AdaptorState {
        let mut out = self.clone();
        for (key, tables) in &other.keys {
            if let Some(dst) = out.keys.get_mut(key) {
                for (text, t) in &tables.entries {
                    dst.remove(text, t.count);
                }
                if dst.is_empty() {
                    out.keys.remove(key);
                }
            }
        }
        out
    }

    /// Splits `self - base` into the counts gained and the counts lost.
    pub fn diff(&self, base: &AdaptorState) -> (AdaptorState, AdaptorState) {
        (self.saturating_sub(base), base.saturating_sub(self))
    }

    /// Sorted, compact JSON: `{"<key>": [["<expr>", count], ...], ...}`.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&self.to_json()).expect("adaptor snapshot serializes")
    }

    pub fn to_json(&self) -> Json {
        let map: BTreeMap<String, Vec<(String, u64)>> = self
            .keys
            .iter()
            .map(|(k, t)| {
                let tables = t.entries.iter().map(|(s, t)| (s.clone(), t.count)).collect();
                (k.to_string(), tables)
            })
            .collect();
        serde_json::to_value(map).expect("adaptor snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<AdaptorState, AdaptorError> {
        let raw: BTreeMap<String, Vec<(String, u64)>> =
            serde_json::from_str(text).map_err(|e| AdaptorError::Snapshot(e.to_string()))?;
        let mut out = AdaptorState::new();
        for (k, tables) in raw {
            let key: AdaptorKey = k.parse()?;
            let dst = out.keys.entry(key).or_default();
            for (src, count) in tables {
                let expr = parse_expr(&src)?;
                dst.add(expr.to_string(), &expr, count);
            }
            if dst.is_empty() {
                return Err(AdaptorError::Snapshot(format!("key {k} has no customers")));
            }
        }
        Ok(out)
    }

    /// Pitman-Yor predictive split for `canonical` at `key`: the log mass of
    /// sitting at its existing table and the log mass of opening a new table
    /// (times the base probability).
    pub fn py_predictive(
        &self,
        key: &AdaptorKey,
        canonical: &Expr,
        alpha: f64,
        discount: f64,
        base_logprob: f64,
    ) -> (f64, f64) {
        let Some(tables) = self.keys.get(key) else {
            return (f64::NEG_INFINITY, base_logprob);
        };
        let n = tables.total as f64;
        let k = tables.len() as f64;
        let reuse = tables
            .get(&canonical.to_string())
            .map_or(f64::NEG_INFINITY, |t| ((t.count as f64 - discount) / (n + alpha)).ln());
        let fresh = ((alpha + discount * k) / (n + alpha)).ln() + base_logprob;
        (reuse, fresh)
    }

    /// Log probability of seating one more customer eating `canonical`
    /// under the one-table-per-expression restaurant: reuse when the table
    /// exists, otherwise a new table times the base probability.
    pub fn seating_logprob(
        &self,
        key: &AdaptorKey,
        canonical: &Expr,
        alpha: f64,
        discount: f64,
        base_logprob: f64,
    ) -> f64 {
        let (reuse, fresh) = self.py_predictive(key, canonical, alpha, discount, base_logprob);
        if reuse == f64::NEG_INFINITY {
            fresh
        } else {
            reuse
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::scope::Scope;
    use crate::lang::Type;
    use proptest::prelude::*;

    fn key() -> AdaptorKey {
        AdaptorKey::new(&Type::Int, &Scope::for_task(&[Type::Int], &Type::Int))
    }

    fn e(s: &str) -> Expr {
        s.parse().unwrap()
    }

    #[test]
    fn predictive_worked_examples() {
        let mut st = AdaptorState::new();
        let b = 0.25f64.ln();
        assert_eq!(st.py_predictive(&key(), &e("1"), 1.0, 0.0, b), (f64::NEG_INFINITY, b));
        for x in ["(+ s0 1)", "(+ s0 1)", "2"] {
            st.increment(&key(), &e(x));
        }
        let (reuse, fresh) = st.py_predictive(&key(), &e("(+ s0 1)"), 1.0, 0.0, 0.0);
        assert_eq!(reuse.exp(), 2.0 / 4.0);
        assert_eq!(fresh.exp(), 1.0 / 4.0);
        st.update(&key(), &e("(+ s0 1)"), 1).unwrap();
        let (reuse, _) = st.py_predictive(&key(), &e("(+ s0 1)"), 1.0, 0.0, 0.0);
        assert!((reuse.exp() - 3.0 / 5.0).abs() < 1e-15);
        // with a discount: (c - d)/(n + a) and (a + dK)/(n + a)
        let (reuse, fresh) = st.py_predictive(&key(), &e("2"), 1.0, 0.5, 0.0);
        assert!((reuse.exp() - 0.5 / 5.0).abs() < 1e-15);
        assert!((fresh.exp() - 2.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn update_inverse_and_removal() {
        let mut st = AdaptorState::new();
        st.increment(&key(), &e("1"));
        let before = st.clone();
        st.update(&key(), &e("2"), 1).unwrap();
        assert_eq!(st.tables(&key()).unwrap().len(), 2);
        st.update(&key(), &e("2"), -1).unwrap();
        assert_eq!(st, before);
        st.update(&key(), &e("1"), -1).unwrap();
        assert!(st.is_empty());
        assert!(matches!(
            st.update(&key(), &e("1"), -1),
            Err(AdaptorError::DecrementMissing { .. })
        ));
    }

    #[test]
    fn merge_and_diff() {
        let mut a = AdaptorState::new();
        let mut b = AdaptorState::new();
        for _ in 0..2 {
            a.increment(&key(), &e("1"));
        }
        for _ in 0..3 {
            b.increment(&key(), &e("1"));
        }
        assert_eq!(a.merge(&b).count(&key(), &e("1")), 5);
        assert_eq!(a.merge(&AdaptorState::new()), a);
        let (added, removed) = b.diff(&a);
        assert_eq!(added.count(&key(), &e("1")), 1);
        assert!(removed.is_empty());
        assert_eq!(a.merge(&added), b);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut st = AdaptorState::new();
        st.increment(&key(), &e("(let ((b0 float 0.5)) (floor b0))"));
        st.increment(&key(), &e("s0"));
        st.increment(&AdaptorKey::new(&Type::Bool, &Scope::default()), &e("true"));
        let text = st.to_canonical_json();
        assert_eq!(AdaptorState::from_json(&text).unwrap(), st);
        assert!(
            text.starts_with(r#"{"(key bool (scope) (self none))":[["true",1]]"#),
            "{text}"
        );
        assert!(AdaptorState::from_json(r#"{"nope": []}"#).is_err());
    }

    fn arb_state() -> impl Strategy<Value = AdaptorState> {
        let keys = [
            AdaptorKey::new(&Type::Int, &Scope::default()),
            AdaptorKey::new(&Type::Bool, &Scope::default()),
            key(),
        ];
        prop::collection::vec((0..3usize, 0..4i64, 1..4u64), 0..12).prop_map(move |items| {
            let mut st = AdaptorState::new();
            for (k, v, c) in items {
                for _ in 0..c {
                    st.increment(&keys[k], &Expr::Int(v));
                }
            }
            st
        })
    }

    proptest! {
        #[test]
        fn merge_is_a_commutative_monoid(a in arb_state(), b in arb_state(), c in arb_state()) {
            prop_assert_eq!(a.merge(&b).to_canonical_json(), b.merge(&a).to_canonical_json());
            prop_assert_eq!(
                a.merge(&b).merge(&c).to_canonical_json(),
                a.merge(&b.merge(&c)).to_canonical_json()
            );
            prop_assert_eq!(a.merge(&AdaptorState::new()).to_canonical_json(), a.to_canonical_json());
        }

        #[test]
        fn diff_reconstructs(a in arb_state(), b in arb_state()) {
            let (added, removed) = b.diff(&a);
            prop_assert_eq!(a.merge(&added).saturating_sub(&removed), b);
        }

        #[test]
        fn seating_is_exchangeable(
            seq in prop::collection::vec(0..4i64, 1..8),
            rot in 0..8usize,
            d in 0.0..0.9f64,
            alpha in 0.1..3.0f64,
        ) {
            let base = |v: i64| ((v + 1) as f64 / 10.0).ln();
            let total = |order: &[i64]| {
                let mut st = AdaptorState::new();
                let mut lp = 0.0;
                for &v in order {
                    lp += st.seating_logprob(&key(), &Expr::Int(v), alpha, d, base(v));
                    st.increment(&key(), &Expr::Int(v));
                }
                lp
            };
            let mut permuted = seq.clone();
            permuted.rotate_left(rot % seq.len());
            permuted.reverse();
            prop_assert!((total(&seq) - total(&permuted)).abs() < 1e-9);
        }
    }
}
