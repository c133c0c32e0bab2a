//! Canonical s-expression syntax for programs and types.
//!
//! Rendering is the `Display` impl of [`Expr`] and [`Type`]; this module holds
//! the reader and the float format shared by every textual artifact.

use thiserror::Error;

use crate::lang::expr::{sym, Expr, Symbol};
use crate::lang::types::Type;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

fn err<T>(offset: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        offset,
        message: message.into(),
    })
}

const KEYWORDS: [&str; 4] = ["let", "if", "recur", "lambda"];

/// Renders a float with 17 significant digits and a decimal point.
///
/// Exponents in `[-5, 17)` are written positionally, others in scientific
/// notation. Seventeen digits round-trip every finite `f64` exactly.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let neg = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let sign = if neg { "-" } else { "" };
    if (-5..17).contains(&exp) {
        if exp >= 0 {
            let split = exp as usize + 1;
            let (int_part, frac) = digits.split_at(split);
            let frac = if frac.is_empty() { "0" } else { frac };
            format!("{sign}{int_part}.{frac}")
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            format!("{sign}0.{zeros}{digits}")
        }
    } else {
        format!("{sign}{}.{}e{exp}", &digits[..1], &digits[1..])
    }
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn offset(&self) -> usize {
        match self {
            Sexp::Atom(_, o) | Sexp::List(_, o) => *o,
        }
    }
}

struct Reader<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            src: text.as_bytes(),
            text,
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c == b';' {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn datum(&mut self) -> Result<Sexp, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            None => err(start, "unexpected end of input"),
            Some(b')') => err(start, "unexpected `)`"),
            Some(b'(') => {
                self.pos += 1;
                let mut items = Vec::new();
                loop {
                    self.skip_ws();
                    match self.src.get(self.pos) {
                        None => return err(start, "unclosed `(`"),
                        Some(b')') => {
                            self.pos += 1;
                            return Ok(Sexp::List(items, start));
                        }
                        Some(_) => items.push(self.datum()?),
                    }
                }
            }
            Some(_) => {
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    if c.is_ascii_whitespace() || c == b'(' || c == b')' || c == b';' {
                        break;
                    }
                    self.pos += 1;
                }
                Ok(Sexp::Atom(self.text[start..self.pos].to_string(), start))
            }
        }
    }

    fn only_datum(mut self) -> Result<Sexp, ParseError> {
        let d = self.datum()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return err(self.pos, "trailing input after expression");
        }
        Ok(d)
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    to_expr(&Reader::new(src).only_datum()?)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    to_type(&Reader::new(src).only_datum()?)
}

fn looks_numeric(s: &str) -> bool {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    body.as_bytes().first().is_some_and(u8::is_ascii_digit)
}

fn to_type(s: &Sexp) -> Result<Type, ParseError> {
    match s {
        Sexp::Atom(a, o) => match a.as_str() {
            "int" => Ok(Type::Int),
            "float" => Ok(Type::Float),
            "bool" => Ok(Type::Bool),
            _ => err(*o, format!("unknown type `{a}`")),
        },
        Sexp::List(items, o) => match items.split_first() {
            Some((Sexp::Atom(head, _), rest)) if head == "->" && !rest.is_empty() => {
                let mut tys = rest.iter().map(to_type).collect::<Result<Vec<_>, _>>()?;
                let ret = tys.pop().expect("non-empty");
                Ok(Type::func(tys, ret))
            }
            _ => err(*o, "function type must be `(-> param... result)`"),
        },
    }
}

fn to_symbol(s: &Sexp) -> Result<Symbol, ParseError> {
    match s {
        Sexp::Atom(a, o) => {
            if looks_numeric(a) || a == "true" || a == "false" || KEYWORDS.contains(&a.as_str()) {
                err(*o, format!("`{a}` cannot be used as a symbol"))
            } else {
                Ok(sym(a))
            }
        }
        Sexp::List(_, o) => err(*o, "expected a symbol"),
    }
}

fn atom_expr(a: &str, o: usize) -> Result<Expr, ParseError> {
    match a {
        "true" => return Ok(Expr::Bool(true)),
        "false" => return Ok(Expr::Bool(false)),
        _ => {}
    }
    if looks_numeric(a) {
        if a.contains(['.', 'e', 'E']) {
            return match a.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Expr::Float(x)),
                _ => err(o, format!("invalid float literal `{a}`")),
            };
        }
        return a
            .parse::<i64>()
            .map(Expr::Int)
            .or_else(|_| err(o, format!("invalid integer literal `{a}`")));
    }
    if KEYWORDS.contains(&a) {
        return err(o, format!("keyword `{a}` used as a variable"));
    }
    Ok(Expr::Var(sym(a)))
}

fn to_expr(s: &Sexp) -> Result<Expr, ParseError> {
    let (items, o) = match s {
        Sexp::Atom(a, o) => return atom_expr(a, *o),
        Sexp::List(items, o) => (items, *o),
    };
    let Some((head, rest)) = items.split_first() else {
        return err(o, "empty application `()`");
    };
    let Sexp::Atom(head, _) = head else {
        return err(head.offset(), "operator position must be a symbol");
    };
    match head.as_str() {
        "let" => {
            let [bindings, body] = rest else {
                return err(o, "let expects `(let ((name type bound)) body)`");
            };
            let Sexp::List(bs, bo) = bindings else {
                return err(bindings.offset(), "let bindings must be a list");
            };
            let [Sexp::List(b, _)] = bs.as_slice() else {
                return err(*bo, "let takes exactly one binding");
            };
            let [name, ty, bound] = b.as_slice() else {
                return err(*bo, "binding must be `(name type bound)`");
            };
            Ok(Expr::Let(
                to_symbol(name)?,
                to_type(ty)?,
                Box::new(to_expr(bound)?),
                Box::new(to_expr(body)?),
            ))
        }
        "if" => {
            let [c, t, e] = rest else {
                return err(o, "if expects three operands");
            };
            Ok(Expr::if_then_else(to_expr(c)?, to_expr(t)?, to_expr(e)?))
        }
        "recur" => Ok(Expr::Recur(rest.iter().map(to_expr).collect::<Result<_, _>>()?)),
        "lambda" => {
            let [params, ret, body] = rest else {
                return err(o, "lambda expects `(lambda ((x type)...) type body)`");
            };
            let Sexp::List(ps, po) = params else {
                return err(params.offset(), "lambda parameters must be a list");
            };
            let mut out: Vec<(Symbol, Type)> = Vec::with_capacity(ps.len());
            for p in ps {
                let Sexp::List(pair, pair_o) = p else {
                    return err(p.offset(), "parameter must be `(name type)`");
                };
                let [name, ty] = pair.as_slice() else {
                    return err(*pair_o, "parameter must be `(name type)`");
                };
                let name = to_symbol(name)?;
                if out.iter().any(|(n, _)| *n == name) {
                    return err(*po, format!("duplicate parameter `{name}`"));
                }
                out.push((name, to_type(ty)?));
            }
            Ok(Expr::Lam(out, to_type(ret)?, Box::new(to_expr(body)?)))
        }
        _ => {
            let f = to_symbol(&items[0])?;
            Ok(Expr::App(f, rest.iter().map(to_expr).collect::<Result<_, _>>()?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_examples_round_trip() {
        for src in [
            "(+ x1 2)",
            "(let ((y int (uniform-int 0 9))) (+ y x1))",
            "(if (< x1 0) 0 x1)",
            "(lambda ((x1 int) (x2 int)) int (+ x1 x2))",
            "(recur (- x1 1))",
            "(lambda () bool (flip 0.50000000000000000))",
            "(recur)",
        ] {
            let e = parse_expr(src).unwrap();
            assert_eq!(e.to_string(), src);
        }
    }

    #[test]
    fn float_format() {
        assert_eq!(format_float(1.0), "1.0000000000000000");
        assert_eq!(format_float(0.5), "0.50000000000000000");
        assert_eq!(format_float(std::f64::consts::PI), "3.1415926535897931");
        assert_eq!(format_float(-2.5e-3), "-0.0025000000000000001");
        assert_eq!(format_float(0.0), "0.0000000000000000");
        assert_eq!(format_float(1e20), "1.0000000000000000e20");
        assert_eq!(format_float(1.5e-300), "1.5000000000000001e-300");
        assert_eq!(format_float(12345678901234567.0), "12345678901234568.0");
        assert_eq!(format_float(1e17), "1.0000000000000000e17");
    }

    #[test]
    fn floats_are_not_integers() {
        assert_eq!(parse_expr("2.0").unwrap(), Expr::Float(2.0));
        assert_eq!(parse_expr("2").unwrap(), Expr::Int(2));
        assert_eq!(parse_expr("-7").unwrap(), Expr::Int(-7));
        assert_eq!(parse_expr("-").unwrap(), Expr::var("-"));
        assert_eq!(parse_expr("1e3").unwrap(), Expr::Float(1000.0));
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "(",
            ")",
            "()",
            "(+ 1 2) 3",
            "(let ((y int 1) (z int 2)) y)",
            "(if true 1)",
            "((f) 1)",
            "(lambda ((x int) (x int)) int x)",
            "let",
            "99999999999999999999",
            "(lambda ((x integer)) int x)",
        ] {
            assert!(parse_expr(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn comments_and_whitespace() {
        let e = parse_expr("; model\n(+  x1\n\t2) ; trailing").unwrap();
        assert_eq!(e.to_string(), "(+ x1 2)");
    }

    fn arb_type() -> impl Strategy<Value = Type> {
        let base = prop_oneof![Just(Type::Int), Just(Type::Float), Just(Type::Bool)];
        base.prop_recursive(2, 6, 3, |inner| {
            (prop::collection::vec(inner.clone(), 0..3), inner).prop_map(|(ps, r)| Type::func(ps, r))
        })
    }

    fn arb_name() -> impl Strategy<Value = Symbol> {
        "[a-z][a-z0-9-]{0,4}".prop_filter_map("keyword", |s| {
            (!KEYWORDS.contains(&s.as_str()) && s != "true" && s != "false").then(|| sym(&s))
        })
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            any::<i64>().prop_map(Expr::Int),
            any::<f64>()
                .prop_filter("finite", |x| x.is_finite())
                .prop_map(Expr::Float),
            any::<bool>().prop_map(Expr::Bool),
            arb_name().prop_map(Expr::Var),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            prop_oneof![
                (arb_name(), prop::collection::vec(inner.clone(), 0..3)).prop_map(|(f, a)| Expr::App(f, a)),
                (arb_name(), arb_type(), inner.clone(), inner.clone()).prop_map(|(n, t, b, e)| Expr::Let(
                    n,
                    t,
                    Box::new(b),
                    Box::new(e)
                )),
                (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| Expr::if_then_else(c, t, e)),
                prop::collection::vec(inner.clone(), 0..3).prop_map(Expr::Recur),
                (
                    prop::collection::btree_map(arb_name(), arb_type(), 0..3),
                    arb_type(),
                    inner
                )
                    .prop_map(|(ps, r, b)| Expr::Lam(ps.into_iter().collect(), r, Box::new(b))),
            ]
        })
    }

    proptest! {
        #[test]
        fn parse_render_identity(e in arb_expr()) {
            let text = e.to_string();
            let back = parse_expr(&text).unwrap();
            prop_assert_eq!(back.to_string(), text);
            prop_assert_eq!(back, e);
        }

        #[test]
        fn float_text_round_trips_bits(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let s = format_float(x);
            prop_assert!(s.contains('.'));
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
