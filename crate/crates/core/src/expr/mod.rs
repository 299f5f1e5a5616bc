//! Coefficient expressions: a small arithmetic language over one variable `x`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | power
//! power  := atom ('^' factor)?
//! atom   := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'log' | 'sqrt' | 'abs'
//! ```
//!
//! Unary minus binds looser than `^`, so `-2^2` is `-4`, and `^` is right
//! associative.

mod eval;
mod parser;
mod print;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use eval::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    /// `position` is a 1-based byte offset; end of input is `len + 1`.
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier '{name}' at byte {position}")]
    UnknownIdentifier { name: String, position: usize },
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        parser::Parser::new(src).parse()
    }

    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    /// True when the tree does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::X => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }
}

impl FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_expr(f, self)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let src = String::deserialize(d)?;
        Expr::parse(&src).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(src: &str, x: f64) -> f64 {
        Expr::parse(src).unwrap().eval(x).unwrap()
    }

    #[test]
    fn logistic_drift_ast() {
        let e = Expr::parse("0.5*x - 0.1*x^2").unwrap();
        let want = Expr::Binary(
            BinOp::Sub,
            Box::new(Expr::Binary(BinOp::Mul, Box::new(Expr::Num(0.5)), Box::new(Expr::X))),
            Box::new(Expr::Binary(
                BinOp::Mul,
                Box::new(Expr::Num(0.1)),
                Box::new(Expr::Binary(BinOp::Pow, Box::new(Expr::X), Box::new(Expr::Num(2.0)))),
            )),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn function_call() {
        assert!((ev("exp(-2*x)", 1.0) - 0.135_335_283_236_612_7).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_paren_position() {
        match Expr::parse("log(x") {
            Err(ParseError::Syntax { position, .. }) => assert_eq!(position, 6),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        match Expr::parse("2*sin(x)") {
            Err(ParseError::UnknownIdentifier { name, position }) => {
                assert_eq!(name, "sin");
                assert_eq!(position, 3);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(Expr::parse("y"), Err(ParseError::UnknownIdentifier { .. })));
    }

    #[test]
    fn malformed_inputs() {
        for src in ["", "   ", "1 +", "*2", "(1", "1)", "exp x", "1..2", "1e", "1e400", "x x", "2^"] {
            assert!(Expr::parse(src).is_err(), "{src:?} parsed");
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("2+3*4", 0.0), 14.0);
        assert_eq!(ev("2^3^2", 0.0), 512.0);
        assert_eq!(ev("-2^2", 0.0), -4.0);
        assert_eq!(ev("(-2)^2", 0.0), 4.0);
        assert_eq!(ev("2^-1", 0.0), 0.5);
        assert_eq!(ev("8/4/2", 0.0), 1.0);
        assert_eq!(ev("1-2-3", 0.0), -4.0);
        assert_eq!(ev("x^2 - 0.1*x^3", 2.0), 3.2);
        assert_eq!(ev("1.2*x", 10.0), 12.0);
        assert_eq!(ev(" 1.5e1 +\tx ", 1.0), 16.0);
        assert_eq!(ev("2 − x", 1.0), 1.0);
    }

    #[test]
    fn display_uses_minimal_parentheses() {
        let show = |s: &str| Expr::parse(s).unwrap().to_string();
        assert_eq!(show("abs(x) / 2"), "abs(x) / 2.0");
        assert_eq!(show("((x))+((1))"), "x + 1.0");
        assert_eq!(show("(-2)^2"), "(-2.0)^2.0");
        assert_eq!(show("-(2^2)"), "-2.0^2.0");
        assert_eq!(show("x-(1-x)"), "x - (1.0 - x)");
        assert_eq!(show("-(x*2)"), "-(x * 2.0)");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            Just(Expr::X),
            (0.0..1e6f64).prop_map(Expr::Num),
            (0u32..50).prop_map(|n| Expr::Num(n as f64)),
            (1e-12..1e-3f64).prop_map(Expr::Num),
        ];
        leaf.prop_recursive(6, 64, 2, |inner| {
            let op =
                prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div), Just(BinOp::Pow)];
            let func = prop_oneof![Just(Func::Exp), Just(Func::Log), Just(Func::Sqrt), Just(Func::Abs)];
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (func, inner.clone()).prop_map(|(f, e)| Expr::Call(f, Box::new(e))),
                (op, inner.clone(), inner).prop_map(|(o, l, r)| Expr::Binary(o, Box::new(l), Box::new(r))),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_expr()) {
            let printed = e.to_string();
            let back = Expr::parse(&printed).unwrap();
            prop_assert_eq!(back, e, "printed as {}", printed);
        }

        #[test]
        fn eval_is_deterministic(e in arb_expr(), x in -5.0..5.0f64) {
            let a = e.eval(x);
            let b = e.eval(x);
            match (a, b) {
                (Ok(u), Ok(v)) => prop_assert_eq!(u.to_bits(), v.to_bits()),
                (Err(u), Err(v)) => prop_assert_eq!(u, v),
                _ => prop_assert!(false),
            }
        }
    }
}
