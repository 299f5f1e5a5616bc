use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("'{op}' produced a non-finite value at x = {x}")]
    NonFinite { op: &'static str, x: f64 },
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
}

fn finite(v: f64, op: &'static str, x: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite { op, x })
    }
}

fn pow(base: f64, exponent: f64, x: f64) -> Result<f64, EvalError> {
    let integral = exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64;
    let v = if integral {
        base.powi(exponent as i32)
    } else if base < 0.0 {
        return Err(EvalError::NonFinite { op: "^", x });
    } else {
        base.powf(exponent)
    };
    finite(v, "^", x)
}

impl Expr {
    /// Evaluates at `x`; domain errors and overflow are errors, never NaN.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::X => finite(x, "x", x),
            Expr::Neg(e) => Ok(-e.eval(x)?),
            Expr::Binary(op, l, r) => {
                let a = l.eval(x)?;
                let b = r.eval(x)?;
                match op {
                    BinOp::Add => finite(a + b, "+", x),
                    BinOp::Sub => finite(a - b, "-", x),
                    BinOp::Mul => finite(a * b, "*", x),
                    BinOp::Div if b == 0.0 => Err(EvalError::DivisionByZero { x }),
                    BinOp::Div => finite(a / b, "/", x),
                    BinOp::Pow => pow(a, b, x),
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval(x)?;
                match func {
                    Func::Exp => finite(a.exp(), "exp", x),
                    Func::Log if a <= 0.0 => Err(EvalError::NonFinite { op: "log", x }),
                    Func::Log => Ok(a.ln()),
                    Func::Sqrt if a < 0.0 => Err(EvalError::NonFinite { op: "sqrt", x }),
                    Func::Sqrt => Ok(a.sqrt()),
                    Func::Abs => Ok(a.abs()),
                }
            }
        }
    }

    /// Evaluation that maps every error to NaN, for numeric kernels that
    /// already report non-finite values.
    pub fn eval_or_nan(&self, x: f64) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x: f64) -> Result<f64, EvalError> {
        Expr::parse(src).unwrap().eval(x)
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ev("sqrt(x)", -1.0), Err(EvalError::NonFinite { op: "sqrt", .. })));
        assert!(matches!(ev("log(x)", 0.0), Err(EvalError::NonFinite { op: "log", .. })));
        assert!(matches!(ev("1/x", 0.0), Err(EvalError::DivisionByZero { .. })));
        assert!(matches!(ev("x^0.5", -4.0), Err(EvalError::NonFinite { op: "^", .. })));
        assert!(matches!(ev("exp(x)", 1000.0), Err(EvalError::NonFinite { op: "exp", .. })));
        assert!(matches!(ev("x*x", 1e200), Err(EvalError::NonFinite { op: "*", .. })));
    }

    #[test]
    fn negative_base_integer_power() {
        assert_eq!(ev("x^3", -2.0).unwrap(), -8.0);
        assert_eq!(ev("x^-2", -2.0).unwrap(), 0.25);
    }

    #[test]
    fn functions() {
        assert_eq!(ev("abs(x)", -3.0).unwrap(), 3.0);
        assert_eq!(ev("sqrt(x)", 9.0).unwrap(), 3.0);
        assert!((ev("log(exp(x))", 2.5).unwrap() - 2.5).abs() < 1e-15);
    }
}
