use std::fmt::{self, Formatter};

use super::{BinOp, Expr};

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(_) => 3,
        Expr::Binary(BinOp::Pow, ..) => 4,
        Expr::Num(_) | Expr::X | Expr::Call(..) => 5,
    }
}

fn wrapped(f: &mut Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_expr(f, e)?;
        f.write_str(")")
    } else {
        write_expr(f, e)
    }
}

/// Prints with the fewest parentheses that still parse back to the same tree.
pub(super) fn write_expr(f: &mut Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(v) => write!(f, "{v:?}"),
        Expr::X => f.write_str("x"),
        Expr::Call(func, arg) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, arg)?;
            f.write_str(")")
        }
        Expr::Neg(inner) => {
            f.write_str("-")?;
            wrapped(f, inner, precedence(inner) < 3)
        }
        Expr::Binary(BinOp::Pow, base, exponent) => {
            wrapped(f, base, precedence(base) < 5)?;
            f.write_str("^")?;
            // The exponent is parsed as a factor, so a leading minus is fine.
            wrapped(f, exponent, precedence(exponent) < 3)
        }
        Expr::Binary(op, lhs, rhs) => {
            let p = precedence(e);
            let symbol = match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::Pow => unreachable!(),
            };
            wrapped(f, lhs, precedence(lhs) < p)?;
            f.write_str(symbol)?;
            wrapped(f, rhs, precedence(rhs) <= p)
        }
    }
}
