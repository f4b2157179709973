use super::ast::{BinOp, Expr, ExprKind};
use std::fmt;

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        ExprKind::Neg(_) => PREC_NEG,
        ExprKind::Binary(BinOp::Pow, ..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimal parentheses that make the output parse back to
/// the same tree. Literals use the shortest round-tripping decimal form.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Number(x) => write!(f, "{x:?}"),
            ExprKind::Var { name, .. } | ExprKind::Param { name, .. } => f.write_str(name),
            ExprKind::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            ExprKind::Neg(a) => {
                f.write_str("-")?;
                child(f, a, precedence(a) < PREC_NEG)
            }
            ExprKind::Binary(op, a, b) => {
                let p = precedence(self);
                if *op == BinOp::Pow {
                    child(f, a, precedence(a) <= PREC_POW)?;
                    f.write_str("^")?;
                    child(f, b, precedence(b) < PREC_POW)
                } else {
                    child(f, a, precedence(a) < p)?;
                    if p == PREC_ADD {
                        write!(f, " {} ", op.symbol())?;
                    } else {
                        write!(f, "{}", op.symbol())?;
                    }
                    child(f, b, precedence(b) <= p)
                }
            }
        }
    }
}
