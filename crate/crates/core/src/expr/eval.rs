use super::ast::{BinOp, Expr, ExprKind, Func, Span};
use super::scalar::{Dual, Scalar};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{message} at {span}")]
pub struct EvalError {
    pub message: String,
    pub span: Span,
}

fn domain(message: &str, span: Span) -> EvalError {
    EvalError {
        message: message.to_string(),
        span,
    }
}

impl Expr {
    /// Evaluate over any scalar type. Domain checks look at real parts only.
    pub fn eval_s<S: Scalar>(&self, point: &[S], params: &[f64]) -> Result<S, EvalError> {
        match &self.kind {
            ExprKind::Number(x) => Ok(S::cst(*x)),
            ExprKind::Var { index, .. } => point
                .get(*index)
                .copied()
                .ok_or_else(|| domain("unbound variable", self.span)),
            ExprKind::Param { index, .. } => params
                .get(*index)
                .map(|&v| S::cst(v))
                .ok_or_else(|| domain("unbound parameter", self.span)),
            ExprKind::Neg(a) => Ok(-a.eval_s(point, params)?),
            ExprKind::Binary(op, a, b) => {
                let x = a.eval_s(point, params)?;
                let y = b.eval_s(point, params)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div => {
                        if y.re() == 0.0 {
                            Err(domain("division by zero", b.span))
                        } else {
                            Ok(x / y)
                        }
                    }
                    BinOp::Pow => power(x, y, self.span),
                }
            }
            ExprKind::Call(func, a) => {
                let x = a.eval_s(point, params)?;
                match func {
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Tan => {
                        if x.re().cos() == 0.0 {
                            Err(domain("tan at a pole", a.span))
                        } else {
                            Ok(x.tan())
                        }
                    }
                    Func::Sqrt => {
                        if x.re() < 0.0 {
                            Err(domain("sqrt of a negative argument", a.span))
                        } else {
                            Ok(x.sqrt())
                        }
                    }
                    Func::Exp => Ok(x.exp()),
                    Func::Ln => {
                        if x.re() <= 0.0 {
                            Err(domain("ln of a non-positive argument", a.span))
                        } else {
                            Ok(x.ln())
                        }
                    }
                    Func::Abs => Ok(x.abs()),
                }
            }
        }
    }

    pub fn eval(&self, point: &[f64], params: &[f64]) -> Result<f64, EvalError> {
        self.eval_s(point, params)
    }

    /// Exact partial derivative with respect to chart variable `wrt`.
    pub fn eval_partial(&self, point: &[f64], params: &[f64], wrt: usize) -> Result<f64, EvalError> {
        let x = super::scalar::seed_axis(point, wrt);
        Ok(self.eval_s::<Dual<f64>>(&x, params)?.d)
    }
}

fn power<S: Scalar>(x: S, y: S, span: Span) -> Result<S, EvalError> {
    let e = y.re();
    if y.is_constant() && e.fract() == 0.0 && e.abs() <= 1024.0 {
        if x.re() == 0.0 && e < 0.0 {
            return Err(domain("division by zero in negative power", span));
        }
        return Ok(x.powi(e as i32));
    }
    if x.re() > 0.0 {
        Ok(x.powf(y))
    } else {
        Err(domain("non-positive base with non-integer exponent", span))
    }
}
