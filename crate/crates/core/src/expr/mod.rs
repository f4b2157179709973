//! The expression language used for metrics, frames, projections, sections
//! and densities: parsing, printing and evaluation with exact first
//! derivatives.

mod ast;
mod eval;
mod parser;
mod print;
pub mod scalar;

pub use ast::{BinOp, Expr, ExprKind, Func, Span};
pub use eval::EvalError;
pub use parser::{parse, ParseError};
pub use scalar::{Dual, Jet, Scalar};

/// Partial derivative by variable name, resolving `wrt` against `chart_vars`.
pub fn eval_partial_named(
    ast: &Expr,
    point: &[f64],
    params: &[f64],
    chart_vars: &[&str],
    wrt: &str,
) -> Option<Result<f64, EvalError>> {
    let k = chart_vars.iter().position(|v| *v == wrt)?;
    Some(ast.eval_partial(point, params, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(src: &str, vars: &[&str], params: &[&str]) -> Expr {
        parse(src, vars, params).unwrap()
    }

    #[test]
    fn call_times_call() {
        let e = p("sin(theta)*cos(psi)", &["theta", "psi"], &[]);
        let want = Expr::binary(
            BinOp::Mul,
            Expr::call(Func::Sin, Expr::var(0, "theta")),
            Expr::call(Func::Cos, Expr::var(1, "psi")),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let e = p("-x^2", &["x"], &[]);
        let want = Expr::negate(Expr::binary(
            BinOp::Pow,
            Expr::var(0, "x"),
            Expr::new(ExprKind::Number(2.0)),
        ));
        assert_eq!(e, want);
    }

    #[test]
    fn power_is_right_associative() {
        let e = p("a^b^c", &["a", "b", "c"], &[]);
        match &e.kind {
            ExprKind::Binary(BinOp::Pow, a, rest) => {
                assert_eq!(**a, Expr::var(0, "a"));
                assert!(matches!(rest.kind, ExprKind::Binary(BinOp::Pow, ..)));
            }
            _ => panic!("not a power: {e:?}"),
        }
    }

    #[test]
    fn parameters_resolve() {
        let e = p("I1*sin(theta)^2 + I3*cos(theta)^2", &["theta"], &["I1", "I3"]);
        let v = e.eval(&[0.3], &[2.0, 5.0]).unwrap();
        let want = 2.0 * 0.3f64.sin().powi(2) + 5.0 * 0.3f64.cos().powi(2);
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_spans() {
        match parse("x + foo", &["x"], &[]) {
            Err(ParseError::UnknownIdentifier { name, span }) => {
                assert_eq!(name, "foo");
                assert_eq!(span, Span::new(4, 7));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("sin(x, x)", &["x"], &[]), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("sinh(x)", &["x"], &[]), Err(ParseError::UnknownFunction { .. })));
        assert!(matches!(parse("(x", &["x"], &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("x x", &["x"], &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("  ", &[], &[]), Err(ParseError::Syntax { .. })));
        assert!(matches!(parse("1e", &[], &[]), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn scientific_literals() {
        assert_eq!(p("1.5e-3", &[], &[]).eval(&[], &[]).unwrap(), 1.5e-3);
        assert_eq!(p(".25E2", &[], &[]).eval(&[], &[]).unwrap(), 25.0);
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(p("sin(theta)", &["theta"], &[]).eval(&[PI / 2.0], &[]).unwrap(), 1.0);
        assert_eq!(p("exp(0)*7", &[], &[]).eval(&[], &[]).unwrap(), 7.0);
        let err = p("x/y", &["x", "y"], &[]).eval(&[1.0, 0.0], &[]).unwrap_err();
        assert_eq!(err.span, Span::new(2, 3));
        assert!(p("ln(x)", &["x"], &[]).eval(&[-1.0], &[]).is_err());
        assert!(p("sqrt(x)", &["x"], &[]).eval(&[-1.0], &[]).is_err());
        assert_eq!(p("(-2)^3", &[], &[]).eval(&[], &[]).unwrap(), -8.0);
        assert!(p("(-2)^0.5", &[], &[]).eval(&[], &[]).is_err());
    }

    #[test]
    fn partial_examples() {
        let d = |src: &str, x: f64| p(src, &["x"], &[]).eval_partial(&[x], &[], 0).unwrap();
        assert_eq!(d("sin(x)", 0.0), 1.0);
        assert_eq!(d("x^3", 2.0), 12.0);
        assert!((d("ln(sin(x))", PI / 4.0) - 1.0).abs() < 1e-15);
        let named = eval_partial_named(
            &p("ln(sin(theta))", &["theta"], &[]),
            &[PI / 4.0],
            &[],
            &["theta"],
            "theta",
        );
        assert!((named.unwrap().unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn print_round_trip_examples() {
        let vars = ["x", "y", "z"];
        for src in [
            "-x^2",
            "(-x)^2",
            "x - (y - z)",
            "x/(y*z)",
            "(x^y)^z",
            "x^-y",
            "--x",
            "-(x + y)*z",
            "sin(x)^2 + cos(y)^2",
            "1e-7*x + 0.1",
            "x^(y + 1)",
            "-2.5*x",
        ] {
            let a = p(src, &vars, &[]);
            let printed = a.to_string();
            let b = p(&printed, &vars, &[]);
            assert_eq!(a, b, "{src} -> {printed}");
        }
    }

    #[test]
    fn builder_literals_round_trip() {
        let e = Expr::num(-0.3) * Expr::var(0, "x") + Expr::num(1e-12);
        let back = p(&e.to_string(), &["x"], &[]);
        assert_eq!(e, back);
    }
}
