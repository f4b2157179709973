use nhm_core::expr::{parse, BinOp, Expr, ExprKind, Func};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VARS: [&str; 3] = ["x", "y", "z"];
const PARAMS: [&str; 2] = ["a", "b"];
const PARAM_VALUES: [f64; 2] = [1.3, -0.7];

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 | 1 => {
                let i = rng.gen_range(0..3);
                Expr::var(i, VARS[i])
            }
            2 => {
                let i = rng.gen_range(0..2);
                Expr::param(i, PARAMS[i])
            }
            _ => Expr::num((rng.gen_range(0..=20) as f64) / 8.0),
        };
    }
    match rng.gen_range(0..9) {
        0 => Expr::negate(random_expr(rng, depth - 1)),
        1..=3 => {
            let f = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            Expr::call(f, random_expr(rng, depth - 1))
        }
        4 => Expr::binary(
            BinOp::Pow,
            random_expr(rng, depth - 1),
            Expr::num(rng.gen_range(1..=3) as f64),
        ),
        k => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k - 5];
            Expr::binary(op, random_expr(rng, depth - 1), random_expr(rng, depth - 1))
        }
    }
}

/// Rejects points where some node sits close to a singularity or kink, or
/// where intermediate values or slopes are so large that a difference
/// quotient with a fixed step is dominated by truncation error.
fn well_conditioned(e: &Expr, x: &[f64]) -> bool {
    if !matches!(e.eval(x, &PARAM_VALUES), Ok(v) if v.is_finite() && v.abs() < 1e3) {
        return false;
    }
    if (0..3).any(|k| !matches!(e.eval_partial(x, &PARAM_VALUES, k), Ok(d) if d.abs() < 30.0)) {
        return false;
    }
    let val = |a: &Expr| a.eval(x, &PARAM_VALUES).unwrap_or(f64::NAN);
    match &e.kind {
        ExprKind::Number(_) | ExprKind::Var { .. } | ExprKind::Param { .. } => true,
        ExprKind::Neg(a) => well_conditioned(a, x),
        ExprKind::Call(f, a) => {
            let u = val(a);
            let ok = match f {
                Func::Ln | Func::Sqrt => u > 0.1,
                Func::Abs => u.abs() > 1e-2,
                Func::Tan => u.cos().abs() > 0.2,
                Func::Exp => u < 5.0,
                Func::Sin | Func::Cos => true,
            };
            ok && well_conditioned(a, x)
        }
        ExprKind::Binary(op, a, b) => {
            let ok = match op {
                BinOp::Div => val(b).abs() > 0.1,
                _ => true,
            };
            ok && well_conditioned(a, x) && well_conditioned(b, x)
        }
    }
}

#[test]
fn dual_partials_agree_with_central_differences_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        assert!(attempts < 200_000, "generator rejected too many samples");
        let e = random_expr(&mut rng, 5);
        assert!(e.depth() <= 6);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if !well_conditioned(&e, &x) {
            continue;
        }
        for k in 0..3 {
            let d = e.eval_partial(&x, &PARAM_VALUES, k).unwrap();
            let h = 1e-5 * x[k].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let (Ok(fp), Ok(fm)) = (e.eval(&xp, &PARAM_VALUES), e.eval(&xm, &PARAM_VALUES)) else {
                panic!("neighbour evaluation failed for {e} at {x:?}");
            };
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (d - fd).abs() <= 1e-6 * (1.0 + d.abs()),
                "{e} at {x:?}, wrt {}: dual {d}, central {fd}",
                VARS[k]
            );
        }
        checked += 1;
    }
}

#[test]
fn evaluation_is_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let e = random_expr(&mut rng, 5);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = e.eval(&x, &PARAM_VALUES);
        let b = e.eval(&x, &PARAM_VALUES);
        match (a, b) {
            (Ok(a), Ok(b)) => assert_eq!(a.to_bits(), b.to_bits()),
            (Err(a), Err(b)) => assert_eq!(a, b),
            _ => panic!("evaluation differs between calls"),
        }
    }
}

#[test]
fn parse_print_parse_is_identity_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..1000 {
        let e = random_expr(&mut rng, 6);
        let once = parse(&e.to_string(), &VARS, &PARAMS).unwrap();
        let twice = parse(&once.to_string(), &VARS, &PARAMS).unwrap();
        assert_eq!(once, twice, "{e}");
        assert_eq!(once, e, "{e}");
    }
}

#[test]
fn shared_trees_evaluate_concurrently() {
    let e = parse("I1*sin(theta)^2 + I3*cos(theta)^2", &["theta"], &["I1", "I3"]).unwrap();
    let serial: Vec<f64> = (0..64).map(|i| e.eval(&[i as f64 * 0.1], &[1.0, 2.0]).unwrap()).collect();
    let parallel: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..64)
            .map(|i| {
                let e = &e;
                s.spawn(move || e.eval(&[i as f64 * 0.1], &[1.0, 2.0]).unwrap())
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(serial, parallel);
}

proptest! {
    #[test]
    fn literals_survive_printing(v in -1e6f64..1e6) {
        let e = Expr::num(v);
        let back = parse(&e.to_string(), &[], &[]).unwrap();
        prop_assert_eq!(back.eval(&[], &[]).unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn sums_and_products_follow_precedence(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0) {
        let e = parse("x + y*z^2 - -x/y", &VARS, &[]).unwrap();
        prop_assume!(b.abs() > 1e-3);
        let want = a + b * c * c - (-a / b);
        let got = e.eval(&[a, b, c], &[]).unwrap();
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()));
    }
}
