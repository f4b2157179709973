use nhm_core::config::SystemConfig;
use nhm_core::detector::{
    closedness_residual, condition_one, detect, liouville_residual_vector, omega_family, sample_states, Grid,
    Thresholds, Verdict,
};
use nhm_core::dynamics::{rk4_integrate, Integration};
use nhm_core::expr::parse;
use nhm_core::poisson::{energy, hamilton_rhs, PhaseState};
use nhm_core::reduction::{check_invariance, ReducedStructure};
use nhm_core::systems::oracles::*;
use nhm_core::systems::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

#[test]
fn euler_velocity_formulas_match_the_rotation_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let angles = [rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.05..PI - 0.05), rng.gen_range(0.0..2.0 * PI)];
        let rates = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let a = body_angular_velocity(&angles, &rates);
        let b = body_angular_velocity_from_matrix(&angles, &rates);
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() <= 1e-10, "{a:?} vs {b:?}");
        }
    }
}

#[test]
fn rotation_is_orthogonal_and_poisson_vector_is_its_third_row() {
    let (phi, theta, psi) = (0.7, 1.1, -0.4);
    let g = rotation(phi, theta, psi);
    for i in 0..3 {
        for j in 0..3 {
            let d: f64 = (0..3).map(|k| g[i][k] * g[j][k]).sum();
            assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }
    let gamma = poisson_vector(theta, psi);
    for k in 0..3 {
        assert!((g[2][k] - gamma[k]).abs() < 1e-14);
    }
}

fn max_dev(values: &[f64]) -> f64 {
    let v0 = values[0];
    values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max)
}

#[test]
fn top_oracle_conserves_energy_and_poisson_norm() {
    for p in [
        ExampleParams::diagonal(1.0, 2.0, 3.0).with_offset(0.1),
        ExampleParams::diagonal(2.0, 2.0, 3.0).with_offset(0.4),
        ExampleParams::diagonal(1.0, 2.0, 3.0).with_product(0, 2, 0.2),
    ] {
        let top = ChaplyginTop::new(p);
        let rhs = |x: &[f64]| -> Result<Vec<f64>, String> { Ok(top.rhs(x)) };
        let g = poisson_vector(0.9, 2.0);
        let k = top.k_from_omega(&[1.0, 0.3, -0.6], &g);
        let diag = |x: &[f64]| vec![top.energy(x), (x[3] * x[3] + x[4] * x[4] + x[5] * x[5]).sqrt()];
        let opts = Integration {
            diagnostics: &diag,
            record_every: 50,
            ..Integration::plain(1e-3, 10.0, 6)
        };
        let t = rk4_integrate(&rhs, &[k, g].concat(), &opts).unwrap();
        let h: Vec<f64> = t.diagnostics.iter().map(|d| d[0]).collect();
        let n: Vec<f64> = t.diagnostics.iter().map(|d| d[1]).collect();
        assert!(max_dev(&h) <= 1e-8, "{p:?}: H drift {:e}", max_dev(&h));
        assert!(max_dev(&n) <= 1e-8, "{p:?}: |γ| drift {:e}", max_dev(&n));
    }
}

#[test]
fn rolling_ball_oracles_conserve_energy_and_frame() {
    let cases = [
        RollingBall::wire(ExampleParams::diagonal(1.0, 1.0, 1.0)),
        RollingBall::wire(ExampleParams::diagonal(1.0, 1.0, 2.0)),
        RollingBall::cylinder(ExampleParams::diagonal(1.0, 2.0, 3.0)),
        RollingBall::cylinder(ExampleParams::diagonal(1.0, 1.5, 2.0).with_cylinder(-3.0)),
    ];
    for ball in cases {
        let rhs = |x: &[f64]| -> Result<Vec<f64>, String> { Ok(ball.rhs(x)) };
        let [a, b, g] = RollingBall::poisson_frame(&[0.4, 1.2, 2.0], 0.9);
        let x0 = [vec![0.8, -0.5, 1.1], a.to_vec(), b.to_vec(), g.to_vec()].concat();
        assert!(RollingBall::frame_defect(&x0) < 1e-14);
        let diag = |x: &[f64]| vec![ball.energy(x), RollingBall::frame_defect(x)];
        let opts = Integration {
            diagnostics: &diag,
            record_every: 50,
            ..Integration::plain(1e-3, 10.0, 12)
        };
        let t = rk4_integrate(&rhs, &x0, &opts).unwrap();
        let h: Vec<f64> = t.diagnostics.iter().map(|d| d[0]).collect();
        assert!(max_dev(&h) <= 1e-8, "{:?}: H drift {:e}", ball.p, max_dev(&h));
        let defect = t.diagnostics.iter().map(|d| d[1]).fold(0.0, f64::max);
        assert!(defect <= 1e-8, "{:?}: frame defect {defect:e}", ball.p);
    }
}

#[test]
fn axisymmetric_top_density_satisfies_liouville_on_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in [
        ExampleParams::diagonal(2.0, 2.0, 3.0).with_offset(0.3),
        ExampleParams::diagonal(1.5, 1.5, 0.8).with_offset(0.6).with_mass(2.0),
        ExampleParams::diagonal(3.0, 3.0, 1.0).with_offset(0.05).with_radius(0.5),
    ] {
        let top = ChaplyginTop::new(p);
        let density = parse(ChaplyginTop::DENSITY_GAMMA_OMEGA, &ChaplyginTop::STATE_NAMES, &ChaplyginTop::PARAM_NAMES).unwrap();
        let rhs = |x: &[f64]| top.rhs_gamma_omega(x);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let g = poisson_vector(rng.gen_range(0.1..PI - 0.1), rng.gen_range(0.0..2.0 * PI));
            let x: Vec<f64> = g.iter().copied().chain((0..3).map(|_| rng.gen_range(-1.0..1.0))).collect();
            let r = liouville_residual_vector(&rhs, &density, &top.param_values(), &x).unwrap();
            worst = worst.max(r.relative.abs());
        }
        assert!(worst <= 1e-5, "{p:?}: {worst:e}");
    }
    // A generic top fails it.
    let top = ChaplyginTop::new(ExampleParams::diagonal(1.0, 2.0, 3.0).with_offset(0.3));
    let density = parse(ChaplyginTop::DENSITY_GAMMA_OMEGA, &ChaplyginTop::STATE_NAMES, &ChaplyginTop::PARAM_NAMES).unwrap();
    let x = [0.6, 0.0, 0.8, 0.5, -0.7, 0.3];
    let r = liouville_residual_vector(&|x| top.rhs_gamma_omega(x), &density, &top.param_values(), &x).unwrap();
    assert!(r.relative.abs() > 1e-3);
}

#[test]
fn builders_reject_unsupported_parameters() {
    let d = ExampleParams::diagonal;
    let invalid = |r: Result<_, ExampleError>| matches!(r, Err(ExampleError::InvalidParams(_)));
    assert!(invalid(build_ball_on_cylinder(&d(1.0, 2.0, 3.0).with_cylinder(0.0))));
    let msg = build_ball_on_cylinder(&d(1.0, 2.0, 3.0).with_cylinder(0.0)).unwrap_err().to_string();
    assert!(msg.contains("wire"), "{msg}");
    assert!(invalid(build_ball_on_cylinder(&d(1.0, 2.0, 3.0).with_cylinder(-0.5))));
    assert!(invalid(build_ball_on_wire(&d(1.0, 2.0, 2.0))));
    assert!(invalid(build_ball_on_wire(&d(1.0, 1.0, 2.0).with_product(0, 2, 0.1))));
    assert!(invalid(build_chaplygin_top(&d(1.0, 2.0, 3.0).with_offset(1.5))));
    assert!(invalid(build_planar_body_on_sphere(&d(1.0, 2.0, 3.0).with_product(0, 1, 0.1))));
    assert!(invalid(build_planar_body_on_sphere(&d(1.0, 2.0, 3.0).with_offset(-0.1))));
    assert!(invalid(build_chaplygin_top(&d(1.0, -2.0, 3.0))));
    assert!(invalid(build_chaplygin_top(&d(1.0, 2.0, 3.0).with_mass(0.0))));
    let mut asym = d(1.0, 2.0, 3.0);
    asym.inertia[0][2] = 0.1;
    assert!(invalid(build_chaplygin_top(&asym)));
}

#[test]
fn builders_produce_invariant_structures() {
    let d = ExampleParams::diagonal;
    let systems = [
        build_planar_body_on_sphere(&d(1.0, 2.0, 3.0).with_product(1, 2, 0.3).with_offset(0.2)).unwrap(),
        build_chaplygin_top(&d(1.0, 2.0, 3.0).with_product(0, 1, 0.2).with_offset(0.4)).unwrap(),
        build_ball_on_cylinder(&d(1.0, 2.0, 3.0).with_cylinder(-4.0).with_radius(0.7)).unwrap(),
        build_ball_on_wire(&d(2.0, 2.0, 0.5).with_mass(3.0)).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for sys in &systems {
        for x in sample_states(sys, 5, rng.gen()) {
            let r = check_invariance(sys, &x.qh, 1e-8).unwrap();
            assert!(r.passed, "{r:?}");
        }
    }
}

#[test]
fn tilted_planar_body_violates_condition_one() {
    let sys = build_planar_body_on_sphere(&ExampleParams::diagonal(1.0, 2.0, 3.0).with_product(0, 2, 0.5)).unwrap();
    let c = sys.structure_functions_at(&[0.0, 1.0]).unwrap();
    assert!(c.trace(0).abs() > 1e-3, "{}", c.trace(0));
}

#[test]
fn large_cylinder_approaches_the_chaplygin_sphere() {
    let x = [FRAC_PI_2, FRAC_PI_2, PI / 3.0];
    let near = build_ball_on_cylinder(&ExampleParams::diagonal(1.0, 2.0, 3.0)).unwrap();
    let far = build_ball_on_cylinder(&ExampleParams::diagonal(1.0, 2.0, 3.0).with_cylinder(1e6)).unwrap();
    let g_near = nhm_core::detector::omega::closedness_at(&near, &x).unwrap()[1][0];
    let g_far = nhm_core::detector::omega::closedness_at(&far, &x).unwrap()[1][0];
    // Obstructions carry the factor R/(R + r).
    let want = g_near * 2.0 / (1.0 + 1e6);
    assert!((g_far - want).abs() <= 1e-6 * want.abs(), "{g_far:e} vs {want:e}");
    let g = Grid::new(far.shape_chart(), 9);
    let fam = omega_family(&far, &g).unwrap();
    let c = closedness_residual(&far, &fam).unwrap();
    assert!(c.residual < 1e-6, "{:e}", c.residual);
    let r = detect(&far, &g, Thresholds::default()).unwrap();
    assert_eq!(r.verdict, Verdict::MeasureExists);
    assert!(condition_one(&far, &g).unwrap().iter().all(Vec::is_empty));
}

fn shipped_pairs() -> Vec<(String, SystemConfig)> {
    shipped_examples()
        .into_iter()
        .map(|e| (e.file.to_string(), SystemConfig::parse(&e.text).unwrap()))
        .collect()
}

#[test]
fn shipped_configs_round_trip_through_text() {
    for (name, cfg) in shipped_pairs() {
        let text = cfg.to_string();
        let again = SystemConfig::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(again.to_string(), text, "{name}");
        let (a, b) = (cfg.compile().unwrap(), again.compile().unwrap());
        for x in sample_states(&a, 5, 9) {
            let ra = hamilton_rhs(&a, &x).unwrap();
            let rb = hamilton_rhs(&b, &x).unwrap();
            assert!(ra.iter().zip(&rb).all(|(u, v)| (u - v).abs() <= 1e-12), "{name}");
            assert_eq!(energy(&a, &x).unwrap(), energy(&b, &x).unwrap());
        }
    }
}

#[test]
fn shipped_configs_match_builders() {
    let d = ExampleParams::diagonal;
    let builders: Vec<(&str, nhm_core::reduction::SymmetricSystem)> = vec![
        ("planar_body_generic", build_planar_body_on_sphere(&d(1.0, 2.0, 3.0).with_offset(0.3)).unwrap()),
        ("chaplygin_sphere", build_chaplygin_top(&d(1.0, 2.0, 3.0)).unwrap()),
        ("ball_on_cylinder_homogeneous", build_ball_on_cylinder(&d(1.0, 1.0, 1.0)).unwrap()),
    ];
    let shipped = shipped_pairs();
    for (name, built) in builders {
        let cfg = &shipped.iter().find(|(n, _)| n == name).unwrap().1;
        let sys = cfg.compile().unwrap();
        let g = Grid::new(sys.shape_chart(), 5);
        let (ra, rb) = (
            detect(&sys, &g, Thresholds::default()).unwrap(),
            detect(&built, &g, Thresholds::default()).unwrap(),
        );
        assert_eq!(ra.verdict, rb.verdict, "{name}");
        assert!((ra.condition_one_residual - rb.condition_one_residual).abs() <= 1e-12);
        assert!((ra.closedness_residual.unwrap() - rb.closedness_residual.unwrap()).abs() <= 1e-12);
        let states: Vec<PhaseState> = sample_states(&sys, 5, 2);
        for x in &states {
            assert_eq!(hamilton_rhs(&sys, x).unwrap(), hamilton_rhs(&built, x).unwrap());
        }
    }
}

#[test]
fn shipped_examples_cover_every_system() {
    let names: Vec<String> = shipped_examples().into_iter().map(|e| e.file.to_string()).collect();
    for stem in ["planar_body", "chaplygin_top", "ball_on_cylinder", "ball_on_wire"] {
        assert!(names.iter().any(|n| n.starts_with(stem)), "{stem}");
    }
    assert!(names.contains(&"ball_on_cylinder_homogeneous".to_string()));
    assert!(names.contains(&"chaplygin_top_generic".to_string()));
}
