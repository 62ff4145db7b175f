use approx::assert_relative_eq;
use heine_core::fluctuation::*;
use heine_core::orthopoly::{PerturbedWeight, SmoothStep};
use heine_core::potential::{droplet_structure, DropletStructure, RadialPotential};
use heine_core::qdist::{heine_mean, SeriesTolerance};
use proptest::prelude::*;

fn gap_ctx() -> GapContext<f64> {
    GapContext::new(RadialPotential::ginibre_outpost().scaled(1.25).unwrap(), 0.8).unwrap()
}

fn ginibre() -> (RadialPotential<f64>, DropletStructure<f64>) {
    let pot = RadialPotential::ginibre(3.0);
    let d = droplet_structure(&pot, 1.0, 2.0).unwrap();
    (pot, d)
}

fn r2() -> RadialTestFunction<f64> {
    RadialTestFunction::power(2.0)
}

#[test]
fn ginibre_mean_and_variance() {
    let (pot, d) = ginibre();
    assert_eq!(d.components.len(), 1);
    let mv = ef_vf(&r2(), &pot, &d).unwrap();
    assert_relative_eq!(mv.e_f, 0.5, epsilon = 1e-12);
    assert_relative_eq!(mv.v_f, 0.5, epsilon = 1e-12);
    assert_eq!(mv.jump, 0.0);
    assert_relative_eq!(sigma_f(&r2(), &pot, &d).unwrap(), 0.5, epsilon = 1e-13);
}

#[test]
fn ginibre_finite_n_moments() {
    let (pot, _) = ginibre();
    let w = PerturbedWeight::new(pot, 0.0, SmoothStep::new(1.5, 2.0).unwrap());
    for n in [32, 100] {
        let (m, v) = finite_n_moments(&w, &r2(), n, 0.5).unwrap();
        assert_relative_eq!(m, 0.5, epsilon = 1e-10);
        assert_relative_eq!(v, (n as f64 + 1.0) / (2.0 * n as f64), epsilon = 1e-10);
    }
}

#[test]
fn gap_geometry() {
    let ctx = gap_ctx();
    assert_eq!(ctx.droplet.components.len(), 2);
    let kinds: Vec<EdgeKind> = edges(&ctx.droplet).into_iter().map(|e| e.0).collect();
    assert_eq!(kinds, vec![EdgeKind::GapInner, EdgeKind::GapOuter, EdgeKind::Exterior]);
    assert!(GapContext::new(RadialPotential::ginibre_outpost(), 1.0).is_err());
}

#[test]
fn lambda_for_square() {
    let ctx = gap_ctx();
    let dec = decompose_radial(&r2(), &ctx.droplet);
    assert_relative_eq!(dec.lambda, 1.25, epsilon = 1e-11);
    let p = predict_total(&r2(), &ctx, 512).unwrap();
    assert_relative_eq!(p.lambda, 1.25, epsilon = 1e-11);
    assert_relative_eq!(p.x_n, 0.6, epsilon = 1e-10);
}

#[test]
fn poisson_modification_of_log() {
    let ctx = gap_ctx();
    let pm = poisson_modify(&RadialTestFunction::log(), &ctx.droplet);
    let (b0, a1, a, b) = pm.gap.unwrap();
    assert_relative_eq!(b0, 1.0, epsilon = 1e-12);
    assert_relative_eq!(a1, 1.5, epsilon = 1e-12);
    assert!(a.abs() < 1e-12);
    assert_relative_eq!(b, 1.0, epsilon = 1e-12);
    assert!(pm.hole.is_none());
    let bn = ctx.droplet.components[1].1;
    assert_relative_eq!(pm.eval(&RadialTestFunction::log(), 2.0), bn.ln(), epsilon = 1e-15);
}

#[test]
fn poisson_modification_of_square() {
    let ctx = gap_ctx();
    let pm = poisson_modify(&r2(), &ctx.droplet);
    let b = pm.log_coefficient();
    assert_relative_eq!(b, 1.25 / 1.5f64.ln(), max_relative = 1e-11);
    for r in [1.1, 1.2, 1.4] {
        assert_relative_eq!(pm.eval(&r2(), r), 1.0 + b * f64::ln(r), max_relative = 1e-12);
    }
}

#[test]
fn neumann_jumps_two_ways() {
    let ctx = gap_ctx();
    for (kind, _) in edges(&ctx.droplet) {
        let a = neumann_jump_l(&ctx.pot, &ctx.droplet, kind).unwrap();
        let b = neumann_jump_fd(&ctx.pot, &ctx.droplet, kind, 1e-5).unwrap();
        assert!((a - b).abs() < 1e-8, "{kind:?}: {a} vs {b}");
    }
    assert!(neumann_jump_l(&ctx.pot, &ctx.droplet, EdgeKind::Hole).is_err());
}

#[test]
fn decomposition_is_exact() {
    let ctx = gap_ctx();
    let f = RadialTestFunction::power(3.0);
    let dec = decompose_radial(&f, &ctx.droplet);
    let omega = dec.omega.unwrap();
    for r in [0.3, 1.0, 1.1, 1.24, 1.5, 1.52] {
        assert_relative_eq!(dec.f1.eval(r) + dec.lambda * omega.eval(r), f.eval(r), epsilon = 1e-13);
    }
    assert!(poisson_modify(&dec.f1, &ctx.droplet).log_coefficient().abs() < 1e-12);
}

#[test]
fn step_function_is_all_lambda() {
    let ctx = gap_ctx();
    let dec = decompose_radial(&RadialTestFunction::step(ctx.omega), &ctx.droplet);
    assert_relative_eq!(dec.lambda, 1.0, epsilon = 1e-15);
    let mv = ef_vf(&dec.f1, &ctx.pot, &ctx.droplet).unwrap();
    assert!(mv.e_f.abs() < 1e-14 && mv.v_f.abs() < 1e-14);
}

#[test]
fn constants_do_not_fluctuate() {
    let ctx = gap_ctx();
    let c = RadialTestFunction::constant(2.5);
    let mv = ef_vf(&c, &ctx.pot, &ctx.droplet).unwrap();
    assert!(mv.e_f.abs() < 1e-10, "{}", mv.e_f);
    assert_eq!(mv.v_f, 0.0);
    assert_relative_eq!(sigma_f(&c, &ctx.pot, &ctx.droplet).unwrap(), 2.5, epsilon = 1e-10);
}

#[test]
fn gap_limit_matches_extrapolated_exact_moments() {
    // Finite-n moments of f1 approach (e_f, v_f) at rate 1/n; Richardson
    // extrapolation from two sizes gives an independent estimate.
    let ctx = gap_ctx();
    let dec = decompose_radial(&r2(), &ctx.droplet);
    let mv = ef_vf(&dec.f1, &ctx.pot, &ctx.droplet).unwrap();
    let sigma = sigma_f(&dec.f1, &ctx.pot, &ctx.droplet).unwrap();
    let w = ctx.weight();
    let (m1, v1) = finite_n_moments(&w, &dec.f1, 256, sigma).unwrap();
    let (m2, v2) = finite_n_moments(&w, &dec.f1, 512, sigma).unwrap();
    assert!((2.0 * m2 - m1 - mv.e_f).abs() < 1e-3, "{} vs {}", 2.0 * m2 - m1, mv.e_f);
    assert!((2.0 * v2 - v1 - mv.v_f).abs() < 1e-3, "{} vs {}", 2.0 * v2 - v1, mv.v_f);
    assert!((m2 - mv.e_f).abs() < (m1 - mv.e_f).abs());
}

#[test]
fn prediction_cgf_slope() {
    let ctx = gap_ctx();
    let p = predict_total(&r2(), &ctx, 258).unwrap();
    assert_relative_eq!(p.x_n, 0.4, epsilon = 1e-12);
    assert_eq!(p.cgf(0.0).unwrap(), 0.0);
    let tol = SeriesTolerance::default();
    let mean = p.lambda * (heine_mean(&p.heine_plus, &tol).unwrap() - heine_mean(&p.heine_minus, &tol).unwrap() + p.x_n) + p.e_f;
    let h = 1e-5;
    let slope = (p.cgf(h).unwrap() - p.cgf(-h).unwrap()) / (2.0 * h);
    assert!((slope - mean).abs() < 1e-8);
}

fn poly(c: [f64; 3]) -> RadialTestFunction<f64> {
    RadialTestFunction::new(move |r: f64| {
        [
            c[0] * r + c[1] * r * r + c[2] * r.powi(3),
            c[0] + 2.0 * c[1] * r + 3.0 * c[2] * r * r,
            2.0 * c[1] + 6.0 * c[2] * r,
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn variance_parallelogram(f in proptest::array::uniform3(-2.0f64..2.0), g in proptest::array::uniform3(-2.0f64..2.0)) {
        let ctx = gap_ctx();
        let v = |c: [f64; 3]| ef_vf(&poly(c), &ctx.pot, &ctx.droplet).unwrap().v_f;
        let add = [f[0] + g[0], f[1] + g[1], f[2] + g[2]];
        let sub = [f[0] - g[0], f[1] - g[1], f[2] - g[2]];
        let lhs = v(add) + v(sub);
        let rhs = 2.0 * v(f) + 2.0 * v(g);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn mean_linear(f in proptest::array::uniform3(-2.0f64..2.0), a in -3.0f64..3.0) {
        let ctx = gap_ctx();
        let e = |c: [f64; 3]| ef_vf(&poly(c), &ctx.pot, &ctx.droplet).unwrap().e_f;
        prop_assert!((e([a * f[0], a * f[1], a * f[2]]) - a * e(f)).abs() < 1e-10 * (1.0 + e(f).abs()));
    }

    #[test]
    fn values_in_gap_are_irrelevant(height in -5.0f64..5.0) {
        let ctx = gap_ctx();
        let bump = SmoothStep::new(1.1, 1.2).unwrap();
        let fall = SmoothStep::new(1.3, 1.4).unwrap();
        let g = RadialTestFunction::new(move |r: f64| {
            let (u, v) = (bump.jet(r), fall.jet(r));
            [u[0] - v[0], u[1] - v[1], u[2] - v[2]]
        });
        let f = poly([0.3, -0.2, 0.5]);
        let modified = RadialTestFunction::combine(1.0, &f, height, &g);
        let a = ef_vf(&f, &ctx.pot, &ctx.droplet).unwrap();
        let b = ef_vf(&modified, &ctx.pot, &ctx.droplet).unwrap();
        prop_assert!((a.e_f - b.e_f).abs() < 1e-12 && (a.v_f - b.v_f).abs() < 1e-12);
    }
}
