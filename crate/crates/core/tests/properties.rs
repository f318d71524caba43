use looplab::biot_savart::{bs_direct, BSConfig};
use looplab::circulation::{circulation, gamma_gradient, QuadratureConfig};
use looplab::ensemble::StarPolygonEnsemble;
use looplab::fields::AnalyticField;
use looplab::gaussian::{psi0_mc, GaussianSpec};
use looplab::geometry::{area_vector, discretize_curve, CVec3, PolygonalLoop, SampledCurve, Vec3};
use looplab::momentum::{psi_momentum_forms, MomentumState};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// A jittered regular polygon, so no two consecutive vertices coincide.
fn polygon(n_min: usize, n_max: usize) -> impl Strategy<Value = PolygonalLoop> {
    (n_min..=n_max, vec3(1.0), vec3(1.0), prop::collection::vec(vec3(0.2), n_max)).prop_filter_map("degenerate normal", |(n, c, nrm, jit)| {
        if nrm.norm() < 0.1 {
            return None;
        }
        let base = PolygonalLoop::regular(n, c, 1.0, nrm).ok()?;
        PolygonalLoop::new(base.vertices().iter().zip(&jit).map(|(&v, &j)| v + j).collect()).ok()
    })
}

fn abc() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.1..1.5f64, 0.1..1.5f64, 0.1..1.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn edges_wrap_and_close(c in polygon(3, 40), k in -200isize..200) {
        let n = c.n() as isize;
        prop_assert_eq!(c.edge(k), c.edge(k + n));
        prop_assert_eq!(c.vertex(k), c.vertex(k - 3 * n));
        let sum = (0..n).fold(Vec3::ZERO, |a, j| a + c.edge(j));
        prop_assert!(sum.norm() < 1e-13);
    }

    #[test]
    fn planar_area_matches_shoelace(a1 in 0.3..2.0f64, b1 in 0.3..2.0f64, a2 in -0.2..0.2f64, b2 in -0.2..0.2f64, b3 in -0.1..0.1f64) {
        let g = SampledCurve::fourier(
            Vec3::new(0.1, -0.3, 0.0),
            vec![Vec3::new(a1, 0.0, 0.0), Vec3::new(a2, 0.0, 0.0)],
            vec![Vec3::new(0.0, b1, 0.0), Vec3::new(0.0, b2, 0.0), Vec3::new(0.0, b3, 0.0)],
        );
        let exact = area_vector(&g).norm();
        let poly = discretize_curve(&g, 512).unwrap().loop_.shoelace_vector().norm();
        prop_assert!((exact - poly).abs() <= 1e-4 * exact, "{} vs {}", exact, poly);
    }

    #[test]
    fn abc_is_beltrami_and_solenoidal((a, b, c) in abc(), x in vec3(10.0), t in 0.0..3.0f64) {
        let f = AnalyticField::abc_decaying(a, b, c, 0.7).unwrap();
        let u = f.velocity(x, t);
        prop_assert!((f.vorticity(x, t) - u).norm() <= 1e-10 * (1.0 + u.norm()));
        let du = f.jet(x, t, looplab::fields::Order::First).du;
        prop_assert!((du[0][0] + du[1][1] + du[2][2]).abs() <= 1e-12);
    }

    #[test]
    fn decaying_circulation_follows_exp_law((a, b, c) in abc(), loop_ in polygon(4, 12), nu in 0.1..2.0f64, t in 0.0..2.0f64) {
        let f = AnalyticField::abc_decaying(a, b, c, nu).unwrap();
        let q = QuadratureConfig::default();
        let g0 = circulation(&f, &loop_, 0.0, &q);
        let gt = circulation(&f, &loop_, t, &q);
        prop_assert!((gt - (-nu * t).exp() * g0).abs() <= 1e-12 * (1.0 + g0.abs()));
    }

    #[test]
    fn circulation_is_translation_covariant((a, b, c) in abc(), loop_ in polygon(3, 10), h in vec3(3.0)) {
        let f = AnalyticField::abc(a, b, c);
        let q = QuadratureConfig::default();
        let moved = circulation(&f, &loop_.translated(h), 0.0, &q);
        let shifted_field = circulation(&f.translated(-h), &loop_, 0.0, &q);
        prop_assert!((moved - shifted_field).abs() <= 1e-11 * (1.0 + moved.abs()));
    }

    #[test]
    fn vertex_gradient_obeys_local_bound((a, b, c) in abc(), loop_ in polygon(4, 16), k in 0isize..16) {
        let f = AnalyticField::abc(a, b, c);
        let b = f.field_bounds(1).unwrap();
        let w = b.omega[0] + b.omega[1];
        let grad = gamma_gradient(&f, &loop_, k, 0.0, &QuadratureConfig::default()).norm();
        let span = (loop_.vertex(k + 1) - loop_.vertex(k - 1)).norm();
        let bound = 2.0 * span * (1.0 + loop_.edge(k - 1).norm()) * w;
        prop_assert!(grad <= bound, "{} > {}", grad, bound);
    }

    #[test]
    fn momentum_forms_agree_and_ignore_gauge(dp in prop::collection::vec(vec3(1.0), 5..20), shift in vec3(2.0), im in vec3(1.0), c in polygon(24, 24)) {
        let n = dp.len();
        let mean = dp.iter().fold(Vec3::ZERO, |a, &d| a + d) * (1.0 / n as f64);
        let inc: Vec<Vec3> = dp.iter().map(|&d| d - mean).collect();
        let s = MomentumState::from_increments(&inc).unwrap().shifted(CVec3::new(Vec3::ZERO, im));
        let loop_ = PolygonalLoop::new(c.vertices()[..n].to_vec()).unwrap();
        let (a, b) = psi_momentum_forms(&s, &loop_, 1.3, 0.9).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        let moved = s.shifted(CVec3::new(shift, Vec3::ZERO));
        let (_, b2) = psi_momentum_forms(&moved, &loop_, 1.3, 0.9).unwrap();
        prop_assert_eq!(b, b2);
        for k in 0..n as isize {
            prop_assert_eq!(s.dp(k), moved.dp(k));
        }
    }

    #[test]
    fn star_conditions_break_linearly(q in 3usize..102, p_raw in 1usize..50, dir in vec3(1.0), scale in -6.0..-3.0f64, k in 0usize..101) {
        let p = 1 + p_raw % (q / 2).max(1);
        prop_assume!(2 * p < q && gcd(p, q) == 1 && dir.norm() > 0.1);
        let e = StarPolygonEnsemble::construct(q, p, Vec3::E3).unwrap();
        let size = 10f64.powf(scale);
        let delta = dir.normalized() * size;
        let viol = e.perturbed(k, delta).verify_conditions().max();
        prop_assert!(viol >= 1e-3 * size, "{} at {}", viol, size);
        prop_assert!(viol <= (4.0 * e.radius + 4.0) * size, "{} at {}", viol, size);
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn biot_savart_is_linear_and_translation_equivariant(k1 in vec3(2.0), k2 in vec3(2.0), x in vec3(1.0), h in vec3(2.0), s1 in -2.0..2.0f64, s2 in -2.0..2.0f64) {
        let cfg = BSConfig::with_ell(0.5);
        let w1 = move |y: Vec3| Vec3::new((k1.y * y.z).sin(), (k1.z * y.x).sin(), (k1.x * y.y).sin());
        let w2 = move |y: Vec3| Vec3::new((k2.dot(y)).cos(), 0.3, -(k2.x * y.x).sin());
        let a = bs_direct(w1, x, &cfg).unwrap();
        let b = bs_direct(w2, x, &cfg).unwrap();
        let both = bs_direct(move |y| w1(y) * s1 + w2(y) * s2, x, &cfg).unwrap();
        let lin = a * s1 + b * s2;
        prop_assert!((both - lin).norm() <= 1e-6 * (1.0 + lin.norm()), "{:?} vs {:?}", both, lin);
        let moved = bs_direct(move |y| w1(y - h), x + h, &cfg).unwrap();
        prop_assert!((moved - a).norm() <= 1e-6 * (1.0 + a.norm()));
    }

    #[test]
    fn monte_carlo_psi_is_bounded(r0 in 0.5..2.0f64, g in 0.1..5.0f64, seed in 0u64..1000) {
        let c = PolygonalLoop::regular(32, Vec3::ZERO, 1.0, Vec3::E3).unwrap();
        let spec = GaussianSpec::for_loop(r0, c.diameter()).unwrap();
        let est = psi0_mc(&c, &spec, g, 1.0, 64, seed, 1).unwrap();
        prop_assert!(est.mean.norm() <= 1.0 + 1e-15);
    }
}
