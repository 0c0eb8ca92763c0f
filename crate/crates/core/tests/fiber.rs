mod common;

use std::f64::consts::SQRT_2;

use proptest::prelude::*;
use riemet::fiber::*;
use riemet::Error;

fn sym(n: usize, p: &[f64]) -> SymTensor<f64> {
    SymTensor::from_packed(n, p).unwrap()
}

fn opts() -> ThetaOptions<f64> {
    ThetaOptions::default()
}

#[test]
fn trace_product_examples() {
    let i = SymTensor::<f64>::identity(2);
    assert_eq!(trace_product(&i, &i, &i).unwrap(), 2.0);
    let two = SymTensor::scaled_identity(2, 2.0);
    assert!((trace_product(&two, &i, &i).unwrap() - 0.5).abs() < 1e-15);
}

#[test]
fn trace_product_errors() {
    let i = SymTensor::<f64>::identity(2);
    let sing = SymTensor::diagonal(&[1.0, 1e-14]);
    assert!(matches!(trace_product(&sing, &i, &i), Err(Error::DegenerateBase { .. })));
    let i3 = SymTensor::<f64>::identity(3);
    assert!(matches!(trace_product(&i, &i3, &i), Err(Error::DimensionMismatch(2, 3))));
}

#[test]
fn norm_examples() {
    let i = SymTensor::<f64>::identity(2);
    assert!((fiber_norm0(&i, &i).unwrap() - SQRT_2).abs() < 1e-15);
    let four = SymTensor::scaled_identity(2, 4.0);
    assert!((fiber_norm0(&four, &i).unwrap() - SQRT_2).abs() < 1e-15);
}

fn spd_strategy(n: usize) -> impl Strategy<Value = SymTensor<f64>> {
    (any::<u64>(), 0.1f64..2.0).prop_map(move |(seed, spread)| common::random_spd(&mut common::rng(seed), n, spread))
}

fn sym_strategy(n: usize) -> impl Strategy<Value = SymTensor<f64>> {
    proptest::collection::vec(-3.0f64..3.0, n * (n + 1) / 2).prop_map(move |v| sym(n, &v))
}

proptest! {
    #[test]
    fn trace_product_is_symmetric_and_linear(
        a in spd_strategy(3), b in sym_strategy(3), c in sym_strategy(3), s in -4.0f64..4.0
    ) {
        let bc = trace_product(&a, &b, &c).unwrap();
        let cb = trace_product(&a, &c, &b).unwrap();
        prop_assert!((bc - cb).abs() <= 1e-10 * (1.0 + bc.abs()));
        let sbc = trace_product(&a, &b.scale(s), &c).unwrap();
        prop_assert!((sbc - s * bc).abs() <= 1e-10 * (1.0 + bc.abs() * s.abs()));
    }

    #[test]
    fn norm_is_homogeneous_and_positive(a in spd_strategy(2), b in sym_strategy(2), s in 0.0f64..5.0) {
        let nb = fiber_norm0(&a, &b).unwrap();
        if !b.is_zero() {
            prop_assert!(nb > 0.0);
        }
        let ns = fiber_norm0(&a, &b.scale(s)).unwrap();
        prop_assert!((ns - s * nb).abs() <= 1e-10 * (1.0 + s * nb));
    }
}

fn conformal_path(n: usize, k: usize) -> FiberPath<f64> {
    let e = 4.0 / n as f64;
    FiberPath::sample(k, |t: f64| SymTensor::identity(n).scale((1.0 - t).powf(e))).unwrap()
}

/// `∫₀¹ √n·ρ^{n/2−1}|ρ'| dt` along `ρ(t) = (1 − t)^{4/n}` for `A = I`.
fn conformal_length_exact(n: usize) -> f64 {
    2.0 / (n as f64).sqrt()
}

#[test]
fn conformal_path_length_matches_closed_form() {
    for n in [2, 3] {
        let l = fiber_path_length(&conformal_path(n, 256)).unwrap();
        assert!((l - conformal_length_exact(n)).abs() < 1e-3, "n={n} l={l}");
        let fine = fiber_path_length(&conformal_path(n, 4096)).unwrap();
        assert!((fine - conformal_length_exact(n)).abs() < 1e-5);
    }
}

#[test]
fn path_length_basics() {
    let a = sym(2, &[2.0, 0.3, 1.0]);
    let constant = FiberPath::new(vec![a; 5]).unwrap();
    assert_eq!(fiber_path_length(&constant).unwrap(), 0.0);
    let p = FiberPath::sample(32, |t| a.scale(1.0 - t).add(&SymTensor::identity(2).scale(4.0 * t))).unwrap();
    let (fwd, bwd) = (fiber_path_length(&p).unwrap(), fiber_path_length(&p.reversed()).unwrap());
    assert!((fwd - bwd).abs() <= 1e-13 * fwd);
    let z = SymTensor::zero(2);
    assert!(matches!(FiberPath::new(vec![a, z, a]), Err(Error::InvalidPath(_))));
}

#[test]
fn refinement_approaches_the_continuum() {
    let a = sym(2, &[3.0, 0.8, 0.5]);
    let b = sym(2, &[0.4, -0.2, 2.5]);
    let path = |k: usize| FiberPath::sample(k, |t: f64| a.scale(1.0 - t).add(&b.scale(t))).unwrap();
    let reference = fiber_path_length(&path(1 << 14)).unwrap();
    let errs: Vec<f64> = [16, 32, 64, 128, 256]
        .iter()
        .map(|&k| (fiber_path_length(&path(k)).unwrap() - reference).abs())
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[4] < 1e-4 * reference);
}

#[test]
fn boundary_distance_examples() {
    assert!((dist_to_boundary(&SpdTensor::<f64>::identity(2)) - SQRT_2).abs() < 1e-15);
    assert!((dist_to_boundary(&SpdTensor::<f64>::identity(3)) - 2.0 / 3f64.sqrt()).abs() < 1e-15);
    assert_eq!(cone_radius(&SymTensor::<f64>::diagonal(&[3.0, 0.0])), 0.0);
}

#[test]
fn optimizer_reaches_the_boundary_at_the_closed_form_distance() {
    for n in [2, 3] {
        let a = common::random_spd(&mut common::rng(n as u64), n, 0.8);
        let bent = FiberPath::sample(16, |t| {
            let tilt = SymTensor::diagonal(&vec![1.0 + 3.0 * t * (1.0 - t); n]);
            SymTensor::from_mat(&a.to_mat().mul(&tilt.to_mat()).add(&tilt.to_mat().mul(&a.to_mat())))
                .scale(0.5 * (1.0 - t))
        })
        .unwrap();
        let r = refine_fiber_path(&bent, &opts()).unwrap();
        let exact = dist_to_boundary(&SpdTensor::new(a).unwrap());
        assert!((r.value - exact).abs() / exact < 1e-2, "n={n} {} vs {exact}", r.value);
    }
}

#[test]
fn theta_examples() {
    let i = CompletionPoint::Interior(SpdTensor::identity(2));
    let b = CompletionPoint::BoundaryClass;
    assert_eq!(theta_distance(&i, &i, &opts()).unwrap().value, 0.0);
    assert!((theta_distance(&i, &b, &opts()).unwrap().value - SQRT_2).abs() < 1e-15);
    let four = CompletionPoint::Interior(SpdTensor::new(SymTensor::scaled_identity(2, 4.0)).unwrap());
    let r = theta_distance(&i, &four, &opts()).unwrap();
    assert!(r.value <= 3.0 * SQRT_2 + 1e-9);
    assert!((r.value - 3.0 * SQRT_2).abs() / (3.0 * SQRT_2) < 1e-6, "{}", r.value);
}

#[test]
fn theta_matches_cone_oracle_on_random_pairs() {
    let mut rng = common::rng(7);
    for n in [2, 3] {
        for spread in [0.2, 0.7, 1.5] {
            let a = common::random_spd(&mut rng, n, spread);
            let b = common::random_spd(&mut rng, n, spread);
            let got = theta_between(&a, &b, &opts()).unwrap().value;
            let want = common::cone_theta(&a, &b);
            assert!((got - want).abs() <= 1e-3 * want, "n={n} got {got} want {want}");
            assert!(got >= want * (1.0 - 1e-9));
        }
    }
}

#[test]
fn theta_uses_the_boundary_detour_when_it_is_shorter() {
    let a = SymTensor::diagonal(&[20.0, 0.05]);
    let b = SymTensor::diagonal(&[0.05, 20.0]);
    let r = theta_between(&a, &b, &opts()).unwrap();
    let detour = cone_radius(&a) + cone_radius(&b);
    assert_eq!(r.candidate, ThetaCandidate::BoundaryDetour);
    assert_eq!(r.value, detour);
    assert!((common::cone_theta(&a, &b) - detour).abs() < 1e-12);
}

#[test]
fn theta_is_exactly_symmetric() {
    let mut rng = common::rng(11);
    for _ in 0..4 {
        let a = common::random_spd(&mut rng, 2, 1.0);
        let b = common::random_spd(&mut rng, 2, 1.0);
        let ab = theta_between(&a, &b, &opts()).unwrap().value;
        let ba = theta_between(&b, &a, &opts()).unwrap().value;
        assert_eq!(ab.to_bits(), ba.to_bits());
    }
}

#[test]
fn theta_bounds_and_triangle_inequality() {
    let mut rng = common::rng(13);
    let pts: Vec<SymTensor<f64>> = (0..5).map(|_| common::random_spd(&mut rng, 2, 1.2)).collect();
    let o = opts();
    let th = |i: usize, j: usize| theta_between(&pts[i], &pts[j], &o).unwrap().value;
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let t = th(i, j);
            let (di, dj) = (pts[i].det().sqrt(), pts[j].det().sqrt());
            assert!((dj - di).abs() <= SQRT_2 / 2.0 * t + 1e-9);
            assert!(t <= SQRT_2 * (di + dj) + 1e-9);
            for k in 0..pts.len() {
                assert!(t <= (th(i, k) + th(k, j)) * (1.0 + o.tri_tol));
            }
        }
    }
}

#[test]
fn doubling_the_finest_level_changes_theta_little() {
    let mut rng = common::rng(17);
    let a = common::random_spd(&mut rng, 3, 0.8);
    let b = common::random_spd(&mut rng, 3, 0.8);
    let coarse = ThetaOptions {
        k_levels: vec![16, 64, 128],
        ..opts()
    };
    let t1 = theta_between(&a, &b, &coarse).unwrap().value;
    let t2 = theta_between(&a, &b, &opts()).unwrap().value;
    assert!((t1 - t2).abs() <= 1e-3 * t2);
}

#[test]
fn keep_path_reports_a_valid_path_in_argument_order() {
    let a = sym(2, &[2.0, 0.4, 1.0]);
    let b = sym(2, &[0.5, -0.1, 3.0]);
    let o = ThetaOptions {
        keep_path: true,
        ..opts()
    };
    for (x, y) in [(a, b), (b, a)] {
        let r = theta_between(&x, &y, &o).unwrap();
        let p = r.path.expect("interior path kept");
        assert_eq!(p.nodes()[0], x);
        assert_eq!(*p.nodes().last().unwrap(), y);
        assert!((fiber_polygon_length(&p).unwrap() - r.value).abs() < 1e-12);
    }
}

#[test]
fn tensor_validation() {
    assert!(matches!(SymTensor::<f64>::from_packed(4, &[0.0; 10]), Err(Error::UnsupportedDimension(4))));
    assert!(SymTensor::<f64>::from_packed(2, &[1.0, 0.0]).is_err());
    assert!(SymTensor::<f64>::from_packed(2, &[1.0, f64::NAN, 1.0]).is_err());
    assert!(matches!(SpdTensor::new(sym(2, &[1.0, 2.0, 1.0])), Err(Error::DegenerateBase { .. })));
    let not_psd = sym(2, &[1.0, 2.0, 1.0]);
    assert!(matches!(CompletionPoint::classify(&not_psd, 1e-12), Err(Error::NotPsd(_))));
    let psd = sym(2, &[1.0, 1.0, 1.0]);
    assert!(CompletionPoint::classify(&psd, 1e-12).unwrap().is_boundary());
}
