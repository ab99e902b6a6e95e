use std::sync::Arc;

use gerbe_core::cocycle::{
    check_cocycle, dd_class, eval_exp_cocycle, CocycleTensor, ProductCocycle, TensorCocycle, COCYCLE_TOLERANCE,
};
use gerbe_core::dirac::{monopole_curvature, mat_mul, spectral_flow_1d, linear_path, weyl_sign};
use gerbe_core::exform::{gcd_realizability, Frame, Form};
use gerbe_core::fock::{
    dirac_eigenvalue, gauge_op, gauge_op_inverse, shift_op, CutoffConfig, FockVector, SeaState, TwistParams,
};
use gerbe_core::liegerbe::{bracket, pairing, theta_form};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn frame() -> Arc<Frame> {
    Frame::builder()
        .paired("dx", "x")
        .paired("dy", "y")
        .generator("e1")
        .generator("e2")
        .scalar("t")
        .build()
        .unwrap()
}

const NAMES: [&str; 4] = ["dx", "dy", "e1", "e2"];

fn form_from(f: &Arc<Frame>, terms: &[(i64, u8)]) -> Form {
    let mut out = Form::zero(f);
    for &(c, mask) in terms {
        let names: Vec<&str> = (0..4).filter(|i| mask >> i & 1 == 1).map(|i| NAMES[i]).collect();
        let mono = Form::monomial(f, &names).unwrap();
        let coeff = Form::scalar(f, "x").unwrap().plus(&Form::integer(f, c)).unwrap();
        out = out.plus(&coeff.wedge(&mono).unwrap()).unwrap();
    }
    out
}

fn terms() -> impl Strategy<Value = Vec<(i64, u8)>> {
    prop::collection::vec((-4i64..=4, 0u8..16), 0..4)
}

fn tensor() -> impl Strategy<Value = CocycleTensor> {
    prop::collection::vec(-5i64..=5, 27).prop_map(|e| CocycleTensor::from_entries(&e).unwrap())
}

fn ivec(r: i64) -> impl Strategy<Value = [i64; 3]> {
    [-r..=r, -r..=r, -r..=r]
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wedge_is_associative(a in terms(), b in terms(), c in terms()) {
        let f = frame();
        let (a, b, c) = (form_from(&f, &a), form_from(&f, &b), form_from(&f, &c));
        prop_assert_eq!(a.wedge(&b).unwrap().wedge(&c).unwrap(), a.wedge(&b.wedge(&c).unwrap()).unwrap());
    }

    #[test]
    fn d_squares_to_zero(a in terms()) {
        let f = frame();
        let a = form_from(&f, &a);
        prop_assert!(a.ext_d().unwrap().ext_d().unwrap().is_zero());
    }

    #[test]
    fn leibniz_rule(a in terms(), b in terms()) {
        let f = frame();
        let (a, b) = (form_from(&f, &a), form_from(&f, &b));
        // Homogeneous degree-1 left factor: d(a∧b) = da∧b − a∧db
        let a1 = a.component(1);
        let lhs = a1.wedge(&b).unwrap().ext_d().unwrap();
        let rhs = a1.ext_d().unwrap().wedge(&b).unwrap().minus(&a1.wedge(&b.ext_d().unwrap()).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn text_round_trip(a in terms()) {
        let f = frame();
        let a = form_from(&f, &a);
        prop_assert_eq!(Form::parse(&f, &a.to_string()).unwrap(), a);
    }

    #[test]
    fn gcd_witness_is_valid(f in ivec(20)) {
        let r = gcd_realizability(f);
        if let Some(w) = r.witness {
            prop_assert_eq!(w[0] * f[0] + w[1] * f[1] + w[2] * f[2], 1);
        }
        prop_assert_eq!(r.realizable, r.gcd == 1);
    }

    #[test]
    fn tensor_cocycles_satisfy_identity(t in tensor(), seed in 0u64..1000) {
        let c = check_cocycle(&TensorCocycle::new(t), 8, seed).unwrap();
        prop_assert!(c.max_deviation < COCYCLE_TOLERANCE);
    }

    #[test]
    fn tensor_cocycle_trivial_at_zero_shift(t in tensor(), a in vec3(), m in ivec(3)) {
        let (v, x) = eval_exp_cocycle(&t, a, [0, 0, 0], m);
        prop_assert!((v.re - 1.0).abs() < 1e-15 && v.im.abs() < 1e-15);
        prop_assert_eq!(x, 0.0);
    }

    #[test]
    fn dd_class_is_antisymmetric_part(t in tensor()) {
        let r = dd_class(&TensorCocycle::new(t)).unwrap();
        prop_assert_eq!(r.raw, t.antisymmetric_part());
    }

    #[test]
    fn dd_class_is_additive(s in tensor(), t in tensor()) {
        let prod = ProductCocycle {
            factors: vec![Box::new(TensorCocycle::new(s)), Box::new(TensorCocycle::new(t))],
        };
        let sum = dd_class(&TensorCocycle::new(s)).unwrap().raw + dd_class(&TensorCocycle::new(t)).unwrap().raw;
        prop_assert_eq!(dd_class(&prod).unwrap().raw, sum.clone());
        prop_assert_eq!(dd_class(&TensorCocycle::new(s.plus(&t))).unwrap().raw, sum);
    }

    #[test]
    fn shift_ops_invert(ex in prop::collection::vec((1usize..=3, -3i64..=3), 0..4), dir in 1usize..=3, k in -2i64..=2) {
        let cut = CutoffConfig::default();
        let Ok(s) = SeaState::from_excitations(&ex, &cut) else { return Ok(()); };
        let v = FockVector::basis(s);
        let w = shift_op(dir, -k, &shift_op(dir, k, &v, &cut).unwrap(), &cut).unwrap();
        prop_assert!(w.max_deviation(&v) < 1e-15);
    }

    #[test]
    fn gauge_inverse_undoes_gauge(
        ex in prop::collection::vec((1usize..=3, -2i64..=2), 0..3),
        n in ivec(1),
        alpha in ivec(1),
        beta in ivec(2),
        a in [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0],
    ) {
        let cut = CutoffConfig::default();
        let Ok(s) = SeaState::from_excitations(&ex, &cut) else { return Ok(()); };
        let p = TwistParams { alpha, beta, a };
        let v = FockVector::basis(s);
        let w = gauge_op_inverse(n, &p, &gauge_op(n, &p, &v, &cut).unwrap(), &cut).unwrap();
        prop_assert!(w.max_deviation(&v) < 1e-12);
    }

    #[test]
    fn gauge_op_moves_charge_and_shifts_energy(
        ex in prop::collection::vec((1usize..=3, -2i64..=2), 0..3),
        n in ivec(1),
        a in [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0],
    ) {
        let cut = CutoffConfig::default();
        let Ok(s) = SeaState::from_excitations(&ex, &cut) else { return Ok(()); };
        let p = TwistParams { alpha: [-1, -1, -1], beta: [0, 0, 0], a };
        let w = gauge_op(n, &p, &FockVector::basis(s.clone()), &cut).unwrap();
        let (t, _) = w.terms().next().unwrap();
        for d in 1..=3 {
            prop_assert_eq!(t.charge(d), s.charge(d) - n[d - 1]);
        }
        let shifted = [a[0] + n[0] as f64, a[1] + n[1] as f64, a[2] + n[2] as f64];
        prop_assert!((dirac_eigenvalue(t, a) - dirac_eigenvalue(&s, shifted)).abs() < 1e-10);
    }

    #[test]
    fn weyl_sign_squares_to_one(b in vec3()) {
        prop_assume!(b.iter().map(|x| x * x).sum::<f64>() > 1e-6);
        let f = weyl_sign(b);
        let sq = mat_mul(&f, &f);
        prop_assert!((sq[0][0].re - 1.0).abs() < 1e-12 && sq[0][1].norm() < 1e-12);
    }

    #[test]
    fn monopole_curvature_is_odd_and_radial(b in vec3()) {
        let r2: f64 = b.iter().map(|x| x * x).sum();
        prop_assume!(r2 > 1e-4);
        let w = monopole_curvature(b).unwrap().vector();
        let v = monopole_curvature(b.map(|x| -x)).unwrap().vector();
        for d in 0..3 {
            prop_assert!((w[d] + v[d]).norm() < 1e-12);
        }
        // Parallel to b: the cross product with b vanishes.
        let cross = [
            w[1] * b[2] - w[2] * b[1],
            w[2] * b[0] - w[0] * b[2],
            w[0] * b[1] - w[1] * b[0],
        ];
        prop_assert!(cross.iter().all(|c| c.norm() < 1e-9));
    }

    #[test]
    fn spectral_flow_is_additive(s in [0.05f64..0.95, 0.05f64..0.95, 0.05f64..0.95], d1 in ivec(2), d2 in ivec(2)) {
        let mid = [s[0] + d1[0] as f64, s[1] + d1[1] as f64, s[2] + d1[2] as f64];
        let end = [mid[0] + d2[0] as f64, mid[1] + d2[1] as f64, mid[2] + d2[2] as f64];
        let a = spectral_flow_1d(&linear_path(s, mid, 16), 0.0);
        let b = spectral_flow_1d(&linear_path(mid, end, 16), 0.0);
        let total = spectral_flow_1d(&linear_path(s, end, 16), 0.0);
        prop_assert_eq!(total, [a[0] + b[0], a[1] + b[1], a[2] + b[2]]);
    }

    #[test]
    fn theta_is_bilinear_and_skew(z in vec3(), x in vec3(), y in vec3(), w in vec3(), k in -3i64..=3) {
        let t = |p, q| theta_form(z, p, q, k);
        prop_assert!((t(x, y) + t(y, x)).abs() < 1e-12);
        let xw = [x[0] + w[0], x[1] + w[1], x[2] + w[2]];
        prop_assert!((t(xw, y) - t(x, y) - t(w, y)).abs() < 1e-12);
    }

    #[test]
    fn form_is_ad_invariant(z in vec3(), x in vec3(), y in vec3()) {
        prop_assert!((pairing(bracket(z, x), y) + pairing(x, bracket(z, y))).abs() < 1e-10);
    }
}

#[test]
fn rational_scaling_commutes_with_wedge() {
    let f = frame();
    let a = Form::generator(&f, "dx").unwrap();
    let b = Form::generator(&f, "e1").unwrap();
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    assert_eq!(a.scale(&half).wedge(&b).unwrap(), a.wedge(&b).unwrap().scale(&half));
}
