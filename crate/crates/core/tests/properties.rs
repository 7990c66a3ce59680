use biyb_core::algebra::{bracket, mybe_residual, AlgebraElement, CMat, LieContext, RVec};
use biyb_core::group::{iwasawa, split_an_compact, GroupElement};
use biyb_core::lax::{mobius, mobius_inverse, SpectralValue};
use biyb_core::spectral::CascadeParams;
use num_complex::Complex64;
use proptest::prelude::*;

fn element(ctx: &LieContext, c: &[f64]) -> AlgebraElement {
    AlgebraElement::new(&ctx.basis, RVec::from_column_slice(c)).unwrap()
}

fn coeffs(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bracket_is_antisymmetric_and_r_solves_mybe(x in coeffs(8), y in coeffs(8)) {
        let ctx = LieContext::su(3).unwrap();
        let (x, y) = (element(&ctx, &x), element(&ctx, &y));
        let xy = bracket(&ctx.basis, &x, &y).unwrap();
        let yx = bracket(&ctx.basis, &y, &x).unwrap();
        prop_assert!(xy.add(&yx).unwrap().max_norm() < 1e-12);
        prop_assert!(mybe_residual(&ctx.basis, &ctx.r, &x, &y).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn split_reconstructs_the_complex_element(re in coeffs(8), im in coeffs(8)) {
        let ctx = LieContext::su(3).unwrap();
        let z: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let z = biyb_core::algebra::CVec::from_vec(z);
        let (k, kappa) = split_an_compact(&ctx, &z);
        let back = ctx.r_minus_i(&k) + kappa.map(|v| Complex64::new(v, 0.0));
        prop_assert!((back - z).iter().all(|d| d.norm() < 1e-12));
    }

    #[test]
    fn iwasawa_factors_multiply_back(re in prop::collection::vec(-1.0..1.0f64, 9), im in prop::collection::vec(-1.0..1.0f64, 9)) {
        let mut m = CMat::from_fn(3, 3, |r, c| Complex64::new(re[3 * r + c], im[3 * r + c]));
        m += CMat::identity(3, 3) * Complex64::new(2.0, 0.0);
        let det = m.determinant();
        m /= det.powf(1.0 / 3.0);
        let l = GroupElement::complexified(m.clone()).unwrap();
        let (b, u) = iwasawa(&l).unwrap();
        let err = (b.matrix() * u.matrix() - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "{err:.3e}");
    }

    #[test]
    fn mobius_round_trips(re in -3.0..3.0f64, im in -3.0..3.0f64, beta in 0.0..0.9f64) {
        let z = SpectralValue::new(re, im);
        if let Ok(lambda) = mobius(z, beta) {
            let back = mobius_inverse(lambda, beta).unwrap().finite().unwrap();
            prop_assert!((back - z.finite().unwrap()).norm() < 1e-9 * (1.0 + back.norm()));
        }
    }

    #[test]
    fn cascade_parameters_swap_with_their_arguments(e in 0.0..0.9f64, h in 0.0..0.9f64) {
        let (a, b) = CascadeParams::new(e, h).unwrap().model_params();
        let (a2, b2) = CascadeParams::new(h, e).unwrap().model_params();
        prop_assert!((a - b2).abs() < 1e-14 && (b - a2).abs() < 1e-14);
    }
}
