//! Randomized identity checks shared by the CLI and the test suites.
//!
//! Every function returns the largest defect it observed; comparing against
//! a tolerance is left to the caller.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    bracket, mybe_residual, r_bracket, skew_defect, AlgebraElement, CMat, CVec, LieContext,
    LinearOp, RMat, RVec,
};
use crate::error::Result;
use crate::group::{
    an_group_defect, dressed_r, exp_map, iwasawa_registry, unitarity_defect, DEFAULT_CONDITION_CAP,
};
use crate::lax::{
    gauge_transform_point, mobius_inverse, offshell_curvature_identity, yb_dressed_gauged_point,
    yb_lax_d_point, zm_lax_point, BiYangBaxter, LaxPair, SpectralValue, YbUndressed,
};
use crate::model::{invert_point, CurrentJet, FieldPoint, ModelParams};

/// A named defect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
}

impl Measurement {
    pub fn new(name: impl Into<String>, value: f64) -> Self {
        Self {
            name: name.into(),
            value,
        }
    }
}

pub fn random_element(ctx: &LieContext, rng: &mut ChaCha8Rng, scale: f64) -> AlgebraElement {
    let x = RVec::from_fn(ctx.dim(), |_, _| rng.random_range(-scale..scale));
    AlgebraElement::new(&ctx.basis, x).expect("dimension matches")
}

pub fn random_group(ctx: &LieContext, rng: &mut ChaCha8Rng) -> CMat {
    exp_map(&ctx.basis, &random_element(ctx, rng, PI))
        .expect("exp of an algebra element")
        .into_matrix()
}

pub fn random_point(ctx: &LieContext, rng: &mut ChaCha8Rng) -> FieldPoint {
    FieldPoint {
        g: random_group(ctx, rng),
        a_plus: random_element(ctx, rng, 1.0).coeffs,
        a_minus: random_element(ctx, rng, 1.0).coeffs,
    }
}

/// Random element of SL(n, C) with bounded conditioning.
pub fn random_sl(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    loop {
        let m = CMat::from_fn(n, n, |_, _| {
            num_complex::Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let det = m.determinant();
        if det.norm() > 1e-2 {
            return m * det.powf(-1.0 / n as f64);
        }
    }
}

fn max_coeff(x: &AlgebraElement) -> f64 {
    x.max_norm()
}

/// Skewness, mYBE for `R` and for dressed `R_g`, Jacobi for both brackets and
/// the homomorphism property of `R - i`.
pub fn algebra_defects(
    ctx: &LieContext,
    r: &LinearOp,
    samples: usize,
    dressed_samples: usize,
    seed: u64,
) -> Result<Vec<Measurement>> {
    let basis = &ctx.basis;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut skew: f64 = 0.0;
    let mut mybe: f64 = 0.0;
    let mut jacobi: f64 = 0.0;
    let mut jacobi_r: f64 = 0.0;
    let mut hom: f64 = 0.0;
    let r_ctx = LieContext::with_r(ctx.basis.clone(), r.clone())?;
    for _ in 0..samples {
        let x = random_element(ctx, &mut rng, 1.0);
        let y = random_element(ctx, &mut rng, 1.0);
        let z = random_element(ctx, &mut rng, 1.0);
        skew = skew.max(skew_defect(basis, r, &x, &y)?.abs());
        mybe = mybe.max(max_coeff(&mybe_residual(basis, r, &x, &y)?));
        let cyc = |b: &dyn Fn(&AlgebraElement, &AlgebraElement) -> Result<AlgebraElement>| -> Result<f64> {
            let a = b(&x, &b(&y, &z)?)?;
            let c = b(&y, &b(&z, &x)?)?;
            let d = b(&z, &b(&x, &y)?)?;
            Ok(max_coeff(&a.add(&c)?.add(&d)?))
        };
        jacobi = jacobi.max(cyc(&|a, b| bracket(basis, a, b))?);
        jacobi_r = jacobi_r.max(cyc(&|a, b| r_bracket(basis, r, a, b))?);
        // (R - i)[X, Y]_R = [(R - i) X, (R - i) Y]
        let lhs = r_ctx.r_minus_i(&r_bracket(basis, r, &x, &y)?.coeffs);
        let xs: Vec<_> = r_ctx.r_minus_i(&x.coeffs).iter().copied().collect();
        let ys: Vec<_> = r_ctx.r_minus_i(&y.coeffs).iter().copied().collect();
        let rhs = basis.bracket_coeffs_c(&xs, &ys);
        hom = hom.max((lhs - rhs).iter().map(|c| c.norm()).fold(0.0, f64::max));
    }
    let mut mybe_dressed: f64 = 0.0;
    for _ in 0..dressed_samples {
        let g = exp_map(basis, &random_element(ctx, &mut rng, PI))?;
        let rg = dressed_r(basis, r, &g)?;
        for _ in 0..samples.div_ceil(dressed_samples.max(1)) {
            let x = random_element(ctx, &mut rng, 1.0);
            let y = random_element(ctx, &mut rng, 1.0);
            mybe_dressed = mybe_dressed.max(max_coeff(&mybe_residual(basis, &rg, &x, &y)?));
        }
    }
    Ok(vec![
        Measurement::new("skew", skew),
        Measurement::new("mybe", mybe),
        Measurement::new("mybe_dressed", mybe_dressed),
        Measurement::new("jacobi", jacobi),
        Measurement::new("jacobi_r_bracket", jacobi_r),
        Measurement::new("r_minus_i_homomorphism", hom),
    ])
}

/// Relative reconstruction error, AN defect of `b` and unitarity defect of
/// `u` over random SL(n, C) samples.
pub fn iwasawa_defects(n: usize, samples: usize, algorithm: &str, seed: u64) -> Result<Vec<Measurement>> {
    let registry = iwasawa_registry();
    let alg = (registry.get(algorithm)?)(DEFAULT_CONDITION_CAP);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recon: f64 = 0.0;
    let mut an: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for _ in 0..samples {
        let l = random_sl(n, &mut rng);
        let (b, u) = alg.factor(&l)?;
        recon = recon.max((&b * &u - &l).norm() / l.norm());
        an = an.max(an_group_defect(&b));
        unit = unit.max(unitarity_defect(&u));
    }
    Ok(vec![
        Measurement::new("iwasawa_roundtrip", recon),
        Measurement::new("iwasawa_an_defect", an),
        Measurement::new("iwasawa_unitarity_defect", unit),
    ])
}

/// Smooth random jet on `n` sites: every field is a short random Fourier
/// series in σ, and derivatives are independent, so it is not a solution.
pub fn random_smooth_jet(ctx: &LieContext, n: usize, rng: &mut ChaCha8Rng) -> CurrentJet {
    let d = ctx.dim();
    let mut field = || {
        let c: Vec<[f64; 3]> = (0..d)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        RMat::from_fn(d, n, |a, j| {
            let s = 2.0 * PI * j as f64 / n as f64;
            c[a][0] + c[a][1] * s.cos() + c[a][2] * (2.0 * s).sin() / 2.0
        })
    };
    CurrentJet {
        j_plus: field(),
        j_minus: field(),
        dplus_jminus: field(),
        dminus_jplus: field(),
    }
}

/// `|curvature - (M_+ V_- + M_- V_+)|` over random smooth fields.
pub fn offshell_defect(
    ctx: &LieContext,
    params: &[ModelParams],
    zetas: &[SpectralValue],
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let jet = random_smooth_jet(ctx, 16, &mut rng);
        for p in params {
            for &z in zetas {
                worst = worst.max(offshell_curvature_identity(ctx, p, &jet, z)?);
            }
        }
    }
    Ok(worst)
}

fn lax_gap(a: &(CVec, CVec), b: &(CVec, CVec)) -> f64 {
    let m = |v: CVec| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    m(&a.0 - &b.0).max(m(&a.1 - &b.1))
}

/// One-parameter limits of the two-parameter pair, and the gauge chain from
/// the dressed to the bare-operator form.
pub fn lax_chain_defects(
    ctx: &LieContext,
    alpha: f64,
    beta: f64,
    zetas: &[SpectralValue],
    points: usize,
    seed: u64,
) -> Result<Vec<Measurement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bi = |a: f64, b: f64| BiYangBaxter::new(ModelParams { alpha: a, beta: b });
    let undressed = YbUndressed { beta };
    let gauge_pair = YbUndressed { beta: alpha };
    let (mut zm, mut dd, mut jj, mut closed, mut chain) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..points {
        let pt = random_point(ctx, &mut rng);
        let inv = invert_point(ctx, &pt);
        for &z in zetas {
            zm = zm.max(lax_gap(&bi(0.0, 0.0).at_point(ctx, &pt, z)?, &zm_lax_point(&pt, z)?));
            dd = dd.max(lax_gap(
                &bi(alpha, 0.0).at_point(ctx, &pt, z)?,
                &yb_lax_d_point(ctx, alpha, &pt, z)?,
            ));
            jj = jj.max(lax_gap(
                &bi(0.0, beta).at_point(ctx, &pt, z)?,
                &undressed.at_point(ctx, &pt, z)?,
            ));
            let gauged = gauge_transform_point(ctx, &yb_lax_d_point(ctx, alpha, &pt, z)?, &pt);
            closed = closed.max(lax_gap(&gauged, &yb_dressed_gauged_point(ctx, alpha, &pt, z)?));
            let z_inv = mobius_inverse(z.reciprocal(), alpha)?;
            chain = chain.max(lax_gap(&gauged, &gauge_pair.at_point(ctx, &inv, z_inv)?));
        }
    }
    Ok(vec![
        Measurement::new("limit_zm", zm),
        Measurement::new("limit_dressed", dd),
        Measurement::new("limit_undressed", jj),
        Measurement::new("gauge_closed_form", closed),
        Measurement::new("gauge_chain", chain),
    ])
}

/// Spectral values on circles of the given radii, `points` per circle,
/// dropping those within `exclusion` of `±1`.
pub fn zeta_samples(radii: &[f64], points: usize, exclusion: f64) -> Vec<SpectralValue> {
    let mut out = Vec::new();
    for &r in radii {
        for i in 0..points {
            let th = 2.0 * PI * (i as f64 + 0.5) / points as f64;
            let z = num_complex::Complex64::from_polar(r, th);
            if (z - 1.0).norm() > exclusion && (z + 1.0).norm() > exclusion {
                out.push(SpectralValue::Finite(z));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::flipped_r;

    #[test]
    fn flipped_r_fails_only_mybe() {
        let ctx = LieContext::su(2).unwrap();
        let bad = flipped_r(&ctx.basis);
        let m = algebra_defects(&ctx, &bad, 20, 2, 1).unwrap();
        let get = |n: &str| m.iter().find(|x| x.name == n).unwrap().value;
        assert!(get("mybe") > 1e-2);
        assert!(get("jacobi") < 1e-12);
    }

    #[test]
    fn samples_avoid_poles() {
        let z = zeta_samples(&[1.0], 4, 0.5);
        assert!(z.iter().all(|v| v.check().is_ok()));
        assert_eq!(zeta_samples(&[0.5, 2.0], 20, 0.05).len(), 40);
    }
}
