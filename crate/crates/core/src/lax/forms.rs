use num_complex::Complex64;

use super::{CField, LaxMultiplier, LaxPair, LaxSample, SpectralValue, POLE_RADIUS};
use crate::algebra::{CVec, LieContext, RMat, RVec};
use crate::error::{Error, Result};
use crate::group::{adjoint_matrix, adjoint_matrix_real};
use crate::model::{currents_from_point, deformation_matrix, solve_checked, FieldPoint, ModelParams};

fn cvec(x: &RVec) -> CVec {
    x.map(|v| Complex64::new(v, 0.0))
}

fn signs() -> [f64; 2] {
    [1.0, -1.0]
}

/// `lambda(zeta) = (zeta - i beta) / (1 - i zeta beta)`.
pub fn mobius(zeta: SpectralValue, beta: f64) -> Result<SpectralValue> {
    let ib = Complex64::new(0.0, beta);
    match zeta {
        SpectralValue::Infinity if beta == 0.0 => Ok(SpectralValue::Infinity),
        SpectralValue::Infinity => Ok(SpectralValue::Finite(-ib.inv())),
        SpectralValue::Finite(z) => {
            let den = 1.0 - z * ib;
            if den.norm() < POLE_RADIUS {
                return Err(Error::SpectralPole {
                    value: zeta.to_string(),
                    pole: format!("1/(i*{beta})"),
                    radius: POLE_RADIUS,
                });
            }
            Ok(SpectralValue::Finite((z - ib) / den))
        }
    }
}

/// Inverse of [`mobius`]: `zeta = (lambda + i beta) / (1 + i lambda beta)`.
pub fn mobius_inverse(lambda: SpectralValue, beta: f64) -> Result<SpectralValue> {
    mobius(lambda, -beta)
}

/// Zakharov-Mikhailov pair `-A_± / (1 ± zeta)`.
pub fn zm_lax_point(pt: &FieldPoint, zeta: SpectralValue) -> Result<(CVec, CVec)> {
    Ok((
        cvec(&pt.a_plus) * -zeta.pole_factor(1.0)?,
        cvec(&pt.a_minus) * -zeta.pole_factor(-1.0)?,
    ))
}

/// `-(1 + alpha^2) / (1 ± zeta) (I ± alpha R_g)^-1 A_±`.
pub fn yb_lax_d_point(
    ctx: &LieContext,
    alpha: f64,
    pt: &FieldPoint,
    zeta: SpectralValue,
) -> Result<(CVec, CVec)> {
    let p = ModelParams { alpha, beta: 0.0 };
    let mut out = [CVec::zeros(0), CVec::zeros(0)];
    for (k, s) in signs().into_iter().enumerate() {
        let a = if s > 0.0 { &pt.a_plus } else { &pt.a_minus };
        let y = solve_checked(deformation_matrix(ctx, &p, &pt.g, s), a, 0)?;
        out[k] = cvec(&y) * (-(1.0 + alpha * alpha) * zeta.pole_factor(s)?);
    }
    let [lp, lm] = out;
    Ok((lp, lm))
}

/// `(beta^2 ∓ beta R - (1 + beta^2) / (1 ± lambda)) (I ± beta R)^-1 A_±` at
/// its own spectral parameter `lambda`.
pub fn yb_lax_j_point(
    ctx: &LieContext,
    beta: f64,
    pt: &FieldPoint,
    lambda: SpectralValue,
) -> Result<(CVec, CVec)> {
    let d = ctx.dim();
    let mut out = [CVec::zeros(0), CVec::zeros(0)];
    for (k, s) in signs().into_iter().enumerate() {
        let a = if s > 0.0 { &pt.a_plus } else { &pt.a_minus };
        let op = RMat::identity(d, d) + &ctx.r.matrix * (s * beta);
        let y = solve_checked(op, a, 0)?;
        let ry = ctx.apply_r(&y);
        let q = lambda.pole_factor(s)?;
        out[k] = cvec(&(&y * (beta * beta) - &ry * (s * beta))) - cvec(&y) * ((1.0 + beta * beta) * q);
    }
    let [lp, lm] = out;
    Ok((lp, lm))
}

/// `g L_± g^-1 + d_± g g^-1 = Ad_g (L_± + A_±)` at one site.
pub fn gauge_transform_point(ctx: &LieContext, l: &(CVec, CVec), pt: &FieldPoint) -> (CVec, CVec) {
    let ad = adjoint_matrix(&ctx.basis, &pt.g);
    (
        &ad * (&l.0 + cvec(&pt.a_plus)),
        &ad * (&l.1 + cvec(&pt.a_minus)),
    )
}

pub fn gauge_transform(ctx: &LieContext, lax: &LaxSample, points: &[FieldPoint]) -> LaxSample {
    let d = ctx.dim();
    let mut l_plus = CField::zeros(d, points.len());
    let mut l_minus = CField::zeros(d, points.len());
    for (j, pt) in points.iter().enumerate() {
        let l = (
            lax.l_plus.column(j).into_owned(),
            lax.l_minus.column(j).into_owned(),
        );
        let (p, m) = gauge_transform_point(ctx, &l, pt);
        l_plus.set_column(j, &p);
        l_minus.set_column(j, &m);
    }
    LaxSample {
        zeta: lax.zeta,
        params: lax.params,
        l_plus,
        l_minus,
    }
}

/// Closed form of the gauge-transformed dressed pair:
/// `-(alpha^2 ∓ alpha R - (1 + alpha^2) / (1 ± 1/zeta)) (I ± alpha R)^-1 d_± g g^-1`.
pub fn yb_dressed_gauged_point(
    ctx: &LieContext,
    alpha: f64,
    pt: &FieldPoint,
    zeta: SpectralValue,
) -> Result<(CVec, CVec)> {
    let d = ctx.dim();
    let ad = adjoint_matrix_real(&ctx.basis, &pt.g);
    let inv = zeta.reciprocal();
    let mut out = [CVec::zeros(0), CVec::zeros(0)];
    for (k, s) in signs().into_iter().enumerate() {
        let a = if s > 0.0 { &pt.a_plus } else { &pt.a_minus };
        let x = &ad * a;
        let op = RMat::identity(d, d) + &ctx.r.matrix * (s * alpha);
        let y = solve_checked(op, &x, 0)?;
        let ry = ctx.apply_r(&y);
        let q = inv.pole_factor(s)?;
        out[k] = cvec(&(&ry * (s * alpha) - &y * (alpha * alpha))) + cvec(&y) * ((1.0 + alpha * alpha) * q);
    }
    let [lp, lm] = out;
    Ok((lp, lm))
}

/// The two-parameter pair evaluated from `(g, A_±)`. With `k != 2` the
/// `2 i beta` coefficient is replaced by `k i beta`, a deliberately wrong
/// control.
#[derive(Clone, Copy, Debug)]
pub struct BiYangBaxter {
    pub params: ModelParams,
    pub k: f64,
}

impl BiYangBaxter {
    pub fn new(params: ModelParams) -> Self {
        Self { params, k: 2.0 }
    }

    pub fn perturbed(params: ModelParams) -> Self {
        Self { params, k: 3.0 }
    }
}

impl LaxPair for BiYangBaxter {
    fn name(&self) -> &'static str {
        if self.k == 2.0 {
            "bi-yang-baxter"
        } else {
            "perturbed-bi-yang-baxter"
        }
    }

    fn params(&self) -> ModelParams {
        self.params
    }

    fn at_point(&self, ctx: &LieContext, pt: &FieldPoint, zeta: SpectralValue) -> Result<(CVec, CVec)> {
        zeta.check()?;
        let (jp, jm) = currents_from_point(ctx, &self.params, pt, 0)?;
        let m = LaxMultiplier::new(&self.params, zeta, self.k)?;
        Ok((m.apply_real(ctx, 1.0, &jp), m.apply_real(ctx, -1.0, &jm)))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ZakharovMikhailov;

impl LaxPair for ZakharovMikhailov {
    fn name(&self) -> &'static str {
        "zakharov-mikhailov"
    }

    fn params(&self) -> ModelParams {
        ModelParams::pcm()
    }

    fn at_point(&self, _ctx: &LieContext, pt: &FieldPoint, zeta: SpectralValue) -> Result<(CVec, CVec)> {
        zm_lax_point(pt, zeta)
    }
}

/// One-parameter pair with the dressed operator `R_g`.
#[derive(Clone, Copy, Debug)]
pub struct YbDressed {
    pub alpha: f64,
}

impl LaxPair for YbDressed {
    fn name(&self) -> &'static str {
        "yb-dressed"
    }

    fn params(&self) -> ModelParams {
        ModelParams {
            alpha: self.alpha,
            beta: 0.0,
        }
    }

    fn at_point(&self, ctx: &LieContext, pt: &FieldPoint, zeta: SpectralValue) -> Result<(CVec, CVec)> {
        yb_lax_d_point(ctx, self.alpha, pt, zeta)
    }
}

/// One-parameter pair with the bare operator `R`, evaluated at
/// `lambda(zeta)` so that it is directly comparable with the two-parameter
/// pair at `alpha = 0`.
#[derive(Clone, Copy, Debug)]
pub struct YbUndressed {
    pub beta: f64,
}

impl LaxPair for YbUndressed {
    fn name(&self) -> &'static str {
        "yb-undressed"
    }

    fn params(&self) -> ModelParams {
        ModelParams {
            alpha: 0.0,
            beta: self.beta,
        }
    }

    fn at_point(&self, ctx: &LieContext, pt: &FieldPoint, zeta: SpectralValue) -> Result<(CVec, CVec)> {
        yb_lax_j_point(ctx, self.beta, pt, mobius(zeta, self.beta)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraElement;
    use crate::group::{exp_map, inverse};
    use crate::lax::lax_field;
    use crate::model::invert_point;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(ctx: &LieContext, count: usize, seed: u64) -> Vec<FieldPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = ctx.dim();
        (0..count)
            .map(|_| {
                let x = RVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                FieldPoint {
                    g: exp_map(&ctx.basis, &AlgebraElement::new(&ctx.basis, x).unwrap())
                        .unwrap()
                        .into_matrix(),
                    a_plus: RVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
                    a_minus: RVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
                }
            })
            .collect()
    }

    fn diff(a: &(CVec, CVec), b: &(CVec, CVec)) -> f64 {
        let m = |v: CVec| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        m(&a.0 - &b.0).max(m(&a.1 - &b.1))
    }

    #[test]
    fn mobius_spot_values() {
        let b = 0.3;
        let z = mobius(SpectralValue::new(0.0, b), b).unwrap().finite().unwrap();
        assert!(z.norm() < 1e-15);
        for x in [1.0, -1.0] {
            let l = mobius(SpectralValue::real(x), b).unwrap().finite().unwrap();
            assert!((l - x).norm() < 1e-15);
        }
        let w = SpectralValue::new(0.4, -0.7);
        let back = mobius_inverse(mobius(w, b).unwrap(), b).unwrap();
        assert!((back.finite().unwrap() - w.finite().unwrap()).norm() < 1e-15);
        assert!(mobius(SpectralValue::new(0.0, -1.0 / b), b).is_err());
        assert_eq!(mobius(SpectralValue::Infinity, 0.0).unwrap(), SpectralValue::Infinity);
    }

    #[test]
    fn limit_chain() {
        let ctx = LieContext::su(3).unwrap();
        let zeta = SpectralValue::new(0.3, -0.6);
        for pt in random_points(&ctx, 5, 2) {
            let bi = |a: f64, b: f64| {
                BiYangBaxter::new(ModelParams::new(a, b).unwrap())
                    .at_point(&ctx, &pt, zeta)
                    .unwrap()
            };
            assert!(diff(&bi(0.0, 0.0), &zm_lax_point(&pt, zeta).unwrap()) < 1e-14);
            assert!(diff(&bi(0.6, 0.0), &yb_lax_d_point(&ctx, 0.6, &pt, zeta).unwrap()) < 1e-12);
            let k = YbUndressed { beta: 0.7 }.at_point(&ctx, &pt, zeta).unwrap();
            assert!(diff(&bi(0.0, 0.7), &k) < 1e-12);
        }
    }

    #[test]
    fn gauge_chain_maps_dressed_to_undressed() {
        let ctx = LieContext::su(2).unwrap();
        let alpha = 0.45;
        let zeta = SpectralValue::new(0.8, 0.5);
        for pt in random_points(&ctx, 5, 6) {
            let d = yb_lax_d_point(&ctx, alpha, &pt, zeta).unwrap();
            let gauged = gauge_transform_point(&ctx, &d, &pt);
            let closed = yb_dressed_gauged_point(&ctx, alpha, &pt, zeta).unwrap();
            assert!(diff(&gauged, &closed) < 1e-12);
            let inv = invert_point(&ctx, &pt);
            assert!((inv.g.clone() - inverse(&pt.g)).iter().all(|z| z.norm() < 1e-15));
            let zeta_k = mobius_inverse(zeta.reciprocal(), alpha).unwrap();
            let k = YbUndressed { beta: alpha }.at_point(&ctx, &inv, zeta_k).unwrap();
            assert!(diff(&gauged, &k) < 1e-12);
        }
    }

    #[test]
    fn identity_gauge_is_trivial() {
        let ctx = LieContext::su(2).unwrap();
        let mut pts = random_points(&ctx, 3, 1);
        for p in pts.iter_mut() {
            p.g = crate::algebra::CMat::identity(2, 2);
            p.a_plus.fill(0.0);
            p.a_minus.fill(0.0);
        }
        let pts2 = random_points(&ctx, 3, 1);
        let lax = lax_field(&ZakharovMikhailov, &ctx, &pts2, SpectralValue::real(0.2)).unwrap();
        assert_eq!(gauge_transform(&ctx, &lax, &pts), lax);
    }

    #[test]
    fn pole_structure() {
        let ctx = LieContext::su(2).unwrap();
        let pt = &random_points(&ctx, 1, 3)[0];
        let pair = BiYangBaxter::new(ModelParams::new(0.3, 0.2).unwrap());
        let norm = |v: &CVec| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let at = |d: f64| pair.at_point(&ctx, pt, SpectralValue::real(1.0 - d)).unwrap();
        let (p1, m1) = at(1e-3);
        let (p2, m2) = at(1e-4);
        // L_+ stays finite at zeta = 1 while (1 - zeta) L_- has a finite limit
        assert!((norm(&p1) - norm(&p2)).abs() < 1e-3 * norm(&p1).max(1.0));
        let r1 = &m1 * Complex64::new(1e-3, 0.0);
        let r2 = &m2 * Complex64::new(1e-4, 0.0);
        assert!(norm(&(&r1 - &r2)) < 1e-2 * norm(&r2));
        assert!(norm(&r2) > 1e-3);
    }
}
