use rayon::prelude::*;

use super::{FieldPoint, FieldState, ModelParams, INVERTIBILITY_FLOOR};
use crate::algebra::{BasisSpec, CMat, LieContext, MaxAbs, RMat, RVec};
use crate::error::{Error, Result};
use crate::fourier::PeriodicGrid;
use crate::group::{adjoint_matrix_real, dressed_r_matrix, inverse};

/// `I + sign (alpha R_g + beta R)` as a matrix on coefficients.
pub fn deformation_matrix(ctx: &LieContext, params: &ModelParams, g: &CMat, sign: f64) -> RMat {
    let d = ctx.dim();
    let mut m = RMat::identity(d, d);
    if params.alpha != 0.0 {
        m += dressed_r_matrix(&ctx.basis, &ctx.r.matrix, g) * (sign * params.alpha);
    }
    if params.beta != 0.0 {
        m += &ctx.r.matrix * (sign * params.beta);
    }
    m
}

/// `R_g x` without forming the dressed matrix.
pub(crate) fn dressed_apply(basis: &BasisSpec, r: &RMat, g: &CMat, x: &RVec) -> RVec {
    let ginv = inverse(g);
    let ad = basis.real_coeffs(&(g * basis.to_matrix(x.as_slice()) * &ginv));
    let rad = r * ad;
    basis.real_coeffs(&(&ginv * basis.to_matrix(rad.as_slice()) * g))
}

/// `(I + sign (alpha R_g + beta R)) x`.
pub(crate) fn deformation_apply(
    ctx: &LieContext,
    params: &ModelParams,
    g: &CMat,
    x: &RVec,
    sign: f64,
) -> RVec {
    let mut out = x.clone();
    if params.alpha != 0.0 {
        out += dressed_apply(&ctx.basis, &ctx.r.matrix, g, x) * (sign * params.alpha);
    }
    if params.beta != 0.0 {
        out += ctx.apply_r(x) * (sign * params.beta);
    }
    out
}

pub(crate) fn solve_checked(m: RMat, rhs: &RVec, site: usize) -> Result<RVec> {
    let sigma_min = m
        .clone()
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(sigma_min >= INVERTIBILITY_FLOOR) {
        return Err(Error::SingularOperator { site, sigma_min });
    }
    m.lu()
        .solve(rhs)
        .ok_or(Error::SingularOperator { site, sigma_min })
}

/// `J_± = ∓(I ± alpha R_g ± beta R)^-1 A_±` at one site.
pub fn currents_from_point(
    ctx: &LieContext,
    params: &ModelParams,
    pt: &FieldPoint,
    site: usize,
) -> Result<(RVec, RVec)> {
    let jp = -solve_checked(deformation_matrix(ctx, params, &pt.g, 1.0), &pt.a_plus, site)?;
    let jm = solve_checked(deformation_matrix(ctx, params, &pt.g, -1.0), &pt.a_minus, site)?;
    Ok((jp, jm))
}

/// Inverse of [`currents_from_point`]: `A_± = ∓(I ± alpha R_g ± beta R) J_±`.
pub fn point_from_currents(
    ctx: &LieContext,
    params: &ModelParams,
    g: &CMat,
    j_plus: &RVec,
    j_minus: &RVec,
) -> FieldPoint {
    FieldPoint {
        g: g.clone(),
        a_plus: -deformation_apply(ctx, params, g, j_plus, 1.0),
        a_minus: deformation_apply(ctx, params, g, j_minus, -1.0),
    }
}

/// Currents of a lattice field `g` given its τ-derivative; σ-derivatives are
/// spectral.
pub fn currents_from_g(
    ctx: &LieContext,
    params: &ModelParams,
    grid: &PeriodicGrid,
    g: &[CMat],
    dtau_g: &[CMat],
) -> Result<(RMat, RMat)> {
    if g.len() != grid.n() || dtau_g.len() != grid.n() {
        return Err(Error::InvalidDimension(format!(
            "field has {} sites, τ-derivative {}, grid {}",
            g.len(),
            dtau_g.len(),
            grid.n()
        )));
    }
    let dsigma = grid.derivative_matrices(g);
    let basis = &ctx.basis;
    let cols: Vec<(RVec, RVec)> = (0..grid.n())
        .into_par_iter()
        .map(|j| {
            let ginv = inverse(&g[j]);
            let p = basis.real_coeffs(&(&ginv * &dtau_g[j]));
            let q = basis.real_coeffs(&(&ginv * &dsigma[j]));
            let pt = FieldPoint {
                g: g[j].clone(),
                a_plus: (&p + &q) * 0.5,
                a_minus: (&p - &q) * 0.5,
            };
            currents_from_point(ctx, params, &pt, j)
        })
        .collect::<Result<_>>()?;
    let d = ctx.dim();
    let mut jp = RMat::zeros(d, grid.n());
    let mut jm = RMat::zeros(d, grid.n());
    for (j, (a, b)) in cols.into_iter().enumerate() {
        jp.set_column(j, &a);
        jm.set_column(j, &b);
    }
    Ok((jp, jm))
}

/// `(g, A_+, A_-)` at every site, with `A_±` rebuilt from the stored currents.
pub fn field_points(ctx: &LieContext, params: &ModelParams, state: &FieldState) -> Vec<FieldPoint> {
    (0..state.n_sigma())
        .into_par_iter()
        .map(|j| {
            point_from_currents(
                ctx,
                params,
                &state.g[j],
                &state.j_plus_at(j),
                &state.j_minus_at(j),
            )
        })
        .collect()
}

/// Lagrangian density `(A_+, (I - alpha R_g - beta R)^-1 A_-)`.
pub fn action_density(ctx: &LieContext, params: &ModelParams, pt: &FieldPoint) -> Result<f64> {
    let x = solve_checked(deformation_matrix(ctx, params, &pt.g, -1.0), &pt.a_minus, 0)?;
    Ok(ctx
        .basis
        .inner_coeffs(pt.a_plus.as_slice(), x.as_slice()))
}

/// Point data of `g^-1`: `A_± -> -Ad_g A_±`.
pub fn invert_point(ctx: &LieContext, pt: &FieldPoint) -> FieldPoint {
    let ad = adjoint_matrix_real(&ctx.basis, &pt.g);
    FieldPoint {
        g: inverse(&pt.g),
        a_plus: -(&ad * &pt.a_plus),
        a_minus: -(&ad * &pt.a_minus),
    }
}

/// `g -> g^-1` together with `(alpha, beta) -> (beta, alpha)`.
///
/// The currents transform as `J_± -> -Ad_g J_±`, which is what the
/// definition gives for the swapped parameters.
pub fn invert_solution(
    ctx: &LieContext,
    params: &ModelParams,
    state: &FieldState,
) -> (FieldState, ModelParams) {
    let n = state.n_sigma();
    let mut out = state.clone();
    for j in 0..n {
        let ad = adjoint_matrix_real(&ctx.basis, &state.g[j]);
        out.g[j] = inverse(&state.g[j]);
        out.j_plus.set_column(j, &-(&ad * state.j_plus.column(j)));
        out.j_minus.set_column(j, &-(&ad * state.j_minus.column(j)));
    }
    (out, params.swapped())
}

/// Max-norm mismatch between stored currents and those recomputed from `g`,
/// with `d_tau g = g (A_+ + A_-)` taken from the stored currents.
pub fn constraint_drift(
    ctx: &LieContext,
    params: &ModelParams,
    grid: &PeriodicGrid,
    state: &FieldState,
) -> Result<f64> {
    let pts = field_points(ctx, params, state);
    let dtau: Vec<CMat> = pts
        .iter()
        .map(|p| &p.g * ctx.basis.to_matrix((&p.a_plus + &p.a_minus).as_slice()))
        .collect();
    let (jp, jm) = currents_from_g(ctx, params, grid, &state.g, &dtau)?;
    Ok((jp - &state.j_plus)
        .max_abs()
        .max((jm - &state.j_minus).max_abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraElement;
    use crate::group::exp_map;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(ctx: &LieContext, rng: &mut ChaCha8Rng) -> FieldPoint {
        let d = ctx.dim();
        let x = RVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let g = exp_map(&ctx.basis, &AlgebraElement::new(&ctx.basis, x).unwrap())
            .unwrap()
            .into_matrix();
        FieldPoint {
            g,
            a_plus: RVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
            a_minus: RVec::from_fn(d, |_, _| rng.random_range(-1.0..1.0)),
        }
    }

    #[test]
    fn point_round_trip() {
        let ctx = LieContext::su(3).unwrap();
        let params = ModelParams::new(0.4, 0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let pt = random_point(&ctx, &mut rng);
            let (jp, jm) = currents_from_point(&ctx, &params, &pt, 0).unwrap();
            let back = point_from_currents(&ctx, &params, &pt.g, &jp, &jm);
            assert!((back.a_plus - &pt.a_plus).max_abs() < 1e-13);
            assert!((back.a_minus - &pt.a_minus).max_abs() < 1e-13);
        }
    }

    #[test]
    fn dressed_apply_matches_matrix() {
        let ctx = LieContext::su(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pt = random_point(&ctx, &mut rng);
        let m = dressed_r_matrix(&ctx.basis, &ctx.r.matrix, &pt.g);
        let a = dressed_apply(&ctx.basis, &ctx.r.matrix, &pt.g, &pt.a_plus);
        assert!((m * &pt.a_plus - a).max_abs() < 1e-14);
    }

    #[test]
    fn pcm_currents_are_bare() {
        let ctx = LieContext::su(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pt = random_point(&ctx, &mut rng);
        let (jp, jm) = currents_from_point(&ctx, &ModelParams::pcm(), &pt, 0).unwrap();
        assert!((jp + &pt.a_plus).max_abs() < 1e-15);
        assert!((jm - &pt.a_minus).max_abs() < 1e-15);
    }

    #[test]
    fn action_duality_pointwise() {
        let ctx = LieContext::su(3).unwrap();
        let params = ModelParams::new(0.3, 0.8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let pt = random_point(&ctx, &mut rng);
            let a = action_density(&ctx, &params, &pt).unwrap();
            let b = action_density(&ctx, &params.swapped(), &invert_point(&ctx, &pt)).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }
}
