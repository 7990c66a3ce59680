//! Lax connections of the deformed sigma-models and their curvature.
//!
//! A Lax pair is stored as two complex coefficient fields over the basis
//! (`dim x n_sigma`). Curvature is `d_+ L_- - d_- L_+ + [L_-, L_+]`.

mod forms;

pub use forms::{
    gauge_transform, gauge_transform_point, mobius, mobius_inverse, yb_dressed_gauged_point,
    yb_lax_d_point, yb_lax_j_point, zm_lax_point, BiYangBaxter, YbDressed, YbUndressed,
    ZakharovMikhailov,
};

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::{CVec, LieContext, RMat, RVec};
use crate::error::{Error, Result};
use crate::fourier::PeriodicGrid;
use crate::model::{v_residuals, CurrentJet, FieldPoint, FieldState, ModelParams, Stencil};
use crate::registry::Registry;

/// Complex coefficient field, one column per site.
pub type CField = DMatrix<Complex64>;

/// Exclusion radius around poles of the spectral parameter.
pub const POLE_RADIUS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpectralValue {
    Finite(Complex64),
    Infinity,
}

impl fmt::Display for SpectralValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralValue::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            SpectralValue::Infinity => write!(f, "inf"),
        }
    }
}

impl SpectralValue {
    pub fn new(re: f64, im: f64) -> Self {
        SpectralValue::Finite(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Self {
        Self::new(x, 0.0)
    }

    pub fn finite(self) -> Option<Complex64> {
        match self {
            SpectralValue::Finite(z) => Some(z),
            SpectralValue::Infinity => None,
        }
    }

    pub fn reciprocal(self) -> Self {
        match self {
            SpectralValue::Infinity => SpectralValue::Finite(Complex64::new(0.0, 0.0)),
            SpectralValue::Finite(z) if z.norm() == 0.0 => SpectralValue::Infinity,
            SpectralValue::Finite(z) => SpectralValue::Finite(z.inv()),
        }
    }

    /// `1 / (1 + sign zeta)`, zero at infinity.
    pub fn pole_factor(self, sign: f64) -> Result<Complex64> {
        match self {
            SpectralValue::Infinity => Ok(Complex64::new(0.0, 0.0)),
            SpectralValue::Finite(z) => {
                let den = 1.0 + sign * z;
                if den.norm() < POLE_RADIUS {
                    return Err(Error::SpectralPole {
                        value: self.to_string(),
                        pole: format!("{}", -sign),
                        radius: POLE_RADIUS,
                    });
                }
                Ok(den.inv())
            }
        }
    }

    /// Fails inside the exclusion disks around `±1`.
    pub fn check(self) -> Result<()> {
        self.pole_factor(1.0)?;
        self.pole_factor(-1.0)?;
        Ok(())
    }
}

/// Lax pair at one spectral value and parameter set, per site.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxSample {
    pub zeta: SpectralValue,
    pub params: ModelParams,
    pub l_plus: CField,
    pub l_minus: CField,
}

impl LaxSample {
    pub fn n_sigma(&self) -> usize {
        self.l_plus.ncols()
    }

    pub fn max_norm(&self) -> f64 {
        let m = |f: &CField| f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        m(&self.l_plus).max(m(&self.l_minus))
    }
}

/// A family of Lax connections evaluated pointwise from `(g, A_+, A_-)`.
pub trait LaxPair: Send + Sync {
    fn name(&self) -> &'static str;

    fn params(&self) -> ModelParams;

    /// `(L_+, L_-)` at one site.
    fn at_point(&self, ctx: &LieContext, pt: &FieldPoint, zeta: SpectralValue) -> Result<(CVec, CVec)>;
}

/// Evaluates `pair` at every site.
pub fn lax_field(
    pair: &dyn LaxPair,
    ctx: &LieContext,
    points: &[FieldPoint],
    zeta: SpectralValue,
) -> Result<LaxSample> {
    let cols: Vec<(CVec, CVec)> = points
        .par_iter()
        .map(|p| pair.at_point(ctx, p, zeta))
        .collect::<Result<_>>()?;
    let d = ctx.dim();
    let mut l_plus = CField::zeros(d, points.len());
    let mut l_minus = CField::zeros(d, points.len());
    for (j, (p, m)) in cols.into_iter().enumerate() {
        l_plus.set_column(j, &p);
        l_minus.set_column(j, &m);
    }
    Ok(LaxSample {
        zeta,
        params: pair.params(),
        l_plus,
        l_minus,
    })
}

pub type LaxCtor = fn(ModelParams) -> Box<dyn LaxPair>;

/// Registered Lax connections. The one-parameter forms read `alpha`
/// (`yb-dressed`) or `beta` (`yb-undressed`) from the parameters.
pub fn lax_registry() -> Registry<LaxCtor> {
    let mut reg: Registry<LaxCtor> = Registry::new("lax pair");
    reg.register("bi-yang-baxter", |p| Box::new(BiYangBaxter::new(p)))
        .register("perturbed-bi-yang-baxter", |p| {
            Box::new(BiYangBaxter::perturbed(p))
        })
        .register("zakharov-mikhailov", |_| Box::new(ZakharovMikhailov))
        .register("yb-dressed", |p| Box::new(YbDressed { alpha: p.alpha }))
        .register("yb-undressed", |p| Box::new(YbUndressed { beta: p.beta }));
    reg
}

/// The operators `M_± = beta (R - i) + (k i beta ± c) / (1 ± zeta)` with
/// `L_± = M_± J_±`; `k = 2` is the bi-Yang-Baxter pair, other values give
/// deliberately wrong controls.
#[derive(Clone, Copy, Debug)]
pub struct LaxMultiplier {
    pub beta: f64,
    pub s_plus: Complex64,
    pub s_minus: Complex64,
}

impl LaxMultiplier {
    pub fn new(params: &ModelParams, zeta: SpectralValue, k: f64) -> Result<Self> {
        let c = params.c();
        let ib = Complex64::new(0.0, k * params.beta);
        Ok(Self {
            beta: params.beta,
            s_plus: (ib + c) * zeta.pole_factor(1.0)?,
            s_minus: (ib - c) * zeta.pole_factor(-1.0)?,
        })
    }

    pub fn apply(&self, ctx: &LieContext, sign: f64, x: &CVec) -> CVec {
        let s = if sign > 0.0 { self.s_plus } else { self.s_minus };
        let rx = ctx.apply_r_c(x);
        let ib = Complex64::new(0.0, self.beta);
        rx * Complex64::new(self.beta, 0.0) - x * ib + x * s
    }

    pub fn apply_real(&self, ctx: &LieContext, sign: f64, x: &RVec) -> CVec {
        self.apply(ctx, sign, &x.map(|v| Complex64::new(v, 0.0)))
    }

    fn apply_field(&self, ctx: &LieContext, sign: f64, x: &RMat) -> CField {
        let mut out = CField::zeros(x.nrows(), x.ncols());
        for j in 0..x.ncols() {
            out.set_column(j, &self.apply_real(ctx, sign, &x.column(j).into_owned()));
        }
        out
    }
}

/// Bi-Yang-Baxter Lax pair from stored currents: `L_± = M_± J_±`.
pub fn bi_yb_lax(
    ctx: &LieContext,
    params: &ModelParams,
    state: &FieldState,
    zeta: SpectralValue,
) -> Result<LaxSample> {
    zeta.check()?;
    let m = LaxMultiplier::new(params, zeta, 2.0)?;
    Ok(LaxSample {
        zeta,
        params: *params,
        l_plus: m.apply_field(ctx, 1.0, &state.j_plus),
        l_minus: m.apply_field(ctx, -1.0, &state.j_minus),
    })
}

fn bracket_fields(ctx: &LieContext, x: &CField, y: &CField) -> CField {
    let mut out = CField::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let xj: Vec<Complex64> = x.column(j).iter().copied().collect();
        let yj: Vec<Complex64> = y.column(j).iter().copied().collect();
        out.set_column(j, &ctx.basis.bracket_coeffs_c(&xj, &yj));
    }
    out
}

/// Curvature of `L_± = M_± J_±` with derivatives taken from `jet`.
pub fn jet_curvature(ctx: &LieContext, m: &LaxMultiplier, jet: &CurrentJet) -> CField {
    let lp = m.apply_field(ctx, 1.0, &jet.j_plus);
    let lm = m.apply_field(ctx, -1.0, &jet.j_minus);
    m.apply_field(ctx, -1.0, &jet.dplus_jminus) - m.apply_field(ctx, 1.0, &jet.dminus_jplus)
        + bracket_fields(ctx, &lm, &lp)
}

/// Curvature of the bi-Yang-Baxter pair (`k = 2`) or of a perturbed control.
pub fn lax_curvature(
    ctx: &LieContext,
    params: &ModelParams,
    jet: &CurrentJet,
    zeta: SpectralValue,
    k: f64,
) -> Result<CField> {
    zeta.check()?;
    Ok(jet_curvature(ctx, &LaxMultiplier::new(params, zeta, k)?, jet))
}

/// Max-norm of `curvature - (M_+ V_- + M_- V_+)` for an arbitrary jet.
pub fn offshell_curvature_identity(
    ctx: &LieContext,
    params: &ModelParams,
    jet: &CurrentJet,
    zeta: SpectralValue,
) -> Result<f64> {
    zeta.check()?;
    let m = LaxMultiplier::new(params, zeta, 2.0)?;
    let curv = jet_curvature(ctx, &m, jet);
    let (vp, vm) = v_residuals(ctx, params, jet);
    let rhs = m.apply_field(ctx, 1.0, &vm) + m.apply_field(ctx, -1.0, &vp);
    Ok(max_norm(&(curv - rhs)))
}

pub fn max_norm(f: &CField) -> f64 {
    f.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Curvature of sampled Lax fields: σ-derivatives spectral, τ-derivatives by
/// centred differences over `window` (`2 h + 1` samples spaced by `dt`).
pub fn curvature_from_samples(
    ctx: &LieContext,
    grid: &PeriodicGrid,
    window: &[LaxSample],
    dt: f64,
    stencil: Stencil,
) -> Result<CField> {
    let h = stencil.half_width();
    if window.len() != 2 * h + 1 {
        return Err(Error::InvalidDimension(format!(
            "τ window has {} samples, stencil needs {}",
            window.len(),
            2 * h + 1
        )));
    }
    let w = stencil.weights();
    let centre = &window[h];
    let (d, n) = centre.l_plus.shape();
    let mut dtp = CField::zeros(d, n);
    let mut dtm = CField::zeros(d, n);
    for (s, &c) in window.iter().zip(w) {
        if c != 0.0 {
            let c = Complex64::new(c / dt, 0.0);
            dtp += &s.l_plus * c;
            dtm += &s.l_minus * c;
        }
    }
    let dsp = grid.derivative_rows_c(&centre.l_plus);
    let dsm = grid.derivative_rows_c(&centre.l_minus);
    let half = Complex64::new(0.5, 0.0);
    let dplus_lminus = (dtm + dsm) * half;
    let dminus_lplus = (dtp - dsp) * half;
    Ok(dplus_lminus - dminus_lplus + bracket_fields(ctx, &centre.l_minus, &centre.l_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_jet(dim: usize, n: usize, rng: &mut ChaCha8Rng) -> CurrentJet {
        let mut r = || RMat::from_fn(dim, n, |_, _| rng.random_range(-1.0..1.0));
        CurrentJet {
            j_plus: r(),
            j_minus: r(),
            dplus_jminus: r(),
            dminus_jplus: r(),
        }
    }

    #[test]
    fn offshell_identity_holds_for_random_jets() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2, 3] {
            let ctx = LieContext::su(n).unwrap();
            for (a, b) in [(0.3, 0.2), (0.5, 0.5), (0.0, 0.7)] {
                let p = ModelParams::new(a, b).unwrap();
                let jet = random_jet(ctx.dim(), 4, &mut rng);
                for zeta in [
                    SpectralValue::new(0.3, 0.4),
                    SpectralValue::new(-2.0, 0.1),
                    SpectralValue::Infinity,
                ] {
                    let d = offshell_curvature_identity(&ctx, &p, &jet, zeta).unwrap();
                    assert!(d < 1e-12, "n={n} {a} {b} {zeta}: {d}");
                }
            }
        }
    }

    #[test]
    fn perturbed_pair_breaks_identity() {
        let ctx = LieContext::su(2).unwrap();
        let p = ModelParams::new(0.3, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut jet = random_jet(3, 4, &mut rng);
        // make it on-shell pointwise by solving V_± = 0 for the derivatives
        let rjp = &ctx.r.matrix * &jet.j_plus;
        let rjm = &ctx.r.matrix * &jet.j_minus;
        let comm = crate::model::bracket_columns(&ctx.basis, &jet.j_minus, &jet.j_plus) * (0.5 * p.c());
        jet.dminus_jplus =
            crate::model::bracket_columns(&ctx.basis, &jet.j_plus, &rjm) * (-p.beta) - &comm;
        jet.dplus_jminus =
            crate::model::bracket_columns(&ctx.basis, &jet.j_minus, &rjp) * (-p.beta) - &comm;
        let z = SpectralValue::new(0.5, 0.0);
        assert!(max_norm(&lax_curvature(&ctx, &p, &jet, z, 2.0).unwrap()) < 1e-14);
        assert!(max_norm(&lax_curvature(&ctx, &p, &jet, z, 3.0).unwrap()) > 1e-3);
    }

    #[test]
    fn poles_are_rejected() {
        assert!(SpectralValue::real(1.0).check().is_err());
        assert!(SpectralValue::new(-1.0, 1e-7).check().is_err());
        assert!(SpectralValue::new(-1.0, 1e-5).check().is_ok());
        assert!(SpectralValue::Infinity.check().is_ok());
    }

    #[test]
    fn registry_lists_pairs() {
        let reg = lax_registry();
        assert!(reg.contains("bi-yang-baxter"));
        assert!(reg.get("nope").is_err());
        let pair = (reg.get("zakharov-mikhailov").unwrap())(ModelParams::pcm());
        assert_eq!(pair.name(), "zakharov-mikhailov");
    }
}
