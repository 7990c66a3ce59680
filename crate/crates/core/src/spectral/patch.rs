use std::ops::Range;

use num_complex::Complex64;

use crate::algebra::{CMat, LieContext, MaxAbs, RMat, RVec};
use crate::error::{Error, Result};
use crate::group::inverse;
use crate::model::{
    bianchi_residual, currents_from_point, eom_residual, invert_point, CurrentJet, FieldPoint,
    History, ModelParams, SigmaModel, Stencil,
};

/// Field data on a rectangular block of the cut cylinder: `rows[k][j]` sits
/// at `tau0 + k dt`, `sigma = j dsigma`. No periodicity is assumed.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub tau0: f64,
    pub dt: f64,
    pub dsigma: f64,
    pub rows: Vec<Vec<FieldPoint>>,
}

impl Patch {
    pub fn from_history(model: &SigmaModel, history: &History, levels: Range<usize>) -> Result<Self> {
        if levels.end > history.len() || levels.is_empty() {
            return Err(Error::InvalidDimension(format!(
                "levels {levels:?} outside history of length {}",
                history.len()
            )));
        }
        Ok(Self {
            tau0: history.states[levels.start].tau,
            dt: history.dt,
            dsigma: model.sheet.dsigma(),
            rows: history.states[levels]
                .iter()
                .map(|s| model.field_points(s))
                .collect(),
        })
    }

    pub fn n_tau(&self) -> usize {
        self.rows.len()
    }

    pub fn n_sigma(&self) -> usize {
        self.rows[0].len()
    }

    pub fn at(&self, k: usize, j: usize) -> &FieldPoint {
        &self.rows[k][j]
    }

    /// Pointwise `g -> g^-1`.
    pub fn inverted(&self, ctx: &LieContext) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|p| invert_point(ctx, p)).collect())
                .collect(),
            ..self.clone()
        }
    }

    /// Row and column ranges where centred `stencil` derivatives exist.
    pub fn interior(&self, stencil: Stencil) -> (Range<usize>, Range<usize>) {
        let h = stencil.half_width();
        (
            h..self.n_tau().saturating_sub(h),
            h..self.n_sigma().saturating_sub(h),
        )
    }

    pub fn check_interior(&self, stencil: Stencil) -> Result<()> {
        let (rk, rj) = self.interior(stencil);
        if rk.is_empty() || rj.is_empty() {
            return Err(Error::InvalidDimension(format!(
                "patch {}x{} too small for the {stencil:?} stencil",
                self.n_tau(),
                self.n_sigma()
            )));
        }
        Ok(())
    }
}

/// Centred derivatives at `(k, j)` of a lattice function, along τ and σ.
pub(crate) fn centred<T, F>(f: F, k: usize, j: usize, stencil: Stencil, dt: f64, ds: f64) -> (T, T)
where
    F: Fn(usize, usize) -> T,
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let h = stencil.half_width();
    let w = stencil.weights();
    let mut dtau: Option<T> = None;
    let mut dsig: Option<T> = None;
    for (i, &c) in w.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let a = f(k + i - h, j) * (c / dt);
        let b = f(k, j + i - h) * (c / ds);
        dtau = Some(match dtau {
            Some(x) => x + a,
            None => a,
        });
        dsig = Some(match dsig {
            Some(x) => x + b,
            None => b,
        });
    }
    (dtau.expect("non-empty stencil"), dsig.expect("non-empty stencil"))
}

/// Newtype so complex matrices can be scaled by `f64` in [`centred`].
#[derive(Clone)]
pub(crate) struct M(pub CMat);

impl std::ops::Add for M {
    type Output = M;
    fn add(self, o: M) -> M {
        M(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for M {
    type Output = M;
    fn mul(self, s: f64) -> M {
        M(self.0 * Complex64::new(s, 0.0))
    }
}

/// `(X^-1 d_tau X, X^-1 d_sigma X)` of a matrix lattice at `(k, j)`.
pub(crate) fn left_currents_fd(
    field: &[Vec<CMat>],
    k: usize,
    j: usize,
    stencil: Stencil,
    dt: f64,
    ds: f64,
) -> (CMat, CMat) {
    let (a, b) = centred(|kk, jj| M(field[kk][jj].clone()), k, j, stencil, dt, ds);
    let inv = inverse(&field[k][j]);
    (&inv * a.0, &inv * b.0)
}

/// `(d_tau X X^-1, d_sigma X X^-1)` at `(k, j)`.
pub(crate) fn right_currents_fd(
    field: &[Vec<CMat>],
    k: usize,
    j: usize,
    stencil: Stencil,
    dt: f64,
    ds: f64,
) -> (CMat, CMat) {
    let (a, b) = centred(|kk, jj| M(field[kk][jj].clone()), k, j, stencil, dt, ds);
    let inv = inverse(&field[k][j]);
    (a.0 * &inv, b.0 * &inv)
}

/// Light-cone components from τ/σ components: `X_± = (X_tau ± X_sigma) / 2`.
pub(crate) fn light_cone(tau: RVec, sigma: RVec) -> (RVec, RVec) {
    ((&tau + &sigma) * 0.5, (&tau - &sigma) * 0.5)
}

/// Currents of every patch point for the given parameters.
pub fn patch_currents(
    ctx: &LieContext,
    params: &ModelParams,
    patch: &Patch,
) -> Result<Vec<Vec<(RVec, RVec)>>> {
    patch
        .rows
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, p)| currents_from_point(ctx, params, p, j))
                .collect()
        })
        .collect()
}

#[derive(Clone)]
struct V(RVec);

impl std::ops::Add for V {
    type Output = V;
    fn add(self, o: V) -> V {
        V(self.0 + o.0)
    }
}

impl std::ops::Mul<f64> for V {
    type Output = V;
    fn mul(self, s: f64) -> V {
        V(self.0 * s)
    }
}

/// Jet on the interior columns of row `k`, all derivatives by centred
/// differences on the patch.
pub fn patch_jet(
    currents: &[Vec<(RVec, RVec)>],
    patch: &Patch,
    k: usize,
    stencil: Stencil,
) -> CurrentJet {
    let (_, cols) = patch.interior(stencil);
    let dim = currents[0][0].0.len();
    let width = cols.len();
    let mut jet = CurrentJet::zeros(dim, width);
    let mut tmp = [RMat::zeros(dim, width), RMat::zeros(dim, width), RMat::zeros(dim, width), RMat::zeros(dim, width)];
    for (c, j) in cols.enumerate() {
        let (tp, sp) = centred(|a, b| V(currents[a][b].0.clone()), k, j, stencil, patch.dt, patch.dsigma);
        let (tm, sm) = centred(|a, b| V(currents[a][b].1.clone()), k, j, stencil, patch.dt, patch.dsigma);
        jet.j_plus.set_column(c, &currents[k][j].0);
        jet.j_minus.set_column(c, &currents[k][j].1);
        tmp[0].set_column(c, &tp.0);
        tmp[1].set_column(c, &tm.0);
        tmp[2].set_column(c, &sp.0);
        tmp[3].set_column(c, &sm.0);
    }
    let [tp, tm, sp, sm] = tmp;
    CurrentJet::from_tau_sigma(jet.j_plus, jet.j_minus, &tp, &tm, &sp, &sm)
}

/// Max-norm field-equation and Bianchi residuals over the patch interior.
pub fn patch_residuals(
    ctx: &LieContext,
    params: &ModelParams,
    patch: &Patch,
    stencil: Stencil,
) -> Result<(f64, f64)> {
    patch.check_interior(stencil)?;
    let currents = patch_currents(ctx, params, patch)?;
    let (rows, _) = patch.interior(stencil);
    let mut eom: f64 = 0.0;
    let mut bianchi: f64 = 0.0;
    for k in rows {
        let jet = patch_jet(&currents, patch, k, stencil);
        eom = eom.max(eom_residual(ctx, params, &jet).max_abs());
        bianchi = bianchi.max(bianchi_residual(ctx, params, &jet).max_abs());
    }
    Ok((eom, bianchi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_difference_of_quadratic() {
        // f(k, j) = (k dt)^2 + 3 j ds
        let (dt, ds) = (0.1, 0.2);
        let f = |k: usize, j: usize| V(RVec::from_element(1, (k as f64 * dt).powi(2) + 3.0 * j as f64 * ds));
        for s in [Stencil::Second, Stencil::Fourth] {
            let (a, b) = centred(f, 3, 3, s, dt, ds);
            assert!((a.0[0] - 2.0 * 3.0 * dt).abs() < 1e-12);
            assert!((b.0[0] - 3.0).abs() < 1e-12);
        }
    }
}
