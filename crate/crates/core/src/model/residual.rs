use rayon::prelude::*;

use super::{FieldState, ModelParams, SigmaModel};
use crate::algebra::{BasisSpec, CMat, LieContext, RMat};
use crate::error::{Error, Result};
use crate::fourier::PeriodicGrid;

/// Currents together with the light-cone derivatives entering `V_±`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentJet {
    pub j_plus: RMat,
    pub j_minus: RMat,
    /// `d_+ J_-`
    pub dplus_jminus: RMat,
    /// `d_- J_+`
    pub dminus_jplus: RMat,
}

impl CurrentJet {
    pub fn from_tau_sigma(
        j_plus: RMat,
        j_minus: RMat,
        dtau_plus: &RMat,
        dtau_minus: &RMat,
        dsigma_plus: &RMat,
        dsigma_minus: &RMat,
    ) -> Self {
        Self {
            j_plus,
            j_minus,
            dplus_jminus: (dtau_minus + dsigma_minus) * 0.5,
            dminus_jplus: (dtau_plus - dsigma_plus) * 0.5,
        }
    }

    pub fn zeros(dim: usize, n_sigma: usize) -> Self {
        let z = RMat::zeros(dim, n_sigma);
        Self {
            j_plus: z.clone(),
            j_minus: z.clone(),
            dplus_jminus: z.clone(),
            dminus_jplus: z,
        }
    }

    pub fn n_sigma(&self) -> usize {
        self.j_plus.ncols()
    }
}

/// Site-wise bracket of two coefficient fields.
pub fn bracket_columns(basis: &BasisSpec, x: &RMat, y: &RMat) -> RMat {
    let mut out = RMat::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let xj: Vec<f64> = x.column(j).iter().copied().collect();
        let yj: Vec<f64> = y.column(j).iter().copied().collect();
        out.set_column(j, &basis.bracket_coeffs(&xj, &yj));
    }
    out
}

/// `(V_+, V_-)` site by site.
pub fn v_residuals(ctx: &LieContext, params: &ModelParams, jet: &CurrentJet) -> (RMat, RMat) {
    let basis = &ctx.basis;
    let rjp = &ctx.r.matrix * &jet.j_plus;
    let rjm = &ctx.r.matrix * &jet.j_minus;
    let comm = bracket_columns(basis, &jet.j_minus, &jet.j_plus) * (0.5 * params.c());
    let v_plus = &jet.dplus_jminus
        + bracket_columns(basis, &jet.j_minus, &rjp) * params.beta
        + &comm;
    let v_minus = -&jet.dminus_jplus - bracket_columns(basis, &jet.j_plus, &rjm) * params.beta
        - &comm;
    (v_plus, v_minus)
}

/// `V_+ + V_-`: the field equations.
pub fn eom_residual(ctx: &LieContext, params: &ModelParams, jet: &CurrentJet) -> RMat {
    let (p, m) = v_residuals(ctx, params, jet);
    p + m
}

/// `V_+ - V_-`: the Bianchi identity.
pub fn bianchi_residual(ctx: &LieContext, params: &ModelParams, jet: &CurrentJet) -> RMat {
    let (p, m) = v_residuals(ctx, params, jet);
    p - m
}

/// Centred first-derivative stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Second,
    Fourth,
}

impl Stencil {
    pub fn half_width(self) -> usize {
        match self {
            Stencil::Second => 1,
            Stencil::Fourth => 2,
        }
    }

    /// Weights for offsets `-h..=h`.
    pub fn weights(self) -> &'static [f64] {
        match self {
            Stencil::Second => &[-0.5, 0.0, 0.5],
            Stencil::Fourth => &[1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0],
        }
    }

    /// Number of consecutive levels needed by [`jet_from_g_history`].
    pub fn g_window(self) -> usize {
        4 * self.half_width() + 1
    }
}

fn check_window(len: usize, need: usize) -> Result<()> {
    if len != need {
        return Err(Error::InvalidDimension(format!(
            "τ window has {len} levels, stencil needs {need}"
        )));
    }
    Ok(())
}

fn fd_matrices(window: &[CMat], w: &[f64], inv_dt: f64) -> CMat {
    let mut out = CMat::zeros(window[0].nrows(), window[0].ncols());
    for (m, &c) in window.iter().zip(w) {
        if c != 0.0 {
            out += m * num_complex::Complex64::new(c * inv_dt, 0.0);
        }
    }
    out
}

fn fd_real(window: &[&RMat], w: &[f64], inv_dt: f64) -> RMat {
    let mut out = RMat::zeros(window[0].nrows(), window[0].ncols());
    for (m, &c) in window.iter().zip(w) {
        if c != 0.0 {
            out += *m * (c * inv_dt);
        }
    }
    out
}

/// Jet at the centre of `window` with every current recomputed from `g`:
/// τ-derivatives of `g` and of the resulting currents by centred differences,
/// σ-derivatives spectrally. `window` holds `stencil.g_window()` consecutive
/// levels spaced by `model.sheet.dt`.
pub fn jet_from_g_history(
    model: &SigmaModel,
    window: &[FieldState],
    stencil: Stencil,
) -> Result<CurrentJet> {
    check_window(window.len(), stencil.g_window())?;
    let h = stencil.half_width();
    let w = stencil.weights();
    let inv_dt = 1.0 / model.sheet.dt;
    let n = model.sheet.n_sigma;
    let currents: Vec<(RMat, RMat)> = (h..window.len() - h)
        .map(|m| {
            let dtau: Vec<CMat> = (0..n)
                .into_par_iter()
                .map(|j| {
                    let col: Vec<CMat> = (m - h..=m + h).map(|k| window[k].g[j].clone()).collect();
                    fd_matrices(&col, w, inv_dt)
                })
                .collect();
            model.currents_from_g(&window[m].g, &dtau)
        })
        .collect::<Result<_>>()?;
    let plus: Vec<&RMat> = currents.iter().map(|c| &c.0).collect();
    let minus: Vec<&RMat> = currents.iter().map(|c| &c.1).collect();
    let (jp, jm) = currents[h].clone();
    Ok(assemble(&model.grid, jp, jm, &plus, &minus, w, inv_dt))
}

/// Jet at the centre of `window` from the stored currents, τ-derivatives by
/// centred differences. `window` holds `2 h + 1` levels.
pub fn jet_from_current_history(
    grid: &PeriodicGrid,
    window: &[FieldState],
    dt: f64,
    stencil: Stencil,
) -> Result<CurrentJet> {
    let h = stencil.half_width();
    check_window(window.len(), 2 * h + 1)?;
    let plus: Vec<&RMat> = window.iter().map(|s| &s.j_plus).collect();
    let minus: Vec<&RMat> = window.iter().map(|s| &s.j_minus).collect();
    Ok(assemble(
        grid,
        window[h].j_plus.clone(),
        window[h].j_minus.clone(),
        &plus,
        &minus,
        stencil.weights(),
        1.0 / dt,
    ))
}

fn assemble(
    grid: &PeriodicGrid,
    jp: RMat,
    jm: RMat,
    plus: &[&RMat],
    minus: &[&RMat],
    w: &[f64],
    inv_dt: f64,
) -> CurrentJet {
    let dtp = fd_real(plus, w, inv_dt);
    let dtm = fd_real(minus, w, inv_dt);
    let dsp = grid.derivative_rows(&jp);
    let dsm = grid.derivative_rows(&jm);
    CurrentJet::from_tau_sigma(jp, jm, &dtp, &dtm, &dsp, &dsm)
}
