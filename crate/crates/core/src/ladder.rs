//! Refinement ladders and fitted convergence orders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::algebra::{LieContext, MaxAbs};
use crate::error::{Error, Result};
use crate::lax::{bi_yb_lax, curvature_from_samples, max_norm, SpectralValue};
use crate::model::{
    jet_from_g_history, History, InitialDataSpec, ModelParams, SigmaModel, Stencil, Worldsheet,
};

/// Least-squares slope of `-log r` against `log n`: the observed order of
/// convergence for residuals `r` at resolutions `n`.
pub fn fit_order(ns: &[usize], residuals: &[f64]) -> Result<f64> {
    if ns.len() != residuals.len() || ns.len() < 2 {
        return Err(Error::InvalidDimension(format!(
            "need at least two (n, residual) pairs, got {} and {}",
            ns.len(),
            residuals.len()
        )));
    }
    if residuals.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
        return Err(Error::InvalidParameters(
            "residuals must be positive and finite to fit an order".into(),
        ));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = residuals.iter().map(|r| -r.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}

/// Run settings shared by every rung of a ladder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LadderSpec {
    pub levels: Vec<usize>,
    pub length: f64,
    /// `dt = courant * length / n_sigma`
    pub courant: f64,
    pub t_final: f64,
    pub initial: InitialDataSpec,
    pub stencil: Stencil,
    /// Spectral values for the curvature residual.
    pub zetas: Vec<(f64, f64)>,
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self {
            levels: vec![64, 128, 256],
            length: 2.0 * PI,
            courant: 1.0 / PI,
            t_final: 1.0,
            initial: InitialDataSpec::default(),
            stencil: Stencil::Fourth,
            zetas: vec![(0.5, 0.0), (0.0, 2.0), (-0.3, 0.4)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub n_sigma: usize,
    pub dt: f64,
    pub eom: f64,
    pub bianchi: f64,
    pub curvature: f64,
    pub constraint_drift: f64,
    pub reprojections: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderReport {
    pub rungs: Vec<Rung>,
    /// `None` when the residuals are exactly zero and carry no order.
    pub eom_order: Option<f64>,
    pub bianchi_order: Option<f64>,
    pub curvature_order: Option<f64>,
}

/// Residuals at the level nearest `tau` of a history.
pub fn residuals_at(
    model: &SigmaModel,
    history: &History,
    tau: f64,
    stencil: Stencil,
    zetas: &[SpectralValue],
) -> Result<(f64, f64, f64)> {
    let k = history.level_at(tau);
    let window = history
        .window(k, stencil.g_window())
        .ok_or_else(|| Error::InvalidDimension(format!("no τ window around level {k}")))?;
    let jet = jet_from_g_history(model, window, stencil)?;
    let eom = model.eom_residual(&jet).max_abs();
    let bianchi = model.bianchi_residual(&jet).max_abs();
    let stored = history
        .window(k, 2 * stencil.half_width() + 1)
        .expect("narrower than the g window");
    let mut curvature: f64 = 0.0;
    for &z in zetas {
        let samples = stored
            .iter()
            .map(|s| bi_yb_lax(&model.ctx, &model.params, s, z))
            .collect::<Result<Vec<_>>>()?;
        let f = curvature_from_samples(&model.ctx, &model.grid, &samples, history.dt, stencil)?;
        curvature = curvature.max(max_norm(&f));
    }
    Ok((eom, bianchi, curvature))
}

/// Evolves the same initial profile at every resolution and fits orders to
/// the mid-run residuals.
pub fn dynamics_ladder(ctx: &LieContext, params: ModelParams, spec: &LadderSpec) -> Result<LadderReport> {
    let zetas: Vec<SpectralValue> = spec.zetas.iter().map(|&(a, b)| SpectralValue::new(a, b)).collect();
    let rungs = spec
        .levels
        .iter()
        .map(|&n| {
            let dt = spec.courant * spec.length / n as f64;
            let model = SigmaModel::new(ctx.clone(), params, Worldsheet::new(n, spec.length, dt)?);
            let initial = model.make_initial_data(&spec.initial)?;
            let history = model.evolve(initial, spec.t_final)?;
            let (eom, bianchi, curvature) =
                residuals_at(&model, &history, 0.5 * spec.t_final, spec.stencil, &zetas)?;
            Ok(Rung {
                n_sigma: n,
                dt: history.dt,
                eom,
                bianchi,
                curvature,
                constraint_drift: model.constraint_drift(history.last())?,
                reprojections: history.stats.reprojections,
            })
        })
        .collect::<Result<Vec<Rung>>>()?;
    let ns: Vec<usize> = rungs.iter().map(|r| r.n_sigma).collect();
    let order = |f: fn(&Rung) -> f64| fit_order(&ns, &rungs.iter().map(f).collect::<Vec<_>>()).ok();
    Ok(LadderReport {
        eom_order: order(|r| r.eom),
        bianchi_order: order(|r| r.bianchi),
        curvature_order: order(|r| r.curvature),
        rungs,
    })
}
