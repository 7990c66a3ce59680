//! The bi-Yang-Baxter sigma-model on a σ-periodic lattice.
//!
//! Light-cone convention: `xi_± = tau ± sigma`, `d_± = (d_tau ± d_sigma) / 2`.
//! Currents are `J_± = ∓(I ± alpha R_g ± beta R)^-1 g^-1 d_± g`; the field
//! equations and Bianchi identities are `V_+ + V_- = 0` and `V_+ - V_- = 0`
//! with
//!
//! ```text
//! V_± = ± d_± J_∓ ± beta [J_∓, R J_±] ± (1 + alpha^2 - beta^2)/2 [J_-, J_+]
//! ```

mod currents;
mod evolve;
mod initial;
mod residual;
pub mod snapshot;

pub use currents::{
    action_density, constraint_drift, currents_from_g, currents_from_point, deformation_matrix,
    field_points, invert_point, invert_solution, point_from_currents,
};
pub(crate) use currents::solve_checked;
pub use evolve::{History, StepStats, REPROJECTION_THRESHOLD};
pub use initial::InitialDataSpec;
pub use residual::{
    bianchi_residual, bracket_columns, eom_residual, jet_from_current_history, jet_from_g_history, v_residuals,
    CurrentJet, Stencil,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, LieContext, RMat, RVec};
use crate::error::{Error, Result};
use crate::fourier::PeriodicGrid;

/// Upper bound on |alpha|, |beta| accepted by [`ModelParams::new`].
pub const MAX_DEFORMATION: f64 = 5.0;
/// Smallest admissible singular value of `I ± alpha R_g ± beta R`.
pub const INVERTIBILITY_FLOOR: f64 = 1e-8;
pub const DEFAULT_CFL: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !v.is_finite() || v < 0.0 || v > MAX_DEFORMATION {
                return Err(Error::InvalidParameters(format!(
                    "{name}={v} outside [0, {MAX_DEFORMATION}]"
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn pcm() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }

    /// `1 + alpha^2 - beta^2`.
    pub fn c(&self) -> f64 {
        1.0 + self.alpha * self.alpha - self.beta * self.beta
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Worldsheet {
    pub n_sigma: usize,
    pub length: f64,
    pub dt: f64,
    pub cfl: f64,
}

impl Worldsheet {
    pub fn new(n_sigma: usize, length: f64, dt: f64) -> Result<Self> {
        Self::with_cfl(n_sigma, length, dt, DEFAULT_CFL)
    }

    pub fn with_cfl(n_sigma: usize, length: f64, dt: f64, cfl: f64) -> Result<Self> {
        if n_sigma < 8 || !n_sigma.is_power_of_two() {
            return Err(Error::InvalidWorldsheet(format!(
                "n_sigma={n_sigma} must be a power of two >= 8"
            )));
        }
        if !(length > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidWorldsheet(
                "length and dt must be positive".into(),
            ));
        }
        let limit = cfl * length / n_sigma as f64;
        if dt > limit {
            return Err(Error::InvalidWorldsheet(format!(
                "dt={dt} violates CFL bound {limit}"
            )));
        }
        Ok(Self {
            n_sigma,
            length,
            dt,
            cfl,
        })
    }

    pub fn dsigma(&self) -> f64 {
        self.length / self.n_sigma as f64
    }
}

/// Lattice snapshot at fixed `tau`. Currents are stored column-per-site.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub tau: f64,
    pub g: Vec<CMat>,
    pub j_plus: RMat,
    pub j_minus: RMat,
}

impl FieldState {
    pub fn vacuum(ctx: &LieContext, n_sigma: usize) -> Self {
        let n = ctx.n();
        Self {
            tau: 0.0,
            g: vec![CMat::identity(n, n); n_sigma],
            j_plus: DMatrix::zeros(ctx.dim(), n_sigma),
            j_minus: DMatrix::zeros(ctx.dim(), n_sigma),
        }
    }

    pub fn n_sigma(&self) -> usize {
        self.g.len()
    }

    pub fn j_plus_at(&self, site: usize) -> RVec {
        self.j_plus.column(site).into_owned()
    }

    pub fn j_minus_at(&self, site: usize) -> RVec {
        self.j_minus.column(site).into_owned()
    }
}

/// Pointwise field data: `g` and `A_± = g^-1 d_± g`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldPoint {
    pub g: CMat,
    pub a_plus: RVec,
    pub a_minus: RVec,
}

/// A configured model: algebra, deformation parameters and lattice.
#[derive(Clone, Debug)]
pub struct SigmaModel {
    pub ctx: LieContext,
    pub params: ModelParams,
    pub sheet: Worldsheet,
    pub grid: PeriodicGrid,
}

impl SigmaModel {
    pub fn new(ctx: LieContext, params: ModelParams, sheet: Worldsheet) -> Self {
        let grid = PeriodicGrid::new(sheet.n_sigma, sheet.length);
        Self {
            ctx,
            params,
            sheet,
            grid,
        }
    }

    pub fn with_params(&self, params: ModelParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn currents_from_g(&self, g: &[CMat], dtau_g: &[CMat]) -> Result<(RMat, RMat)> {
        currents_from_g(&self.ctx, &self.params, &self.grid, g, dtau_g)
    }

    pub fn field_points(&self, state: &FieldState) -> Vec<FieldPoint> {
        field_points(&self.ctx, &self.params, state)
    }

    pub fn constraint_drift(&self, state: &FieldState) -> Result<f64> {
        constraint_drift(&self.ctx, &self.params, &self.grid, state)
    }

    pub fn eom_residual(&self, jet: &CurrentJet) -> RMat {
        eom_residual(&self.ctx, &self.params, jet)
    }

    pub fn bianchi_residual(&self, jet: &CurrentJet) -> RMat {
        bianchi_residual(&self.ctx, &self.params, jet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.3, 0.2).is_ok());
        assert!(ModelParams::new(-0.1, 0.2).is_err());
        assert!(ModelParams::new(0.1, 6.0).is_err());
        assert!(ModelParams::new(f64::NAN, 0.0).is_err());
        let p = ModelParams::new(0.3, 0.2).unwrap();
        assert_eq!(p.swapped(), ModelParams::new(0.2, 0.3).unwrap());
        assert!((p.c() - (1.0 + 0.09 - 0.04)).abs() < 1e-15);
    }

    #[test]
    fn worldsheet_validation() {
        let l = 2.0 * std::f64::consts::PI;
        assert!(Worldsheet::new(64, l, 2.0 / 64.0).is_ok());
        assert!(Worldsheet::new(48, l, 0.01).is_err());
        assert!(Worldsheet::new(4, l, 0.01).is_err());
        assert!(Worldsheet::new(64, l, 0.1).is_err());
    }
}
