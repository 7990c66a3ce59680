use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::currents::currents_from_point;
use super::{FieldPoint, FieldState, SigmaModel};
use crate::algebra::{CMat, RMat, RVec};
use crate::error::{Error, Result};
use crate::group::{inverse, matrix_exp};

/// Band-limited random initial data: `g(sigma, 0) = exp X(sigma)` and a free
/// velocity profile `g^-1 d_tau g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialDataSpec {
    pub seed: u64,
    pub modes: usize,
    pub amplitude: f64,
    pub velocity_amplitude: f64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            modes: 2,
            amplitude: 0.5,
            velocity_amplitude: 0.5,
        }
    }
}

/// Random profile `sum_k (a_k cos k s + b_k sin k s) / k` per coefficient.
fn profile(rng: &mut ChaCha8Rng, dim: usize, modes: usize, amp: f64, n: usize) -> RMat {
    let mut out = RMat::zeros(dim, n);
    for a in 0..dim {
        for k in 1..=modes {
            let c: f64 = rng.random_range(-1.0..1.0);
            let s: f64 = rng.random_range(-1.0..1.0);
            for j in 0..n {
                let x = 2.0 * PI * k as f64 * j as f64 / n as f64;
                out[(a, j)] += amp * (c * x.cos() + s * x.sin()) / k as f64;
            }
        }
    }
    out
}

impl SigmaModel {
    pub fn make_initial_data(&self, spec: &InitialDataSpec) -> Result<FieldState> {
        let n = self.sheet.n_sigma;
        let limit = n / 4;
        if spec.modes > limit {
            return Err(Error::Aliasing {
                modes: spec.modes,
                limit,
                n_sigma: n,
            });
        }
        let d = self.ctx.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let x = profile(&mut rng, d, spec.modes, spec.amplitude, n);
        let v = profile(&mut rng, d, spec.modes, spec.velocity_amplitude, n);
        let g: Vec<CMat> = (0..n)
            .map(|j| matrix_exp(&self.ctx.basis.to_matrix(x.column(j).as_slice())))
            .collect();
        self.state_from_profiles(0.0, g, &v)
    }

    /// State from `g(sigma)` and the velocity profile `P = g^-1 d_tau g`;
    /// `Q = g^-1 d_sigma g` is computed spectrally.
    pub fn state_from_profiles(&self, tau: f64, g: Vec<CMat>, velocity: &RMat) -> Result<FieldState> {
        let n = self.sheet.n_sigma;
        if g.len() != n || velocity.ncols() != n {
            return Err(Error::InvalidDimension(format!(
                "profiles have {} / {} sites, grid {n}",
                g.len(),
                velocity.ncols()
            )));
        }
        let dg = self.grid.derivative_matrices(&g);
        let d = self.ctx.dim();
        let mut j_plus = RMat::zeros(d, n);
        let mut j_minus = RMat::zeros(d, n);
        for j in 0..n {
            let q = self.ctx.basis.real_coeffs(&(inverse(&g[j]) * &dg[j]));
            let p: RVec = velocity.column(j).into_owned();
            let pt = FieldPoint {
                g: g[j].clone(),
                a_plus: (&p + &q) * 0.5,
                a_minus: (&p - &q) * 0.5,
            };
            let (jp, jm) = currents_from_point(&self.ctx, &self.params, &pt, j)?;
            j_plus.set_column(j, &jp);
            j_minus.set_column(j, &jm);
        }
        Ok(FieldState {
            tau,
            g,
            j_plus,
            j_minus,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieContext;
    use crate::model::{ModelParams, Worldsheet};

    fn model() -> SigmaModel {
        SigmaModel::new(
            LieContext::su(2).unwrap(),
            ModelParams::new(0.3, 0.2).unwrap(),
            Worldsheet::new(32, 2.0 * PI, 2.0 / 32.0).unwrap(),
        )
    }

    #[test]
    fn zero_amplitude_is_vacuum() {
        let m = model();
        let spec = InitialDataSpec {
            amplitude: 0.0,
            velocity_amplitude: 0.0,
            ..Default::default()
        };
        let s = m.make_initial_data(&spec).unwrap();
        assert_eq!(s, FieldState::vacuum(&m.ctx, 32));
    }

    #[test]
    fn deterministic_and_consistent() {
        let m = model();
        let spec = InitialDataSpec {
            amplitude: 0.1,
            ..Default::default()
        };
        let a = m.make_initial_data(&spec).unwrap();
        let b = m.make_initial_data(&spec).unwrap();
        assert_eq!(a, b);
        assert!(m.constraint_drift(&a).unwrap() <= 1e-12);
    }

    #[test]
    fn too_many_modes_alias() {
        let m = model();
        let spec = InitialDataSpec {
            modes: 9,
            ..Default::default()
        };
        assert!(matches!(m.make_initial_data(&spec), Err(Error::Aliasing { .. })));
    }
}
