use log::{debug, info};
use rayon::prelude::*;

use super::currents::deformation_apply;
use super::residual::bracket_columns;
use super::{FieldState, SigmaModel};
use crate::algebra::{CMat, MaxAbs, RMat, RVec};
use crate::error::{Error, Result};
use crate::group::{det_defect, project_special_unitary, unitarity_defect};

/// Defect above which `g` is projected back onto SU(n).
pub const REPROJECTION_THRESHOLD: f64 = 1e-10;
const BLOWUP: f64 = 1e8;

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct StepStats {
    pub reprojections: usize,
    pub max_unitarity_defect: f64,
    pub max_det_defect: f64,
}

/// All levels of a run, spaced by the worldsheet time step.
#[derive(Clone, Debug)]
pub struct History {
    pub states: Vec<FieldState>,
    pub dt: f64,
    pub stats: StepStats,
}

impl History {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &FieldState {
        self.states.last().expect("history is never empty")
    }

    /// Index of the level closest to `tau`.
    pub fn level_at(&self, tau: f64) -> usize {
        let k = ((tau - self.states[0].tau) / self.dt).round().max(0.0) as usize;
        k.min(self.states.len() - 1)
    }

    /// `count` consecutive levels centred on `k`, if available.
    pub fn window(&self, k: usize, count: usize) -> Option<&[FieldState]> {
        let h = count / 2;
        if k < h || k + h >= self.states.len() {
            return None;
        }
        Some(&self.states[k - h..=k + h])
    }
}

struct Rate {
    j_plus: RMat,
    j_minus: RMat,
    g: Vec<CMat>,
}

impl SigmaModel {
    /// Time derivatives of `(J_+, J_-, g)`.
    fn rate(&self, jp: &RMat, jm: &RMat, g: &[CMat]) -> Rate {
        let basis = &self.ctx.basis;
        let p = &self.params;
        let rjp = &self.ctx.r.matrix * jp;
        let rjm = &self.ctx.r.matrix * jm;
        let comm = bracket_columns(basis, jm, jp) * (0.5 * p.c());
        // d_- J_+ and d_+ J_- from V_- = 0 and V_+ = 0
        let dm_jp = bracket_columns(basis, jp, &rjm) * (-p.beta) - &comm;
        let dp_jm = bracket_columns(basis, jm, &rjp) * (-p.beta) - &comm;
        let j_plus = self.grid.derivative_rows(jp) + dm_jp * 2.0;
        let j_minus = -self.grid.derivative_rows(jm) + dp_jm * 2.0;
        let g_rate = (0..g.len())
            .into_par_iter()
            .map(|j| {
                let a = self.tau_current(&g[j], &jp.column(j).into_owned(), &jm.column(j).into_owned());
                &g[j] * basis.to_matrix(a.as_slice())
            })
            .collect();
        Rate {
            j_plus,
            j_minus,
            g: g_rate,
        }
    }

    /// One classical RK4 step.
    pub fn step(&self, state: &FieldState) -> Result<(FieldState, StepStats)> {
        let dt = self.sheet.dt;
        let shift = |s: &FieldState, k: &Rate, h: f64| {
            (
                &s.j_plus + &k.j_plus * h,
                &s.j_minus + &k.j_minus * h,
                s.g.iter()
                    .zip(&k.g)
                    .map(|(a, b)| a + b * num_complex::Complex64::new(h, 0.0))
                    .collect::<Vec<_>>(),
            )
        };
        let k1 = self.rate(&state.j_plus, &state.j_minus, &state.g);
        let (p2, m2, g2) = shift(state, &k1, 0.5 * dt);
        let k2 = self.rate(&p2, &m2, &g2);
        let (p3, m3, g3) = shift(state, &k2, 0.5 * dt);
        let k3 = self.rate(&p3, &m3, &g3);
        let (p4, m4, g4) = shift(state, &k3, dt);
        let k4 = self.rate(&p4, &m4, &g4);

        let w = dt / 6.0;
        let j_plus = &state.j_plus
            + (&k1.j_plus + &k2.j_plus * 2.0 + &k3.j_plus * 2.0 + &k4.j_plus) * w;
        let j_minus = &state.j_minus
            + (&k1.j_minus + &k2.j_minus * 2.0 + &k3.j_minus * 2.0 + &k4.j_minus) * w;
        let cw = num_complex::Complex64::new(w, 0.0);
        let two = num_complex::Complex64::new(2.0, 0.0);
        let mut g: Vec<CMat> = (0..state.g.len())
            .map(|j| &state.g[j] + (&k1.g[j] + &k2.g[j] * two + &k3.g[j] * two + &k4.g[j]) * cw)
            .collect();
        let tau = state.tau + dt;

        let blowup = |m: &RMat| m.iter().any(|v| !v.is_finite()) || m.max_abs() > BLOWUP;
        if blowup(&j_plus) || blowup(&j_minus) {
            return Err(Error::Instability {
                tau,
                detail: format!(
                    "currents non-finite or above {BLOWUP:e} (max |J+|={:.3e}, |J-|={:.3e})",
                    j_plus.max_abs(),
                    j_minus.max_abs()
                ),
            });
        }

        let mut stats = StepStats::default();
        for (j, gj) in g.iter_mut().enumerate() {
            if gj.iter().any(|z| !z.is_finite()) {
                return Err(Error::Instability {
                    tau,
                    detail: format!("non-finite group element at site {j}"),
                });
            }
            let u = unitarity_defect(gj);
            let d = det_defect(gj);
            stats.max_unitarity_defect = stats.max_unitarity_defect.max(u);
            stats.max_det_defect = stats.max_det_defect.max(d);
            if u.max(d) > REPROJECTION_THRESHOLD {
                *gj = project_special_unitary(gj);
                stats.reprojections += 1;
            }
        }
        if stats.reprojections > 0 {
            info!(
                "tau={tau:.6}: reprojected g onto SU(n) at {} sites (max unitarity defect {:.3e}, det defect {:.3e})",
                stats.reprojections, stats.max_unitarity_defect, stats.max_det_defect
            );
        }
        Ok((
            FieldState {
                tau,
                g,
                j_plus,
                j_minus,
            },
            stats,
        ))
    }

    /// Integrates to `tau + t_final` keeping every level.
    pub fn evolve(&self, initial: FieldState, t_final: f64) -> Result<History> {
        let steps = (t_final / self.sheet.dt).round() as usize;
        let mut states = Vec::with_capacity(steps + 1);
        let mut stats = StepStats::default();
        states.push(initial);
        for _ in 0..steps {
            let (next, s) = self.step(states.last().expect("non-empty"))?;
            stats.reprojections += s.reprojections;
            stats.max_unitarity_defect = stats.max_unitarity_defect.max(s.max_unitarity_defect);
            stats.max_det_defect = stats.max_det_defect.max(s.max_det_defect);
            states.push(next);
        }
        debug!(
            "evolved {steps} steps of dt={:.3e}: {} reprojections, max unitarity defect {:.3e}",
            self.sheet.dt, stats.reprojections, stats.max_unitarity_defect
        );
        Ok(History {
            states,
            dt: self.sheet.dt,
            stats,
        })
    }

    /// `A_+ + A_-` at one site from stored currents.
    pub fn tau_current(&self, g: &CMat, jp: &RVec, jm: &RVec) -> RVec {
        -deformation_apply(&self.ctx, &self.params, g, jp, 1.0)
            + deformation_apply(&self.ctx, &self.params, g, jm, -1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::LieContext;
    use crate::model::{ModelParams, Worldsheet};
    use std::f64::consts::PI;

    fn model(n: usize, alpha: f64, beta: f64) -> SigmaModel {
        SigmaModel::new(
            LieContext::su(2).unwrap(),
            ModelParams::new(alpha, beta).unwrap(),
            Worldsheet::new(n, 2.0 * PI, 2.0 / n as f64).unwrap(),
        )
    }

    #[test]
    fn vacuum_is_a_fixed_point() {
        let m = model(16, 0.3, 0.2);
        let s0 = FieldState::vacuum(&m.ctx, 16);
        let (s1, stats) = m.step(&s0).unwrap();
        assert_eq!(s1.g, s0.g);
        assert_eq!(s1.j_plus, s0.j_plus);
        assert_eq!(stats.reprojections, 0);
    }

    #[test]
    fn history_windows() {
        let m = model(16, 0.0, 0.0);
        let h = m.evolve(FieldState::vacuum(&m.ctx, 16), 0.5).unwrap();
        assert_eq!(h.len(), 5);
        assert!(h.window(0, 3).is_none());
        assert_eq!(h.window(2, 5).unwrap().len(), 5);
        assert!(h.window(3, 5).is_none());
        assert_eq!(h.level_at(0.25), 2);
    }
}
