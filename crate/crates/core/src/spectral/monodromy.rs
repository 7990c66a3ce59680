use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, LieContext};
use crate::error::{Error, Result};
use crate::fourier::PeriodicGrid;
use crate::lax::{lax_field, LaxPair, LaxSample, SpectralValue};
use crate::model::{History, SigmaModel};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyOptions {
    /// Relative change between successive refinements that counts as converged.
    pub tolerance: f64,
    pub start_substeps: usize,
    pub max_substeps: usize,
    /// Use every `stride`-th level of a history.
    pub stride: usize,
}

impl Default for MonodromyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            start_substeps: 2,
            max_substeps: 64,
            stride: 1,
        }
    }
}

fn norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Band-limited `L_sigma` on a grid refined by `factor`.
fn fine_connection(ctx: &LieContext, grid: &PeriodicGrid, sample: &LaxSample, factor: usize) -> Vec<CMat> {
    let n = ctx.n();
    let sites = sample.n_sigma();
    let coarse: Vec<CMat> = (0..sites)
        .map(|j| {
            let c = sample.l_plus.column(j) - sample.l_minus.column(j);
            ctx.basis.to_matrix_c(c.as_slice())
        })
        .collect();
    let mut fine = vec![CMat::zeros(n, n); sites * factor];
    for a in 0..n {
        for b in 0..n {
            let vals: Vec<Complex64> = coarse.iter().map(|m| m[(a, b)]).collect();
            for (f, v) in fine.iter_mut().zip(grid.upsample(&vals, factor)) {
                f[(a, b)] = v;
            }
        }
    }
    fine
}

/// RK4 for `dPsi/dsigma = -Psi L_sigma` over one period from the site
/// `base`, `m` steps per cell, with `fine` sampled at half-step spacing.
fn integrate(fine: &[CMat], base: usize, m: usize, h: f64) -> CMat {
    let total = fine.len();
    let n = fine[0].nrows();
    let at = |i: usize| &fine[(2 * m * base + i) % total];
    let half = Complex64::new(0.5 * h, 0.0);
    let hc = Complex64::new(h, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut psi = CMat::identity(n, n);
    for s in 0..total / 2 {
        let (l0, l1, l2) = (at(2 * s), at(2 * s + 1), at(2 * s + 2));
        let k1 = -(&psi * l0);
        let k2 = -((&psi + &k1 * half) * l1);
        let k3 = -((&psi + &k2 * half) * l1);
        let k4 = -((&psi + &k3 * hc) * l2);
        psi += (k1 + k2 * two + k3 * two + k4) * Complex64::new(h / 6.0, 0.0);
    }
    psi
}

/// Monodromy of `L_sigma = L_+ - L_-` around the periodic σ-circle starting
/// at `base`. Substeps per cell are doubled until the relative change drops
/// below the tolerance. Returns the matrix and the substep count used.
pub fn monodromy(
    ctx: &LieContext,
    grid: &PeriodicGrid,
    sample: &LaxSample,
    base: usize,
    opts: &MonodromyOptions,
) -> Result<(CMat, usize)> {
    if sample.n_sigma() != grid.n() || base >= grid.n() {
        return Err(Error::InvalidDimension(format!(
            "lax sample with {} sites, base {base}, grid of {}",
            sample.n_sigma(),
            grid.n()
        )));
    }
    let mut m = opts.start_substeps.max(1);
    if 2 * m > opts.max_substeps {
        return Err(Error::InvalidParameters(format!(
            "max_substeps {} leaves no room to refine from {m}",
            opts.max_substeps
        )));
    }
    let mut prev = integrate(&fine_connection(ctx, grid, sample, 2 * m), base, m, grid.spacing() / m as f64);
    loop {
        let next_m = 2 * m;
        let fine = fine_connection(ctx, grid, sample, 2 * next_m);
        let next = integrate(&fine, base, next_m, grid.spacing() / next_m as f64);
        let change = norm(&(&next - &prev)) / norm(&next).max(1.0);
        if change <= opts.tolerance {
            return Ok((next, next_m));
        }
        if 2 * next_m > opts.max_substeps {
            return Err(Error::NonConvergence { substeps: next_m, change });
        }
        prev = next;
        m = next_m;
    }
}

/// Trace of the monodromy over a run for several spectral values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceDrift {
    pub pair: String,
    pub zetas: Vec<String>,
    pub taus: Vec<f64>,
    /// `traces[z][t] = [re, im]`
    pub traces: Vec<Vec<[f64; 2]>>,
    /// `max_t |tr(t) - tr(0)| / T` per spectral value
    pub drift: Vec<f64>,
    pub max_substeps: usize,
}

impl TraceDrift {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates `tr M(zeta)` at the levels of `history` and reports its drift
/// per unit τ.
pub fn conserved_trace_drift(
    model: &SigmaModel,
    history: &History,
    pair: &dyn LaxPair,
    zetas: &[SpectralValue],
    opts: &MonodromyOptions,
) -> Result<TraceDrift> {
    let stride = opts.stride.max(1);
    let levels: Vec<usize> = (0..history.len()).step_by(stride).collect();
    let taus: Vec<f64> = levels.iter().map(|&k| history.states[k].tau).collect();
    let span = taus.last().copied().unwrap_or(0.0) - taus[0];
    let results: Vec<Vec<(Complex64, usize)>> = zetas
        .iter()
        .map(|&z| {
            levels
                .par_iter()
                .map(|&k| {
                    let points = model.field_points(&history.states[k]);
                    let sample = lax_field(pair, &model.ctx, &points, z)?;
                    let (mono, m) = monodromy(&model.ctx, &model.grid, &sample, 0, opts)?;
                    Ok((mono.trace(), m))
                })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let mut max_substeps = 0;
    let mut traces = Vec::new();
    let mut drift = Vec::new();
    for series in &results {
        let t0 = series[0].0;
        let worst = series.iter().map(|(t, _)| (t - t0).norm()).fold(0.0, f64::max);
        drift.push(if span > 0.0 { worst / span } else { 0.0 });
        traces.push(series.iter().map(|(t, _)| [t.re, t.im]).collect());
        max_substeps = series.iter().map(|s| s.1).fold(max_substeps, usize::max);
    }
    Ok(TraceDrift {
        pair: pair.name().to_string(),
        zetas: zetas.iter().map(|z| z.to_string()).collect(),
        taus,
        traces,
        drift,
        max_substeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lax::CField;
    use crate::model::ModelParams;

    #[test]
    fn constant_connection_monodromy_is_exponential() {
        let ctx = LieContext::su(2).unwrap();
        let grid = PeriodicGrid::new(16, 2.0);
        let mut lp = CField::zeros(3, 16);
        for j in 0..16 {
            lp.set_column(j, &crate::algebra::CVec::from_vec(vec![
                Complex64::new(0.3, 0.1),
                Complex64::new(-0.2, 0.0),
                Complex64::new(0.1, 0.4),
            ]));
        }
        let sample = LaxSample {
            zeta: SpectralValue::real(0.5),
            params: ModelParams::pcm(),
            l_plus: lp.clone(),
            l_minus: CField::zeros(3, 16),
        };
        let (m, _) = monodromy(&ctx, &grid, &sample, 3, &MonodromyOptions::default()).unwrap();
        let x = ctx.basis.to_matrix_c(lp.column(0).into_owned().as_slice());
        let exact = (x * Complex64::new(-2.0, 0.0)).exp();
        assert!(norm(&(m - exact)) < 1e-11);
    }
}
