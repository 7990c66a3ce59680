use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::patch::Patch;
use crate::algebra::{CMat, CVec, LieContext};
use crate::error::{Error, Result};
use crate::lax::{LaxPair, SpectralValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathOrder {
    /// Along σ at the first level, then up every τ line.
    SigmaFirst,
    /// Up the τ line at the first site, then along every σ line.
    TauFirst,
}

/// Lax data on a patch: coefficient pairs and the matrices
/// `L_sigma = L_+ - L_-`, `L_tau = L_+ + L_-`.
#[derive(Clone, Debug)]
pub struct LaxLattice {
    pub zeta: SpectralValue,
    pub coeffs: Vec<Vec<(CVec, CVec)>>,
    pub l_sigma: Vec<Vec<CMat>>,
    pub l_tau: Vec<Vec<CMat>>,
}

impl LaxLattice {
    pub fn new(pair: &dyn LaxPair, ctx: &LieContext, patch: &Patch, zeta: SpectralValue) -> Result<Self> {
        let coeffs: Vec<Vec<(CVec, CVec)>> = patch
            .rows
            .par_iter()
            .map(|row| row.iter().map(|p| pair.at_point(ctx, p, zeta)).collect())
            .collect::<Result<_>>()?;
        let to_m = |f: &dyn Fn(&(CVec, CVec)) -> CVec| -> Vec<Vec<CMat>> {
            coeffs
                .iter()
                .map(|row| row.iter().map(|c| ctx.basis.to_matrix_c(f(c).as_slice())).collect())
                .collect()
        };
        let l_sigma = to_m(&|c| &c.0 - &c.1);
        let l_tau = to_m(&|c| &c.0 + &c.1);
        Ok(Self {
            zeta,
            coeffs,
            l_sigma,
            l_tau,
        })
    }
}

/// `l(sigma, tau)` with `-l^-1 d_± l = L_±` and `l = 1` at the first patch
/// point.
#[derive(Clone, Debug)]
pub struct ExtendedSolution {
    pub zeta: SpectralValue,
    pub l: Vec<Vec<CMat>>,
    pub max_det_defect: f64,
}

/// Value of a lattice line between nodes `i` and `i + 1` by cubic
/// interpolation; one-sided at the ends.
fn midpoint(m: &[&CMat], i: usize) -> CMat {
    let n = m.len();
    let c = |x: f64| Complex64::new(x / 16.0, 0.0);
    if i == 0 {
        m[0] * c(5.0) + m[1] * c(15.0) - m[2] * c(5.0) + m[3] * c(1.0)
    } else if i + 2 >= n {
        m[n - 4] * c(1.0) - m[n - 3] * c(5.0) + m[n - 2] * c(15.0) + m[n - 1] * c(5.0)
    } else {
        -(m[i - 1] * c(1.0)) + m[i] * c(9.0) + m[i + 1] * c(9.0) - m[i + 2] * c(1.0)
    }
}

/// RK4 solution of `dl/ds = -l M(s)` along a lattice line with spacing `h`.
pub fn transport_line(start: &CMat, m: &[&CMat], h: f64) -> Result<Vec<CMat>> {
    if m.len() == 1 {
        return Ok(vec![start.clone()]);
    }
    if m.len() < 4 {
        return Err(Error::Transport(format!(
            "line of {} nodes is too short for cubic transport",
            m.len()
        )));
    }
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(0.5 * h, 0.0);
    let mut out = Vec::with_capacity(m.len());
    out.push(start.clone());
    for i in 0..m.len() - 1 {
        let l = out.last().expect("non-empty");
        let mid = midpoint(m, i);
        let k1 = -(l * m[i]);
        let k2 = -((l + &k1 * half) * &mid);
        let k3 = -((l + &k2 * half) * &mid);
        let k4 = -((l + &k3 * hc) * m[i + 1]);
        let next = l + (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4)
            * Complex64::new(h / 6.0, 0.0);
        out.push(next);
    }
    Ok(out)
}

pub fn transport_lattice(lattice: &LaxLattice, dt: f64, ds: f64, order: PathOrder) -> Result<ExtendedSolution> {
    let nk = lattice.l_tau.len();
    let nj = lattice.l_tau[0].len();
    let n = lattice.l_tau[0][0].nrows();
    let id = CMat::identity(n, n);
    let mut l = vec![vec![CMat::zeros(n, n); nj]; nk];
    match order {
        PathOrder::SigmaFirst => {
            let row: Vec<&CMat> = lattice.l_sigma[0].iter().collect();
            let base = transport_line(&id, &row, ds)?;
            let cols: Vec<Vec<CMat>> = (0..nj)
                .into_par_iter()
                .map(|j| {
                    let col: Vec<&CMat> = (0..nk).map(|k| &lattice.l_tau[k][j]).collect();
                    transport_line(&base[j], &col, dt)
                })
                .collect::<Result<_>>()?;
            for (j, col) in cols.into_iter().enumerate() {
                for (k, v) in col.into_iter().enumerate() {
                    l[k][j] = v;
                }
            }
        }
        PathOrder::TauFirst => {
            let col: Vec<&CMat> = (0..nk).map(|k| &lattice.l_tau[k][0]).collect();
            let base = transport_line(&id, &col, dt)?;
            l = (0..nk)
                .into_par_iter()
                .map(|k| {
                    let row: Vec<&CMat> = lattice.l_sigma[k].iter().collect();
                    transport_line(&base[k], &row, ds)
                })
                .collect::<Result<_>>()?;
        }
    }
    let max_det_defect = l
        .iter()
        .flatten()
        .map(|m| (m.determinant() - 1.0).norm())
        .fold(0.0, f64::max);
    Ok(ExtendedSolution {
        zeta: lattice.zeta,
        l,
        max_det_defect,
    })
}

/// Extended solution of `pair` at `zeta` over `patch`.
pub fn transport_extended(
    pair: &dyn LaxPair,
    ctx: &LieContext,
    patch: &Patch,
    zeta: SpectralValue,
    order: PathOrder,
) -> Result<ExtendedSolution> {
    let lattice = LaxLattice::new(pair, ctx, patch, zeta)?;
    transport_lattice(&lattice, patch.dt, patch.dsigma, order)
}

/// Largest entrywise difference between two extended solutions.
pub fn path_mismatch(a: &ExtendedSolution, b: &ExtendedSolution) -> f64 {
    a.l.iter()
        .flatten()
        .zip(b.l.iter().flatten())
        .map(|(x, y)| (x - y).iter().map(|z| z.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Transports along both path orders and fails if they disagree by more
/// than `tolerance`, which signals a connection that is not flat.
pub fn transport_checked(
    pair: &dyn LaxPair,
    ctx: &LieContext,
    patch: &Patch,
    zeta: SpectralValue,
    tolerance: f64,
) -> Result<(ExtendedSolution, f64)> {
    let lattice = LaxLattice::new(pair, ctx, patch, zeta)?;
    let a = transport_lattice(&lattice, patch.dt, patch.dsigma, PathOrder::SigmaFirst)?;
    let b = transport_lattice(&lattice, patch.dt, patch.dsigma, PathOrder::TauFirst)?;
    let mismatch = path_mismatch(&a, &b);
    if !(mismatch <= tolerance) {
        return Err(Error::Transport(format!(
            "path mismatch {mismatch:.3e} exceeds {tolerance:.3e} at zeta={zeta}"
        )));
    }
    Ok((a, mismatch))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_connection_gives_exponential() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.3),
                Complex64::new(0.2, 0.1),
                Complex64::new(-0.2, 0.1),
                Complex64::new(0.0, -0.3),
            ],
        );
        let line: Vec<&CMat> = std::iter::repeat(&m).take(11).collect();
        let l = transport_line(&CMat::identity(2, 2), &line, 0.1).unwrap();
        let exact = (m * Complex64::new(-1.0, 0.0)).exp();
        let err = (&l[10] - exact).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(err < 1e-7, "{err}");
    }

    #[test]
    fn interpolation_is_cubic_exact() {
        let f = |s: f64| CMat::from_element(1, 1, Complex64::new(s * s * s - 2.0 * s, s * s));
        let nodes: Vec<CMat> = (0..6).map(|i| f(i as f64)).collect();
        let refs: Vec<&CMat> = nodes.iter().collect();
        for i in 0..5 {
            let m = midpoint(&refs, i);
            assert!((m[(0, 0)] - f(i as f64 + 0.5)[(0, 0)]).norm() < 1e-12, "{i}");
        }
    }
}
