//! Spectral operations on a uniform periodic grid.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::algebra::{CMat, RMat};

#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            length,
            forward: planner.plan_fft_forward(n),
            backward: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    /// Angular wavenumber of FFT bin `k`; the Nyquist bin maps to zero.
    fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n;
        let scale = 2.0 * PI / self.length;
        if 2 * k < n {
            k as f64 * scale
        } else if 2 * k == n {
            0.0
        } else {
            (k as f64 - n as f64) * scale
        }
    }

    pub fn derivative_complex(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n);
        let mut buf = values.to_vec();
        self.forward.process(&mut buf);
        let norm = 1.0 / self.n as f64;
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= Complex64::new(0.0, self.wavenumber(k) * norm);
        }
        self.backward.process(&mut buf);
        buf
    }

    pub fn derivative_real(&self, values: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.derivative_complex(&c).into_iter().map(|z| z.re).collect()
    }

    /// Differentiates every row of `m` (rows are periodic series over sites).
    pub fn derivative_rows(&self, m: &RMat) -> RMat {
        let mut out = RMat::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            let row: Vec<f64> = m.row(r).iter().copied().collect();
            let d = self.derivative_real(&row);
            for (c, v) in d.into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn derivative_rows_c(&self, m: &nalgebra::DMatrix<Complex64>) -> nalgebra::DMatrix<Complex64> {
        let mut out = nalgebra::DMatrix::zeros(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            let row: Vec<Complex64> = m.row(r).iter().copied().collect();
            for (c, v) in self.derivative_complex(&row).into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        out
    }

    /// Entry-wise σ-derivative of a periodic field of square matrices.
    pub fn derivative_matrices(&self, field: &[CMat]) -> Vec<CMat> {
        assert_eq!(field.len(), self.n);
        let (rows, cols) = field[0].shape();
        let mut out = vec![CMat::zeros(rows, cols); self.n];
        for a in 0..rows {
            for b in 0..cols {
                let series: Vec<Complex64> = field.iter().map(|m| m[(a, b)]).collect();
                for (j, v) in self.derivative_complex(&series).into_iter().enumerate() {
                    out[j][(a, b)] = v;
                }
            }
        }
        out
    }

    /// Trigonometric interpolation onto a grid `factor` times finer. Entry
    /// `factor * j` of the result coincides with `values[j]`.
    pub fn upsample(&self, values: &[Complex64], factor: usize) -> Vec<Complex64> {
        assert_eq!(values.len(), self.n);
        if factor == 1 {
            return values.to_vec();
        }
        let n = self.n;
        let m = n * factor;
        let mut spec = values.to_vec();
        self.forward.process(&mut spec);
        let mut fine = vec![Complex64::new(0.0, 0.0); m];
        let half = n / 2;
        for k in 0..n {
            let c = spec[k];
            if 2 * k < n {
                fine[k] += c;
            } else if 2 * k == n {
                // split the Nyquist mode symmetrically
                fine[half] += c * 0.5;
                fine[m - half] += c * 0.5;
            } else {
                fine[m - (n - k)] += c;
            }
        }
        let mut planner = FftPlanner::new();
        planner.plan_fft_inverse(m).process(&mut fine);
        let norm = 1.0 / n as f64;
        fine.iter_mut().for_each(|z| *z *= norm);
        fine
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_trig_polynomial_is_exact() {
        let g = PeriodicGrid::new(32, 2.0 * PI);
        let f: Vec<f64> = (0..32)
            .map(|j| {
                let s = g.point(j);
                (3.0 * s).sin() + 0.5 * (5.0 * s).cos()
            })
            .collect();
        let d = g.derivative_real(&f);
        for (j, v) in d.iter().enumerate() {
            let s = g.point(j);
            let exact = 3.0 * (3.0 * s).cos() - 2.5 * (5.0 * s).sin();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_respects_period_length() {
        let g = PeriodicGrid::new(16, 1.0);
        let f: Vec<f64> = (0..16).map(|j| (2.0 * PI * g.point(j)).sin()).collect();
        let d = g.derivative_real(&f);
        for (j, v) in d.iter().enumerate() {
            assert!((v - 2.0 * PI * (2.0 * PI * g.point(j)).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn upsample_interpolates_band_limited_data() {
        let g = PeriodicGrid::new(16, 2.0 * PI);
        let f = |s: f64| Complex64::new((2.0 * s).cos(), (3.0 * s).sin()) + Complex64::new(0.3, 0.0);
        let vals: Vec<Complex64> = (0..16).map(|j| f(g.point(j))).collect();
        let fine = g.upsample(&vals, 4);
        assert_eq!(fine.len(), 64);
        for (i, v) in fine.iter().enumerate() {
            let s = i as f64 * g.spacing() / 4.0;
            assert!((v - f(s)).norm() < 1e-13, "{i}");
        }
    }
}
