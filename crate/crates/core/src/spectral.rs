//! Thin FFT layer for strided real arrays.
//!
//! Phase-space arrays are stored flat with layout `[iv2][iv1][ix]`; every
//! spectral operation here works line-by-line along one axis through an
//! [`AxisFft`], which owns the rustfft plans, the signed frequency table
//! and a complex scratch line.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::C64;

/// FFT machinery for one axis: length `n` over a periodic domain of
/// length `l`.
pub struct AxisFft {
    pub n: usize,
    pub l: f64,
    /// Signed angular frequencies `2 pi m / l` in FFT bin order.
    pub xi: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<C64>,
}

impl AxisFft {
    pub fn new(n: usize, l: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let xi = (0..n)
            .map(|m| {
                let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                2.0 * std::f64::consts::PI * signed / l
            })
            .collect();
        AxisFft { n, l, xi, fwd, inv, buf: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn load(&mut self, src: &[f64], offset: usize, stride: usize) {
        for (k, c) in self.buf.iter_mut().enumerate() {
            *c = C64::new(src[offset + k * stride], 0.0);
        }
    }

    pub fn store(&self, dst: &mut [f64], offset: usize, stride: usize) {
        let scale = 1.0 / self.n as f64;
        for (k, c) in self.buf.iter().enumerate() {
            dst[offset + k * stride] = c.re * scale;
        }
    }

    pub fn forward(&mut self) {
        self.fwd.process(&mut self.buf);
    }

    /// Unnormalized inverse; [`Self::store`] applies the 1/n factor.
    pub fn inverse(&mut self) {
        self.inv.process(&mut self.buf);
    }

    pub fn spectrum(&self) -> &[C64] {
        &self.buf
    }

    pub fn spectrum_mut(&mut self) -> &mut [C64] {
        &mut self.buf
    }

    /// Multiply the spectrum by a precomputed phase (or filter) table.
    pub fn apply_table(&mut self, table: &[C64]) {
        for (c, t) in self.buf.iter_mut().zip(table) {
            *c *= t;
        }
    }

    /// Multiply by `exp(-i xi a)`: a rigid shift of the line by `a`.
    pub fn apply_shift(&mut self, a: f64) {
        for (c, &xi) in self.buf.iter_mut().zip(&self.xi) {
            *c *= C64::from_polar(1.0, -xi * a);
        }
    }

    /// Multiply by `i xi` (spectral derivative); the Nyquist mode is zeroed.
    pub fn apply_derivative(&mut self) {
        let ny = self.n / 2;
        for (m, (c, &xi)) in self.buf.iter_mut().zip(&self.xi).enumerate() {
            if m == ny {
                *c = C64::new(0.0, 0.0);
            } else {
                *c *= C64::new(0.0, xi);
            }
        }
    }

    /// Shift an entire strided family of lines by per-line amounts.
    ///
    /// `line_base(i)` gives the flat offset of line `i`; all lines share the
    /// element stride.
    pub fn shift_lines(
        &mut self,
        data: &mut [f64],
        n_lines: usize,
        line_base: impl Fn(usize) -> usize,
        stride: usize,
        amount: impl Fn(usize) -> f64,
    ) {
        for i in 0..n_lines {
            let base = line_base(i);
            self.load(data, base, stride);
            self.forward();
            self.apply_shift(amount(i));
            self.inverse();
            self.store(data, base, stride);
        }
    }

    /// Spectral derivative of a strided family of lines, written to `dst`.
    pub fn derivative_lines(
        &mut self,
        src: &[f64],
        dst: &mut [f64],
        n_lines: usize,
        line_base: impl Fn(usize) -> usize,
        stride: usize,
    ) {
        let scale = 1.0 / self.n as f64;
        for i in 0..n_lines {
            let base = line_base(i);
            self.load(src, base, stride);
            self.forward();
            self.apply_derivative();
            self.inverse();
            for (k, c) in self.buf.iter().enumerate() {
                dst[base + k * stride] = c.re * scale;
            }
        }
    }

    /// As [`Self::shift_lines`] but with one precomputed phase table per line.
    pub fn shift_lines_table(
        &mut self,
        data: &mut [f64],
        n_lines: usize,
        line_base: impl Fn(usize) -> usize,
        stride: usize,
        tables: &[Vec<C64>],
    ) {
        for i in 0..n_lines {
            let base = line_base(i);
            self.load(data, base, stride);
            self.forward();
            self.apply_table(&tables[i]);
            self.inverse();
            self.store(data, base, stride);
        }
    }
}

/// Precompute `exp(-i xi a)` for a shift by `a`.
pub fn shift_table(xi: &[f64], a: f64) -> Vec<C64> {
    xi.iter().map(|&x| C64::from_polar(1.0, -x * a)).collect()
}

/// Forward DFT of a real line with mean-normalized coefficients
/// (`c_k = (1/n) sum_j u_j e^{-2 pi i j k / n}`), convenient for Parseval
/// bookkeeping in the norm routines.
pub fn dft_normalized(axis: &mut AxisFft, line: &[f64]) -> Vec<C64> {
    axis.load(line, 0, 1);
    axis.forward();
    let n = axis.n as f64;
    axis.spectrum().iter().map(|c| c / n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn shift_is_exact_for_band_limited_data() {
        let n = 64;
        let l = 5.0;
        let mut ax = AxisFft::new(n, l);
        let k = 2.0 * std::f64::consts::PI * 3.0 / l;
        let mut line: Vec<f64> =
            (0..n).map(|j| (k * (j as f64) * l / n as f64).cos()).collect();
        let a = 0.3771;
        ax.load(&line, 0, 1);
        ax.forward();
        ax.apply_shift(a);
        ax.inverse();
        ax.store(&mut line, 0, 1);
        for (j, &v) in line.iter().enumerate() {
            let x = j as f64 * l / n as f64;
            assert_abs_diff_eq!(v, (k * (x - a)).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_analytic() {
        let n = 128;
        let l = 2.0 * std::f64::consts::PI;
        let mut ax = AxisFft::new(n, l);
        let mut line: Vec<f64> = (0..n).map(|j| (3.0 * j as f64 * l / n as f64).sin()).collect();
        ax.load(&line, 0, 1);
        ax.forward();
        ax.apply_derivative();
        ax.inverse();
        ax.store(&mut line, 0, 1);
        for (j, &v) in line.iter().enumerate() {
            let x = j as f64 * l / n as f64;
            assert_abs_diff_eq!(v, 3.0 * (3.0 * x).cos(), epsilon = 1e-10);
        }
    }

    #[test]
    fn round_trip_preserves_data() {
        let n = 32;
        let mut ax = AxisFft::new(n, 1.0);
        let line: Vec<f64> = (0..n).map(|j| (j as f64 * 0.77).sin() + 0.2).collect();
        let mut work = line.clone();
        ax.load(&work, 0, 1);
        ax.forward();
        ax.inverse();
        ax.store(&mut work, 0, 1);
        for (a, b) in line.iter().zip(&work) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }
}
