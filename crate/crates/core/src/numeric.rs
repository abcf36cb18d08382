//! Small numerical utilities: uniform/adaptive trapezoid quadrature,
//! natural cubic splines and least-squares line fits.
//!
//! All integrands in this crate are smooth and rapidly decaying (or
//! periodic), for which the uniform trapezoid rule converges spectrally,
//! so no higher-order rules are needed.

use crate::{Error, Result, C64};

/// Trapezoid rule on a uniform grid with `n + 1` nodes over `[a, b]`.
pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

/// Complex-valued trapezoid rule.
pub fn trapezoid_c<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, n: usize) -> C64 {
    let h = (b - a) / n as f64;
    let mut acc = 0.5 * (f(a) + f(b));
    for i in 1..n {
        acc += f(a + i as f64 * h);
    }
    acc * h
}

/// Adaptive trapezoid quadrature by grid doubling. Converged when two
/// successive levels agree to `tol` relative to the integral scale.
/// Node values are reused across levels.
pub fn adaptive_trapezoid<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    n0: usize,
    n_max: usize,
) -> Result<f64> {
    let mut n = n0.max(8);
    let mut value = trapezoid(&mut f, a, b, n);
    loop {
        // refine: I_{2n} = I_n / 2 + h/2 * sum over midpoints
        let h = (b - a) / n as f64;
        let mut mid = 0.0;
        for i in 0..n {
            mid += f(a + (i as f64 + 0.5) * h);
        }
        let refined = 0.5 * value + 0.5 * h * mid;
        let scale = 1.0 + refined.abs();
        if (refined - value).abs() <= tol * scale {
            return Ok(refined);
        }
        value = refined;
        n *= 2;
        if n > n_max {
            return Err(Error::numerical(format!(
                "quadrature did not converge below tol {tol:.1e} with {n_max} nodes"
            )));
        }
    }
}

/// Complex version of [`adaptive_trapezoid`].
pub fn adaptive_trapezoid_c<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: f64,
    n0: usize,
    n_max: usize,
) -> Result<C64> {
    let mut n = n0.max(8);
    let mut value = trapezoid_c(&mut f, a, b, n);
    loop {
        let h = (b - a) / n as f64;
        let mut mid = C64::new(0.0, 0.0);
        for i in 0..n {
            mid += f(a + (i as f64 + 0.5) * h);
        }
        let refined = 0.5 * value + 0.5 * h * mid;
        let scale = 1.0 + refined.norm();
        if (refined - value).norm() <= tol * scale {
            return Ok(refined);
        }
        value = refined;
        n *= 2;
        if n > n_max {
            return Err(Error::numerical(format!(
                "complex quadrature did not converge below tol {tol:.1e} with {n_max} nodes"
            )));
        }
    }
}

/// Natural cubic spline on strictly increasing nodes.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// second derivatives at the nodes
    m: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::config("spline needs >= 3 matching nodes"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("spline nodes must be strictly increasing"));
        }
        // Thomas algorithm for the natural-spline tridiagonal system.
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(CubicSpline { x, y, m })
    }

    fn segment(&self, s: f64) -> usize {
        match self
            .x
            .binary_search_by(|v| v.partial_cmp(&s).expect("finite node"))
        {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i.clamp(1, self.x.len() - 1) - 1,
        }
    }

    /// Evaluate the spline; zero outside the node range (profiles decay).
    pub fn eval(&self, s: f64) -> f64 {
        let n = self.x.len();
        if s < self.x[0] || s > self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(s);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let n = self.x.len();
        if s < self.x[0] || s > self.x[n - 1] {
            return 0.0;
        }
        let i = self.segment(s);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - s) / h;
        let b = (s - self.x[i]) / h;
        (self.y[i + 1] - self.y[i]) / h
            + ((3.0 * b * b - 1.0) * self.m[i + 1] - (3.0 * a * a - 1.0) * self.m[i]) * h / 6.0
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }
}

/// Least-squares line fit `y = slope * x + intercept`.
/// Returns `(slope, intercept, r_squared)`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::config("line fit needs >= 2 matching samples"));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::numerical("degenerate abscissae in line fit"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, intercept, r2))
}
