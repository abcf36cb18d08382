//! Spectral Poisson solver on the periodic spatial grid.
//!
//! `-phi'' = rho - 1` with the zero mode of `phi` set to zero (mean-free
//! potential), and `E = -phi'`. The returned field satisfies the Gauss law
//! `E' = rho - 1` to rounding because both sides live on the same Fourier
//! modes.

use crate::spectral::AxisFft;
use crate::{Error, Result, C64};

/// Solve for the potential and longitudinal field from a mean-free source.
pub fn solve_poisson(rho_minus_one: &[f64], m_period: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = rho_minus_one.len();
    let mean = rho_minus_one.iter().sum::<f64>() / n as f64;
    let scale = rho_minus_one.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if mean.abs() > 1e-10 * (1.0 + scale) {
        return Err(Error::numerical(format!(
            "poisson source has nonzero mean {mean:.3e} (scale {scale:.3e})"
        )));
    }
    let mut ax = AxisFft::new(n, m_period);
    ax.load(rho_minus_one, 0, 1);
    ax.forward();
    let mut phi_hat: Vec<C64> = vec![C64::new(0.0, 0.0); n];
    let mut e_hat: Vec<C64> = vec![C64::new(0.0, 0.0); n];
    for m in 0..n {
        if m == 0 {
            continue;
        }
        let xi = ax.xi[m];
        let rho_m = ax.spectrum()[m];
        let p = rho_m / (xi * xi);
        phi_hat[m] = p;
        // E = -phi' => E_hat = -i xi phi_hat
        e_hat[m] = C64::new(0.0, -xi) * p;
    }
    let mut phi = vec![0.0; n];
    ax.spectrum_mut().copy_from_slice(&phi_hat);
    ax.inverse();
    ax.store(&mut phi, 0, 1);
    let mut e = vec![0.0; n];
    ax.spectrum_mut().copy_from_slice(&e_hat);
    ax.inverse();
    ax.store(&mut e, 0, 1);
    Ok((phi, e))
}

/// Longitudinal field alone (mean-free part of E1 from the Gauss law).
pub fn gauss_field(rho_minus_one: &[f64], m_period: f64) -> Result<Vec<f64>> {
    solve_poisson(rho_minus_one, m_period).map(|(_, e)| e)
}

/// L2 norm of the Gauss residual `dE1/dx - (rho - 1)`.
pub fn gauss_residual_l2(e1: &[f64], rho_minus_one: &[f64], m_period: f64) -> f64 {
    let n = e1.len();
    let mut ax = AxisFft::new(n, m_period);
    ax.load(e1, 0, 1);
    ax.forward();
    ax.apply_derivative();
    ax.inverse();
    let mut de = vec![0.0; n];
    ax.store(&mut de, 0, 1);
    let dx = m_period / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let r = de[i] - rho_minus_one[i];
        acc += r * r;
    }
    (acc * dx).sqrt()
}
