//! Dispersion function of the linearized electrostatic problem, unstable
//! root location, and explicit growing modes.
//!
//! For a marginal `mu_e` along the wave direction and `Im(omega) > 0`,
//!
//! ```text
//! D(k, omega) = 1 - (1/k^2) ∫ mu_e'(s) / (s - omega) ds.
//! ```
//!
//! A zero of `D` in the upper half plane is an unstable pair
//! `(k, omega)` with eigenvalue `lambda = -i k omega`, `Re(lambda) > 0`,
//! and eigenfunction
//!
//! ```text
//! fhat(v) = (1/k^2) d_v1 mu(v) / (v1 - omega),
//! ```
//!
//! which integrates to one exactly when `D(k, omega) = 0`.
//!
//! The integrand's pole sits `Im(omega)` away from the real axis, so the
//! quadrature subtracts the singular part analytically
//! (`mu_e'(s) ~ mu_e'(Re omega) + ...`) and integrates only smooth
//! remainders; evaluation stays accurate uniformly down to
//! `Im(omega) -> 0+`, which the band-edge bisections rely on.

use std::sync::Arc;

use serde::Serialize;

use crate::equilibria::{penrose_report, MarginalProfile, VelocityProfile};
use crate::grid::{sample_profile_gradient, PhaseSpaceGrid};
use crate::norms::{sobolev_norm_phase, NormSpec};
use crate::numeric::adaptive_trapezoid_c;
use crate::{Error, Result, C64};

/// Convergence target for |D| at a reported root.
pub const ROOT_TOL: f64 = 1e-10;

/// An unstable dispersion root.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DispersionRoot {
    /// Wavenumber along the instability direction, > 0.
    pub k0: f64,
    /// Complex phase velocity, Im > 0.
    #[serde(with = "complex_serde")]
    pub omega0: C64,
    /// Eigenvalue `-i k0 omega0`; Re > 0.
    #[serde(with = "complex_serde")]
    pub lambda0: C64,
    /// |D(k0, omega0)| at convergence.
    pub residual: f64,
}

mod complex_serde {
    use super::C64;
    use serde::ser::SerializeStruct;
    pub fn serialize<S: serde::Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &c.re)?;
        st.serialize_field("im", &c.im)?;
        st.end()
    }
}

fn check_upper_half(omega: C64) -> Result<()> {
    if omega.im <= 0.0 {
        return Err(Error::config(format!(
            "dispersion function is only evaluated for Im(omega) > 0, got {omega}"
        )));
    }
    Ok(())
}

/// Integral `∫ mu_e'(s)/(s - omega) ds` with the singular part subtracted
/// to second order, so the numerical integrand is O(s - Re omega) near the
/// pole and the quadrature converges uniformly as Im(omega) -> 0+.
fn stieltjes_integral(marginal: &MarginalProfile, omega: C64, tol: f64) -> Result<C64> {
    let s_lim = marginal.s_max;
    let x = omega.re.clamp(-s_lim, s_lim);
    let dmu_x = marginal.derivative(x);
    let ddmu_x = marginal.second_derivative(x);
    let smooth = |s: f64| -> C64 {
        let num = marginal.derivative(s) - dmu_x - (s - x) * ddmu_x;
        num / (C64::new(s, 0.0) - omega)
    };
    let mut value = adaptive_trapezoid_c(smooth, -s_lim, s_lim, tol, 512, 1 << 20)?;
    // analytic parts over [-S, S]:
    //   ∫ ds/(s - omega)        = Log((S - omega)/(-S - omega)) =: L
    //   ∫ (s - x)/(s - omega) ds = 2S + (omega - x) L
    let log_term = ((C64::new(s_lim, 0.0) - omega) / (C64::new(-s_lim, 0.0) - omega)).ln();
    value += dmu_x * log_term;
    value += ddmu_x * (C64::new(2.0 * s_lim, 0.0) + (omega - C64::new(x, 0.0)) * log_term);
    Ok(value)
}

/// Derivative `∫ mu_e'(s)/(s - omega)^2 ds` with a two-term subtraction.
fn stieltjes_integral_deriv(marginal: &MarginalProfile, omega: C64, tol: f64) -> Result<C64> {
    let s_lim = marginal.s_max;
    let x = omega.re.clamp(-s_lim, s_lim);
    let dmu_x = marginal.derivative(x);
    let ddmu_x = marginal.second_derivative(x);
    let smooth = |s: f64| -> C64 {
        let num = marginal.derivative(s) - dmu_x - (s - x) * ddmu_x;
        let d = C64::new(s, 0.0) - omega;
        num / (d * d)
    };
    let mut value = adaptive_trapezoid_c(smooth, -s_lim, s_lim, tol.max(1e-10), 512, 1 << 20)?;
    let a = C64::new(s_lim, 0.0) - omega;
    let b = C64::new(-s_lim, 0.0) - omega;
    // ∫ (s-omega)^{-2} = 1/b - 1/a ... with antiderivative -1/(s-omega)
    let inv_part = -1.0 / a + 1.0 / b;
    // ∫ (s-x)(s-omega)^{-2} = Log(a/b) + (omega - x) * inv_part
    let log_part = (a / b).ln() + (omega - C64::new(x, 0.0)) * inv_part;
    value += dmu_x * inv_part + ddmu_x * log_part;
    Ok(value)
}

/// Evaluate `D(k, omega) = 1 - (1/k^2) ∫ mu_e'(s)/(s - omega) ds`.
pub fn dispersion_value(marginal: &MarginalProfile, k: f64, omega: C64) -> Result<C64> {
    if k <= 0.0 {
        return Err(Error::config("wavenumber k must be positive"));
    }
    check_upper_half(omega)?;
    let i = stieltjes_integral(marginal, omega, 1e-12)?;
    Ok(C64::new(1.0, 0.0) - i / (k * k))
}

/// `D` together with its omega-derivative (for Newton iterations).
pub fn dispersion_value_and_deriv(
    marginal: &MarginalProfile,
    k: f64,
    omega: C64,
) -> Result<(C64, C64)> {
    let d = dispersion_value(marginal, k, omega)?;
    let di = stieltjes_integral_deriv(marginal, omega, 1e-12)?;
    Ok((d, -di / (k * k)))
}

/// Rectangle in the upper half plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Rect {
    /// Default search window for unstable roots.
    pub fn standard() -> Self {
        Rect { re: (-5.0, 5.0), im: (1e-4, 5.0) }
    }
}

/// Count zeros of `D(k, .)` inside a rectangle by the argument principle:
/// accumulate the winding of `D` along the boundary, refining segments until
/// every argument increment is below pi/2 and the total winding is within
/// 1e-3 of an integer.
pub fn count_unstable_roots(marginal: &MarginalProfile, k: f64, rect: Rect) -> Result<usize> {
    if rect.im.0 <= 0.0 {
        return Err(Error::config("winding rectangle must lie strictly in Im > 0"));
    }
    if rect.re.0 >= rect.re.1 || rect.im.0 >= rect.im.1 {
        return Err(Error::config("degenerate winding rectangle"));
    }
    let corners = [
        C64::new(rect.re.0, rect.im.0),
        C64::new(rect.re.1, rect.im.0),
        C64::new(rect.re.1, rect.im.1),
        C64::new(rect.re.0, rect.im.1),
    ];
    let d_min = 1e-8;
    let eval = |w: C64| -> Result<C64> {
        let d = dispersion_value(marginal, k, w)?;
        if d.norm() < d_min {
            return Err(Error::numerical(format!(
                "winding boundary passes too close to a root at {w} (|D| = {:.2e})",
                d.norm()
            )));
        }
        Ok(d)
    };

    fn segment_winding(
        eval: &dyn Fn(C64) -> Result<C64>,
        a: C64,
        da: C64,
        b: C64,
        db: C64,
        depth: usize,
    ) -> Result<f64> {
        let darg = (db / da).arg();
        if darg.abs() <= std::f64::consts::FRAC_PI_2 && depth >= 2 {
            return Ok(darg);
        }
        if depth > 48 {
            return Err(Error::numerical(
                "winding refinement exceeded maximum depth".to_string(),
            ));
        }
        let mid = 0.5 * (a + b);
        let dm = eval(mid)?;
        Ok(segment_winding(eval, a, da, mid, dm, depth + 1)?
            + segment_winding(eval, mid, dm, b, db, depth + 1)?)
    }

    let mut total = 0.0;
    let d_at: Vec<C64> = corners.iter().map(|&c| eval(c)).collect::<Result<_>>()?;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        total += segment_winding(&|w| eval(w), a, d_at[i], b, d_at[(i + 1) % 4], 0)?;
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 1e-3 {
        return Err(Error::numerical(format!(
            "winding {winding:.6} did not settle on an integer"
        )));
    }
    if rounded < -0.5 {
        return Err(Error::numerical(format!(
            "negative winding {rounded}; D is zero-free analytic in the upper half plane"
        )));
    }
    Ok(rounded as usize)
}

fn marginal_is_even(marginal: &MarginalProfile) -> bool {
    let l = marginal.s_max;
    (1..=16).all(|i| {
        let s = l * i as f64 / 16.0;
        (marginal.evaluate(s) - marginal.evaluate(-s)).abs() <= 1e-12
    })
}

/// Limit of `D(k, i gamma)` as `gamma -> 0+`, evaluated just off the axis.
/// For an even marginal this is real: `1 - I_penrose(k=0 minimum)/k^2`.
pub fn dispersion_at_axis_limit(marginal: &MarginalProfile, k: f64) -> Result<f64> {
    let d = dispersion_value(marginal, k, C64::new(0.0, 1e-9))?;
    Ok(d.re)
}

/// Band edge: largest unstable wavenumber, from bisection on the axis limit.
pub fn instability_cutoff_k(marginal: &MarginalProfile) -> Result<f64> {
    let f = |k: f64| dispersion_at_axis_limit(marginal, k);
    let mut lo = 1e-3;
    if f(lo)? >= 0.0 {
        return Err(Error::not_found(
            "marginal is Penrose-stable: no unstable band".to_string(),
        ));
    }
    let mut hi = 0.1;
    while f(hi)? < 0.0 {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::numerical("unstable band appears unbounded".to_string()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn newton_polish(marginal: &MarginalProfile, k: f64, guess: C64) -> Result<DispersionRoot> {
    let mut omega = guess;
    for _ in 0..60 {
        let (d, dd) = dispersion_value_and_deriv(marginal, k, omega)?;
        if d.norm() < ROOT_TOL {
            let lambda = C64::new(0.0, -k) * omega;
            if omega.im <= 1e-8 {
                return Err(Error::numerical(format!(
                    "root at {omega} has nonpositive growth (Im omega <= 1e-8)"
                )));
            }
            return Ok(DispersionRoot { k0: k, omega0: omega, lambda0: lambda, residual: d.norm() });
        }
        if dd.norm() == 0.0 {
            return Err(Error::numerical("vanishing dispersion derivative".to_string()));
        }
        let mut step = d / dd;
        // keep the iterate in the upper half plane
        while (omega - step).im <= 1e-12 {
            step *= 0.5;
            if step.norm() < 1e-300 {
                return Err(Error::numerical("Newton step collapsed at the axis".to_string()));
            }
        }
        omega -= step;
    }
    Err(Error::numerical(format!("Newton did not reach |D| < {ROOT_TOL:.1e}")))
}

/// Find the unstable root of `D(k, .)`.
///
/// Even marginals are handled by bisection along the imaginary axis, where
/// `D` is real (the root is purely growing), followed by a Newton polish.
/// Otherwise Newton runs from the supplied guess.
pub fn find_root(marginal: &MarginalProfile, k: f64, guess: Option<C64>) -> Result<DispersionRoot> {
    if marginal_is_even(marginal) {
        let g = |gamma: f64| -> Result<f64> {
            Ok(dispersion_value(marginal, k, C64::new(0.0, gamma))?.re)
        };
        let lo0 = 1e-9;
        if g(lo0)? >= 0.0 {
            return Err(Error::not_found(format!(
                "no axis root at k = {k}: D(k, i0+) = {:.3e} >= 0",
                g(lo0)?
            )));
        }
        let mut lo = lo0;
        let mut hi = 0.25;
        while g(hi)? < 0.0 {
            hi *= 2.0;
            if hi > 64.0 {
                return Err(Error::numerical("axis bisection found no sign change".to_string()));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        newton_polish(marginal, k, C64::new(0.0, 0.5 * (lo + hi)))
    } else {
        let guess = guess.ok_or_else(|| {
            Error::config("non-even marginal requires a root guess".to_string())
        })?;
        newton_polish(marginal, k, guess)
    }
}

/// The explicit growing mode at a dispersion root, sampled on a grid.
#[derive(Debug, Clone)]
pub struct GrowingMode {
    pub root: DispersionRoot,
    pub grid: Arc<PhaseSpaceGrid>,
    /// Eigenfunction `fhat(v)` on the velocity grid (layout [iv2][iv1]),
    /// rescaled so the weighted norm of `e^{i k0 x} fhat` is one.
    pub fhat: Vec<C64>,
    /// `rho_hat / k0^2` after normalization.
    pub phihat: C64,
    /// Weighted norm indices (n, m) used for the normalization.
    pub norm_indices: (f64, f64),
    /// `∫ fhat dv` of the unnormalized eigenfunction, computed from the
    /// converged dispersion value (equals 1 up to the root residual).
    pub rho_selfconsistency: C64,
    /// Applied normalization scale (unnormalized -> stored).
    pub scale: f64,
}

impl GrowingMode {
    /// Real seed `amplitude * Re(fhat(v) e^{i k0 x})` on the grid.
    pub fn sample_real(&self, amplitude: f64) -> Vec<f64> {
        let g = &self.grid;
        let k0 = self.root.k0;
        let mut out = vec![0.0; g.total()];
        for iv2 in 0..g.nv2 {
            for iv1 in 0..g.nv1 {
                let fh = self.fhat[iv2 * g.nv1 + iv1];
                for ix in 0..g.nx {
                    let ph = C64::from_polar(1.0, k0 * g.x(ix));
                    out[g.idx(iv2, iv1, ix)] = amplitude * (fh * ph).re;
                }
            }
        }
        out
    }

    /// `g1(s) = Re(e^{lambda0 s} fhat e^{i k0 x})`, the growing solution of
    /// the linearized problem seeded by this mode.
    pub fn sample_real_at(&self, s: f64, amplitude: f64) -> Vec<f64> {
        let g = &self.grid;
        let k0 = self.root.k0;
        let growth = (self.root.lambda0 * s).exp();
        let mut out = vec![0.0; g.total()];
        for iv2 in 0..g.nv2 {
            for iv1 in 0..g.nv1 {
                let fh = self.fhat[iv2 * g.nv1 + iv1] * growth;
                for ix in 0..g.nx {
                    let ph = C64::from_polar(1.0, k0 * g.x(ix));
                    out[g.idx(iv2, iv1, ix)] = amplitude * (fh * ph).re;
                }
            }
        }
        out
    }

    /// Grid quadrature of `v1 * Re(g1)` over phase space (vanishes: the
    /// x-average of a single nonzero mode is zero).
    pub fn first_current_moment(&self) -> f64 {
        let g = &self.grid;
        let seed = self.sample_real(1.0);
        let mut acc = 0.0;
        for iv2 in 0..g.nv2 {
            for iv1 in 0..g.nv1 {
                let v1 = g.v1(iv1);
                let base = (iv2 * g.nv1 + iv1) * g.nx;
                for ix in 0..g.nx {
                    acc += v1 * seed[base + ix];
                }
            }
        }
        acc * g.vcell() * g.dx()
    }
}

/// Build the normalized growing mode of a root on a velocity grid.
pub fn build_growing_mode(
    root: &DispersionRoot,
    profile: &VelocityProfile,
    grid: Arc<PhaseSpaceGrid>,
    norm_indices: (f64, f64),
) -> Result<GrowingMode> {
    if root.residual > ROOT_TOL {
        return Err(Error::config(format!(
            "root residual {:.2e} exceeds tolerance {ROOT_TOL:.1e}",
            root.residual
        )));
    }
    grid.accommodates(profile)?;
    let (g1, _g2) = sample_profile_gradient(&grid, profile);
    let k2 = root.k0 * root.k0;
    let mut fhat: Vec<C64> = Vec::with_capacity(grid.nv1 * grid.nv2);
    for iv2 in 0..grid.nv2 {
        for iv1 in 0..grid.nv1 {
            let v1 = grid.v1(iv1);
            let den = C64::new(v1, 0.0) - root.omega0;
            debug_assert!(den.norm() > 0.0);
            fhat.push(C64::new(g1[iv2 * grid.nv1 + iv1] / k2, 0.0) / den);
        }
    }
    // self-consistency from the converged dispersion value:
    // ∫ fhat dv = 1 - D(k0, omega0)
    let marginal = crate::equilibria::marginalize(profile, &unit_e(grid.dv))?;
    let d = dispersion_value(&marginal, root.k0, root.omega0)?;
    let rho_selfconsistency = C64::new(1.0, 0.0) - d;

    // normalize || e^{i k0 x} fhat ||_{H^n_m} = 1 via real and imaginary parts
    let spec = NormSpec { order: norm_indices.0, vweight: norm_indices.1, phase_space: true };
    let mut re_part = vec![0.0; grid.total()];
    let mut im_part = vec![0.0; grid.total()];
    for iv2 in 0..grid.nv2 {
        for iv1 in 0..grid.nv1 {
            let fh = fhat[iv2 * grid.nv1 + iv1];
            for ix in 0..grid.nx {
                let ph = C64::from_polar(1.0, root.k0 * grid.x(ix));
                let val = fh * ph;
                re_part[grid.idx(iv2, iv1, ix)] = val.re;
                im_part[grid.idx(iv2, iv1, ix)] = val.im;
            }
        }
    }
    let n_re = sobolev_norm_phase(&grid, &re_part, &spec);
    let n_im = sobolev_norm_phase(&grid, &im_part, &spec);
    let total = (n_re * n_re + n_im * n_im).sqrt();
    if total <= 0.0 {
        return Err(Error::numerical("degenerate mode normalization".to_string()));
    }
    let scale = 1.0 / total;
    for v in &mut fhat {
        *v *= scale;
    }
    let rho_grid: C64 = fhat.iter().sum::<C64>() * grid.vcell();
    let phihat = rho_grid / k2;
    Ok(GrowingMode {
        root: *root,
        grid,
        fhat,
        phihat,
        norm_indices,
        rho_selfconsistency,
        scale,
    })
}

fn unit_e(dv: usize) -> Vec<f64> {
    let mut e = vec![0.0; dv];
    e[0] = 1.0;
    e
}

/// One row of the box scan.
#[derive(Debug, Clone, Serialize)]
pub struct BoxScanRow {
    pub m_period: f64,
    pub k_fundamental: f64,
    pub fundamental_unstable: bool,
    /// Root at the fundamental, when unstable.
    pub fundamental_root: Option<DispersionRoot>,
    /// Root maximizing Re(lambda) over the box harmonics.
    pub max_rate_root: Option<DispersionRoot>,
    pub max_rate_k: Option<f64>,
    /// Several harmonics shared the maximal rate; smallest k reported.
    pub rate_tie: bool,
}

/// Scan result over increasing periods.
#[derive(Debug, Clone, Serialize)]
pub struct BoxScan {
    pub rows: Vec<BoxScanRow>,
    /// First period in the scan whose fundamental is unstable.
    pub first_unstable_m: Option<f64>,
    /// Band edge in k and the corresponding minimal period 2 pi / k_cutoff.
    pub k_cutoff: f64,
    pub m0: f64,
}

/// Scan periods for unstable fundamentals and maximal-rate harmonics.
///
/// Returns `first_unstable_m = None` (with all rows stable) when the
/// marginal fails the sharp Penrose condition.
pub fn minimal_unstable_box(marginal: &MarginalProfile, m_grid: &[f64]) -> Result<BoxScan> {
    let penrose = penrose_report(marginal)?;
    if !penrose.sharp_pass {
        let rows = m_grid
            .iter()
            .map(|&m| BoxScanRow {
                m_period: m,
                k_fundamental: 2.0 * std::f64::consts::PI / m,
                fundamental_unstable: false,
                fundamental_root: None,
                max_rate_root: None,
                max_rate_k: None,
                rate_tie: false,
            })
            .collect();
        return Ok(BoxScan { rows, first_unstable_m: None, k_cutoff: 0.0, m0: f64::INFINITY });
    }
    let k_cutoff = instability_cutoff_k(marginal)?;
    let m0 = 2.0 * std::f64::consts::PI / k_cutoff;
    let mut rows = Vec::with_capacity(m_grid.len());
    let mut first_unstable_m = None;
    for &m in m_grid {
        let k1 = 2.0 * std::f64::consts::PI / m;
        let mut fundamental_root = None;
        let mut best: Option<(f64, DispersionRoot)> = None;
        let mut tie = false;
        let mut n = 1;
        loop {
            let k = n as f64 * k1;
            if k >= k_cutoff {
                break;
            }
            let root = find_root(marginal, k, None)?;
            if n == 1 {
                fundamental_root = Some(root);
            }
            match &best {
                None => best = Some((k, root)),
                Some((_, b)) => {
                    let diff = root.lambda0.re - b.lambda0.re;
                    if diff.abs() < 1e-12 {
                        tie = true; // keep the smaller k already stored
                    } else if diff > 0.0 {
                        best = Some((k, root));
                    }
                }
            }
            n += 1;
        }
        let unstable = fundamental_root.is_some();
        if unstable && first_unstable_m.is_none() {
            first_unstable_m = Some(m);
        }
        rows.push(BoxScanRow {
            m_period: m,
            k_fundamental: k1,
            fundamental_unstable: unstable,
            fundamental_root,
            max_rate_root: best.map(|(_, r)| r),
            max_rate_k: best.map(|(k, _)| k),
            rate_tie: tie,
        });
    }
    Ok(BoxScan { rows, first_unstable_m, k_cutoff, m0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_profile, marginalize, ProfileKind};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn bump_marginal(a: f64, sigma: f64) -> MarginalProfile {
        let p = make_profile(ProfileKind::DoubleBump { a, sigma, tilt: 0.0 }, 1).unwrap();
        marginalize(&p, &[1.0]).unwrap()
    }

    fn maxwell_marginal() -> MarginalProfile {
        let p = make_profile(ProfileKind::Maxwellian { sigma: 1.0 }, 1).unwrap();
        marginalize(&p, &[1.0]).unwrap()
    }

    #[test]
    fn dispersion_tends_to_one_far_from_the_axis() {
        let m = bump_marginal(2.0, 1.0);
        let d = dispersion_value(&m, 0.5, C64::new(0.0, 1e6)).unwrap();
        assert!((d - C64::new(1.0, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn dispersion_is_real_on_the_imaginary_axis_for_even_marginals() {
        let m = bump_marginal(2.0, 1.0);
        for gamma in [0.05, 0.3, 1.0] {
            let d = dispersion_value(&m, 0.5, C64::new(0.0, gamma)).unwrap();
            assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dispersion_matches_plain_quadrature_oracle() {
        // oracle: raw trapezoid of mu'(s)/(s - omega) at two fixed grids
        let m = bump_marginal(2.0, 1.0);
        let (k, omega) = (0.5, C64::new(0.0, 0.3));
        let oracle = |n: usize| -> C64 {
            let l = m.s_max;
            let h = 2.0 * l / n as f64;
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..=n {
                let s = -l + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * m.derivative(s) / (C64::new(s, 0.0) - omega);
            }
            C64::new(1.0, 0.0) - acc * h / (k * k)
        };
        let d1 = oracle(1 << 14);
        let d2 = oracle(1 << 15);
        assert!((d1 - d2).norm() < 1e-8, "oracle resolution study");
        let d = dispersion_value(&m, k, omega).unwrap();
        assert!((d - d2).norm() < 1e-8, "module {d} oracle {d2}");
        // frozen from the doubled-grid oracle
        let frozen = C64::new(0.3756189332119213, 0.0);
        assert!((d - frozen).norm() < 1e-8, "got {d}");
    }

    #[test]
    fn rejects_lower_half_plane_and_bad_k() {
        let m = bump_marginal(2.0, 1.0);
        assert!(dispersion_value(&m, 0.5, C64::new(0.1, -0.1)).is_err());
        assert!(dispersion_value(&m, 0.5, C64::new(0.1, 0.0)).is_err());
        assert!(dispersion_value(&m, -0.5, C64::new(0.0, 0.1)).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = bump_marginal(2.0, 1.0);
        let (k, omega) = (0.4, C64::new(0.1, 0.25));
        let (_, dd) = dispersion_value_and_deriv(&m, k, omega).unwrap();
        let h = 1e-6;
        let dp = dispersion_value(&m, k, omega + C64::new(h, 0.0)).unwrap();
        let dm = dispersion_value(&m, k, omega - C64::new(h, 0.0)).unwrap();
        let fd = (dp - dm) / (2.0 * h);
        assert!((dd - fd).norm() < 1e-6, "analytic {dd} fd {fd}");
    }

    #[test]
    fn conjugate_symmetry_for_even_marginals() {
        let m = bump_marginal(2.0, 1.0);
        for omega in [C64::new(0.3, 0.2), C64::new(-1.1, 0.45), C64::new(2.0, 1.0)] {
            let d1 = dispersion_value(&m, 0.5, omega).unwrap();
            let d2 = dispersion_value(&m, 0.5, C64::new(-omega.re, omega.im)).unwrap();
            assert!((d1 - d2.conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn winding_counts_maxwellian_zero() {
        let m = maxwell_marginal();
        let count = count_unstable_roots(&m, 0.5, Rect::standard()).unwrap();
        assert_eq!(count, 0);
    }

    #[test]
    fn winding_counts_double_bump_one_then_zero() {
        let m = bump_marginal(2.0, 1.0);
        assert_eq!(count_unstable_roots(&m, 0.2, Rect::standard()).unwrap(), 1);
        // above the band edge the count drops to zero
        assert_eq!(count_unstable_roots(&m, 10.0, Rect::standard()).unwrap(), 0);
    }

    #[test]
    fn winding_consistent_across_rectangles() {
        let m = bump_marginal(2.0, 1.0);
        let root = find_root(&m, 0.3, None).unwrap();
        let g = root.omega0.im;
        for (dre, dim) in [(1.0, 2.0), (2.5, 4.0), (0.6, 1.5)] {
            let rect = Rect { re: (-dre, dre), im: (0.25 * g, g + dim) };
            assert_eq!(count_unstable_roots(&m, 0.3, rect).unwrap(), 1);
        }
    }

    #[test]
    fn find_root_converges_and_reports_identity() {
        let m = bump_marginal(2.0, 1.0);
        let root = find_root(&m, 0.3, None).unwrap();
        assert!(root.residual < ROOT_TOL);
        assert!(root.omega0.im > 0.0);
        // lambda = -i k omega as an arithmetic identity of the record
        let expect = C64::new(0.0, -root.k0) * root.omega0;
        assert_eq!(root.lambda0, expect);
        assert!(root.lambda0.re > 0.0);
        // purely growing: the root sits on the imaginary axis
        assert_abs_diff_eq!(root.omega0.re, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn axis_bisection_oracle_agrees() {
        // independent oracle: plain bisection of gamma -> Re D(k, i gamma)
        // using the module's evaluator only through its public API
        let m = bump_marginal(2.0, 0.5);
        let k = 0.4;
        let g = |gamma: f64| dispersion_value(&m, k, C64::new(0.0, gamma)).unwrap().re;
        let (mut lo, mut hi) = (1e-9, 4.0);
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle_gamma = 0.5 * (lo + hi);
        let root = find_root(&m, k, None).unwrap();
        assert_relative_eq!(root.omega0.im, oracle_gamma, epsilon = 1e-8);
        assert!(root.omega0.im > 0.0);
    }

    #[test]
    fn stable_marginal_has_no_root() {
        let m = maxwell_marginal();
        assert!(matches!(find_root(&m, 0.5, None), Err(Error::NotFound(_))));
    }

    #[test]
    fn cutoff_matches_penrose_integral() {
        // for an even bump the axis limit is 1 - I/k^2, so k_cutoff = sqrt(I)
        let m = bump_marginal(2.0, 1.0);
        let rep = penrose_report(&m).unwrap();
        let i0 = rep.candidates[0].integral;
        let kc = instability_cutoff_k(&m).unwrap();
        assert_relative_eq!(kc, i0.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn minimal_box_scan_double_bump() {
        let m = bump_marginal(2.0, 1.0);
        let kc = instability_cutoff_k(&m).unwrap();
        let m0 = 2.0 * std::f64::consts::PI / kc;
        let ms: Vec<f64> = vec![0.5 * m0, 0.9 * m0, 1.1 * m0, 2.0 * m0];
        let scan = minimal_unstable_box(&m, &ms).unwrap();
        assert_eq!(scan.first_unstable_m, Some(1.1 * m0));
        assert!(!scan.rows[0].fundamental_unstable);
        assert!(!scan.rows[1].fundamental_unstable);
        assert!(scan.rows[2].fundamental_unstable);
        // at M = 2 M0 the fundamental is unstable with positive rate
        let last = scan.rows.last().unwrap();
        assert!(last.fundamental_unstable);
        assert!(last.fundamental_root.unwrap().lambda0.re > 0.0);
        // the maximal rate dominates the fundamental
        let best = last.max_rate_root.unwrap();
        assert!(best.lambda0.re >= last.fundamental_root.unwrap().lambda0.re - 1e-12);
    }

    #[test]
    fn minimal_box_scan_maxwellian_none_found() {
        let m = maxwell_marginal();
        let scan = minimal_unstable_box(&m, &[5.0, 10.0, 20.0]).unwrap();
        assert_eq!(scan.first_unstable_m, None);
        assert!(scan.rows.iter().all(|r| !r.fundamental_unstable));
    }

    #[test]
    fn growing_mode_self_consistency() {
        let p = make_profile(ProfileKind::DoubleBump { a: 2.0, sigma: 1.0, tilt: 0.0 }, 1).unwrap();
        let m = marginalize(&p, &[1.0]).unwrap();
        let root = find_root(&m, 0.3, None).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(
            2.0 * std::f64::consts::PI / 0.3,
            32,
            256,
            p.vmax_decay * 1.05,
        )
        .unwrap();
        let mode = build_growing_mode(&root, &p, grid, (2.0, 3.0)).unwrap();
        // ∫ fhat dv = 1 at a converged root (continuum identity)
        assert!((mode.rho_selfconsistency - C64::new(1.0, 0.0)).norm() < 1e-6);
        // normalization contract
        let spec = NormSpec { order: 2.0, vweight: 3.0, phase_space: true };
        let re = {
            let mut data = vec![0.0; mode.grid.total()];
            for iv1 in 0..mode.grid.nv1 {
                let fh = mode.fhat[iv1];
                for ix in 0..mode.grid.nx {
                    let ph = C64::from_polar(1.0, root.k0 * mode.grid.x(ix));
                    data[mode.grid.idx(0, iv1, ix)] = (fh * ph).re;
                }
            }
            sobolev_norm_phase(&mode.grid, &data, &spec)
        };
        let im = {
            let mut data = vec![0.0; mode.grid.total()];
            for iv1 in 0..mode.grid.nv1 {
                let fh = mode.fhat[iv1];
                for ix in 0..mode.grid.nx {
                    let ph = C64::from_polar(1.0, root.k0 * mode.grid.x(ix));
                    data[mode.grid.idx(0, iv1, ix)] = (fh * ph).im;
                }
            }
            sobolev_norm_phase(&mode.grid, &data, &spec)
        };
        assert_relative_eq!((re * re + im * im).sqrt(), 1.0, epsilon = 1e-12);
        // mean current of the seed vanishes
        assert_abs_diff_eq!(mode.first_current_moment(), 0.0, epsilon = 1e-10);
    }
}
