//! Homogeneous velocity equilibria and Penrose stability classification.
//!
//! An equilibrium is an even, smooth, rapidly decaying probability density
//! `mu(v)` on R^dv. Stability along a unit direction `e` is governed by the
//! one-dimensional marginal
//!
//! ```text
//! mu_e(s) = integral of mu over the hyperplane { s e + w : w ⊥ e },
//! ```
//!
//! through the Penrose integral at an interior local minimum `s0`:
//!
//! ```text
//! I(s0) = ∫ (mu_e(s) - mu_e(s0)) / (s - s0)^2 ds.
//! ```
//!
//! `I(s0) > 4 pi^2` is the classical instability threshold for the unit
//! torus; `I(s0) > 0` is the sharp threshold, which guarantees unstable
//! wavenumbers on large enough boxes (the instability band is
//! `0 < k < sqrt(I)`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::numeric::{adaptive_trapezoid, trapezoid, CubicSpline};
use crate::{Error, Result};

/// Classical Penrose threshold on the unit torus.
pub const CLASSICAL_PENROSE_THRESHOLD: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Density below which the profile is considered vanished; fixes the
/// truncation radius `vmax_decay`.
pub const DECAY_FLOOR: f64 = 1e-16;

/// Parametrized equilibrium families. All are even under `v -> -v`.
///
/// `DoubleBump` is a symmetric two-beam Gaussian mixture with beam centers
/// `±(a, tilt)` (the tilt only acts for `dv >= 2`); a nonzero tilt gives the
/// beams a transverse velocity component while leaving the marginal along
/// the first axis, and hence the dispersion roots, unchanged.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Maxwellian { sigma: f64 },
    DoubleBump {
        a: f64,
        sigma: f64,
        #[serde(default)]
        tilt: f64,
    },
    SuperGaussian { sigma: f64 },
    /// Two-column table (v, mu) for dv = 1, interpolated by a cubic spline.
    Tabulated { v: Vec<f64>, mu: Vec<f64> },
}

/// A normalized homogeneous equilibrium.
#[derive(Debug, Clone)]
pub struct VelocityProfile {
    pub dv: usize,
    pub kind: ProfileKind,
    /// Multiplicative constant making the quadrature mass equal one.
    norm: f64,
    /// Radius beyond which mu < DECAY_FLOOR along every axis.
    pub vmax_decay: f64,
    spline: Option<CubicSpline>,
}

fn gauss_1d(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

impl VelocityProfile {
    /// Unnormalized density of the kind (before the quadrature constant).
    fn raw(&self, v: &[f64]) -> f64 {
        match &self.kind {
            ProfileKind::Maxwellian { sigma } => {
                v.iter().map(|&vi| gauss_1d(vi, *sigma)).product()
            }
            ProfileKind::DoubleBump { a, sigma, tilt } => {
                let mut c = [0.0_f64; 3];
                c[0] = *a;
                if self.dv >= 2 {
                    c[1] = *tilt;
                }
                let g = |center_sign: f64| -> f64 {
                    v.iter()
                        .enumerate()
                        .map(|(i, &vi)| gauss_1d(vi - center_sign * c[i], *sigma))
                        .product::<f64>()
                };
                0.5 * (g(1.0) + g(-1.0))
            }
            ProfileKind::SuperGaussian { sigma } => {
                let r2: f64 = v.iter().map(|&vi| vi * vi).sum();
                (-(r2 * r2) / sigma.powi(4)).exp()
            }
            ProfileKind::Tabulated { .. } => {
                let sp = self.spline.as_ref().expect("tabulated profile has spline");
                sp.eval(v[0]).max(0.0)
            }
        }
    }

    /// Normalized density at a velocity point (length `dv`).
    pub fn evaluate(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dv);
        self.norm * self.raw(v)
    }

    /// Gradient of the normalized density; the first `dv` entries are valid.
    pub fn gradient(&self, v: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        match &self.kind {
            ProfileKind::Maxwellian { sigma } => {
                let val = self.evaluate(v);
                for i in 0..self.dv {
                    out[i] = -v[i] / (sigma * sigma) * val;
                }
            }
            ProfileKind::DoubleBump { a, sigma, tilt } => {
                let mut c = [0.0_f64; 3];
                c[0] = *a;
                if self.dv >= 2 {
                    c[1] = *tilt;
                }
                let s2 = sigma * sigma;
                for sign in [1.0, -1.0] {
                    let g: f64 = v
                        .iter()
                        .enumerate()
                        .map(|(i, &vi)| gauss_1d(vi - sign * c[i], *sigma))
                        .product();
                    for i in 0..self.dv {
                        out[i] += -0.5 * self.norm * (v[i] - sign * c[i]) / s2 * g;
                    }
                }
            }
            ProfileKind::SuperGaussian { sigma } => {
                let val = self.evaluate(v);
                let r2: f64 = v.iter().map(|&vi| vi * vi).sum();
                for i in 0..self.dv {
                    out[i] = -4.0 * r2 * v[i] / sigma.powi(4) * val;
                }
            }
            ProfileKind::Tabulated { .. } => {
                let sp = self.spline.as_ref().expect("tabulated profile has spline");
                out[0] = self.norm * sp.deriv(v[0]);
            }
        }
        out
    }

    /// Quadrature mass over the truncated domain (diagnostic; ~1 after
    /// construction).
    pub fn mass(&self, n_per_axis: usize) -> f64 {
        integrate_dv(self.dv, self.vmax_decay, n_per_axis, |v| self.evaluate(v))
    }
}

/// Tensor trapezoid integral of `f` over `[-l, l]^dv`.
fn integrate_dv(dv: usize, l: f64, n: usize, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    match dv {
        1 => trapezoid(|x| f(&[x]), -l, l, n),
        2 => {
            let h = 2.0 * l / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let wi = if i == 0 || i == n { 0.5 } else { 1.0 };
                let x = -l + i as f64 * h;
                for j in 0..=n {
                    let wj = if j == 0 || j == n { 0.5 } else { 1.0 };
                    let y = -l + j as f64 * h;
                    acc += wi * wj * f(&[x, y]);
                }
            }
            acc * h * h
        }
        _ => panic!("integrate_dv supports dv in {{1, 2}}"),
    }
}

fn decay_radius(kind: &ProfileKind, dv: usize) -> f64 {
    // distance d with exp(-d^2 / 2 sigma^2) = DECAY_FLOOR
    let gauss_reach = |sigma: f64| sigma * (-2.0 * DECAY_FLOOR.ln()).sqrt();
    match kind {
        ProfileKind::Maxwellian { sigma } => gauss_reach(*sigma),
        ProfileKind::DoubleBump { a, sigma, tilt } => {
            let off = if dv >= 2 { a.abs().max(tilt.abs()) } else { a.abs() };
            off + gauss_reach(*sigma)
        }
        ProfileKind::SuperGaussian { sigma } => sigma * (-DECAY_FLOOR.ln()).powf(0.25),
        ProfileKind::Tabulated { v, .. } => v.iter().fold(0.0_f64, |m, &x| m.max(x.abs())),
    }
}

/// Build a normalized profile of the given kind.
pub fn make_profile(kind: ProfileKind, dv: usize) -> Result<VelocityProfile> {
    if !(1..=2).contains(&dv) {
        return Err(Error::config(format!("dv must be 1 or 2, got {dv}")));
    }
    match &kind {
        ProfileKind::Maxwellian { sigma } | ProfileKind::SuperGaussian { sigma } => {
            if *sigma <= 0.0 {
                return Err(Error::config("profile width sigma must be positive"));
            }
        }
        ProfileKind::DoubleBump { a, sigma, .. } => {
            if *sigma <= 0.0 {
                return Err(Error::config("profile width sigma must be positive"));
            }
            if *a < 0.0 {
                return Err(Error::config("bump separation a must be nonnegative"));
            }
        }
        ProfileKind::Tabulated { v, mu } => {
            if dv != 1 {
                return Err(Error::config("tabulated profiles are one-dimensional"));
            }
            if v.len() != mu.len() || v.len() < 3 {
                return Err(Error::config("tabulated profile needs >= 3 (v, mu) rows"));
            }
            if mu.iter().any(|&m| m < 0.0) {
                return Err(Error::config("tabulated densities must be nonnegative"));
            }
        }
    }
    let spline = match &kind {
        ProfileKind::Tabulated { v, mu } => Some(CubicSpline::new(v.clone(), mu.clone())?),
        _ => None,
    };
    let vmax_decay = decay_radius(&kind, dv);
    let mut profile = VelocityProfile { dv, kind, norm: 1.0, vmax_decay, spline };
    let n = if dv == 1 { 8192 } else { 1024 };
    let mass = integrate_dv(dv, vmax_decay, n, |v| profile.raw(v));
    if !(mass.is_finite() && mass > 1e-12) {
        return Err(Error::config(format!(
            "normalization integral degenerate ({mass:.3e})"
        )));
    }
    profile.norm = 1.0 / mass;
    Ok(profile)
}

/// One-dimensional marginal of a profile along a unit direction.
#[derive(Debug, Clone)]
pub struct MarginalProfile {
    pub direction: Vec<f64>,
    /// The marginal is supported (to DECAY_FLOOR) in `[-s_max, s_max]`.
    pub s_max: f64,
    repr: MarginalRepr,
}

#[derive(Debug, Clone)]
enum MarginalRepr {
    /// Weighted 1D Gaussians at `centers` with common width `sigma`.
    GaussMix { centers: Vec<f64>, weights: Vec<f64>, sigma: f64 },
    /// dv = 1: the marginal is the profile itself.
    Identity(Arc<VelocityProfile>),
    /// Numerical marginal: value and directional-gradient quadratures.
    Quadrature { profile: Arc<VelocityProfile>, inner_n: usize },
}

impl MarginalProfile {
    pub fn evaluate(&self, s: f64) -> f64 {
        match &self.repr {
            MarginalRepr::GaussMix { centers, weights, sigma } => centers
                .iter()
                .zip(weights)
                .map(|(&c, &w)| w * gauss_1d(s - c, *sigma))
                .sum(),
            MarginalRepr::Identity(p) => p.evaluate(&[s]),
            MarginalRepr::Quadrature { profile, inner_n } => {
                let l = profile.vmax_decay;
                trapezoid(|w| profile.evaluate(&[s, w]), -l, l, *inner_n)
            }
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match &self.repr {
            MarginalRepr::GaussMix { centers, weights, sigma } => centers
                .iter()
                .zip(weights)
                .map(|(&c, &w)| -w * (s - c) / (sigma * sigma) * gauss_1d(s - c, *sigma))
                .sum(),
            MarginalRepr::Identity(p) => p.gradient(&[s])[0],
            MarginalRepr::Quadrature { profile, inner_n } => {
                let l = profile.vmax_decay;
                trapezoid(|w| profile.gradient(&[s, w])[0], -l, l, *inner_n)
            }
        }
    }

    /// Second derivative: analytic for Gaussian mixtures, centered
    /// difference otherwise. Used for the removable point of the Penrose
    /// integrand and the singularity subtraction of the dispersion
    /// quadrature.
    pub fn second_derivative(&self, s: f64) -> f64 {
        match &self.repr {
            MarginalRepr::GaussMix { centers, weights, sigma } => {
                let s2 = sigma * sigma;
                centers
                    .iter()
                    .zip(weights)
                    .map(|(&c, &w)| {
                        let d = s - c;
                        w * (d * d / (s2 * s2) - 1.0 / s2) * gauss_1d(d, *sigma)
                    })
                    .sum()
            }
            _ => {
                let d = 1e-5;
                (self.derivative(s + d) - self.derivative(s - d)) / (2.0 * d)
            }
        }
    }
}

/// Integrate the profile over the hyperplane orthogonal to `direction`.
pub fn marginalize(profile: &VelocityProfile, direction: &[f64]) -> Result<MarginalProfile> {
    if direction.len() != profile.dv {
        return Err(Error::config("direction dimension must match profile dv"));
    }
    let len2: f64 = direction.iter().map(|d| d * d).sum();
    if (len2.sqrt() - 1.0).abs() > 1e-12 {
        return Err(Error::config("direction must be a unit vector"));
    }
    let s_max = profile.vmax_decay * 1.0001;
    let repr = match (&profile.kind, profile.dv) {
        (_, 1) => MarginalRepr::Identity(Arc::new(profile.clone())),
        (ProfileKind::Maxwellian { sigma }, _) => MarginalRepr::GaussMix {
            centers: vec![0.0],
            weights: vec![profile.norm],
            sigma: *sigma,
        },
        (ProfileKind::DoubleBump { a, sigma, tilt }, _) => {
            // projection of an isotropic Gaussian is a Gaussian with the
            // same width, centered at the projected beam center
            let c = a * direction[0] + tilt * direction[1];
            MarginalRepr::GaussMix {
                centers: vec![c, -c],
                weights: vec![0.5 * profile.norm, 0.5 * profile.norm],
                sigma: *sigma,
            }
        }
        _ => {
            if (direction[0].abs() - 1.0).abs() > 1e-12 {
                return Err(Error::config(
                    "numerical marginals support only the first coordinate axis",
                ));
            }
            MarginalRepr::Quadrature { profile: Arc::new(profile.clone()), inner_n: 4096 }
        }
    };
    Ok(MarginalProfile { direction: direction.to_vec(), s_max, repr })
}

/// Result of the delta-condition check `sup |grad mu| / ((1+|v|) mu)`.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaReport {
    /// Maximum of the ratio over the truncated domain.
    pub sup: f64,
    /// Whether the ratio stays bounded as |v| -> infinity (classified from
    /// the profile kind: Gaussian tails yes, super-Gaussian no).
    pub bounded: bool,
    /// Relative agreement between the two refinement levels.
    pub refinement_agreement: f64,
}

/// Maximize `|grad mu| / ((1+|v|) mu)` over the truncated domain on two
/// refinement levels. Errors if the profile vanishes at a sampled point.
pub fn check_delta_condition(profile: &VelocityProfile) -> Result<DeltaReport> {
    let l = profile.vmax_decay;
    let mut sups = [0.0_f64; 2];
    for (lvl, n) in [(0usize, 400usize), (1, 800)] {
        let mut sup = 0.0_f64;
        let mut grid_point = |v: &[f64]| -> Result<()> {
            let mu = profile.evaluate(v);
            if mu <= 0.0 {
                return Err(Error::numerical(format!(
                    "profile vanishes at sampled point {v:?}; delta-condition undefined"
                )));
            }
            let g = profile.gradient(v);
            let gnorm = (0..profile.dv).map(|i| g[i] * g[i]).sum::<f64>().sqrt();
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            sup = sup.max(gnorm / ((1.0 + vnorm) * mu));
            Ok(())
        };
        match profile.dv {
            1 => {
                for i in 0..=n {
                    grid_point(&[-l + 2.0 * l * i as f64 / n as f64])?;
                }
            }
            2 => {
                for i in 0..=n {
                    let x = -l + 2.0 * l * i as f64 / n as f64;
                    for j in 0..=n {
                        let y = -l + 2.0 * l * j as f64 / n as f64;
                        grid_point(&[x, y])?;
                    }
                }
            }
            _ => unreachable!(),
        }
        sups[lvl] = sup;
    }
    let bounded = !matches!(profile.kind, ProfileKind::SuperGaussian { .. });
    Ok(DeltaReport {
        sup: sups[1],
        bounded,
        refinement_agreement: (sups[1] - sups[0]).abs() / sups[1].max(1e-300),
    })
}

/// A local minimum of the marginal with its Penrose integral.
#[derive(Debug, Clone, Serialize)]
pub struct PenroseCandidate {
    pub s_bar: f64,
    pub integral: f64,
    /// Flat minima are reached on a plateau; the integral reported is the
    /// worst (smallest) over the plateau endpoints and midpoint.
    pub flat: bool,
    pub plateau: Option<(f64, f64)>,
}

/// Penrose classification of a marginal.
#[derive(Debug, Clone, Serialize)]
pub struct PenroseReport {
    pub candidates: Vec<PenroseCandidate>,
    /// Some candidate exceeds the classical threshold `4 pi^2`.
    pub classical_pass: bool,
    /// Some candidate exceeds the sharp threshold `0`.
    pub sharp_pass: bool,
    /// Filled by [`equilibrium_report`]; `None` when only the marginal is known.
    pub delta_condition_sup: Option<f64>,
    pub delta_condition_bounded: Option<bool>,
}

impl PenroseReport {
    /// Largest Penrose integral over the candidates, if any.
    pub fn max_integral(&self) -> Option<f64> {
        self.candidates
            .iter()
            .map(|c| c.integral)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

/// Penrose integral `∫ (mu_e(s) - mu_e(s0)) / (s - s0)^2 ds` with the
/// removable point at `s0` filled by its Taylor value `mu_e''(s0) / 2`
/// on `|s - s0| < fill_radius`.
pub fn penrose_integral(
    marginal: &MarginalProfile,
    s_bar: f64,
    fill_radius: f64,
    tol: f64,
) -> Result<f64> {
    let mu0 = marginal.evaluate(s_bar);
    let taylor = 0.5 * marginal.second_derivative(s_bar);
    let s_lim = marginal.s_max.max(s_bar.abs() + 1.0);
    let integrand = |s: f64| -> f64 {
        let d = s - s_bar;
        if d.abs() < fill_radius {
            taylor
        } else {
            (marginal.evaluate(s) - mu0) / (d * d)
        }
    };
    // The integrand tends to -mu_e(s0)/(s-s0)^2 at infinity; add the tail
    // beyond the quadrature window analytically: ∫_{|u|>L} -mu0/u^2 = -2 mu0/L.
    let core = adaptive_trapezoid(integrand, s_bar - s_lim, s_bar + s_lim, tol, 1024, 1 << 22)?;
    Ok(core - 2.0 * mu0 / s_lim)
}

/// Locate interior local minima of `mu_e` (isolated zeros of the derivative
/// and flat plateaus) and evaluate the Penrose integral at each.
pub fn penrose_report(marginal: &MarginalProfile) -> Result<PenroseReport> {
    let n = 8192usize;
    let s_lim = marginal.s_max;
    let h = 2.0 * s_lim / n as f64;
    let flat_tol = 1e-12;
    let node = |i: usize| -s_lim + i as f64 * h;

    let mut candidates: Vec<PenroseCandidate> = Vec::new();
    // index of the most recent strictly descending node, cleared once a
    // minimum has been recorded
    let mut last_neg: Option<usize> = None;
    for i in 0..=n {
        let d = marginal.derivative(node(i));
        if d.abs() <= flat_tol {
            continue;
        }
        if d < 0.0 {
            last_neg = Some(i);
            continue;
        }
        // ascending node; a preceding descending node brackets a minimum
        let Some(j) = last_neg.take() else { continue };
        let flat_run = i - j - 1;
        if flat_run >= 2 {
            // flat minimum: the plateau nodes between j and i
            let s_a = node(j + 1);
            let s_b = node(i - 1);
            let mut worst = f64::INFINITY;
            for sb in [s_a, 0.5 * (s_a + s_b), s_b] {
                worst = worst.min(penrose_integral(marginal, sb, 1e-3, 1e-10)?);
            }
            candidates.push(PenroseCandidate {
                s_bar: 0.5 * (s_a + s_b),
                integral: worst,
                flat: true,
                plateau: Some((s_a, s_b)),
            });
        } else {
            // isolated minimum: bisect the derivative sign change
            let (mut lo, mut hi) = (node(j), node(i));
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if marginal.derivative(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s_bar = 0.5 * (lo + hi);
            let dd = marginal.evaluate(s_bar + 1e-2) - 2.0 * marginal.evaluate(s_bar)
                + marginal.evaluate(s_bar - 1e-2);
            if dd > 1e-10 {
                let integral = penrose_integral(marginal, s_bar, 1e-3, 1e-10)?;
                candidates.push(PenroseCandidate { s_bar, integral, flat: false, plateau: None });
            }
        }
    }

    let classical_pass = candidates.iter().any(|c| c.integral > CLASSICAL_PENROSE_THRESHOLD);
    let sharp_pass = candidates.iter().any(|c| c.integral > 0.0);
    Ok(PenroseReport {
        candidates,
        classical_pass,
        sharp_pass,
        delta_condition_sup: None,
        delta_condition_bounded: None,
    })
}

/// Full classification of a profile along a direction: marginalize, run the
/// Penrose report and attach the delta-condition numbers.
pub fn equilibrium_report(profile: &VelocityProfile, direction: &[f64]) -> Result<PenroseReport> {
    let marginal = marginalize(profile, direction)?;
    let mut report = penrose_report(&marginal)?;
    let delta = check_delta_condition(profile)?;
    report.delta_condition_sup = Some(delta.sup);
    report.delta_condition_bounded = Some(delta.bounded);
    Ok(report)
}
