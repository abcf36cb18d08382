//! Time evolution: linearized Vlasov-Poisson, nonlinear Vlasov-Poisson
//! (1D1V) and the rescaled relativistic Vlasov-Maxwell system (1D2V).
//!
//! All solvers are spectral semi-Lagrangian with Strang splitting. The
//! sub-flows that admit exact integration (transport, electric kicks, the
//! stiff transverse wave) are integrated exactly per Fourier mode, so mass
//! is conserved to rounding and no dt restriction comes from the 1/eps
//! wave speeds.

mod linear_vp;
mod nonlinear_vp;
mod vlasov_maxwell;

pub use linear_vp::{evolve_linear_vp, LinearVp};
pub use nonlinear_vp::{evolve_nonlinear_vp, NonlinearVp};
pub use vlasov_maxwell::{evolve_nonlinear_vm, Frame, VlasovMaxwell};

use serde::Serialize;

use crate::grid::{moments, total_energy, total_mass, KineticState};
use crate::norms::{l2_field, l2_phase, sobolev_norm_phase, NormSpec};
use crate::poisson::gauss_residual_l2;
use crate::{Error, Result};

/// One diagnostics row (the CSV schema of trajectory output).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiagRow {
    pub s: f64,
    /// Spatially averaged mass.
    pub mass: f64,
    /// L2 norm of the perturbation (f - mu, or g itself for linear runs).
    pub l2: f64,
    /// Negative-order Sobolev norm of the perturbation.
    pub h_neg: f64,
    /// L2 of rho - background.
    pub rho_l2: f64,
    /// L2 of the current (both components for dv = 2).
    pub j_l2: f64,
    pub e_l2: f64,
    pub b_l2: f64,
    pub gauss_residual: f64,
    pub energy: f64,
}

/// Evolution output: diagnostic rows plus optional state snapshots.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub scheme: &'static str,
    pub rows: Vec<DiagRow>,
    pub snapshots: Vec<KineticState>,
    /// First time the perturbation L2 crossed the escape threshold, if one
    /// was requested and reached (log-interpolated between diagnostic rows).
    pub escape_time: Option<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.s).collect()
    }

    pub fn l2_series(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.l2).collect()
    }

    /// Fitted exponential rate of the perturbation L2 over the trailing
    /// window.
    pub fn l2_rate(&self, tail_fraction: f64) -> Result<crate::fit::RateFit> {
        crate::fit::growth_rate_fit(&self.times(), &self.l2_series(), tail_fraction)
    }

    pub fn last_row(&self) -> Result<&DiagRow> {
        self.rows.last().ok_or_else(|| Error::numerical("empty trajectory".to_string()))
    }
}

/// Common evolution options.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub dt: f64,
    pub horizon: f64,
    /// Emit a diagnostics row every `diag_stride` steps.
    pub diag_stride: usize,
    /// Keep a state snapshot every `n` diagnostic rows (None: only initial
    /// and final states are kept).
    pub snapshot_stride: Option<usize>,
    /// Order s' of the negative-norm diagnostic.
    pub h_neg_order: f64,
    /// Reference velocity profile sample (nv1 * nv2); the perturbation
    /// norms are of `f - mu`. When absent the norms are of f itself
    /// (linear runs evolve the perturbation directly).
    pub reference_mu: Option<Vec<f64>>,
    /// Stop once the perturbation L2 reaches this threshold.
    pub stop_at_l2: Option<f64>,
    /// Background charge subtracted in rho diagnostics (1 for full
    /// distributions, 0 for perturbations).
    pub rho_background: f64,
    /// Scale on dx E1 in the Gauss residual (eps^2 in the quasineutral
    /// frame, 1 otherwise).
    pub gauss_scale: f64,
}

impl EvolveOptions {
    pub fn new(dt: f64, horizon: f64) -> Self {
        EvolveOptions {
            dt,
            horizon,
            diag_stride: 1,
            snapshot_stride: None,
            h_neg_order: 1.0,
            reference_mu: None,
            stop_at_l2: None,
            rho_background: 1.0,
            gauss_scale: 1.0,
        }
    }

    /// Default step from the grid: `min(0.05, 0.2 dx / vmax)`.
    pub fn default_dt(grid: &crate::grid::PhaseSpaceGrid) -> f64 {
        (0.2 * grid.dx() / grid.vmax).min(0.05)
    }
}

/// Compute a diagnostics row for a state.
pub(crate) fn diag_row(state: &KineticState, opts: &EvolveOptions) -> DiagRow {
    let g = &state.grid;
    let m = moments(state);
    let mut pert = state.f.clone();
    if let Some(mu) = &opts.reference_mu {
        for iv2 in 0..g.nv2 {
            for iv1 in 0..g.nv1 {
                let base = (iv2 * g.nv1 + iv1) * g.nx;
                let mu_v = mu[iv2 * g.nv1 + iv1];
                for ix in 0..g.nx {
                    pert[base + ix] -= mu_v;
                }
            }
        }
    }
    let rho_pert: Vec<f64> = m.rho.iter().map(|r| r - opts.rho_background).collect();
    let j_l2 = if g.dv == 2 {
        let a = l2_field(g.m_period, &m.j1);
        let b = l2_field(g.m_period, &m.j2);
        (a * a + b * b).sqrt()
    } else {
        l2_field(g.m_period, &m.j1)
    };
    let e_l2 = if g.dv == 2 {
        let a = l2_field(g.m_period, &state.e1);
        let b = l2_field(g.m_period, &state.e2);
        (a * a + b * b).sqrt()
    } else {
        l2_field(g.m_period, &state.e1)
    };
    let b_l2 = if g.dv == 2 { l2_field(g.m_period, &state.b) } else { 0.0 };
    let gauss = if opts.rho_background == 1.0 {
        if opts.gauss_scale == 1.0 {
            gauss_residual_l2(&state.e1, &rho_pert, g.m_period)
        } else {
            let scaled: Vec<f64> = state.e1.iter().map(|e| e * opts.gauss_scale).collect();
            gauss_residual_l2(&scaled, &rho_pert, g.m_period)
        }
    } else {
        0.0
    };
    DiagRow {
        s: state.s,
        mass: total_mass(state),
        l2: l2_phase(g, &pert),
        h_neg: sobolev_norm_phase(g, &pert, &NormSpec::h_negative(opts.h_neg_order)),
        rho_l2: l2_field(g.m_period, &rho_pert),
        j_l2,
        e_l2,
        b_l2,
        gauss_residual: gauss,
        energy: total_energy(state),
    }
}

/// Log-linear interpolation of the threshold crossing between two rows.
pub(crate) fn interpolate_escape(prev: &DiagRow, cur: &DiagRow, threshold: f64) -> f64 {
    if prev.l2 <= 0.0 || cur.l2 <= prev.l2 {
        return cur.s;
    }
    let t = (threshold.ln() - prev.l2.ln()) / (cur.l2.ln() - prev.l2.ln());
    prev.s + t.clamp(0.0, 1.0) * (cur.s - prev.s)
}
