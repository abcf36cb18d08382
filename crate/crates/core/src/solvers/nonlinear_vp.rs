//! Nonlinear Vlasov-Poisson solver (1D1V), spectral semi-Lagrangian.
//!
//! Strang splitting of
//!
//! ```text
//! d/ds f + v dx f + E1 dv f = 0,   dx E1 = rho - 1,
//! ```
//!
//! with exact Fourier shifts for both sub-flows: x-transport by `v dt/2`
//! per velocity row, then a velocity shift by `dt E1(x)` per spatial
//! column (rho is invariant under the kick, so the field is exact over the
//! sub-step). The longitudinal field is rebuilt from the Gauss law; its
//! spatial mean evolves by the averaged Ampere law `d<E1>/ds = -<j1>`.

use std::sync::Arc;

use crate::grid::{rho_of, KineticState, PhaseSpaceGrid};
use crate::poisson::gauss_field;
use crate::spectral::{shift_table, AxisFft};
use crate::{Error, Result, C64};

use super::{diag_row, interpolate_escape, DiagRow, EvolveOptions, Trajectory};

pub struct NonlinearVp {
    pub grid: Arc<PhaseSpaceGrid>,
    pub dt: f64,
    ax_x: AxisFft,
    ax_v: AxisFft,
    /// x-transport phases for half a step, per velocity row.
    half_tables: Vec<Vec<C64>>,
    /// Spatial mean of E1 (Gauss determines only the fluctuating part).
    e1_mean: f64,
}

impl NonlinearVp {
    pub fn new(grid: Arc<PhaseSpaceGrid>, dt: f64) -> Result<Self> {
        if grid.dv != 1 {
            return Err(Error::config("nonlinear VP solver is 1D1V"));
        }
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::config("dt must be nonzero"));
        }
        let ax_x = AxisFft::new(grid.nx, grid.m_period);
        let ax_v = AxisFft::new(grid.nv1, 2.0 * grid.vmax);
        let half_tables = (0..grid.nv1)
            .map(|iv1| shift_table(&ax_x.xi, grid.v1(iv1) * 0.5 * dt))
            .collect();
        Ok(NonlinearVp { grid, dt, ax_x, ax_v, half_tables, e1_mean: 0.0 })
    }

    fn transport_half(&mut self, f: &mut [f64]) {
        let nx = self.grid.nx;
        for (i, line) in f.chunks_mut(nx).enumerate() {
            self.ax_x.load(line, 0, 1);
            self.ax_x.forward();
            self.ax_x.apply_table(&self.half_tables[i]);
            self.ax_x.inverse();
            self.ax_x.store(line, 0, 1);
        }
    }

    /// Gauss-law field (fluctuating part) plus the tracked mean.
    fn e1_of(&self, f: &[f64]) -> Result<Vec<f64>> {
        let mut rho = rho_of(&self.grid, f);
        for r in &mut rho {
            *r -= 1.0;
        }
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        for r in &mut rho {
            *r -= mean; // rounding-level cleanup; mass is conserved
        }
        let mut e = gauss_field(&rho, self.grid.m_period)?;
        for v in &mut e {
            *v += self.e1_mean;
        }
        Ok(e)
    }

    fn kick(&mut self, f: &mut [f64], e1: &[f64], dt: f64) {
        let grid = &self.grid;
        let (nx, nv) = (grid.nx, grid.nv1);
        for ix in 0..nx {
            let a = dt * e1[ix];
            self.ax_v.load(f, ix, nx);
            self.ax_v.forward();
            self.ax_v.apply_shift(a);
            self.ax_v.inverse();
            self.ax_v.store(f, ix, nx);
        }
        let _ = nv;
    }

    /// One Strang step; updates f and the E1 mean.
    pub fn step(&mut self, state: &mut KineticState) -> Result<()> {
        let dt = self.dt;
        self.transport_half(&mut state.f);
        let e1 = self.e1_of(&state.f)?;
        // averaged Ampere for the mean mode, trapezoid in j1 around the kick
        let j_pre = mean_j1(&self.grid, &state.f, state.eps);
        self.kick(&mut state.f, &e1, dt);
        let j_post = mean_j1(&self.grid, &state.f, state.eps);
        self.e1_mean -= dt * 0.5 * (j_pre + j_post);
        self.transport_half(&mut state.f);
        state.s += dt;
        state.e1 = self.e1_of(&state.f)?;
        Ok(())
    }

    pub fn set_e1_mean(&mut self, mean: f64) {
        self.e1_mean = mean;
    }
}

fn mean_j1(grid: &PhaseSpaceGrid, f: &[f64], eps: f64) -> f64 {
    let mut acc = 0.0;
    for (iv1, row) in f.chunks(grid.nx).enumerate() {
        let v1 = grid.v1(iv1);
        let vh = crate::grid::vhat(v1, v1 * v1, eps);
        acc += vh * row.iter().sum::<f64>();
    }
    acc * grid.vcell() / grid.nx as f64
}

/// Evolve a full distribution under nonlinear Vlasov-Poisson.
pub fn evolve_nonlinear_vp(f0: KineticState, opts: &EvolveOptions) -> Result<Trajectory> {
    let grid = f0.grid.clone();
    if grid.dv != 1 {
        return Err(Error::config("nonlinear VP solver is 1D1V"));
    }
    let fmax = f0.f.iter().fold(0.0_f64, |m, &v| m.max(v));
    if f0.f.iter().any(|&v| v < -1e-12 * fmax) {
        return Err(Error::config("initial distribution must be nonnegative"));
    }
    let mass0 = crate::grid::total_mass(&f0);
    if (mass0 - 1.0).abs() > 1e-8 {
        return Err(Error::config(format!(
            "initial averaged mass must be 1, got {mass0}"
        )));
    }
    let mut stepper = NonlinearVp::new(grid.clone(), opts.dt)?;
    stepper.set_e1_mean(f0.e1.iter().sum::<f64>() / grid.nx as f64);
    let mut state = f0;
    state.e1 = stepper.e1_of(&state.f)?;

    let n_steps = (opts.horizon / opts.dt).round() as usize;
    let mut rows: Vec<DiagRow> = vec![diag_row(&state, opts)];
    let mut snapshots = vec![state.clone()];
    let mut escape_time = None;
    for step in 1..=n_steps {
        stepper.step(&mut state)?;
        let fmax = state.f.iter().fold(0.0_f64, |m, &v| m.max(v));
        let fmin = state.f.iter().fold(0.0_f64, |m, &v| m.min(v));
        if fmin < -0.1 * fmax {
            return Err(Error::numerical(format!(
                "distribution blow-up guard tripped at s = {:.3} (min {fmin:.3e}, max {fmax:.3e})",
                state.s
            )));
        }
        if step % opts.diag_stride == 0 || step == n_steps {
            let row = diag_row(&state, opts);
            if let (Some(th), Some(prev)) = (opts.stop_at_l2, rows.last()) {
                if row.l2 >= th && escape_time.is_none() {
                    escape_time = Some(interpolate_escape(prev, &row, th));
                    rows.push(row);
                    break;
                }
            }
            rows.push(row);
            if let Some(k) = opts.snapshot_stride {
                if (rows.len() - 1) % k == 0 {
                    snapshots.push(state.clone());
                }
            }
        }
    }
    snapshots.push(state);
    Ok(Trajectory {
        dt: opts.dt,
        scheme: "strang-semi-lagrangian-vp",
        rows,
        snapshots,
        escape_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_profile, ProfileKind};
    use crate::grid::total_mass;

    fn equilibrium_state() -> KineticState {
        let p = make_profile(ProfileKind::DoubleBump { a: 2.0, sigma: 0.6, tilt: 0.0 }, 1).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(16.0, 32, 256, 7.5).unwrap();
        KineticState::from_profile(grid, &p, 0.0).unwrap()
    }

    #[test]
    fn equilibrium_is_stationary() {
        let f0 = equilibrium_state();
        let mut opts = EvolveOptions::new(0.05, 5.0);
        opts.diag_stride = 10;
        let mu: Vec<f64> = (0..f0.grid.nv1).map(|i| f0.f[f0.grid.idx(0, i, 0)]).collect();
        opts.reference_mu = Some(mu);
        let traj = evolve_nonlinear_vp(f0, &opts).unwrap();
        let last = traj.last_row().unwrap();
        assert!(last.l2 < 1e-12, "drift from equilibrium {}", last.l2);
    }

    #[test]
    fn mass_is_conserved_to_rounding() {
        // stable profile so the 50-unit run stays in the damped regime
        let p = make_profile(ProfileKind::Maxwellian { sigma: 1.0 }, 1).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(16.0, 32, 256, 9.0).unwrap();
        let mut f0 = KineticState::from_profile(grid, &p, 0.0).unwrap();
        let grid = f0.grid.clone();
        let k = grid.k_fundamental();
        for iv1 in 0..grid.nv1 {
            for ix in 0..grid.nx {
                let idx = grid.idx(0, iv1, ix);
                f0.f[idx] *= 1.0 + 1e-3 * (k * grid.x(ix)).cos();
            }
        }
        let mass0 = total_mass(&f0);
        let mut opts = EvolveOptions::new(0.05, 50.0);
        opts.diag_stride = 50;
        let traj = evolve_nonlinear_vp(f0, &opts).unwrap();
        for row in &traj.rows {
            assert!((row.mass - mass0).abs() < 1e-10, "mass drift {}", row.mass - mass0);
        }
    }

    #[test]
    fn step_is_time_reversible() {
        let mut state = equilibrium_state();
        let grid = state.grid.clone();
        let k = grid.k_fundamental();
        for iv1 in 0..grid.nv1 {
            for ix in 0..grid.nx {
                let idx = grid.idx(0, iv1, ix);
                state.f[idx] *= 1.0 + 0.05 * (k * grid.x(ix)).cos();
            }
        }
        let f0 = state.f.clone();
        let mut fwd = NonlinearVp::new(grid.clone(), 0.05).unwrap();
        let mut bwd = NonlinearVp::new(grid.clone(), -0.05).unwrap();
        for _ in 0..20 {
            fwd.step(&mut state).unwrap();
        }
        for _ in 0..20 {
            bwd.step(&mut state).unwrap();
        }
        let mut err = 0.0_f64;
        for (a, b) in state.f.iter().zip(&f0) {
            err = err.max((a - b).abs());
        }
        assert!(err < 1e-12, "reversibility error {err}");
    }

    #[test]
    fn rejects_bad_initial_data() {
        let mut f0 = equilibrium_state();
        f0.f[10] = -1.0;
        let opts = EvolveOptions::new(0.05, 1.0);
        assert!(evolve_nonlinear_vp(f0, &opts).is_err());
        let mut f1 = equilibrium_state();
        for v in &mut f1.f {
            *v *= 2.0;
        }
        assert!(evolve_nonlinear_vp(f1, &opts).is_err());
    }
}
