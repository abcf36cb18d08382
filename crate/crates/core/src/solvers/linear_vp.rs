//! Linearized Vlasov-Poisson propagator.
//!
//! Evolves a mean-zero perturbation g under
//!
//! ```text
//! d/ds g + v1 dx g + E1(g) dmu/dv1 = 0,   E1 = -dx phi,  -dxx phi = rho(g),
//! ```
//!
//! with Strang splitting: exact Fourier-shift transport halves around an
//! exact field kick (rho(g) is invariant under the kick because the
//! velocity gradient of the profile integrates to zero). An optional
//! midpoint source slot turns the same integrator into the Duhamel
//! propagator for the non-homogeneous problems of the iterative
//! construction.

use std::sync::Arc;

use crate::equilibria::VelocityProfile;
use crate::grid::{rho_of, sample_profile_gradient, KineticState, PhaseSpaceGrid};
use crate::poisson::solve_poisson;
use crate::spectral::{shift_table, AxisFft};
use crate::{Error, Result, C64};

use super::{diag_row, DiagRow, EvolveOptions, Trajectory};

pub struct LinearVp {
    pub grid: Arc<PhaseSpaceGrid>,
    pub dt: f64,
    /// d mu / d v1 on the velocity grid.
    dmu1: Vec<f64>,
    ax_x: AxisFft,
    /// Transport phases for a half step, one table per velocity node.
    half_tables: Vec<Vec<C64>>,
}

impl LinearVp {
    pub fn new(grid: Arc<PhaseSpaceGrid>, profile: &VelocityProfile, dt: f64) -> Result<Self> {
        grid.accommodates(profile)?;
        if dt == 0.0 || !dt.is_finite() {
            return Err(Error::config("dt must be nonzero (negative reverses time)"));
        }
        let (dmu1, _) = sample_profile_gradient(&grid, profile);
        let ax_x = AxisFft::new(grid.nx, grid.m_period);
        let mut half_tables = Vec::with_capacity(grid.nv1 * grid.nv2);
        for iv2 in 0..grid.nv2 {
            let _ = iv2;
            for iv1 in 0..grid.nv1 {
                let v1 = grid.v1(iv1);
                half_tables.push(shift_table(&ax_x.xi, v1 * 0.5 * dt));
            }
        }
        Ok(LinearVp { grid, dt, dmu1, ax_x, half_tables })
    }

    fn transport_half(&mut self, g: &mut [f64]) {
        let nx = self.grid.nx;
        let tables = &self.half_tables;
        let ax = &mut self.ax_x;
        for (i, line) in g.chunks_mut(nx).enumerate() {
            ax.load(line, 0, 1);
            ax.forward();
            ax.apply_table(&tables[i]);
            ax.inverse();
            ax.store(line, 0, 1);
        }
    }

    /// Longitudinal field of a perturbation: E1 with `-dxx phi = rho(g)`.
    pub fn field_of(&self, g: &[f64]) -> Result<Vec<f64>> {
        let mut rho = rho_of(&self.grid, g);
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        // the mean is conserved at rounding level; keep the source exact
        rho.iter_mut().for_each(|r| *r -= mean);
        Ok(solve_poisson(&rho, self.grid.m_period)?.1)
    }

    /// Potential and field of a perturbation.
    pub fn potential_and_field(&self, g: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rho = rho_of(&self.grid, g);
        let mean = rho.iter().sum::<f64>() / rho.len() as f64;
        rho.iter_mut().for_each(|r| *r -= mean);
        solve_poisson(&rho, self.grid.m_period)
    }

    fn kick(&mut self, g: &mut [f64], dt: f64) -> Result<()> {
        let e1 = self.field_of(g)?;
        let grid = &self.grid;
        for iv2 in 0..grid.nv2 {
            for iv1 in 0..grid.nv1 {
                let c = self.dmu1[iv2 * grid.nv1 + iv1];
                let base = (iv2 * grid.nv1 + iv1) * grid.nx;
                for ix in 0..grid.nx {
                    g[base + ix] -= dt * e1[ix] * c;
                }
            }
        }
        Ok(())
    }

    /// One Strang step.
    pub fn step(&mut self, g: &mut [f64]) -> Result<()> {
        self.transport_half(g);
        self.kick(g, self.dt)?;
        self.transport_half(g);
        Ok(())
    }

    /// One Strang step with a source sample at the step midpoint
    /// (second-order Duhamel insertion between two half kicks).
    pub fn step_with_source(&mut self, g: &mut [f64], source_mid: &[f64]) -> Result<()> {
        self.transport_half(g);
        self.kick(g, 0.5 * self.dt)?;
        let dt = self.dt;
        for (gv, sv) in g.iter_mut().zip(source_mid) {
            *gv += dt * sv;
        }
        self.kick(g, 0.5 * self.dt)?;
        self.transport_half(g);
        Ok(())
    }

    /// The generator applied to a perturbation:
    /// `L0 g = -v1 dx g - E1(g) dmu/dv1` (spectral x-derivative).
    pub fn apply_generator(&mut self, g: &[f64]) -> Result<Vec<f64>> {
        let grid = self.grid.clone();
        let nx = grid.nx;
        let mut out = vec![0.0; g.len()];
        // x-derivative of g, line by line
        for (i, line) in g.chunks(nx).enumerate() {
            self.ax_x.load(line, 0, 1);
            self.ax_x.forward();
            self.ax_x.apply_derivative();
            self.ax_x.inverse();
            let iv1 = i % grid.nv1;
            let v1 = grid.v1(iv1);
            let scale = 1.0 / nx as f64;
            let spec = self.ax_x.spectrum();
            let base = i * nx;
            for ix in 0..nx {
                out[base + ix] = -v1 * spec[ix].re * scale;
            }
        }
        let e1 = self.field_of(g)?;
        for iv2 in 0..grid.nv2 {
            for iv1 in 0..grid.nv1 {
                let c = self.dmu1[iv2 * grid.nv1 + iv1];
                let base = (iv2 * grid.nv1 + iv1) * nx;
                for ix in 0..nx {
                    out[base + ix] -= e1[ix] * c;
                }
            }
        }
        Ok(out)
    }
}

/// Evolve a mean-zero perturbation and record diagnostics.
pub fn evolve_linear_vp(
    grid: Arc<PhaseSpaceGrid>,
    profile: &VelocityProfile,
    g0: Vec<f64>,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if g0.len() != grid.total() {
        return Err(Error::config("initial perturbation has wrong length"));
    }
    let total: f64 = g0.iter().sum::<f64>() * grid.vcell() * grid.dx();
    let scale = g0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if total.abs() > 1e-8 * (1.0 + scale) {
        return Err(Error::config(format!(
            "linear solver needs mean-zero data; got total {total:.3e}"
        )));
    }
    let mut stepper = LinearVp::new(grid.clone(), profile, opts.dt)?;
    let mut state = KineticState::zeros(grid.clone(), 0.0);
    state.f = g0;
    state.e1 = stepper.field_of(&state.f)?;

    let mut local_opts = opts.clone();
    local_opts.reference_mu = None;
    local_opts.rho_background = 0.0;

    let n_steps = (opts.horizon / opts.dt).round() as usize;
    let mut rows: Vec<DiagRow> = vec![diag_row(&state, &local_opts)];
    let mut snapshots = vec![state.clone()];
    for step in 1..=n_steps {
        stepper.step(&mut state.f)?;
        state.s += opts.dt;
        if step % opts.diag_stride == 0 || step == n_steps {
            state.e1 = stepper.field_of(&state.f)?;
            rows.push(diag_row(&state, &local_opts));
            if let Some(k) = opts.snapshot_stride {
                if (rows.len() - 1) % k == 0 {
                    snapshots.push(state.clone());
                }
            }
        }
    }
    state.e1 = stepper.field_of(&state.f)?;
    snapshots.push(state);
    Ok(Trajectory { dt: opts.dt, scheme: "strang-linear-vp", rows, snapshots, escape_time: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{build_growing_mode, find_root};
    use crate::equilibria::{make_profile, marginalize, ProfileKind};
    use approx::assert_abs_diff_eq;

    fn setup() -> (Arc<PhaseSpaceGrid>, VelocityProfile, crate::dispersion::GrowingMode) {
        let p = make_profile(ProfileKind::DoubleBump { a: 2.0, sigma: 0.6, tilt: 0.0 }, 1).unwrap();
        let m = marginalize(&p, &[1.0]).unwrap();
        let m_box = 16.0;
        let k = 2.0 * std::f64::consts::PI / m_box;
        let root = find_root(&m, k, None).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(m_box, 32, 256, 7.5).unwrap();
        let mode = build_growing_mode(&root, &p, grid.clone(), (2.0, 3.0)).unwrap();
        (grid, p, mode)
    }

    #[test]
    fn free_transport_is_exact() {
        // with the field forced off (zero dmu), the solution is g0(x - v s, v)
        let p = make_profile(ProfileKind::DoubleBump { a: 2.0, sigma: 0.6, tilt: 0.0 }, 1).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(16.0, 32, 64, 7.5).unwrap();
        let k = grid.k_fundamental();
        let mut g = vec![0.0; grid.total()];
        for iv1 in 0..grid.nv1 {
            let v = grid.v1(iv1);
            let env = (-0.5 * v * v / 0.36).exp();
            for ix in 0..grid.nx {
                g[grid.idx(0, iv1, ix)] = env * (k * grid.x(ix)).sin();
            }
        }
        let dt = 0.05;
        let mut stepper = LinearVp::new(grid.clone(), &p, dt).unwrap();
        // disable the forcing
        stepper.dmu1.iter_mut().for_each(|v| *v = 0.0);
        let mut work = g.clone();
        let n = 40;
        for _ in 0..n {
            stepper.step(&mut work).unwrap();
        }
        let s = dt * n as f64;
        let mut err = 0.0_f64;
        for iv1 in 0..grid.nv1 {
            let v = grid.v1(iv1);
            let env = (-0.5 * v * v / 0.36).exp();
            for ix in 0..grid.nx {
                let exact = env * (k * (grid.x(ix) - v * s)).sin();
                err = err.max((work[grid.idx(0, iv1, ix)] - exact).abs());
            }
        }
        assert!(err < 1e-10, "max error {err}");
    }

    #[test]
    fn growing_mode_grows_at_its_eigenvalue() {
        let (grid, p, mode) = setup();
        let lambda = mode.root.lambda0.re;
        let g0 = mode.sample_real(1.0);
        let mut opts = EvolveOptions::new(0.02, 2.0 / lambda);
        opts.diag_stride = 5;
        let traj = evolve_linear_vp(grid, &p, g0, &opts).unwrap();
        let fit = traj.l2_rate(0.5).unwrap();
        assert!(
            (fit.rate - lambda).abs() / lambda < 0.02,
            "fitted {} expected {lambda}",
            fit.rate
        );
    }

    #[test]
    fn step_is_time_reversible() {
        let (grid, p, mode) = setup();
        let g0 = mode.sample_real(1.0);
        let mut fwd = LinearVp::new(grid.clone(), &p, 0.05).unwrap();
        let mut bwd = LinearVp::new(grid.clone(), &p, -0.05).unwrap();
        let mut work = g0.clone();
        for _ in 0..10 {
            fwd.step(&mut work).unwrap();
        }
        for _ in 0..10 {
            bwd.step(&mut work).unwrap();
        }
        let mut err = 0.0_f64;
        for (a, b) in work.iter().zip(&g0) {
            err = err.max((a - b).abs());
        }
        assert!(err < 1e-12, "reversibility error {err}");
    }

    #[test]
    fn mean_zero_is_preserved() {
        let (grid, p, mode) = setup();
        let g0 = mode.sample_real(1.0);
        let opts = EvolveOptions::new(0.05, 1.0);
        let traj = evolve_linear_vp(grid.clone(), &p, g0, &opts).unwrap();
        let last = traj.snapshots.last().unwrap();
        let total: f64 = last.f.iter().sum::<f64>() * grid.vcell() * grid.dx();
        assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_non_mean_zero_data() {
        let (grid, p, _) = setup();
        let g0 = vec![1.0; grid.total()];
        let opts = EvolveOptions::new(0.05, 1.0);
        assert!(evolve_linear_vp(grid, &p, g0, &opts).is_err());
    }
}
