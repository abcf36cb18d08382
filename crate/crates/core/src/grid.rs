//! Phase-space grids, kinetic states and velocity moments.
//!
//! Geometry is reduced: one periodic spatial dimension `x` on the torus of
//! period `M`, and one or two velocity dimensions truncated to
//! `[-vmax, vmax]` (treated as periodic for the transforms; profiles decay
//! below 1e-16 at the boundary by construction). Arrays are flat with
//! layout `[iv2][iv1][ix]`.

use std::sync::Arc;

use crate::equilibria::VelocityProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    /// Spatial period M.
    pub m_period: f64,
    pub nx: usize,
    /// Velocity dimension: 1 or 2.
    pub dv: usize,
    pub nv1: usize,
    /// 1 when dv = 1.
    pub nv2: usize,
    pub vmax: f64,
}

fn require_pow2(n: usize, name: &str) -> Result<()> {
    if !n.is_power_of_two() {
        return Err(Error::config(format!("{name} = {n} must be a power of two")));
    }
    Ok(())
}

impl PhaseSpaceGrid {
    pub fn new_1d1v(m_period: f64, nx: usize, nv: usize, vmax: f64) -> Result<Arc<Self>> {
        require_pow2(nx, "nx")?;
        require_pow2(nv, "nv")?;
        if m_period <= 0.0 || vmax <= 0.0 {
            return Err(Error::config("period and vmax must be positive"));
        }
        Ok(Arc::new(PhaseSpaceGrid { m_period, nx, dv: 1, nv1: nv, nv2: 1, vmax }))
    }

    pub fn new_1d2v(m_period: f64, nx: usize, nv1: usize, nv2: usize, vmax: f64) -> Result<Arc<Self>> {
        require_pow2(nx, "nx")?;
        require_pow2(nv1, "nv1")?;
        require_pow2(nv2, "nv2")?;
        if m_period <= 0.0 || vmax <= 0.0 {
            return Err(Error::config("period and vmax must be positive"));
        }
        Ok(Arc::new(PhaseSpaceGrid { m_period, nx, dv: 2, nv1, nv2, vmax }))
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.m_period / self.nx as f64
    }
    #[inline]
    pub fn dv1(&self) -> f64 {
        2.0 * self.vmax / self.nv1 as f64
    }
    #[inline]
    pub fn dv2(&self) -> f64 {
        2.0 * self.vmax / self.nv2 as f64
    }
    /// Velocity cell measure (dv1, or dv1*dv2).
    #[inline]
    pub fn vcell(&self) -> f64 {
        if self.dv == 1 {
            self.dv1()
        } else {
            self.dv1() * self.dv2()
        }
    }
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }
    #[inline]
    pub fn v1(&self, i: usize) -> f64 {
        -self.vmax + i as f64 * self.dv1()
    }
    #[inline]
    pub fn v2(&self, i: usize) -> f64 {
        -self.vmax + i as f64 * self.dv2()
    }
    #[inline]
    pub fn idx(&self, iv2: usize, iv1: usize, ix: usize) -> usize {
        (iv2 * self.nv1 + iv1) * self.nx + ix
    }
    #[inline]
    pub fn total(&self) -> usize {
        self.nx * self.nv1 * self.nv2
    }
    /// Fundamental spatial wavenumber 2 pi / M.
    #[inline]
    pub fn k_fundamental(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.m_period
    }

    /// Check the grid covers a profile's support.
    pub fn accommodates(&self, profile: &VelocityProfile) -> Result<()> {
        if self.vmax + 1e-12 < profile.vmax_decay {
            return Err(Error::config(format!(
                "grid vmax {} < profile decay radius {:.3}",
                self.vmax, profile.vmax_decay
            )));
        }
        if self.dv != profile.dv {
            return Err(Error::config("grid and profile velocity dimensions differ"));
        }
        Ok(())
    }
}

/// Relativistic velocity `v / sqrt(1 + eps^2 |v|^2)` (componentwise with
/// the full speed in the root).
#[inline]
pub fn vhat(component: f64, speed2: f64, eps: f64) -> f64 {
    component / (1.0 + eps * eps * speed2).sqrt()
}

/// Distribution plus fields at one instant.
#[derive(Debug, Clone)]
pub struct KineticState {
    pub grid: Arc<PhaseSpaceGrid>,
    pub f: Vec<f64>,
    /// Longitudinal field E1(x).
    pub e1: Vec<f64>,
    /// Transverse field E2(x); empty for dv = 1.
    pub e2: Vec<f64>,
    /// Out-of-plane magnetic field B(x); empty for dv = 1.
    pub b: Vec<f64>,
    pub s: f64,
    pub eps: f64,
}

impl KineticState {
    pub fn zeros(grid: Arc<PhaseSpaceGrid>, eps: f64) -> Self {
        let nx = grid.nx;
        let total = grid.total();
        let transverse = grid.dv == 2;
        KineticState {
            grid,
            f: vec![0.0; total],
            e1: vec![0.0; nx],
            e2: if transverse { vec![0.0; nx] } else { Vec::new() },
            b: if transverse { vec![0.0; nx] } else { Vec::new() },
            s: 0.0,
            eps,
        }
    }

    /// Homogeneous state `f = mu(v)` with zero fields.
    pub fn from_profile(
        grid: Arc<PhaseSpaceGrid>,
        profile: &VelocityProfile,
        eps: f64,
    ) -> Result<Self> {
        grid.accommodates(profile)?;
        let mut st = KineticState::zeros(grid.clone(), eps);
        let mu = sample_profile(&grid, profile);
        for iv2 in 0..grid.nv2 {
            for iv1 in 0..grid.nv1 {
                let m = mu[iv2 * grid.nv1 + iv1];
                for ix in 0..grid.nx {
                    st.f[grid.idx(iv2, iv1, ix)] = m;
                }
            }
        }
        Ok(st)
    }
}

/// Sample a profile on the velocity grid (length nv1 * nv2, layout [iv2][iv1]).
pub fn sample_profile(grid: &PhaseSpaceGrid, profile: &VelocityProfile) -> Vec<f64> {
    let mut out = vec![0.0; grid.nv1 * grid.nv2];
    for iv2 in 0..grid.nv2 {
        for iv1 in 0..grid.nv1 {
            let v = if grid.dv == 1 {
                profile.evaluate(&[grid.v1(iv1)])
            } else {
                profile.evaluate(&[grid.v1(iv1), grid.v2(iv2)])
            };
            out[iv2 * grid.nv1 + iv1] = v;
        }
    }
    out
}

/// Sample the velocity gradient of a profile on the velocity grid; returns
/// (d/dv1, d/dv2) with the second empty for dv = 1.
pub fn sample_profile_gradient(
    grid: &PhaseSpaceGrid,
    profile: &VelocityProfile,
) -> (Vec<f64>, Vec<f64>) {
    let mut g1 = vec![0.0; grid.nv1 * grid.nv2];
    let mut g2 = if grid.dv == 2 { vec![0.0; grid.nv1 * grid.nv2] } else { Vec::new() };
    for iv2 in 0..grid.nv2 {
        for iv1 in 0..grid.nv1 {
            let g = if grid.dv == 1 {
                profile.gradient(&[grid.v1(iv1)])
            } else {
                profile.gradient(&[grid.v1(iv1), grid.v2(iv2)])
            };
            g1[iv2 * grid.nv1 + iv1] = g[0];
            if grid.dv == 2 {
                g2[iv2 * grid.nv1 + iv1] = g[1];
            }
        }
    }
    (g1, g2)
}

/// Charge density and current of a state.
#[derive(Debug, Clone)]
pub struct Moments {
    pub rho: Vec<f64>,
    pub j1: Vec<f64>,
    /// Empty for dv = 1.
    pub j2: Vec<f64>,
}

/// Velocity moments with the relativistic velocity of the state's eps.
pub fn moments(state: &KineticState) -> Moments {
    moments_of(&state.grid, &state.f, state.eps)
}

/// Moments of a raw phase-space array (used for perturbations too).
pub fn moments_of(g: &PhaseSpaceGrid, f: &[f64], eps: f64) -> Moments {
    let vc = g.vcell();
    let mut rho = vec![0.0; g.nx];
    let mut j1 = vec![0.0; g.nx];
    let mut j2 = if g.dv == 2 { vec![0.0; g.nx] } else { Vec::new() };
    for iv2 in 0..g.nv2 {
        let v2 = if g.dv == 2 { g.v2(iv2) } else { 0.0 };
        for iv1 in 0..g.nv1 {
            let v1 = g.v1(iv1);
            let speed2 = v1 * v1 + v2 * v2;
            let vh1 = vhat(v1, speed2, eps);
            let vh2 = vhat(v2, speed2, eps);
            let base = (iv2 * g.nv1 + iv1) * g.nx;
            let row = &f[base..base + g.nx];
            for (ix, &fv) in row.iter().enumerate() {
                rho[ix] += fv;
                j1[ix] += vh1 * fv;
                if g.dv == 2 {
                    j2[ix] += vh2 * fv;
                }
            }
        }
    }
    for ix in 0..g.nx {
        rho[ix] *= vc;
        j1[ix] *= vc;
        if g.dv == 2 {
            j2[ix] *= vc;
        }
    }
    Moments { rho, j1, j2 }
}

/// Plain density `∫ f dv` of a raw array.
pub fn rho_of(g: &PhaseSpaceGrid, f: &[f64]) -> Vec<f64> {
    let vc = g.vcell();
    let mut rho = vec![0.0; g.nx];
    for chunk in f.chunks(g.nx) {
        for (ix, &fv) in chunk.iter().enumerate() {
            rho[ix] += fv;
        }
    }
    for r in &mut rho {
        *r *= vc;
    }
    rho
}

/// Spatially averaged mass `(1/M) ∫∫ f dx dv`; equals 1 for a normalized
/// homogeneous profile.
pub fn total_mass(state: &KineticState) -> f64 {
    let g = &state.grid;
    let sum: f64 = state.f.iter().sum();
    sum * g.vcell() / g.nx as f64
}

/// Relativistic kinetic energy density `(sqrt(1 + eps^2 |v|^2) - 1)/eps^2`,
/// with the classical limit `|v|^2 / 2` at eps = 0.
#[inline]
pub fn kinetic_energy_density(speed2: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        0.5 * speed2
    } else {
        let e2 = eps * eps;
        // rationalized to avoid cancellation for small eps^2 |v|^2
        speed2 / ((1.0 + e2 * speed2).sqrt() + 1.0)
    }
}

/// Total energy: relativistic kinetic part plus field energy
/// `1/2 ∫ (E1^2 + E2^2 + B^2) dx`.
pub fn total_energy(state: &KineticState) -> f64 {
    let g = &state.grid;
    let mut kin = 0.0;
    for iv2 in 0..g.nv2 {
        let v2 = if g.dv == 2 { g.v2(iv2) } else { 0.0 };
        for iv1 in 0..g.nv1 {
            let v1 = g.v1(iv1);
            let ke = kinetic_energy_density(v1 * v1 + v2 * v2, state.eps);
            let base = (iv2 * g.nv1 + iv1) * g.nx;
            let row = &state.f[base..base + g.nx];
            kin += ke * row.iter().sum::<f64>();
        }
    }
    kin *= g.vcell() * g.dx();
    let mut field = state.e1.iter().map(|e| e * e).sum::<f64>();
    if g.dv == 2 {
        field += state.e2.iter().map(|e| e * e).sum::<f64>();
        field += state.b.iter().map(|b| b * b).sum::<f64>();
    }
    kin + 0.5 * field * g.dx()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{make_profile, ProfileKind};
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(PhaseSpaceGrid::new_1d1v(10.0, 48, 64, 8.0).is_err());
        assert!(PhaseSpaceGrid::new_1d1v(10.0, 32, 63, 8.0).is_err());
    }

    #[test]
    fn homogeneous_moments() {
        // f = mu gives rho = 1 and j = 0
        let p = make_profile(ProfileKind::DoubleBump { a: 2.0, sigma: 1.0, tilt: 0.0 }, 1).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(10.0, 16, 512, p.vmax_decay * 1.05).unwrap();
        let st = KineticState::from_profile(grid, &p, 0.0).unwrap();
        let m = moments(&st);
        for ix in 0..st.grid.nx {
            assert_abs_diff_eq!(m.rho[ix], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.j1[ix], 0.0, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(total_mass(&st), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn moments_are_linear_in_the_perturbation() {
        // f = mu (1 + d cos(k x)) gives rho = 1 + d cos(k x)
        let p = make_profile(ProfileKind::Maxwellian { sigma: 1.0 }, 1).unwrap();
        let grid = PhaseSpaceGrid::new_1d1v(10.0, 32, 256, p.vmax_decay * 1.05).unwrap();
        let mut st = KineticState::from_profile(grid.clone(), &p, 0.0).unwrap();
        let d = 1e-3;
        let k = grid.k_fundamental();
        for iv1 in 0..grid.nv1 {
            for ix in 0..grid.nx {
                let idx = grid.idx(0, iv1, ix);
                st.f[idx] *= 1.0 + d * (k * grid.x(ix)).cos();
            }
        }
        let m = moments(&st);
        for ix in 0..grid.nx {
            assert_abs_diff_eq!(m.rho[ix], 1.0 + d * (k * grid.x(ix)).cos(), epsilon = 1e-12);
        }
    }

    #[test]
    fn relativistic_velocity_is_bounded() {
        // |vhat| <= min(|v|, 1/eps) pointwise
        let grid = PhaseSpaceGrid::new_1d2v(10.0, 8, 64, 32, 9.0).unwrap();
        for eps in [1e-3, 0.1, 0.5] {
            for iv2 in 0..grid.nv2 {
                for iv1 in 0..grid.nv1 {
                    let v1 = grid.v1(iv1);
                    let v2 = grid.v2(iv2);
                    let s2 = v1 * v1 + v2 * v2;
                    let vh = (vhat(v1, s2, eps).powi(2) + vhat(v2, s2, eps).powi(2)).sqrt();
                    assert!(vh <= s2.sqrt() + 1e-15);
                    assert!(vh <= 1.0 / eps + 1e-15);
                }
            }
        }
    }

    #[test]
    fn kinetic_energy_density_matches_classical_limit() {
        for &v2 in &[0.1, 1.0, 25.0] {
            assert_abs_diff_eq!(
                kinetic_energy_density(v2, 1e-8),
                0.5 * v2,
                epsilon = 1e-8
            );
        }
        // exact relativistic value at eps = 1
        let v2 = 3.0;
        assert_abs_diff_eq!(kinetic_energy_density(v2, 1.0), 1.0, epsilon = 1e-14);
    }
}
