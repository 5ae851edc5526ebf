//! Benchmark initial conditions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::equilibrium::discrete_maxwellian_into;
use crate::error::{KineticError, Result};
use crate::grid::{BoundaryKind, CellDistribution, Moments, SpatialGrid, VelocityGrid};
use crate::schemes::{SchemeKind, SchemeState};

/// Region `[ACTIVE_START, ACTIVE_END)` carrying the oscillating velocity bands.
pub const ACTIVE_START: f64 = 0.25;
pub const ACTIVE_END: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Smooth,
    Sod,
    Oscillating,
}

impl ProblemKind {
    pub fn label(&self) -> &'static str {
        match self {
            ProblemKind::Smooth => "smooth",
            ProblemKind::Sod => "sod",
            ProblemKind::Oscillating => "oscillating",
        }
    }

    pub fn boundary(&self) -> BoundaryKind {
        match self {
            ProblemKind::Sod => BoundaryKind::Outflow,
            _ => BoundaryKind::Periodic,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProblemKind {
    type Err = KineticError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smooth" => Ok(ProblemKind::Smooth),
            "sod" | "riemann" => Ok(ProblemKind::Sod),
            "oscillating" | "oscillation" => Ok(ProblemKind::Oscillating),
            other => Err(KineticError::InvalidInput(format!(
                "unknown problem '{other}'"
            ))),
        }
    }
}

/// Physical setup of one benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub domain_length: f64,
    pub nu: f64,
    pub t_final: f64,
    /// Symmetric velocity truncation `[-v_max, v_max]`.
    pub v_max: f64,
    /// Band width of the oscillating problem.
    pub delta: f64,
    pub boundary: BoundaryKind,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind) -> Self {
        let (nu, t_final, v_max) = match kind {
            ProblemKind::Smooth => (1e4, 0.025, 15.0),
            ProblemKind::Sod => (1e4, 0.07, 20.0),
            ProblemKind::Oscillating => (1e2, 0.025, 30.0),
        };
        Self {
            kind,
            domain_length: 1.0,
            nu,
            t_final,
            v_max,
            delta: 0.02,
            boundary: kind.boundary(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.domain_length > 0.0)
            || !(self.v_max > 0.0)
            || !(self.nu >= 0.0)
            || !(self.t_final >= 0.0)
        {
            return Err(KineticError::InvalidInput(format!(
                "invalid problem parameters {self:?}"
            )));
        }
        if self.kind == ProblemKind::Oscillating && !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(KineticError::InvalidInput(format!(
                "delta must lie in (0, 0.5], got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Primitive variables `(rho, u, T)` at `x`.
    pub fn primitives(&self, x: f64) -> (f64, f64, f64) {
        match self.kind {
            ProblemKind::Smooth => smooth_primitives(x / self.domain_length),
            ProblemKind::Sod => sod_primitives(x, self.domain_length),
            ProblemKind::Oscillating => (1.0, oscillating_velocity(x, self.delta), 5.0),
        }
    }

    pub fn spatial_grid(&self, n_cells: usize) -> Result<SpatialGrid> {
        SpatialGrid::new(n_cells, self.domain_length, self.boundary)
    }

    pub fn velocity_grid(&self, n_velocities: usize) -> Result<VelocityGrid> {
        VelocityGrid::symmetric(n_velocities, self.v_max)
    }

    /// Equilibrium initial data at the cell centres.
    pub fn initial_distribution(
        &self,
        grid: &SpatialGrid,
        vgrid: &VelocityGrid,
    ) -> Result<CellDistribution> {
        self.validate()?;
        if self.kind == ProblemKind::Oscillating {
            warn_if_truncated(self.delta);
        }
        equilibrium_field(grid, vgrid, |x| self.primitives(x))
    }

    /// Solver state on `n_cells` cells and `n_velocities` lattice points.
    pub fn initial_state(
        &self,
        scheme: SchemeKind,
        n_cells: usize,
        n_velocities: usize,
    ) -> Result<SchemeState> {
        let grid = self.spatial_grid(n_cells)?;
        let vgrid = self.velocity_grid(n_velocities)?;
        let f = self.initial_distribution(&grid, &vgrid)?;
        SchemeState::new(scheme, f, vgrid, grid)
    }
}

fn smooth_primitives(x: f64) -> (f64, f64, f64) {
    let s = 0.5 * (2.0 * PI * x).sin();
    (1.0 + s, 0.0, 5.0 + s)
}

fn sod_primitives(x: f64, length: f64) -> (f64, f64, f64) {
    if x <= 0.5 * length {
        (1.0, 0.0, 5.0)
    } else {
        (0.125, 0.0, 4.0)
    }
}

/// Number of bands of width `delta` needed to cover the active region.
pub fn band_count(delta: f64) -> usize {
    let n = (ACTIVE_END - ACTIVE_START) / delta;
    let r = n.round();
    if (n - r).abs() < 1e-9 {
        r as usize
    } else {
        n.ceil() as usize
    }
}

fn warn_if_truncated(delta: f64) {
    let n = (ACTIVE_END - ACTIVE_START) / delta;
    if (n - n.round()).abs() >= 1e-9 {
        log::warn!("delta = {delta} does not divide the active region; the last band is truncated at {ACTIVE_END}");
    }
}

/// Stair-case velocity: `+1` on even bands, `-1` on odd bands, `0` outside.
pub fn oscillating_velocity(x: f64, delta: f64) -> f64 {
    if !(ACTIVE_START..ACTIVE_END).contains(&x) {
        return 0.0;
    }
    let m = ((x - ACTIVE_START) / delta).floor() as usize;
    if m >= band_count(delta) {
        0.0
    } else if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Per-cell discrete Maxwellians of the primitive field `prim(x)`.
pub fn equilibrium_field(
    grid: &SpatialGrid,
    vgrid: &VelocityGrid,
    prim: impl Fn(f64) -> (f64, f64, f64),
) -> Result<CellDistribution> {
    let mut f = CellDistribution::zeros(vgrid.len(), grid.len());
    let mut buf = vec![0.0; vgrid.len()];
    for j in 0..grid.len() {
        let (rho, u, t) = prim(grid.center(j));
        discrete_maxwellian_into(&Moments::from_primitive(rho, u, t), vgrid, &mut buf)?;
        for (k, &e) in buf.iter().enumerate() {
            f.set(j, k, e);
        }
    }
    Ok(f)
}

pub fn init_smooth(grid: &SpatialGrid, vgrid: &VelocityGrid) -> Result<CellDistribution> {
    ProblemSpec::new(ProblemKind::Smooth).initial_distribution(grid, vgrid)
}

pub fn init_sod(grid: &SpatialGrid, vgrid: &VelocityGrid) -> Result<CellDistribution> {
    ProblemSpec::new(ProblemKind::Sod).initial_distribution(grid, vgrid)
}

pub fn init_oscillating(
    grid: &SpatialGrid,
    vgrid: &VelocityGrid,
    delta: f64,
) -> Result<CellDistribution> {
    ProblemSpec {
        delta,
        ..ProblemSpec::new(ProblemKind::Oscillating)
    }
    .initial_distribution(grid, vgrid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{compute_moments, total_moments};
    use approx::assert_relative_eq;

    #[test]
    fn smooth_profile_values() {
        let (r, u, t) = smooth_primitives(0.25);
        assert_relative_eq!(r, 1.5);
        assert_eq!(u, 0.0);
        assert_relative_eq!(t, 5.5);
        assert_eq!(smooth_primitives(0.0), (1.0, 0.0, 5.0));
    }

    #[test]
    fn smooth_mass_is_one() {
        let grid = SpatialGrid::new(200, 1.0, BoundaryKind::Periodic).unwrap();
        let vgrid = VelocityGrid::symmetric(50, 15.0).unwrap();
        let f = init_smooth(&grid, &vgrid).unwrap();
        assert_relative_eq!(total_moments(&f, &vgrid, &grid).rho, 1.0, epsilon = 1e-12);
        let m = compute_moments(&f, &vgrid).unwrap();
        for j in 0..200 {
            let (r, _, t) = smooth_primitives(grid.center(j));
            assert_relative_eq!(m.rho[j], r, max_relative = 1e-12);
            assert_relative_eq!(m.temperature[j], t, max_relative = 1e-11);
        }
    }

    #[test]
    fn sod_states_and_tie_break() {
        assert_eq!(sod_primitives(0.5, 1.0), (1.0, 0.0, 5.0));
        assert_eq!(sod_primitives(0.5000001, 1.0), (0.125, 0.0, 4.0));
        let grid = SpatialGrid::new(300, 1.0, BoundaryKind::Outflow).unwrap();
        let vgrid = VelocityGrid::symmetric(50, 20.0).unwrap();
        let m = compute_moments(&init_sod(&grid, &vgrid).unwrap(), &vgrid).unwrap();
        assert_relative_eq!(m.temperature[0], 5.0, max_relative = 1e-12);
        assert_relative_eq!(m.temperature[299], 4.0, max_relative = 1e-12);
        assert_relative_eq!(m.raw_second_moment()[0], 5.0, max_relative = 1e-12);
        assert_relative_eq!(m.raw_second_moment()[299], 0.5, max_relative = 1e-12);
        assert_relative_eq!(m.energy[0], 2.5, max_relative = 1e-12);
        assert_relative_eq!(m.energy[299], 0.25, max_relative = 1e-12);
    }

    #[test]
    fn oscillating_bands() {
        assert_eq!(band_count(0.02), 25);
        assert_eq!(oscillating_velocity(0.1, 0.02), 0.0);
        assert_eq!(oscillating_velocity(0.26, 0.02), 1.0);
        assert_eq!(oscillating_velocity(0.275, 0.02), -1.0);
        assert_eq!(oscillating_velocity(0.745, 0.02), 1.0);
        assert_eq!(oscillating_velocity(0.8, 0.02), 0.0);
        assert_eq!(band_count(0.03), 17);
    }

    #[test]
    fn oscillating_momentum_and_exact_velocities() {
        let grid = SpatialGrid::new(600, 1.0, BoundaryKind::Periodic).unwrap();
        let vgrid = VelocityGrid::symmetric(50, 30.0).unwrap();
        let f = init_oscillating(&grid, &vgrid, 0.02).unwrap();
        let tot = total_moments(&f, &vgrid, &grid);
        assert_relative_eq!(tot.momentum, 0.02, max_relative = 1e-11);
        let m = compute_moments(&f, &vgrid).unwrap();
        for u in &m.velocity {
            let a = u.abs();
            assert!(a < 1e-12 || (a - 1.0).abs() < 1e-12, "{u}");
        }
    }

    #[test]
    fn names_parse() {
        for k in [
            ProblemKind::Smooth,
            ProblemKind::Sod,
            ProblemKind::Oscillating,
        ] {
            assert_eq!(k.label().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("kelvin".parse::<ProblemKind>().is_err());
    }
}
