//! Split transport/collision steps for the four schemes.

use std::fmt;
use std::str::FromStr;

use ndarray::parallel::prelude::*;
use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::equilibrium::discrete_maxwellian_into;
use crate::error::{KineticError, Result};
use crate::grid::{
    compute_moments, BoundaryKind, CellDistribution, MomentField, Moments, SpatialGrid,
    VelocityGrid,
};
use crate::reconstruction::{
    courant, departure_average, evaluate_cell_reconstruction, van_leer_slopes_row,
    NodalDistribution, NodeKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    SlUpwind,
    SlMuscl,
    Fks,
    Rfks,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::SlUpwind,
        SchemeKind::SlMuscl,
        SchemeKind::Fks,
        SchemeKind::Rfks,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::SlUpwind => "sl_upwind",
            SchemeKind::SlMuscl => "sl_muscl",
            SchemeKind::Fks => "fks",
            SchemeKind::Rfks => "rfks",
        }
    }

    pub fn is_semi_lagrangian(&self) -> bool {
        matches!(self, SchemeKind::SlUpwind | SchemeKind::SlMuscl)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeKind {
    type Err = KineticError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "sl_upwind" | "upwind" => Ok(SchemeKind::SlUpwind),
            "sl_muscl" | "muscl" => Ok(SchemeKind::SlMuscl),
            "fks" => Ok(SchemeKind::Fks),
            "rfks" | "r_fks" => Ok(SchemeKind::Rfks),
            other => Err(KineticError::InvalidInput(format!(
                "unknown scheme '{other}'"
            ))),
        }
    }
}

/// Storage of the distribution: cell-centre values or shifted nodes.
#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Cells(CellDistribution),
    Nodes(NodalDistribution),
}

/// Complete solver state for one scheme.
#[derive(Debug, Clone)]
pub struct SchemeState {
    scheme: SchemeKind,
    repr: Representation,
    vgrid: VelocityGrid,
    sgrid: SpatialGrid,
    step_count: u64,
    time: f64,
    /// Rescale the resolved node equilibria so each velocity slice keeps
    /// the mass of the cell-centre equilibria (R-FKS, periodic only).
    conservative_nodes: bool,
}

impl SchemeState {
    /// State whose cell-centre values are `f`.
    ///
    /// The fast kinetic schemes use `f` as node values, i.e. a piecewise
    /// constant (FKS) or continuous piecewise linear (R-FKS) function through
    /// the centre values.
    pub fn new(
        scheme: SchemeKind,
        f: CellDistribution,
        vgrid: VelocityGrid,
        sgrid: SpatialGrid,
    ) -> Result<Self> {
        if f.n_velocities() != vgrid.len() || f.n_cells() != sgrid.len() {
            return Err(KineticError::InvalidInput(format!(
                "distribution shape {}x{} does not match grids {}x{}",
                f.n_velocities(),
                f.n_cells(),
                vgrid.len(),
                sgrid.len()
            )));
        }
        let repr = match scheme {
            SchemeKind::SlUpwind | SchemeKind::SlMuscl => Representation::Cells(f),
            SchemeKind::Fks => Representation::Nodes(NodalDistribution::from_cells(
                NodeKind::PiecewiseConstant,
                &f,
                &vgrid,
                &sgrid,
            )?),
            SchemeKind::Rfks => Representation::Nodes(NodalDistribution::from_cells(
                NodeKind::PiecewiseLinear,
                &f,
                &vgrid,
                &sgrid,
            )?),
        };
        Ok(Self {
            scheme,
            repr,
            vgrid,
            sgrid,
            step_count: 0,
            time: 0.0,
            conservative_nodes: true,
        })
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn vgrid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    pub fn sgrid(&self) -> &SpatialGrid {
        &self.sgrid
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Turns the per-velocity mass rescaling of R-FKS node equilibria on or off.
    pub fn set_conservative_nodes(&mut self, on: bool) {
        self.conservative_nodes = on;
    }

    /// Distribution at the cell centres.
    pub fn cell_values(&self) -> CellDistribution {
        match &self.repr {
            Representation::Cells(f) => f.clone(),
            Representation::Nodes(nd) => nd.sample_centers(&self.sgrid),
        }
    }

    pub fn moments(&self) -> Result<MomentField> {
        compute_moments(&self.cell_values(), &self.vgrid)
    }

    /// Distribution evaluated at arbitrary points of `[0, L]` through the
    /// scheme's own reconstruction.
    pub fn sample_points(&self, points: &[f64]) -> Result<CellDistribution> {
        match &self.repr {
            Representation::Nodes(nd) => nd.sample_points(points),
            Representation::Cells(f) => {
                let mut out = CellDistribution::zeros(f.n_velocities(), points.len());
                let mut slopes = Array1::zeros(f.n_cells());
                for k in 0..f.n_velocities() {
                    let row = f.velocity_slice(k);
                    let s = if self.scheme == SchemeKind::SlMuscl {
                        van_leer_slopes_row(row, &self.sgrid, slopes.view_mut());
                        Some(slopes.view())
                    } else {
                        None
                    };
                    for (i, &x) in points.iter().enumerate() {
                        out.set(i, k, evaluate_cell_reconstruction(row, s, &self.sgrid, x)?);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Density at arbitrary points of `[0, L]`.
    pub fn density_at(&self, points: &[f64]) -> Result<Vec<f64>> {
        let f = self.sample_points(points)?;
        let dv = self.vgrid.dv();
        Ok((0..points.len())
            .map(|i| dv * f.cell_column(i).sum())
            .collect())
    }

    /// One transport/collision step of size `dt` with collision frequency `nu`.
    pub fn step(&mut self, nu: f64, dt: f64) -> Result<()> {
        match self.scheme {
            SchemeKind::SlUpwind | SchemeKind::SlMuscl => step_sl(self, nu, dt),
            SchemeKind::Fks => step_fks(self, nu, dt),
            SchemeKind::Rfks => step_rfks(self, nu, dt),
        }
    }

    /// Advances to `t_final` with steps of `dt`, truncating the last one.
    /// Returns the number of steps taken.
    pub fn run(&mut self, nu: f64, t_final: f64, dt: f64) -> Result<u64> {
        let plan = StepPlan::new(t_final - self.time, dt)?;
        for _ in 0..plan.full_steps {
            self.step(nu, dt)?;
        }
        if let Some(last) = plan.last_step {
            self.step(nu, last)?;
        }
        Ok(plan.len())
    }

    fn advance_clock(&mut self, dt: f64) {
        self.step_count += 1;
        self.time += dt;
    }
}

/// Number of full steps and the truncated final step reaching a time span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub full_steps: u64,
    pub last_step: Option<f64>,
}

impl StepPlan {
    pub fn new(span: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(KineticError::InvalidInput(format!(
                "time step must be positive (dt = {dt})"
            )));
        }
        if !(span >= 0.0) {
            return Err(KineticError::InvalidInput(format!(
                "time span must be non-negative ({span})"
            )));
        }
        let full_steps = (span / dt + 1e-9).floor() as u64;
        let rest = span - full_steps as f64 * dt;
        let last_step = if rest > 1e-12 * span.max(dt) {
            Some(rest)
        } else {
            None
        };
        Ok(Self {
            full_steps,
            last_step,
        })
    }

    pub fn len(&self) -> u64 {
        self.full_steps + u64::from(self.last_step.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `dt = cfl dx / max |v|`.
pub fn compute_dt(vgrid: &VelocityGrid, grid: &SpatialGrid, cfl: f64) -> Result<f64> {
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(KineticError::InvalidInput(format!(
            "cfl must lie in (0, 1], got {cfl}"
        )));
    }
    Ok(cfl * grid.dx() / vgrid.max_speed())
}

/// Discrete Maxwellians of every cell, stored cell-major (`[[j, k]]`).
fn cell_equilibria(f: &CellDistribution, vgrid: &VelocityGrid) -> Result<Array2<f64>> {
    let field = compute_moments(f, vgrid)?;
    let mut eq = Array2::zeros((f.n_cells(), f.n_velocities()));
    eq.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .try_for_each(|(j, mut row)| {
            let target = Moments::new(field.rho[j], field.momentum[j], field.energy[j]);
            let out = row.as_slice_mut().expect("equilibrium rows are contiguous");
            discrete_maxwellian_into(&target, vgrid, out).map(|_| ())
        })?;
    Ok(eq)
}

/// Semi-Lagrangian step on cell-centre values.
pub fn step_sl(state: &mut SchemeState, nu: f64, dt: f64) -> Result<()> {
    if !state.scheme.is_semi_lagrangian() {
        return Err(KineticError::InvalidInput(format!(
            "{} is not a semi-Lagrangian scheme",
            state.scheme
        )));
    }
    courant(state.vgrid.max_speed(), dt, &state.sgrid)?;
    let limited = state.scheme == SchemeKind::SlMuscl;
    let Representation::Cells(f) = &mut state.repr else {
        unreachable!("semi-Lagrangian states hold cell values");
    };
    let sgrid = &state.sgrid;
    let vgrid = &state.vgrid;
    let dx = sgrid.dx();
    let old = f.as_array();
    let mut new = Array2::zeros(old.raw_dim());
    new.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(old.axis_iter(Axis(0)).into_par_iter())
        .enumerate()
        .for_each(|(k, (mut out, row))| {
            let c = (vgrid.velocity(k) * dt / dx).clamp(-1.0, 1.0);
            let slopes = limited.then(|| {
                let mut s = Array1::zeros(row.len());
                van_leer_slopes_row(row, sgrid, s.view_mut());
                s
            });
            let sv = slopes.as_ref().map(|s| s.view());
            for j in 0..row.len() {
                out[j] = departure_average(row, sv, sgrid, c, j);
            }
        });
    let mut fstar = CellDistribution::from_array(new);
    if nu > 0.0 {
        let eq = cell_equilibria(&fstar, vgrid)?;
        let w = (-nu * dt).exp();
        fstar
            .as_array_mut()
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = w * *v + (1.0 - w) * eq[[j, k]];
                }
            });
    }
    *f = fstar;
    state.advance_clock(dt);
    Ok(())
}

fn nodes_mut(state: &mut SchemeState, expected: SchemeKind) -> Result<&mut NodalDistribution> {
    if state.scheme != expected {
        return Err(KineticError::InvalidInput(format!(
            "state holds {}, expected {expected}",
            state.scheme
        )));
    }
    match &mut state.repr {
        Representation::Nodes(nd) => Ok(nd),
        Representation::Cells(_) => unreachable!("fast kinetic states hold nodes"),
    }
}

/// Fast kinetic step with piecewise constant pieces.
pub fn step_fks(state: &mut SchemeState, nu: f64, dt: f64) -> Result<()> {
    let sgrid = state.sgrid.clone();
    let vgrid = state.vgrid.clone();
    let nd = nodes_mut(state, SchemeKind::Fks)?;
    nd.shift(dt);
    if nu > 0.0 {
        let fstar = nd.sample_centers(&sgrid);
        let eq = cell_equilibria(&fstar, &vgrid)?;
        let w = (-nu * dt).exp();
        let m = nd.n_cells();
        let shifts: Vec<(usize, f64)> = (0..nd.n_velocities())
            .map(|k| nd.node_cell_shift(k))
            .collect();
        nd.values_mut()
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut g)| {
                let (q, theta) = shifts[k];
                let back = usize::from(theta > 0.5);
                // Node j owns the centre of cell j + q (+1 past the half cell).
                for (j, gj) in g.iter_mut().enumerate() {
                    let i = (j + q + back) % m;
                    *gj = w * *gj + (1.0 - w) * eq[[i, k]];
                }
            });
    }
    state.advance_clock(dt);
    Ok(())
}

/// Equilibrium value at a node lying between two cell centres.
///
/// `e_left`/`e_right` are the equilibria at the bracketing centres,
/// `sigma_left`/`sigma_right` the slopes of the distribution segments through
/// those centres and `theta` the node's distance from the left centre in
/// units of `dx`.
pub fn resolve_node_maxwellian(
    e_left: f64,
    e_right: f64,
    sigma_left: f64,
    sigma_right: f64,
    theta: f64,
    dx: f64,
) -> f64 {
    if theta == 0.0 {
        // Node sits on the centre itself.
        return e_left;
    }
    let minus = e_left + sigma_left * theta * dx;
    let plus = e_right - sigma_right * (1.0 - theta) * dx;
    if sigma_left * sigma_right >= 0.0 {
        (1.0 - theta) * minus + theta * plus
    } else if sigma_left > 0.0 {
        minus.min(plus)
    } else {
        minus.max(plus)
    }
}

/// Fast kinetic step with a continuous piecewise linear function whose
/// collisions act at the moving nodes.
pub fn step_rfks(state: &mut SchemeState, nu: f64, dt: f64) -> Result<()> {
    let sgrid = state.sgrid.clone();
    let vgrid = state.vgrid.clone();
    let rescale = state.conservative_nodes && sgrid.boundary() == BoundaryKind::Periodic;
    let nd = nodes_mut(state, SchemeKind::Rfks)?;
    nd.shift(dt);
    if nu > 0.0 {
        let fstar = nd.sample_centers(&sgrid);
        let eq = cell_equilibria(&fstar, &vgrid)?;
        let w = (-nu * dt).exp();
        let shifts: Vec<(usize, f64)> = (0..nd.n_velocities())
            .map(|k| nd.node_cell_shift(k))
            .collect();
        let periodic = sgrid.boundary() == BoundaryKind::Periodic;
        let dx = sgrid.dx();
        nd.values_mut()
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(k, mut g)| {
                let e = eq.column(k);
                let resolved = resolve_row(g.view(), e, shifts[k], dx, periodic, rescale);
                for (gj, r) in g.iter_mut().zip(resolved) {
                    *gj = w * *gj + (1.0 - w) * r;
                }
            });
    }
    state.advance_clock(dt);
    Ok(())
}

/// Resolved equilibria at every node of one velocity slice.
fn resolve_row(
    g: ArrayView1<'_, f64>,
    e: ArrayView1<'_, f64>,
    (q, theta): (usize, f64),
    dx: f64,
    periodic: bool,
    rescale: bool,
) -> Vec<f64> {
    let m = g.len();
    let inv_dx = 1.0 / dx;
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let i = (j + q) % m;
        let jm = (j + m - 1) % m;
        let jp = (j + 1) % m;
        if periodic {
            let sl = (g[j] - g[jm]) * inv_dx;
            let sr = (g[jp] - g[j]) * inv_dx;
            out.push(resolve_node_maxwellian(
                e[i],
                e[(i + 1) % m],
                sl,
                sr,
                theta,
                dx,
            ));
            continue;
        }
        // Outflow: nodes beyond the last centre see the nearest edge state.
        if i == m - 1 {
            out.push(if theta < 0.5 { e[m - 1] } else { e[0] });
            continue;
        }
        // Segments crossing the domain edge carry no slope.
        let sl = if i == 0 && theta < 0.5 {
            0.0
        } else {
            (g[j] - g[jm]) * inv_dx
        };
        let sr = if i == m - 2 && theta >= 0.5 {
            0.0
        } else {
            (g[jp] - g[j]) * inv_dx
        };
        out.push(resolve_node_maxwellian(e[i], e[i + 1], sl, sr, theta, dx));
    }
    if rescale {
        let target: f64 = e.sum();
        let got: f64 = out.iter().sum();
        if got > 0.0 && target > 0.0 {
            let ratio = target / got;
            for v in &mut out {
                *v *= ratio;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::discrete_maxwellian;
    use crate::grid::total_moments;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn uniform_state(scheme: SchemeKind, m: usize, boundary: BoundaryKind) -> SchemeState {
        let vgrid = VelocityGrid::symmetric(20, 12.0).unwrap();
        let sgrid = SpatialGrid::new(m, 1.0, boundary).unwrap();
        let (e, _) = discrete_maxwellian(&Moments::from_primitive(1.0, 0.3, 5.0), &vgrid).unwrap();
        let f = CellDistribution::from_fn(vgrid.len(), m, |_, k| e[k]);
        SchemeState::new(scheme, f, vgrid, sgrid).unwrap()
    }

    fn smooth_state(scheme: SchemeKind, m: usize) -> SchemeState {
        let vgrid = VelocityGrid::symmetric(20, 12.0).unwrap();
        let sgrid = SpatialGrid::new(m, 1.0, BoundaryKind::Periodic).unwrap();
        let mut f = CellDistribution::zeros(vgrid.len(), m);
        for j in 0..m {
            let s = (2.0 * std::f64::consts::PI * sgrid.center(j)).sin();
            let (e, _) = discrete_maxwellian(
                &Moments::from_primitive(1.0 + 0.5 * s, 0.2 * s, 5.0 + 0.5 * s),
                &vgrid,
            )
            .unwrap();
            for k in 0..vgrid.len() {
                f.set(j, k, e[k]);
            }
        }
        SchemeState::new(scheme, f, vgrid, sgrid).unwrap()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in SchemeKind::ALL {
            assert_eq!(s.label().parse::<SchemeKind>().unwrap(), s);
        }
        assert_eq!("R-FKS".parse::<SchemeKind>().unwrap(), SchemeKind::Rfks);
        assert!("weno".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn dt_examples() {
        let v = VelocityGrid::symmetric(50, 20.0).unwrap();
        let g = SpatialGrid::new(300, 1.0, BoundaryKind::Outflow).unwrap();
        assert_relative_eq!(
            compute_dt(&v, &g, 1.0).unwrap(),
            1.0 / 6000.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            compute_dt(&v, &g, 0.5).unwrap(),
            0.5 / 6000.0,
            max_relative = 1e-14
        );
        let v = VelocityGrid::symmetric(50, 15.0).unwrap();
        let g = SpatialGrid::new(6400, 1.0, BoundaryKind::Periodic).unwrap();
        assert_relative_eq!(
            compute_dt(&v, &g, 1.0).unwrap(),
            1.0417e-5,
            max_relative = 1e-4
        );
        assert!(compute_dt(&v, &g, 1.5).is_err());
        assert!(compute_dt(&v, &g, 0.0).is_err());
    }

    #[test]
    fn step_plan_truncates_last_step() {
        let p = StepPlan::new(1.0, 0.3).unwrap();
        assert_eq!(p.full_steps, 3);
        assert_relative_eq!(p.last_step.unwrap(), 0.1, epsilon = 1e-12);
        let p = StepPlan::new(0.07, 0.07 / 420.0).unwrap();
        assert_eq!((p.full_steps, p.last_step), (420, None));
        assert!(StepPlan::new(0.0, 0.1).unwrap().is_empty());
    }

    #[test]
    fn run_lands_on_final_time() {
        let mut s = uniform_state(SchemeKind::Fks, 10, BoundaryKind::Periodic);
        let n = s.run(10.0, 0.05, 0.007).unwrap();
        assert_eq!(n, 8);
        assert_relative_eq!(s.time(), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn resolve_examples() {
        // sigma_left > 0 > sigma_right with E- = 1.2, E+ = 1.0.
        let dx = 0.1;
        let theta = 0.5;
        let (sl, sr) = (2.0, -2.0);
        let el = 1.2 - sl * theta * dx;
        let er = 1.0 + sr * (1.0 - theta) * dx;
        assert_relative_eq!(
            resolve_node_maxwellian(el, er, sl, sr, theta, dx),
            1.0,
            epsilon = 1e-15
        );
        let (sl, sr) = (-1.0, 1.0);
        let el = 0.8 - sl * theta * dx;
        let er = 0.9 + sr * (1.0 - theta) * dx;
        assert_relative_eq!(
            resolve_node_maxwellian(el, er, sl, sr, theta, dx),
            0.9,
            epsilon = 1e-15
        );
        // Equal one-sided states average to themselves.
        let c = 0.7;
        let (sl, sr) = (0.3, 0.8);
        let v = resolve_node_maxwellian(c - sl * 0.3 * dx, c + sr * 0.7 * dx, sl, sr, 0.3, dx);
        assert_relative_eq!(v, c, epsilon = 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        for scheme in SchemeKind::ALL {
            for boundary in [BoundaryKind::Periodic, BoundaryKind::Outflow] {
                let mut s = uniform_state(scheme, 16, boundary);
                let before = s.cell_values();
                let dt = compute_dt(s.vgrid(), s.sgrid(), 0.9).unwrap();
                for _ in 0..5 {
                    s.step(1e4, dt).unwrap();
                }
                let after = s.cell_values();
                for (a, b) in before.as_array().iter().zip(after.as_array()) {
                    assert!((a - b).abs() <= 1e-12, "{scheme} {boundary:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn every_scheme_conserves() {
        for scheme in SchemeKind::ALL {
            for nu in [0.0, 50.0, 1e4] {
                let mut s = smooth_state(scheme, 32);
                let t0 = total_moments(&s.cell_values(), s.vgrid(), s.sgrid());
                let dt = compute_dt(s.vgrid(), s.sgrid(), 0.8).unwrap();
                for _ in 0..20 {
                    s.step(nu, dt).unwrap();
                }
                let t1 = total_moments(&s.cell_values(), s.vgrid(), s.sgrid());
                assert_relative_eq!(t0.rho, t1.rho, max_relative = 1e-12);
                assert_relative_eq!(t0.energy, t1.energy, max_relative = 1e-12);
                assert!(
                    (t0.momentum - t1.momentum).abs() <= 1e-12 * t0.rho.max(1.0),
                    "{scheme} nu={nu}"
                );
            }
        }
    }

    #[test]
    fn infinite_relaxation_gives_cell_equilibria() {
        for scheme in [SchemeKind::SlUpwind, SchemeKind::SlMuscl, SchemeKind::Fks] {
            let mut s = smooth_state(scheme, 24);
            let dt = compute_dt(s.vgrid(), s.sgrid(), 1.0).unwrap();
            let mut transported = s.clone();
            transported.step(0.0, dt).unwrap();
            let expected = cell_equilibria(&transported.cell_values(), s.vgrid()).unwrap();
            s.step(700.0 / dt, dt).unwrap();
            let got = s.cell_values();
            for j in 0..24 {
                for k in 0..s.vgrid().len() {
                    assert!((got.get(j, k) - expected[[j, k]]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn half_relaxation_averages() {
        let mut s = smooth_state(SchemeKind::SlMuscl, 16);
        let dt = compute_dt(s.vgrid(), s.sgrid(), 0.6).unwrap();
        let mut free = s.clone();
        free.step(0.0, dt).unwrap();
        let fstar = free.cell_values();
        let eq = cell_equilibria(&fstar, s.vgrid()).unwrap();
        s.step(std::f64::consts::LN_2 / dt, dt).unwrap();
        let got = s.cell_values();
        for j in 0..16 {
            for k in 0..s.vgrid().len() {
                assert_relative_eq!(
                    got.get(j, k),
                    0.5 * (fstar.get(j, k) + eq[[j, k]]),
                    max_relative = 1e-13,
                    epsilon = 1e-300
                );
            }
        }
    }

    /// Independent scalar form of the node rule on an explicit geometry.
    fn brute_force_resolve(
        node_x: f64,
        centers: &[f64],
        e: &[f64],
        nodes: &[(f64, f64)],
        length: f64,
        dx: f64,
    ) -> f64 {
        let m = centers.len();
        // Left centre: the last centre at or before the node, cyclically.
        let (li, dl) = (0..m)
            .map(|i| (i, (node_x - centers[i]).rem_euclid(length)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let ri = (li + 1) % m;
        let slope_through = |x: f64| {
            // Segment of the node polyline containing x.
            let (a, _) = nodes
                .iter()
                .map(|&(p, _)| (p, (x - p).rem_euclid(length)))
                .filter(|&(_, d)| d < dx)
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let ga = nodes.iter().find(|n| n.0 == a).unwrap().1;
            let gb = nodes
                .iter()
                .find(|n| ((n.0 - a).rem_euclid(length) - dx).abs() < 1e-9)
                .unwrap()
                .1;
            (gb - ga) / dx
        };
        let sl = slope_through(centers[li]);
        let sr = slope_through(centers[ri]);
        let em = e[li] + sl * dl;
        let ep = e[ri] + sr * (dl - dx);
        if sl * sr >= 0.0 {
            ((dx - dl) * em + dl * ep) / dx
        } else if sl > 0.0 {
            em.min(ep)
        } else {
            em.max(ep)
        }
    }

    #[test]
    fn rfks_node_update_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let vgrid = VelocityGrid::symmetric(9, 6.0).unwrap();
        let sgrid = SpatialGrid::new(4, 1.0, BoundaryKind::Periodic).unwrap();
        for _ in 0..20 {
            let (e, _) =
                discrete_maxwellian(&Moments::from_primitive(1.0, 0.2, 2.0), &vgrid).unwrap();
            let f = CellDistribution::from_fn(9, 4, |_, k| e[k] * rng.gen_range(0.5..1.5));
            let mut s =
                SchemeState::new(SchemeKind::Rfks, f, vgrid.clone(), sgrid.clone()).unwrap();
            s.set_conservative_nodes(false);
            let dt = rng.gen_range(0.01..0.25) * sgrid.dx() / 6.0;
            let nu = std::f64::consts::LN_2 / dt;

            let mut free = s.clone();
            free.step(0.0, dt).unwrap();
            let Representation::Nodes(shifted) = free.representation() else {
                unreachable!()
            };
            let fstar = free.cell_values();
            let eq = cell_equilibria(&fstar, &vgrid).unwrap();

            s.step(nu, dt).unwrap();
            let Representation::Nodes(after) = s.representation() else {
                unreachable!()
            };
            let centers = sgrid.centers();
            for k in 0..9 {
                let offset = shifted.offset(k);
                let g = shifted.node_values(k);
                let nodes: Vec<(f64, f64)> = (0..4)
                    .map(|j| ((centers[j] + offset).rem_euclid(1.0), g[j]))
                    .collect();
                let e: Vec<f64> = (0..4).map(|i| eq[[i, k]]).collect();
                for j in 0..4 {
                    let r = brute_force_resolve(nodes[j].0, &centers, &e, &nodes, 1.0, sgrid.dx());
                    assert_relative_eq!(
                        after.node_values(k)[j],
                        0.5 * (g[j] + r),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn integer_shift_agreement() {
        // With |v| dt = dx every scheme reduces to an exact index shift.
        let vgrid = VelocityGrid::symmetric(3, 1.0).unwrap();
        let sgrid = SpatialGrid::new(8, 1.0, BoundaryKind::Periodic).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = CellDistribution::from_fn(3, 8, |_, _| rng.gen::<f64>());
        let mut results = Vec::new();
        for scheme in SchemeKind::ALL {
            let mut s = SchemeState::new(scheme, f.clone(), vgrid.clone(), sgrid.clone()).unwrap();
            for _ in 0..3 {
                s.step(0.0, sgrid.dx()).unwrap();
            }
            results.push(s.cell_values());
        }
        for r in &results {
            for j in 0..8 {
                assert_eq!(r.get(j, 0), f.get((j + 3) % 8, 0));
                assert_eq!(r.get(j, 1), f.get(j, 1));
                assert_eq!(r.get(j, 2), f.get((j + 5) % 8, 2));
            }
        }
    }

    #[test]
    fn relaxation_stays_between_states() {
        let mut s = smooth_state(SchemeKind::SlUpwind, 20);
        let dt = compute_dt(s.vgrid(), s.sgrid(), 1.0).unwrap();
        let mut free = s.clone();
        free.step(0.0, dt).unwrap();
        let fstar = free.cell_values();
        let eq = cell_equilibria(&fstar, s.vgrid()).unwrap();
        s.step(37.0, dt).unwrap();
        let got = s.cell_values();
        for j in 0..20 {
            for k in 0..s.vgrid().len() {
                let (a, b) = (fstar.get(j, k), eq[[j, k]]);
                let v = got.get(j, k);
                assert!(v >= a.min(b) * (1.0 - 1e-14) && v <= a.max(b) * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn cfl_violation_is_reported() {
        let mut s = uniform_state(SchemeKind::SlMuscl, 10, BoundaryKind::Periodic);
        let dt = 2.0 * compute_dt(s.vgrid(), s.sgrid(), 1.0).unwrap();
        assert!(matches!(
            s.step(1.0, dt),
            Err(KineticError::CflViolation { .. })
        ));
        // Fast kinetic schemes have no stencil and accept any step.
        let mut s = uniform_state(SchemeKind::Fks, 10, BoundaryKind::Periodic);
        s.step(1.0, dt).unwrap();
    }
}
