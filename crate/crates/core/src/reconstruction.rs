//! Piecewise representations of each velocity slice and their transport.
//!
//! Two families live here:
//!
//! * [`NodalDistribution`]: a piecewise constant or continuous piecewise
//!   linear function per velocity, carried along its characteristic by a
//!   single spatial offset. Node values only change under collisions, which
//!   makes the transport exact.
//! * Cell-based reconstructions for the classical semi-Lagrangian schemes:
//!   point values at the cell centres with optional van Leer limited slopes.

use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis};

use crate::error::{KineticError, Result};
use crate::grid::{BoundaryKind, CellDistribution, SpatialGrid, VelocityGrid};

/// Shape of the per-velocity function between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Constant on `[node - dx/2, node + dx/2)`.
    PiecewiseConstant,
    /// Linear interpolation between consecutive nodes.
    PiecewiseLinear,
}

/// Transport time accumulated as `steps * dt + extra`.
///
/// Keeping the step count rather than a running sum means the offsets are
/// always the closed form `mod(n v dt, L)` and never drift.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransportClock {
    steps: u64,
    dt: f64,
    extra: f64,
}

impl TransportClock {
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt + self.extra
    }

    /// Displacement `n v dt (+ v extra)` of a velocity `v`.
    #[inline]
    pub fn displacement(&self, v: f64) -> f64 {
        self.steps as f64 * v * self.dt + v * self.extra
    }

    fn advance(&mut self, dt: f64) {
        if self.steps == 0 && self.extra == 0.0 {
            self.dt = dt;
        }
        if dt == self.dt {
            self.steps += 1;
        } else {
            // Truncated final step or an irregular step size.
            self.extra += dt;
        }
    }
}

/// Per-velocity shifted piecewise function.
///
/// Node `j` of velocity `k` sits at `mod(x_j + s_k, L)` where `x_j` is the
/// `j`-th cell centre and `s_k` the velocity's offset.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalDistribution {
    kind: NodeKind,
    values: Array2<f64>,
    velocities: Vec<f64>,
    dx: f64,
    length: f64,
    boundary: BoundaryKind,
    clock: TransportClock,
}

/// Offset of one velocity split into whole cells and a fraction in `[0, 1)`.
#[derive(Debug, Clone, Copy)]
struct CellShift {
    whole: usize,
    frac: f64,
}

impl NodalDistribution {
    /// Nodes placed at the cell centres with the given point values.
    pub fn from_cells(
        kind: NodeKind,
        f: &CellDistribution,
        vgrid: &VelocityGrid,
        sgrid: &SpatialGrid,
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
        Ok(Self {
            kind,
            values: f.as_array().clone(),
            velocities: vgrid.velocities().to_vec(),
            dx: sgrid.dx(),
            length: sgrid.length(),
            boundary: sgrid.boundary(),
            clock: TransportClock::default(),
        })
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn n_cells(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_velocities(&self) -> usize {
        self.values.nrows()
    }

    pub fn clock(&self) -> TransportClock {
        self.clock
    }

    pub fn step_count(&self) -> u64 {
        self.clock.steps
    }

    pub fn node_values(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.index_axis(Axis(0), k)
    }

    pub fn node_values_mut(&mut self, k: usize) -> ArrayViewMut1<'_, f64> {
        self.values.index_axis_mut(Axis(0), k)
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    /// Offset `s_k` in `[0, L)`.
    pub fn offset(&self, k: usize) -> f64 {
        let s = self
            .clock
            .displacement(self.velocities[k])
            .rem_euclid(self.length);
        // rem_euclid can round up to L itself for tiny negative inputs.
        if s >= self.length {
            0.0
        } else {
            s
        }
    }

    fn cell_shift(&self, k: usize) -> CellShift {
        let m = self.n_cells();
        let sigma = self.offset(k) / self.dx;
        let whole = sigma.floor();
        let frac = sigma - whole;
        CellShift {
            whole: (whole as usize) % m,
            frac,
        }
    }

    /// Exact transport of every velocity slice over `dt`.
    ///
    /// Node values are untouched except at outflow boundaries, where nodes
    /// that wrap around the domain take the value of their inner neighbour.
    pub fn shift(&mut self, dt: f64) {
        let before = self.clock;
        self.clock.advance(dt);
        if self.boundary == BoundaryKind::Outflow {
            for k in 0..self.n_velocities() {
                self.reanchor_outflow(k, &before);
            }
        }
    }

    fn reanchor_outflow(&mut self, k: usize, before: &TransportClock) {
        let v = self.velocities[k];
        if v == 0.0 {
            return;
        }
        let m = self.n_cells();
        let mf = m as f64;
        let d0 = before.displacement(v) / self.dx;
        let d1 = self.clock.displacement(v) / self.dx;
        // (node, new position in cell units) of every node crossing the seam.
        let mut entered: Vec<(usize, f64)> = Vec::new();
        for j in 0..m {
            let p0 = j as f64 + 0.5 + d0;
            let p1 = j as f64 + 0.5 + d1;
            if (p0 / mf).floor() != (p1 / mf).floor() {
                entered.push((j, p1.rem_euclid(mf)));
            }
        }
        if entered.is_empty() {
            return;
        }
        let mut row = self.values.index_axis_mut(Axis(0), k);
        if v > 0.0 {
            // Entered at x = 0: copy from the right neighbour, innermost first.
            entered.sort_by(|a, b| b.1.total_cmp(&a.1));
            for (j, _) in entered {
                row[j] = row[(j + 1) % m];
            }
        } else {
            entered.sort_by(|a, b| a.1.total_cmp(&b.1));
            for (j, _) in entered {
                row[j] = row[(j + m - 1) % m];
            }
        }
    }

    /// Value of velocity `k`'s function at `x` in `[0, L]`.
    pub fn evaluate(&self, k: usize, x: f64) -> Result<f64> {
        if !(0.0..=self.length).contains(&x) {
            return Err(KineticError::Domain(format!(
                "evaluation point {x} outside [0, {}]",
                self.length
            )));
        }
        Ok(self.evaluate_unchecked(k, x))
    }

    fn evaluate_unchecked(&self, k: usize, x: f64) -> f64 {
        let m = self.n_cells();
        let mf = m as f64;
        let g = self.values.index_axis(Axis(0), k);
        let xc = x / self.dx;
        let t = (xc - self.offset(k) / self.dx).rem_euclid(mf);
        let outflow = self.boundary == BoundaryKind::Outflow;
        match self.kind {
            NodeKind::PiecewiseConstant => {
                let j = (t.floor() as usize).min(m - 1);
                if outflow {
                    // Node position in cell units, unwrapped around x.
                    let node = xc - (t - t.floor()) + 0.5;
                    if node >= mf {
                        return g[(j + m - 1) % m];
                    }
                    if node < 0.0 {
                        return g[(j + 1) % m];
                    }
                }
                g[j]
            }
            NodeKind::PiecewiseLinear => {
                let s = (t - 0.5).rem_euclid(mf);
                let left = (s.floor() as usize).min(m - 1);
                let frac = s - s.floor();
                let right = (left + 1) % m;
                if outflow {
                    let left_pos = xc - frac;
                    if left_pos < 0.0 {
                        return g[right];
                    }
                    if left_pos + 1.0 >= mf {
                        return g[left];
                    }
                }
                (1.0 - frac) * g[left] + frac * g[right]
            }
        }
    }

    /// Node positions of velocity `k`, sorted in `[0, L)`.
    pub fn locate_extreme_points(&self, k: usize) -> Vec<f64> {
        let m = self.n_cells();
        let shift = self.cell_shift(k);
        let mut pts: Vec<f64> = (0..m)
            .map(|j| {
                let slot = (j + shift.whole) % m;
                let p = (slot as f64 + 0.5 + shift.frac) * self.dx;
                if p >= self.length {
                    p - self.length
                } else {
                    p
                }
            })
            .collect();
        pts.sort_by(f64::total_cmp);
        pts
    }

    /// Samples velocity `k` at every cell centre into `out`.
    pub fn sample_velocity_centers(&self, k: usize, mut out: ArrayViewMut1<'_, f64>) {
        let m = self.n_cells();
        let g = self.values.index_axis(Axis(0), k);
        let CellShift { whole: q, frac } = self.cell_shift(k);
        let outflow = self.boundary == BoundaryKind::Outflow;
        // Node feeding centre i is i - q (and i - q - 1 for the left side).
        match self.kind {
            NodeKind::PiecewiseConstant => {
                let back = if frac <= 0.5 { 0 } else { 1 };
                for i in 0..m {
                    out[i] = g[(i + 2 * m - q - back) % m];
                }
                if outflow && frac == 0.5 {
                    // Last centre lies on the wrapped half of a seam piece.
                    out[m - 1] = g[(2 * m - 2 - q) % m];
                }
            }
            NodeKind::PiecewiseLinear => {
                for i in 0..m {
                    let right = g[(i + m - q) % m];
                    let left = g[(i + 2 * m - q - 1) % m];
                    out[i] = frac * left + (1.0 - frac) * right;
                }
                if outflow {
                    if frac < 0.5 {
                        out[0] = g[(m - q) % m];
                    }
                    if frac >= 0.5 {
                        out[m - 1] = g[(2 * m - 2 - q) % m];
                    }
                }
            }
        }
    }

    /// Every velocity sampled at the cell centres.
    pub fn sample_centers(&self, grid: &SpatialGrid) -> CellDistribution {
        debug_assert_eq!(grid.len(), self.n_cells());
        let mut out = CellDistribution::zeros(self.n_velocities(), self.n_cells());
        for k in 0..self.n_velocities() {
            self.sample_velocity_centers(k, out.velocity_slice_mut(k));
        }
        out
    }

    /// Every velocity sampled at arbitrary points of `[0, L]`.
    pub fn sample_points(&self, points: &[f64]) -> Result<CellDistribution> {
        let mut out = CellDistribution::zeros(self.n_velocities(), points.len());
        for k in 0..self.n_velocities() {
            for (i, &x) in points.iter().enumerate() {
                out.set(i, k, self.evaluate(k, x)?);
            }
        }
        Ok(out)
    }

    /// Whole-cell part `q` and fraction `theta` of velocity `k`'s offset, so that
    /// node `j` lies at `x_{(j + q) mod M} + theta dx`.
    pub fn node_cell_shift(&self, k: usize) -> (usize, f64) {
        let s = self.cell_shift(k);
        (s.whole, s.frac)
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }
}

/// Van Leer limited slopes `sigma[k, j]` of the cell-centre data.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitedSlopes {
    slopes: Array2<f64>,
}

impl LimitedSlopes {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.slopes[[k, j]]
    }

    pub fn velocity_slice(&self, k: usize) -> ArrayView1<'_, f64> {
        self.slopes.index_axis(Axis(0), k)
    }
}

/// Harmonic-mean limiter applied to one-sided differences.
#[inline]
pub fn van_leer(minus: f64, plus: f64) -> f64 {
    if minus * plus > 0.0 {
        2.0 * minus * plus / (minus + plus)
    } else {
        0.0
    }
}

/// Index of neighbour `j + offset` under the grid's boundary rule.
#[inline]
fn neighbour(j: usize, offset: isize, m: usize, boundary: BoundaryKind) -> usize {
    let idx = j as isize + offset;
    match boundary {
        BoundaryKind::Periodic => idx.rem_euclid(m as isize) as usize,
        BoundaryKind::Outflow => idx.clamp(0, m as isize - 1) as usize,
    }
}

/// Van Leer slopes of one velocity slice written into `out`.
pub fn van_leer_slopes_row(
    row: ArrayView1<'_, f64>,
    grid: &SpatialGrid,
    mut out: ArrayViewMut1<'_, f64>,
) {
    let m = row.len();
    let inv_dx = 1.0 / grid.dx();
    let b = grid.boundary();
    for j in 0..m {
        let fm = row[neighbour(j, -1, m, b)];
        let fp = row[neighbour(j, 1, m, b)];
        out[j] = van_leer(row[j] - fm, fp - row[j]) * inv_dx;
    }
}

/// Van Leer slopes of every velocity slice.
pub fn van_leer_slopes(f: &CellDistribution, grid: &SpatialGrid) -> LimitedSlopes {
    let mut slopes = Array2::zeros((f.n_velocities(), f.n_cells()));
    for k in 0..f.n_velocities() {
        van_leer_slopes_row(f.velocity_slice(k), grid, slopes.index_axis_mut(Axis(0), k));
    }
    LimitedSlopes { slopes }
}

/// Checks `|v| dt / dx <= 1` and returns the signed Courant number.
pub fn courant(v: f64, dt: f64, grid: &SpatialGrid) -> Result<f64> {
    let c = v * dt / grid.dx();
    if c.abs() > 1.0 + 1e-12 {
        return Err(KineticError::CflViolation { courant: c.abs() });
    }
    Ok(c.clamp(-1.0, 1.0))
}

/// Semi-Lagrangian update of one cell for one velocity.
///
/// Returns the mean over cell `j` of the reconstruction translated by
/// `v dt`, i.e. the average of the previous reconstruction over the
/// departure interval `[x_{j-1/2} - v dt, x_{j+1/2} - v dt]`. Without slopes
/// this is linear interpolation at the foot `x_j - v dt`; with van Leer slopes
/// it is the limited second-order update. Both telescope, so mass is
/// conserved to round-off.
pub fn evaluate_foot_point(
    f: ArrayView1<'_, f64>,
    slopes: Option<ArrayView1<'_, f64>>,
    grid: &SpatialGrid,
    v: f64,
    dt: f64,
    j: usize,
) -> Result<f64> {
    let c = courant(v, dt, grid)?;
    Ok(departure_average(f, slopes, grid, c, j))
}

#[inline]
pub(crate) fn departure_average(
    f: ArrayView1<'_, f64>,
    slopes: Option<ArrayView1<'_, f64>>,
    grid: &SpatialGrid,
    c: f64,
    j: usize,
) -> f64 {
    let m = f.len();
    let b = grid.boundary();
    let dx = grid.dx();
    let a = c.abs();
    // Upwind neighbour and its sign relative to the flow.
    let (up, dir) = if c >= 0.0 {
        (neighbour(j, -1, m, b), 1.0)
    } else {
        (neighbour(j, 1, m, b), -1.0)
    };
    match slopes {
        None => a * f[up] + (1.0 - a) * f[j],
        Some(s) => {
            // Outflow ghosts replicate the boundary cell, including a flat slope.
            let s_up = if up == j { 0.0 } else { s[up] };
            let from_up = f[up] + dir * s_up * dx * (1.0 - a) * 0.5;
            let from_self = f[j] - dir * s[j] * dx * a * 0.5;
            a * from_up + (1.0 - a) * from_self
        }
    }
}

/// Value of the cell-based reconstruction at an arbitrary `x`.
///
/// Without slopes this is linear interpolation between cell centres; with
/// slopes it is the limited linear polynomial of the cell containing `x`.
pub fn evaluate_cell_reconstruction(
    f: ArrayView1<'_, f64>,
    slopes: Option<ArrayView1<'_, f64>>,
    grid: &SpatialGrid,
    x: f64,
) -> Result<f64> {
    if !(0.0..=grid.length()).contains(&x) {
        return Err(KineticError::Domain(format!(
            "evaluation point {x} outside [0, {}]",
            grid.length()
        )));
    }
    let m = f.len();
    let xc = x / grid.dx();
    match slopes {
        Some(s) => {
            let j = (xc.floor() as usize).min(m - 1);
            Ok(f[j] + s[j] * (x - grid.center(j)))
        }
        None => {
            let t = xc - 0.5;
            let left = t.floor();
            let frac = t - left;
            let b = grid.boundary();
            let l = neighbour(0, left as isize, m, b);
            let r = neighbour(0, left as isize + 1, m, b);
            Ok((1.0 - frac) * f[l] + frac * f[r])
        }
    }
}
