//! Phase-space lattices, distribution storage and velocity moments.
//!
//! The one-dimensional monatomic convention is used throughout: the
//! conserved moments are `(rho, rho u, E)` with `E = sum_k dv (v_k^2 / 2) f_k`
//! and the temperature is `T = 2E / rho - u^2`.

use ndarray::{Array2, ArrayView1, ArrayViewMut1, Axis};

use crate::error::{KineticError, Result};
use crate::reconstruction::NodalDistribution;

/// Uniform velocity lattice of `n` points spanning `[v_min, v_max]` inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityGrid {
    v_min: f64,
    v_max: f64,
    dv: f64,
    velocities: Vec<f64>,
}

impl VelocityGrid {
    /// Symmetric lattice on `[-v_max, v_max]`.
    pub fn symmetric(n: usize, v_max: f64) -> Result<Self> {
        if n < 3 {
            return Err(KineticError::InvalidInput(format!(
                "velocity lattice needs at least 3 points, got {n}"
            )));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(KineticError::InvalidInput(format!(
                "velocity bound must be positive, got {v_max}"
            )));
        }
        let v_min = -v_max;
        let dv = (v_max - v_min) / (n - 1) as f64;
        // Mirror the lower half so the lattice is exactly symmetric.
        let mut velocities = vec![0.0; n];
        for k in 0..n {
            let mirrored = n - 1 - k;
            velocities[k] = if k < mirrored {
                v_min + k as f64 * dv
            } else if k == mirrored {
                0.0
            } else {
                -velocities[mirrored]
            };
        }
        velocities[0] = v_min;
        velocities[n - 1] = v_max;
        Ok(Self {
            v_min,
            v_max,
            dv,
            velocities,
        })
    }

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn dv(&self) -> f64 {
        self.dv
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn velocity(&self, k: usize) -> f64 {
        self.velocities[k]
    }

    /// Largest speed on the lattice.
    pub fn max_speed(&self) -> f64 {
        self.velocities.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Boundary treatment in physical space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    /// Zero-gradient outflow: values leaving the domain are discarded and
    /// entering values replicate the adjacent boundary value.
    Outflow,
}

/// Uniform cell-centred mesh of `n_cells` cells on `[0, length]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n_cells: usize,
    length: f64,
    dx: f64,
    boundary: BoundaryKind,
}

impl SpatialGrid {
    pub fn new(n_cells: usize, length: f64, boundary: BoundaryKind) -> Result<Self> {
        if n_cells < 2 {
            return Err(KineticError::InvalidInput(format!(
                "spatial mesh needs at least 2 cells, got {n_cells}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(KineticError::InvalidInput(format!(
                "domain length must be positive, got {length}"
            )));
        }
        Ok(Self {
            n_cells,
            length,
            dx: length / n_cells as f64,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.n_cells
    }

    pub fn is_empty(&self) -> bool {
        self.n_cells == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    /// Centre of cell `j` (zero-based): `(j + 1/2) dx`.
    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }
}

/// Point values `f[k, j]` of the distribution at cell centres.
///
/// Storage is velocity-major (`N x M`) so that every velocity slice is
/// contiguous for the transport sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDistribution {
    values: Array2<f64>,
}

impl CellDistribution {
    pub fn zeros(n_velocities: usize, n_cells: usize) -> Self {
        Self {
            values: Array2::zeros((n_velocities, n_cells)),
        }
    }

    pub fn from_array(values: Array2<f64>) -> Self {
        Self { values }
    }

    /// Builds the distribution from a per-cell closure returning the velocity column.
    pub fn from_fn(
        n_velocities: usize,
        n_cells: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let values = Array2::from_shape_fn((n_velocities, n_cells), |(k, j)| f(j, k));
        Self { values }
    }

    pub fn n_cells(&self) -> usize {
        self.values.ncols()
    }

    pub fn n_velocities(&self) -> usize {
        self.values.nrows()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[[k, j]]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        self.values[[k, j]] = value;
    }

    /// Values of velocity `k` over all cells.
    pub fn velocity_slice(&self, k: usize) -> ArrayView1<'_, f64> {
        self.values.index_axis(Axis(0), k)
    }

    pub fn velocity_slice_mut(&mut self, k: usize) -> ArrayViewMut1<'_, f64> {
        self.values.index_axis_mut(Axis(0), k)
    }

    /// Values of cell `j` over all velocities.
    pub fn cell_column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.values.index_axis(Axis(1), j)
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn as_array_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    /// First non-finite entry, if any, as `(cell, velocity)`.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite())
            .map(|((k, j), _)| (j, k))
    }

    fn check_shape(&self, vgrid: &VelocityGrid) -> Result<()> {
        if self.n_velocities() != vgrid.len() {
            return Err(KineticError::InvalidInput(format!(
                "distribution has {} velocities, lattice has {}",
                self.n_velocities(),
                vgrid.len()
            )));
        }
        Ok(())
    }
}

/// Conserved moments of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub rho: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl Moments {
    pub fn new(rho: f64, momentum: f64, energy: f64) -> Self {
        Self {
            rho,
            momentum,
            energy,
        }
    }

    /// Moments of a gas with density `rho`, bulk velocity `u` and temperature `t`.
    pub fn from_primitive(rho: f64, u: f64, t: f64) -> Self {
        Self {
            rho,
            momentum: rho * u,
            energy: 0.5 * rho * (u * u + t),
        }
    }

    pub fn velocity(&self) -> f64 {
        self.momentum / self.rho
    }

    pub fn temperature(&self) -> f64 {
        let u = self.velocity();
        2.0 * self.energy / self.rho - u * u
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho, self.momentum, self.energy]
    }
}

/// Per-cell moments and derived primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    pub rho: Vec<f64>,
    pub momentum: Vec<f64>,
    pub energy: Vec<f64>,
    pub velocity: Vec<f64>,
    pub temperature: Vec<f64>,
}

impl MomentField {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn cell(&self, j: usize) -> Moments {
        Moments::new(self.rho[j], self.momentum[j], self.energy[j])
    }

    /// `sum_k dv v_k^2 f_k`, i.e. twice the energy.
    pub fn raw_second_moment(&self) -> Vec<f64> {
        self.energy.iter().map(|e| 2.0 * e).collect()
    }
}

/// Conserved moments of every cell without deriving primitives.
///
/// Sums run over the velocity index in lattice order for every cell, so the
/// result does not depend on how cells are partitioned.
pub fn raw_moments(f: &CellDistribution, vgrid: &VelocityGrid) -> Vec<Moments> {
    let m = f.n_cells();
    let dv = vgrid.dv();
    let mut rho = vec![0.0; m];
    let mut mom = vec![0.0; m];
    let mut en = vec![0.0; m];
    for (k, &v) in vgrid.velocities().iter().enumerate() {
        let w1 = v * dv;
        let w2 = 0.5 * v * v * dv;
        let row = f.velocity_slice(k);
        for (j, &fv) in row.iter().enumerate() {
            rho[j] += dv * fv;
            mom[j] += w1 * fv;
            en[j] += w2 * fv;
        }
    }
    (0..m)
        .map(|j| Moments::new(rho[j], mom[j], en[j]))
        .collect()
}

/// Moments of a single velocity column.
pub fn column_moments(column: ArrayView1<'_, f64>, vgrid: &VelocityGrid) -> Moments {
    let dv = vgrid.dv();
    let mut out = Moments::default();
    for (&fv, &v) in column.iter().zip(vgrid.velocities()) {
        out.rho += dv * fv;
        out.momentum += v * dv * fv;
        out.energy += 0.5 * v * v * dv * fv;
    }
    out
}

/// Discrete moments `(rho, rho u, E)` with derived `u` and `T` in every cell.
pub fn compute_moments(f: &CellDistribution, vgrid: &VelocityGrid) -> Result<MomentField> {
    f.check_shape(vgrid)?;
    if let Some((cell, velocity)) = f.find_non_finite() {
        return Err(KineticError::InvalidState { cell, velocity });
    }
    let raw = raw_moments(f, vgrid);
    let m = raw.len();
    let mut field = MomentField {
        rho: Vec::with_capacity(m),
        momentum: Vec::with_capacity(m),
        energy: Vec::with_capacity(m),
        velocity: Vec::with_capacity(m),
        temperature: Vec::with_capacity(m),
    };
    for (cell, mom) in raw.into_iter().enumerate() {
        if !(mom.rho > 0.0) {
            return Err(KineticError::DegenerateMoments {
                cell,
                rho: mom.rho,
                temperature: f64::NAN,
            });
        }
        let t = mom.temperature();
        if !(t > 0.0) {
            return Err(KineticError::DegenerateMoments {
                cell,
                rho: mom.rho,
                temperature: t,
            });
        }
        field.rho.push(mom.rho);
        field.momentum.push(mom.momentum);
        field.energy.push(mom.energy);
        field.velocity.push(mom.velocity());
        field.temperature.push(t);
    }
    Ok(field)
}

/// Domain totals `sum_j U_j dx` of mass, momentum and energy.
pub fn total_moments(f: &CellDistribution, vgrid: &VelocityGrid, sgrid: &SpatialGrid) -> Moments {
    let dx = sgrid.dx();
    raw_moments(f, vgrid)
        .into_iter()
        .fold(Moments::default(), |acc, m| Moments {
            rho: acc.rho + m.rho * dx,
            momentum: acc.momentum + m.momentum * dx,
            energy: acc.energy + m.energy * dx,
        })
}

/// Evaluates every velocity's shifted piecewise function at the cell centres.
pub fn sample_nodal(nd: &NodalDistribution, grid: &SpatialGrid) -> CellDistribution {
    nd.sample_centers(grid)
}
