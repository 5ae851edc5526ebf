//! Post-processing: convergence order, total variation, front widths and timings.

use std::time::Duration;

use crate::error::{KineticError, Result};

/// Relative slack allowed when checking that a front window is monotone.
pub const MONOTONE_TOLERANCE: f64 = 1e-2;

/// Timing counters of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub scheme: String,
    pub n_cells: usize,
    pub n_velocities: usize,
    pub n_cycles: u64,
    /// Seconds spent in the time loop.
    pub wall_time: f64,
    pub time_per_cycle: f64,
    pub time_per_cell: f64,
}

impl RunMetrics {
    pub fn new(
        scheme: impl Into<String>,
        n_cells: usize,
        n_velocities: usize,
        n_cycles: u64,
        wall: Duration,
    ) -> Self {
        let wall_time = wall.as_secs_f64();
        let time_per_cycle = if n_cycles == 0 {
            0.0
        } else {
            wall_time / n_cycles as f64
        };
        Self {
            scheme: scheme.into(),
            n_cells,
            n_velocities,
            n_cycles,
            wall_time,
            time_per_cycle,
            time_per_cell: time_per_cycle / n_cells as f64,
        }
    }
}

/// Observed order from three nested solutions, with both difference sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceEstimate {
    pub order: f64,
    /// `sum |rho_coarse - rho_mid|`.
    pub diff_coarse: f64,
    /// `sum |rho_mid - rho_fine|`.
    pub diff_fine: f64,
}

/// `p = log2(sum|a - b| / sum|b - c|)` for solutions sampled at common points.
///
/// A vanishing fine difference yields `f64::INFINITY` and a warning.
pub fn convergence_order(coarse: &[f64], mid: &[f64], fine: &[f64]) -> Result<ConvergenceEstimate> {
    if coarse.len() != mid.len() || mid.len() != fine.len() {
        return Err(KineticError::InvalidInput(format!(
            "convergence samples differ in length: {}, {}, {}",
            coarse.len(),
            mid.len(),
            fine.len()
        )));
    }
    let d1: f64 = coarse.iter().zip(mid).map(|(a, b)| (a - b).abs()).sum();
    let d2: f64 = mid.iter().zip(fine).map(|(a, b)| (a - b).abs()).sum();
    Ok(order_from_differences(d1, d2))
}

pub fn order_from_differences(diff_coarse: f64, diff_fine: f64) -> ConvergenceEstimate {
    let order = if diff_fine == 0.0 {
        log::warn!("fine-mesh difference vanishes; reporting an infinite convergence order");
        f64::INFINITY
    } else {
        (diff_coarse / diff_fine).log2()
    };
    ConvergenceEstimate {
        order,
        diff_coarse,
        diff_fine,
    }
}

/// Periodic total variation `sum_j |f_{j+1} - f_j|`.
pub fn total_variation(field: &[f64]) -> f64 {
    let n = field.len();
    if n < 2 {
        return 0.0;
    }
    let inner: f64 = field.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    inner + (field[0] - field[n - 1]).abs()
}

/// Number of cells strictly inside the 10%-90% band of the jump from `lo` to `hi`.
///
/// The window must be monotone up to [`MONOTONE_TOLERANCE`] times the jump.
pub fn front_width(field: &[f64], lo: f64, hi: f64) -> Result<usize> {
    front_width_with_tolerance(field, lo, hi, MONOTONE_TOLERANCE)
}

pub fn front_width_with_tolerance(
    field: &[f64],
    lo: f64,
    hi: f64,
    tolerance: f64,
) -> Result<usize> {
    let jump = (hi - lo).abs();
    if !(jump > 0.0) {
        return Err(KineticError::InvalidInput(format!(
            "plateaus must differ (lo = {lo}, hi = {hi})"
        )));
    }
    if field.len() >= 2 {
        let rising = field[field.len() - 1] >= field[0];
        let slack = tolerance * jump;
        for (i, w) in field.windows(2).enumerate() {
            let step = if rising { w[1] - w[0] } else { w[0] - w[1] };
            if step < -slack {
                return Err(KineticError::InvalidInput(format!(
                    "front window is not monotone near index {i}; choose a different window"
                )));
            }
        }
    }
    let (a, b) = (lo.min(hi) + 0.1 * jump, lo.max(hi) - 0.1 * jump);
    Ok(field.iter().filter(|&&v| v > a && v < b).count())
}

/// Cells needed to resolve plateaus of length `plateau` when each
/// discontinuity spreads over `width` cells.
pub fn cells_for_plateaus(width: usize, plateau: f64) -> f64 {
    2.0 * width as f64 / plateau
}
