//! Maxwellian equilibria and their moment-consistent lattice discretisation.
//!
//! The discrete equilibrium is sought in the exponential family
//! `E_k = exp(a + b v_k + c v_k^2)`. Newton's method adjusts `(a, b, c)` until
//! the lattice moments of `E` reproduce the target `(rho, rho u, E)` to
//! round-off, so the BGK relaxation conserves mass, momentum and energy
//! exactly on the lattice.
//!
//! Internally the iteration runs in the scaled variable `xi = (v - u) / sqrt(T)`
//! seeded from the analytic Maxwellian, where the Jacobian is close to the
//! Gaussian moment matrix and well conditioned.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::{Matrix3, Vector3};
use statrs::function::erf::erfc;

use crate::error::{KineticError, Result};
use crate::grid::{Moments, VelocityGrid};

/// Relative moment residual the correction must reach.
pub const MOMENT_TOLERANCE: f64 = 1e-12;
/// Residual at which the iteration stops early.
const TARGET_RESIDUAL: f64 = 1e-14;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
const MAX_HALVINGS: usize = 40;
/// Analytic mass fraction outside the lattice above which a warning is logged.
pub const TAIL_WARNING_FRACTION: f64 = 1e-6;

static TAIL_WARNED: AtomicBool = AtomicBool::new(false);

/// Parameters of `E(v) = exp(a + b v + c v^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EquilibriumParams {
    /// Parameters of the continuous Maxwellian with the given primitives.
    pub fn analytic(rho: f64, u: f64, t: f64) -> Self {
        Self {
            a: (rho / (2.0 * PI * t).sqrt()).ln() - u * u / (2.0 * t),
            b: u / t,
            c: -1.0 / (2.0 * t),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        (self.a + v * (self.b + self.c * v)).exp()
    }
}

/// Continuous one-dimensional Maxwellian `rho / sqrt(2 pi T) exp(-(v-u)^2 / 2T)`.
pub fn maxwellian_pointwise(rho: f64, u: f64, t: f64, v: f64) -> Result<f64> {
    if !(rho > 0.0) || !(t > 0.0) {
        return Err(KineticError::Domain(format!(
            "Maxwellian needs rho > 0 and T > 0 (rho = {rho}, T = {t})"
        )));
    }
    let d = v - u;
    Ok(rho / (2.0 * PI * t).sqrt() * (-d * d / (2.0 * t)).exp())
}

/// Fraction of the continuous Maxwellian's mass lying outside the lattice bounds.
pub fn tail_mass_fraction(u: f64, t: f64, vgrid: &VelocityGrid) -> f64 {
    let s = (2.0 * t).sqrt();
    0.5 * erfc((u - vgrid.v_min()) / s) + 0.5 * erfc((vgrid.v_max() - u) / s)
}

/// Outcome of one moment-matching solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectionReport {
    pub params: EquilibriumParams,
    pub iterations: usize,
    /// Largest relative moment residual (see [`moment_residual`]).
    pub residual: f64,
}

/// Largest relative discrepancy between the lattice moments of `values` and `target`.
///
/// Mass and energy are compared relative to their target values; momentum is
/// compared relative to the absolute first moment `sum_k dv |v_k| E_k`, which
/// stays meaningful when the bulk velocity vanishes.
pub fn moment_residual(values: &[f64], target: &Moments, vgrid: &VelocityGrid) -> f64 {
    let dv = vgrid.dv();
    let (mut m0, mut m1, mut m1_abs, mut m2) = (0.0, 0.0, 0.0, 0.0);
    for (&e, &v) in values.iter().zip(vgrid.velocities()) {
        let w = dv * e;
        m0 += w;
        m1 += v * w;
        m1_abs += v.abs() * w;
        m2 += 0.5 * v * v * w;
    }
    let r0 = ((m0 - target.rho) / target.rho).abs();
    let scale1 = m1_abs.max(target.momentum.abs()).max(f64::MIN_POSITIVE);
    let r1 = ((m1 - target.momentum) / scale1).abs();
    let r2 = ((m2 - target.energy) / target.energy).abs();
    let r = r0.max(r1).max(r2);
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Discrete equilibrium whose lattice moments equal `target`.
pub fn discrete_maxwellian(
    target: &Moments,
    vgrid: &VelocityGrid,
) -> Result<(Vec<f64>, EquilibriumParams)> {
    let mut values = vec![0.0; vgrid.len()];
    let report = discrete_maxwellian_into(target, vgrid, &mut values)?;
    Ok((values, report.params))
}

/// Allocation-free variant of [`discrete_maxwellian`] writing into `out`.
pub fn discrete_maxwellian_into(
    target: &Moments,
    vgrid: &VelocityGrid,
    out: &mut [f64],
) -> Result<CorrectionReport> {
    assert_eq!(
        out.len(),
        vgrid.len(),
        "output length must match the lattice"
    );
    let rho = target.rho;
    let t = if rho > 0.0 {
        target.temperature()
    } else {
        f64::NAN
    };
    if !(rho > 0.0) || !(t > 0.0) || !target.momentum.is_finite() {
        return Err(KineticError::Domain(format!(
            "discrete Maxwellian needs rho > 0 and T > 0 (rho = {rho}, T = {t})"
        )));
    }
    let u = target.momentum / rho;

    if !TAIL_WARNED.load(Ordering::Relaxed)
        && tail_mass_fraction(u, t, vgrid) > TAIL_WARNING_FRACTION
    {
        TAIL_WARNED.store(true, Ordering::Relaxed);
        log::warn!(
            "velocity lattice [{}, {}] truncates more than {:e} of a Maxwellian with u = {u}, T = {t}",
            vgrid.v_min(),
            vgrid.v_max(),
            TAIL_WARNING_FRACTION
        );
    }

    let scaled = ScaledLattice::new(vgrid, u, t.sqrt());
    // Target moments of (1, xi, xi^2) for xi = (v - u) / sqrt(T).
    let goal = Vector3::new(rho, 0.0, rho);

    let mut params = Vector3::new((rho / (2.0 * PI * t).sqrt()).ln(), 0.0, -0.5);
    scaled.fill(&params, out);
    let mut residual = moment_residual(out, target, vgrid);
    let mut iterations = 0;

    while residual > TARGET_RESIDUAL && iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let (mom, jac) = scaled.moments_and_jacobian(out);
        let Some(delta) = jac.lu().solve(&(goal - mom)) else {
            break;
        };
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let trial = params + delta * step;
            if trial[2] < 0.0 {
                scaled.fill(&trial, out);
                let r = moment_residual(out, target, vgrid);
                if r < residual {
                    params = trial;
                    residual = r;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            scaled.fill(&params, out);
            break;
        }
    }

    if !(residual <= MOMENT_TOLERANCE) {
        return Err(KineticError::CorrectionFailed {
            iterations,
            residual,
        });
    }
    Ok(CorrectionReport {
        params: scaled.unscale(&params),
        iterations,
        residual,
    })
}

/// Lattice expressed in `xi = (v - shift) / scale`.
struct ScaledLattice<'a> {
    vgrid: &'a VelocityGrid,
    shift: f64,
    scale: f64,
    /// Uniform spacing in `xi`.
    h: f64,
}

impl<'a> ScaledLattice<'a> {
    fn new(vgrid: &'a VelocityGrid, shift: f64, scale: f64) -> Self {
        Self {
            vgrid,
            shift,
            scale,
            h: vgrid.dv() / scale,
        }
    }

    #[inline]
    fn xi(&self, k: usize) -> f64 {
        (self.vgrid.velocity(k) - self.shift) / self.scale
    }

    /// Writes `exp(p0 + p1 xi_k + p2 xi_k^2)` for every lattice point.
    ///
    /// The exponent is quadratic on a uniform lattice, so consecutive ratios
    /// form a geometric sequence; values are propagated outward from the
    /// lattice point nearest the peak so far tails underflow gracefully.
    fn fill(&self, p: &Vector3<f64>, out: &mut [f64]) {
        let n = out.len();
        let (p0, p1, p2) = (p[0], p[1], p[2]);
        let peak_xi = -p1 / (2.0 * p2);
        let xi0 = self.xi(0);
        let peak = ((peak_xi - xi0) / self.h)
            .round()
            .clamp(0.0, (n - 1) as f64) as usize;
        let h = self.h;
        let q = |x: f64| p0 + x * (p1 + p2 * x);
        let x_peak = self.xi(peak);
        out[peak] = q(x_peak).exp();
        // exp of second difference: ratio multiplier between neighbouring steps.
        let curvature = (2.0 * p2 * h * h).exp();

        let mut ratio = (p1 * h + p2 * (2.0 * x_peak * h + h * h)).exp();
        for k in peak + 1..n {
            out[k] = out[k - 1] * ratio;
            ratio *= curvature;
        }
        let mut ratio = (-(p1 * h) + p2 * (-2.0 * x_peak * h + h * h)).exp();
        for k in (0..peak).rev() {
            out[k] = out[k + 1] * ratio;
            ratio *= curvature;
        }
    }

    /// Lattice moments of `(1, xi, xi^2)` and the Hankel Jacobian of moments 0..4.
    fn moments_and_jacobian(&self, values: &[f64]) -> (Vector3<f64>, Matrix3<f64>) {
        let dv = self.vgrid.dv();
        let mut s = [0.0; 5];
        for (k, &e) in values.iter().enumerate() {
            let x = self.xi(k);
            let w = dv * e;
            let x2 = x * x;
            s[0] += w;
            s[1] += w * x;
            s[2] += w * x2;
            s[3] += w * x2 * x;
            s[4] += w * x2 * x2;
        }
        let mom = Vector3::new(s[0], s[1], s[2]);
        let jac = Matrix3::new(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
        (mom, jac)
    }

    /// Maps scaled parameters back to `(a, b, c)` in the original velocity.
    fn unscale(&self, p: &Vector3<f64>) -> EquilibriumParams {
        let (u, s) = (self.shift, self.scale);
        let c = p[2] / (s * s);
        let b = p[1] / s - 2.0 * p[2] * u / (s * s);
        let a = p[0] - p[1] * u / s + p[2] * u * u / (s * s);
        EquilibriumParams { a, b, c }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{column_moments, VelocityGrid};
    use approx::assert_relative_eq;
    use ndarray::ArrayView1;

    fn lattice() -> VelocityGrid {
        VelocityGrid::symmetric(50, 15.0).unwrap()
    }

    #[test]
    fn pointwise_values() {
        assert_relative_eq!(
            maxwellian_pointwise(1.0, 0.0, 5.0, 0.0).unwrap(),
            1.0 / (10.0 * PI).sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            maxwellian_pointwise(1.0, 0.0, 5.0, 0.0).unwrap(),
            0.17841,
            epsilon = 1e-5
        );
        let (u, t) = (0.3, 2.2);
        assert_relative_eq!(
            maxwellian_pointwise(2.0, u, t, u).unwrap(),
            2.0 / (2.0 * PI * t).sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            maxwellian_pointwise(1.0, 0.0, 1.0, 1.0).unwrap(),
            0.24197,
            epsilon = 1e-5
        );
    }

    #[test]
    fn pointwise_domain_errors() {
        assert!(matches!(
            maxwellian_pointwise(0.0, 0.0, 1.0, 0.0),
            Err(KineticError::Domain(_))
        ));
        assert!(matches!(
            maxwellian_pointwise(1.0, 0.0, -1.0, 0.0),
            Err(KineticError::Domain(_))
        ));
    }

    #[test]
    fn matches_target_moments() {
        let vg = lattice();
        let target = Moments::new(1.0, 0.0, 2.5);
        let (values, _) = discrete_maxwellian(&target, &vg).unwrap();
        let m = column_moments(ArrayView1::from(&values[..]), &vg);
        assert!((m.rho - 1.0).abs() <= 1e-12);
        assert!(m.momentum.abs() <= 1e-12);
        assert!((m.energy - 2.5).abs() <= 2.5e-12);
    }

    #[test]
    fn symmetric_when_at_rest() {
        let vg = lattice();
        let (values, params) = discrete_maxwellian(&Moments::new(1.0, 0.0, 2.5), &vg).unwrap();
        assert!(params.b.abs() < 1e-14);
        for k in 0..50 {
            assert_relative_eq!(values[k], values[49 - k], max_relative = 1e-13);
        }
    }

    #[test]
    fn params_close_to_analytic() {
        // Brute-force check: rectangle-rule moments of the analytic Maxwellian
        // are already within the tolerance, so the Newton correction is tiny.
        let vg = lattice();
        let exact = EquilibriumParams::analytic(1.0, 0.0, 5.0);
        let dv = vg.dv();
        let brute: f64 = vg.velocities().iter().map(|&v| exact.eval(v) * dv).sum();
        assert!((brute - 1.0).abs() < 1e-9);

        let (_, p) = discrete_maxwellian(&Moments::new(1.0, 0.0, 2.5), &vg).unwrap();
        assert!((p.a - (1.0 / (10.0 * PI).sqrt()).ln()).abs() < 1e-6);
        assert!(p.b.abs() < 1e-6);
        assert!((p.c + 0.1).abs() < 1e-6);
    }

    #[test]
    fn values_follow_params() {
        let vg = lattice();
        let target = Moments::from_primitive(0.8, 1.3, 3.1);
        let (values, p) = discrete_maxwellian(&target, &vg).unwrap();
        for (k, &v) in vg.velocities().iter().enumerate() {
            assert_relative_eq!(values[k], p.eval(v), max_relative = 1e-11);
        }
    }

    #[test]
    fn fixed_point() {
        let vg = lattice();
        let target = Moments::from_primitive(1.4, -0.7, 2.0);
        let (first, _) = discrete_maxwellian(&target, &vg).unwrap();
        let again = column_moments(ArrayView1::from(&first[..]), &vg);
        let (second, _) = discrete_maxwellian(&again, &vg).unwrap();
        for (a, b) in first.iter().zip(&second) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn density_scaling() {
        let vg = lattice();
        let (u, t) = (0.4, 4.0);
        let (e1, p1) = discrete_maxwellian(&Moments::from_primitive(1.0, u, t), &vg).unwrap();
        let (e3, p3) = discrete_maxwellian(&Moments::from_primitive(3.0, u, t), &vg).unwrap();
        for (a, b) in e1.iter().zip(&e3) {
            assert_relative_eq!(3.0 * a, *b, max_relative = 1e-10);
        }
        assert_relative_eq!(p3.a - p1.a, 3.0_f64.ln(), epsilon = 1e-10);
        assert_relative_eq!(p3.b, p1.b, epsilon = 1e-10);
        assert_relative_eq!(p3.c, p1.c, epsilon = 1e-10);
    }

    #[test]
    fn rejects_degenerate_targets() {
        let vg = lattice();
        assert!(matches!(
            discrete_maxwellian(&Moments::new(0.0, 0.0, 1.0), &vg),
            Err(KineticError::Domain(_))
        ));
        // T = 2E/rho - u^2 < 0
        assert!(matches!(
            discrete_maxwellian(&Moments::new(1.0, 2.0, 1.0), &vg),
            Err(KineticError::Domain(_))
        ));
    }

    #[test]
    fn newton_failure_reports_residual() {
        // A temperature far below the lattice spacing cannot be matched.
        let vg = VelocityGrid::symmetric(5, 10.0).unwrap();
        let target = Moments::from_primitive(1.0, 2.5, 1e-3);
        match discrete_maxwellian(&target, &vg) {
            Err(KineticError::CorrectionFailed { residual, .. }) => assert!(residual > 1e-12),
            other => panic!("expected correction failure, got {other:?}"),
        }
    }

    #[test]
    fn tail_fraction() {
        let vg = lattice();
        assert!(tail_mass_fraction(0.0, 5.0, &vg) < 1e-10);
        assert!(tail_mass_fraction(0.0, 100.0, &vg) > 1e-3);
    }
}
