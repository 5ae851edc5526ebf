//! CSV writers. Floats use Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use kfks_core::{ConvergenceEstimate, MomentField, RunMetrics};

pub const PROFILE_HEADER: &str = "x,rho,u,T,raw_second_moment";
pub const METRICS_HEADER: &str =
    "scheme,problem,n_cells,n_velocities,nu,n_cycles,wall_time,time_per_cycle,time_per_cell";
pub const CONVERGENCE_HEADER: &str = "scheme,m_coarse,m_mid,m_fine,nu,order,diff_coarse,diff_fine";

pub fn write_profile(path: &Path, x: &[f64], moments: &MomentField) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{PROFILE_HEADER}")?;
    let second = moments.raw_second_moment();
    for (j, xj) in x.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            xj, moments.rho[j], moments.velocity[j], moments.temperature[j], second[j]
        )?;
    }
    w.flush()
}

#[derive(Debug, Clone)]
pub struct MetricsRow {
    pub problem: String,
    pub nu: f64,
    pub metrics: RunMetrics,
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{METRICS_HEADER}")?;
    for r in rows {
        let m = &r.metrics;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            m.scheme,
            r.problem,
            m.n_cells,
            m.n_velocities,
            r.nu,
            m.n_cycles,
            m.wall_time,
            m.time_per_cycle,
            m.time_per_cell
        )?;
    }
    w.flush()
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub scheme: String,
    pub meshes: [usize; 3],
    pub nu: f64,
    pub estimate: ConvergenceEstimate,
}

pub fn write_convergence(path: &Path, rows: &[ConvergenceRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for r in rows {
        let e = &r.estimate;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.scheme,
            r.meshes[0],
            r.meshes[1],
            r.meshes[2],
            r.nu,
            e.order,
            e.diff_coarse,
            e.diff_fine
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let field = MomentField {
            rho: vec![0.1 + 0.2, 1.0 / 3.0],
            momentum: vec![0.0, 1e-300],
            energy: vec![2.5, 7.0],
            velocity: vec![0.0, -1.0 / 7.0],
            temperature: vec![5.0, 4.000000000000001],
        };
        let x = [0.25, 0.75];
        write_profile(&path, &x, &field).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(!text.contains('\r'));
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), PROFILE_HEADER);
        for (j, line) in lines.enumerate() {
            let vals: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(vals[0], x[j]);
            assert_eq!(vals[1], field.rho[j]);
            assert_eq!(vals[2], field.velocity[j]);
            assert_eq!(vals[3], field.temperature[j]);
            assert_eq!(vals[4], field.raw_second_moment()[j]);
        }
    }
}
