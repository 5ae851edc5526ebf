//! Run orchestration: single runs, sweeps and convergence studies.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use kfks_core::schemes::StepPlan;
use kfks_core::{compute_dt, convergence_order, ProblemSpec, RunMetrics, SchemeKind, SchemeState};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{write_convergence, write_metrics, write_profile, ConvergenceRow, MetricsRow};

#[derive(Debug, Default)]
pub struct RunSummary {
    pub profiles: Vec<PathBuf>,
    pub metrics: Vec<MetricsRow>,
    pub convergence: Vec<ConvergenceRow>,
}

fn stem(spec: &ProblemSpec, scheme: SchemeKind, m: usize) -> String {
    format!("{}_{}_m{}_nu{}", spec.kind, scheme, m, spec.nu)
}

fn write_state(path: &Path, state: &SchemeState) -> Result<(), CliError> {
    let moments = state.moments()?;
    write_profile(path, &state.sgrid().centers(), &moments)?;
    Ok(())
}

/// Runs one configuration to `t_final`, returning the state and loop time.
fn simulate(
    config: &RunConfig,
    spec: &ProblemSpec,
    scheme: SchemeKind,
    m: usize,
    dt: f64,
) -> Result<(SchemeState, u64, Duration), CliError> {
    let mut state = spec.initial_state(scheme, m, config.n_velocities)?;
    let plan = StepPlan::new(spec.t_final, dt)?;
    let name = stem(spec, scheme, m);
    let mut elapsed = Duration::ZERO;
    let mut taken = 0u64;
    let total = plan.len();
    while taken < total {
        let h = if taken < plan.full_steps {
            dt
        } else {
            plan.last_step.unwrap_or(dt)
        };
        let start = Instant::now();
        state.step(spec.nu, h)?;
        elapsed += start.elapsed();
        taken += 1;
        if let Some(every) = config.snapshot_every {
            if taken % every == 0 && taken < total {
                write_state(
                    &config.output.join(format!("{name}_step{taken:06}.csv")),
                    &state,
                )?;
            }
        }
    }
    Ok((state, taken, elapsed))
}

pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    fs::create_dir_all(&config.output)?;
    let mut summary = RunSummary::default();
    for &nu in &config.nus {
        let spec = config.problem_spec(nu);
        spec.validate()?;
        for &scheme in &config.schemes {
            let points = if config.convergence {
                Some(spec.spatial_grid(config.meshes[0])?.centers())
            } else {
                None
            };
            // Convergence studies share the time step of the finest mesh.
            let shared_dt = if config.convergence {
                let finest = *config.meshes.last().expect("meshes are non-empty");
                Some(compute_dt(
                    &spec.velocity_grid(config.n_velocities)?,
                    &spec.spatial_grid(finest)?,
                    config.cfl,
                )?)
            } else {
                None
            };
            let mut densities = Vec::new();
            for &m in &config.meshes {
                let dt = match shared_dt {
                    Some(dt) => dt,
                    None => compute_dt(
                        &spec.velocity_grid(config.n_velocities)?,
                        &spec.spatial_grid(m)?,
                        config.cfl,
                    )?,
                };
                let (state, cycles, elapsed) = simulate(config, &spec, scheme, m, dt)?;
                let path = config
                    .output
                    .join(format!("{}.csv", stem(&spec, scheme, m)));
                write_state(&path, &state)?;
                let metrics =
                    RunMetrics::new(scheme.label(), m, config.n_velocities, cycles, elapsed);
                println!(
                    "{scheme} {} M={m} nu={nu}: {cycles} cycles, {:.3} s, {:.3e} s/cell",
                    spec.kind, metrics.wall_time, metrics.time_per_cell
                );
                summary.metrics.push(MetricsRow {
                    problem: spec.kind.to_string(),
                    nu,
                    metrics,
                });
                summary.profiles.push(path);
                if let Some(points) = &points {
                    densities.push(state.density_at(points)?);
                }
            }
            for i in 0..densities.len().saturating_sub(2) {
                let estimate =
                    convergence_order(&densities[i], &densities[i + 1], &densities[i + 2])?;
                println!(
                    "{scheme} nu={nu} meshes ({}, {}, {}): order {:.3}",
                    config.meshes[i],
                    config.meshes[i + 1],
                    config.meshes[i + 2],
                    estimate.order
                );
                summary.convergence.push(ConvergenceRow {
                    scheme: scheme.label().to_string(),
                    meshes: [config.meshes[i], config.meshes[i + 1], config.meshes[i + 2]],
                    nu,
                    estimate,
                });
            }
        }
    }
    write_metrics(&config.output.join("metrics.csv"), &summary.metrics)?;
    if config.convergence {
        write_convergence(&config.output.join("convergence.csv"), &summary.convergence)?;
    }
    Ok(summary)
}
