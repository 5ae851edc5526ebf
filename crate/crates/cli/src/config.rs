//! Run configuration from flags and an optional `key = value` file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Parser;
use kfks_core::{ProblemKind, ProblemSpec, SchemeKind};

use crate::error::CliError;

#[derive(Debug, Parser, Default)]
#[command(
    name = "kfks",
    version,
    about = "Discrete-velocity BGK solver with semi-Lagrangian and fast kinetic schemes"
)]
pub struct Args {
    /// Transport scheme: sl_upwind, sl_muscl, fks or rfks.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Comma-separated list of schemes to sweep.
    #[arg(long)]
    pub schemes: Option<String>,
    /// Benchmark: smooth, sod or oscillating.
    #[arg(long)]
    pub problem: Option<String>,
    /// Number of cells.
    #[arg(long)]
    pub nx: Option<String>,
    /// Comma-separated list of cell counts.
    #[arg(long)]
    pub meshes: Option<String>,
    /// Number of lattice velocities.
    #[arg(long)]
    pub nv: Option<String>,
    /// Velocity bound; the lattice spans [-vmax, vmax].
    #[arg(long)]
    pub vmax: Option<String>,
    /// Collision frequency.
    #[arg(long)]
    pub nu: Option<String>,
    /// Comma-separated list of collision frequencies.
    #[arg(long)]
    pub nus: Option<String>,
    #[arg(long)]
    pub tfinal: Option<String>,
    /// Courant number in (0, 1].
    #[arg(long)]
    pub cfl: Option<String>,
    /// Band width of the oscillating problem.
    #[arg(long)]
    pub delta: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub output: Option<String>,
    /// Estimate convergence orders over consecutive mesh triples.
    #[arg(long)]
    pub convergence: bool,
    /// Also write profiles every k steps.
    #[arg(long = "snapshot-every")]
    pub snapshot_every: Option<String>,
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub const KEYS: [&str; 15] = [
    "scheme",
    "schemes",
    "problem",
    "nx",
    "meshes",
    "nv",
    "vmax",
    "nu",
    "nus",
    "tfinal",
    "cfl",
    "delta",
    "output",
    "convergence",
    "snapshot_every",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub schemes: Vec<SchemeKind>,
    pub problem: ProblemKind,
    pub meshes: Vec<usize>,
    pub n_velocities: usize,
    pub v_max: f64,
    pub nus: Vec<f64>,
    pub t_final: f64,
    pub cfl: f64,
    pub delta: f64,
    pub output: PathBuf,
    pub convergence: bool,
    pub snapshot_every: Option<u64>,
}

impl RunConfig {
    pub fn problem_spec(&self, nu: f64) -> ProblemSpec {
        ProblemSpec {
            nu,
            t_final: self.t_final,
            v_max: self.v_max,
            delta: self.delta,
            ..ProblemSpec::new(self.problem)
        }
    }
}

/// Parses the flat `key = value` format; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected 'key = value'", n + 1))
        })?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!(
                "config line {}: unknown key '{key}'",
                n + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
    parse_config_text(&text)
}

/// Merges the config file with the flags (flags win) and validates the result.
pub fn parse_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut map = match &args.config {
        Some(path) => read_config_file(path)?,
        None => BTreeMap::new(),
    };
    let flags = [
        ("scheme", &args.scheme),
        ("schemes", &args.schemes),
        ("problem", &args.problem),
        ("nx", &args.nx),
        ("meshes", &args.meshes),
        ("nv", &args.nv),
        ("vmax", &args.vmax),
        ("nu", &args.nu),
        ("nus", &args.nus),
        ("tfinal", &args.tfinal),
        ("cfl", &args.cfl),
        ("delta", &args.delta),
        ("output", &args.output),
        ("snapshot_every", &args.snapshot_every),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            map.insert(key.to_string(), v.clone());
        }
    }
    if args.convergence {
        map.insert("convergence".into(), "true".into());
    }
    build(&map)
}

fn value<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<T>, CliError> {
    map.get(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| CliError::Usage(format!("malformed value for '{key}': '{v}'")))
        })
        .transpose()
}

fn list<T: FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<T>>, CliError> {
    let Some(raw) = map.get(key) else {
        return Ok(None);
    };
    let items: Result<Vec<T>, _> = raw
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| CliError::Usage(format!("malformed value for '{key}': '{s}'")))
        })
        .collect();
    let items = items?;
    if items.is_empty() {
        return Err(CliError::Usage(format!(
            "'{key}' must list at least one value"
        )));
    }
    Ok(Some(items))
}

fn exclusive(map: &BTreeMap<String, String>, single: &str, sweep: &str) -> Result<(), CliError> {
    if map.contains_key(single) && map.contains_key(sweep) {
        return Err(CliError::Usage(format!(
            "'{single}' and '{sweep}' cannot be combined"
        )));
    }
    Ok(())
}

fn build(map: &BTreeMap<String, String>) -> Result<RunConfig, CliError> {
    exclusive(map, "scheme", "schemes")?;
    exclusive(map, "nx", "meshes")?;
    exclusive(map, "nu", "nus")?;

    let schemes: Vec<SchemeKind> = match (
        value::<SchemeKind>(map, "scheme")?,
        list::<SchemeKind>(map, "schemes")?,
    ) {
        (Some(s), _) => vec![s],
        (None, Some(list)) => list,
        (None, None) => return Err(CliError::Usage("missing required option 'scheme'".into())),
    };
    let problem: ProblemKind = value(map, "problem")?
        .ok_or_else(|| CliError::Usage("missing required option 'problem'".into()))?;
    let defaults = ProblemSpec::new(problem);

    let meshes = match (value::<usize>(map, "nx")?, list::<usize>(map, "meshes")?) {
        (Some(m), _) => vec![m],
        (None, Some(list)) => list,
        (None, None) => vec![300],
    };
    if meshes.iter().any(|&m| m < 2) {
        return Err(CliError::Usage("cell counts must be at least 2".into()));
    }
    let nus = match (value::<f64>(map, "nu")?, list::<f64>(map, "nus")?) {
        (Some(n), _) => vec![n],
        (None, Some(list)) => list,
        (None, None) => vec![defaults.nu],
    };
    if nus.iter().any(|n| !(*n >= 0.0) || !n.is_finite()) {
        return Err(CliError::Usage(
            "'nu' must be finite and non-negative".into(),
        ));
    }

    let n_velocities = value(map, "nv")?.unwrap_or(50);
    if n_velocities < 3 {
        return Err(CliError::Usage("'nv' must be at least 3".into()));
    }
    let v_max = value(map, "vmax")?.unwrap_or(defaults.v_max);
    let t_final = value(map, "tfinal")?.unwrap_or(defaults.t_final);
    let cfl = value(map, "cfl")?.unwrap_or(1.0);
    let delta = value(map, "delta")?.unwrap_or(defaults.delta);
    for (key, v) in [("vmax", v_max), ("delta", delta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(CliError::Usage(format!("'{key}' must be positive")));
        }
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(CliError::Usage(
            "'tfinal' must be finite and non-negative".into(),
        ));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(CliError::Usage(format!(
            "'cfl' must lie in (0, 1], got {cfl}"
        )));
    }
    if problem == ProblemKind::Oscillating && delta > 0.5 {
        return Err(CliError::Usage("'delta' must not exceed 0.5".into()));
    }

    let convergence = value(map, "convergence")?.unwrap_or(false);
    if convergence {
        if meshes.len() < 3 {
            return Err(CliError::Usage(
                "convergence mode needs at least three meshes".into(),
            ));
        }
        if meshes.windows(2).any(|w| w[1] != 2 * w[0]) {
            return Err(CliError::Usage(
                "convergence meshes must double from one to the next".into(),
            ));
        }
    }
    let snapshot_every = value::<u64>(map, "snapshot_every")?;
    if snapshot_every == Some(0) {
        return Err(CliError::Usage("'snapshot_every' must be positive".into()));
    }

    Ok(RunConfig {
        schemes,
        problem,
        meshes,
        n_velocities,
        v_max,
        nus,
        t_final,
        cfl,
        delta,
        output: PathBuf::from(map.get("output").map(String::as_str).unwrap_or("output")),
        convergence,
        snapshot_every,
    })
}
