//! Command-line front end: named presets, profile and convergence tables,
//! stability rasters. Every output is a CSV with a header row.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use ader_core::grid::{cell_averages, BoundaryKind, Grid};
use ader_core::presets::{Preset, PresetName};
use ader_core::solver::{convergence_study, run, DEFAULT_MESHES};
use ader_core::stability::{
    default_c_grid, default_r_grid, stability_map, PredictorKind, StabilityQuery, DEFAULT_SCENARIOS, THETA_SAMPLES,
};
use ader_core::systems::BalanceLaw;
use ader_core::RunConfig;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ader", version, about = "High-order ADER finite-volume solver for 1D balance laws")]
pub struct Cli {
    /// Worker threads for the parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one preset and write the final cell averages.
    Solve(SolveArgs),
    /// Run a preset on a sequence of meshes and tabulate errors and orders.
    Converge(ConvergeArgs),
    /// Sample the von Neumann stable fraction on a (c, r) grid.
    Stability(StabilityArgs),
}

/// Run parameters; unset flags fall back to the preset.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Test case: leveque-yee, linear-system, noncons or euler-smooth.
    #[arg(long, default_value = "leveque-yee")]
    pub preset: PresetName,
    /// CFL coefficient [preset: 0.1].
    #[arg(long)]
    pub cfl: Option<f64>,
    /// FORCE-α parameter [preset: 2.4, 1.9, 2.2, 2.0].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output time [preset: 0.3 for leveque-yee, 1.0 otherwise].
    #[arg(long = "t-out")]
    pub t_out: Option<f64>,
    /// periodic or transmissive [preset: transmissive for leveque-yee, periodic otherwise].
    #[arg(long)]
    pub boundary: Option<BoundaryKind>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn config(&self, preset: &Preset) -> RunConfig {
        let base = &preset.config;
        RunConfig {
            cfl: self.cfl.unwrap_or(base.cfl),
            alpha: self.alpha.unwrap_or(base.alpha),
            t_out: self.t_out.unwrap_or(base.t_out),
            boundary: self.boundary.unwrap_or(base.boundary),
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Order of accuracy 1..=5 [preset: 3, 3, 4, 5].
    #[arg(long)]
    pub order: Option<usize>,
    /// Number of cells [preset: 100, 64, 16, 64].
    #[arg(long)]
    pub cells: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Orders of accuracy, comma separated [preset order].
    #[arg(long = "order", alias = "orders", value_delimiter = ',')]
    pub orders: Vec<usize>,
    /// Meshes, comma separated.
    #[arg(long = "cells", alias = "meshes", value_delimiter = ',', default_values_t = DEFAULT_MESHES)]
    pub meshes: Vec<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct StabilityArgs {
    /// Order of accuracy 1..=5.
    #[arg(long, default_value_t = 1)]
    pub order: usize,
    /// explicit or implicit predictor.
    #[arg(long, default_value = "explicit")]
    pub predictor: PredictorKind,
    /// FORCE-α parameter.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Random weight triples per grid point.
    #[arg(long, default_value_t = DEFAULT_SCENARIOS)]
    pub scenarios: usize,
    /// Phase samples on [0, 2π).
    #[arg(long, default_value_t = THETA_SAMPLES)]
    pub thetas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Courant numbers as `start:stop:count` [0.01:1.2:120].
    #[arg(long = "c-grid")]
    pub c_grid: Option<GridSpec>,
    /// Stiffness numbers as `start:stop:count` [0:-10:101].
    #[arg(long = "r-grid")]
    pub r_grid: Option<GridSpec>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Evenly spaced samples, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|k| self.start + k as f64 * step).collect()
    }
}

impl std::str::FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let count = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
        if count == 0 {
            return Err("grid count must be positive".into());
        }
        Ok(GridSpec {
            start: num(a)?,
            stop: num(b)?,
            count,
        })
    }
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes `x,q_1..q_m[,exact_1..exact_m]` at the output time.
pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let preset = Preset::get(args.run.preset);
    let config = RunConfig {
        order: args.order.unwrap_or(preset.config.order),
        ..args.run.config(&preset)
    };
    let grid = Grid::new(preset.domain.0, preset.domain.1, args.cells.unwrap_or(preset.cells))?;
    let sys = &preset.system;
    let result = run(sys, grid, &config).with_context(|| format!("{} run failed", args.run.preset))?;
    let m = sys.n_vars();
    let exact = sys
        .exact_solution(grid.x_lo, 0.0)
        .map(|_| cell_averages(&grid, |x| sys.exact_solution(x, result.time).expect("closed form")));

    let mut header = vec!["x".to_string()];
    header.extend((1..=m).map(|k| format!("q_{k}")));
    if exact.is_some() {
        header.extend((1..=m).map(|k| format!("exact_{k}")));
    }
    writeln!(out, "{}", header.join(","))?;
    for (i, x) in grid.centers().iter().enumerate() {
        let mut row = vec![format!("{x:e}")];
        row.extend(result.field.cell(i as isize).iter().map(|v| format!("{v:e}")));
        if let Some(e) = &exact {
            row.extend(e[i].iter().map(|v| format!("{v:e}")));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Writes `order,mesh,linf_err,linf_ord,l1_err,l1_ord,l2_err,l2_ord,cpu_s`.
pub fn cmd_converge(args: &ConvergeArgs, out: &mut dyn Write) -> Result<()> {
    let preset = Preset::get(args.run.preset);
    let base = args.run.config(&preset);
    let orders = if args.orders.is_empty() { vec![base.order] } else { args.orders.clone() };
    writeln!(out, "order,mesh,linf_err,linf_ord,l1_err,l1_ord,l2_err,l2_ord,cpu_s")?;
    for order in orders {
        let config = RunConfig { order, ..base.clone() };
        let rows = convergence_study(&preset.system, &config, preset.domain, &args.meshes, preset.tracked_var)
            .with_context(|| format!("{} order {order} failed", args.run.preset))?;
        for r in rows {
            writeln!(
                out,
                "{},{},{:e},{:.4},{:e},{:.4},{:e},{:.4},{:.4}",
                r.order,
                r.mesh,
                r.errors.linf,
                r.orders.linf,
                r.errors.l1,
                r.orders.l1,
                r.errors.l2,
                r.orders.l2,
                r.cpu_seconds
            )?;
        }
    }
    Ok(())
}

/// Writes `c,r,stable_fraction`.
pub fn cmd_stability(args: &StabilityArgs, out: &mut dyn Write) -> Result<()> {
    let query = StabilityQuery {
        order: args.order,
        predictor: args.predictor,
        alpha: args.alpha,
        theta_samples: args.thetas,
        scenarios: args.scenarios,
        seed: args.seed,
    };
    let c = args.c_grid.map_or_else(default_c_grid, |g| g.values());
    let r = args.r_grid.map_or_else(default_r_grid, |g| g.values());
    let map = stability_map(&c, &r, &query)?;
    map.write_csv(out)?;
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    let path = match &cli.command {
        Command::Solve(a) => &a.run.out,
        Command::Converge(a) => &a.run.out,
        Command::Stability(a) => &a.out,
    };
    let mut out = sink(path)?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &mut out)?,
        Command::Converge(a) => cmd_converge(a, &mut out)?,
        Command::Stability(a) => cmd_stability(a, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn grid_spec_parsing() {
        let g: GridSpec = "0:-10:101".parse().unwrap();
        let v = g.values();
        assert_eq!((v.len(), v[0], v[100]), (101, 0.0, -10.0));
        assert_eq!("0.5:2:1".parse::<GridSpec>().unwrap().values(), [0.5]);
        for bad in ["0:1", "0:1:0", "a:1:2", "0:1:2:3"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn parses_every_subcommand() {
        Cli::command().debug_assert();
        let cli = Cli::try_parse_from(["ader", "converge", "--order", "2,3", "--cells", "16,32"]).unwrap();
        match cli.command {
            Command::Converge(a) => assert_eq!((a.orders, a.meshes), (vec![2, 3], vec![16, 32])),
            _ => panic!("wrong subcommand"),
        }
    }
}
