//! Time marching and the mesh-refinement harness.

use std::time::Instant;

use rayon::prelude::*;

use crate::ck::CkEngine;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::flux::{interface_fluctuations, noncons_volume_term, source_integral, FluctuationPair, PATH_POINTS};
use crate::grid::{apply_boundary, cell_averages, error_norms, observed_order, BoundaryKind, CellField, Grid, Norms};
use crate::predictor::{build_predictor_table, PredictorRules, PredictorTable, TableScope};
use crate::quadrature::{gauss_legendre, QuadratureRule};
use crate::systems::BalanceLaw;
use crate::weno::reconstruct;

/// Diagnostics of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub max_iterations: usize,
    pub total_iterations: usize,
    /// `Σ_i Δx Q_i` per unknown after the step.
    pub totals: Vec<f64>,
    pub wall_seconds: f64,
}

/// `C_cfl Δx / λ_max` over the interior cells; `max_dt` when every speed vanishes.
pub fn compute_dt<S: BalanceLaw>(sys: &S, field: &CellField, cfl: f64, dx: f64, max_dt: f64) -> Result<f64> {
    let mut lmax = 0.0f64;
    for (i, q) in field.interior().chunks_exact(field.n_vars()).enumerate() {
        let s = sys.max_speed(q).map_err(|e| e.in_cell(i))?;
        lmax = lmax.max(s);
    }
    let dt = if lmax > 0.0 { cfl * dx / lmax } else { max_dt };
    if dt.is_finite() && dt > 0.0 {
        Ok(dt.min(max_dt))
    } else {
        Err(Error::InvalidConfig("all wave speeds vanish and no maximum time step is set".into()))
    }
}

/// Step size that lands on `t_out` exactly.
pub fn clip_dt(t: f64, t_out: f64, dt: f64) -> f64 {
    if t + dt >= t_out {
        t_out - t
    } else {
        dt
    }
}

/// Reusable per-run state: quadrature rules and the CK engine.
pub struct Stepper<'a, S: BalanceLaw> {
    pub sys: &'a S,
    pub grid: Grid,
    pub config: RunConfig,
    pub rules: PredictorRules,
    engine: CkEngine<'a, S>,
    path: QuadratureRule,
}

impl<'a, S: BalanceLaw> Stepper<'a, S> {
    pub fn new(sys: &'a S, grid: Grid, config: RunConfig) -> Result<Self> {
        config.validate()?;
        let degree = config.degree();
        Ok(Self {
            sys,
            grid,
            rules: PredictorRules::new(degree)?,
            engine: CkEngine::new(sys, degree),
            path: gauss_legendre(PATH_POINTS)?,
            config,
        })
    }

    /// Field of initial cell averages with the ghost width the scheme needs.
    pub fn initial_field(&self) -> Result<CellField> {
        let cells = cell_averages(&self.grid, |x| self.sys.initial_condition(x));
        CellField::from_cells(&cells, self.config.ghost_width())
    }

    fn table(&self, field: &CellField, i: isize, dt: f64, scope: TableScope) -> Result<PredictorTable> {
        let m = self.config.degree() as isize;
        let window: Vec<&[f64]> = (i - m..=i + m).map(|j| field.cell(j)).collect();
        let poly = reconstruct(&window, m as usize, self.grid.dx);
        build_predictor_table(&self.engine, &poly, dt, &self.rules, &self.config, scope)
            .map_err(|e| e.in_cell(i.max(0) as usize))
    }

    /// One ADER step of size `dt`; ghosts are refilled first.
    pub fn step(&self, field: &mut CellField, dt: f64) -> Result<StepReport> {
        let start = Instant::now();
        let n = self.grid.n_cells;
        let m = self.sys.n_vars();
        apply_boundary(field, self.config.boundary, self.config.ghost_width())?;

        let interior: Vec<PredictorTable> = {
            let f: &CellField = field;
            (0..n as isize)
                .into_par_iter()
                .map(|i| self.table(f, i, dt, TableScope::Full))
                .collect::<Result<_>>()?
        };
        let (ghost_left, ghost_right) = match self.config.boundary {
            BoundaryKind::Periodic => (interior[n - 1].clone(), interior[0].clone()),
            BoundaryKind::Transmissive => (
                self.table(field, -1, dt, TableScope::TracesOnly)?,
                self.table(field, n as isize, dt, TableScope::TracesOnly)?,
            ),
        };
        let cell_table = |i: isize| -> &PredictorTable {
            if i < 0 {
                &ghost_left
            } else if i as usize >= n {
                &ghost_right
            } else {
                &interior[i as usize]
            }
        };
        // Interface k sits between cells k - 1 and k.
        let (alpha, dx) = (self.config.alpha, self.grid.dx);
        let fluct: Vec<FluctuationPair> = (0..=n as isize)
            .into_par_iter()
            .map(|k| {
                interface_fluctuations(
                    self.sys,
                    cell_table(k - 1),
                    cell_table(k),
                    &self.rules.interface_time,
                    &self.path,
                    alpha,
                    dt,
                    dx,
                )
            })
            .collect();
        let updates: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let t = &interior[i];
                let s = source_integral(self.sys, t, &self.rules);
                let a = noncons_volume_term(self.sys, t, &self.rules);
                (0..m)
                    .map(|c| -dt / dx * (fluct[i].plus[c] + fluct[i + 1].minus[c]) + dt * (s[c] - a[c]))
                    .collect()
            })
            .collect();
        for (i, du) in updates.iter().enumerate() {
            for (q, d) in field.cell_mut(i as isize).iter_mut().zip(du) {
                *q += d;
            }
        }
        if !field.is_finite() {
            return Err(Error::NonFinite("cell update"));
        }
        let max_iterations = interior.iter().map(|t| t.max_iterations).max().unwrap_or(0);
        let total_iterations = interior.iter().map(|t| t.total_iterations).sum();
        Ok(StepReport {
            dt,
            max_iterations,
            total_iterations,
            totals: field.totals(dx),
            wall_seconds: start.elapsed().as_secs_f64(),
        })
    }
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub grid: Grid,
    pub field: CellField,
    pub time: f64,
    pub initial_totals: Vec<f64>,
    pub steps: Vec<StepReport>,
    pub wall_seconds: f64,
}

impl RunOutput {
    pub fn max_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.max_iterations).max().unwrap_or(0)
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.total_iterations).sum()
    }

    /// Largest relative change of `Σ Δx Q` over the run, per unknown.
    pub fn conservation_drift(&self) -> Vec<f64> {
        let last = self.field.totals(self.grid.dx);
        self.initial_totals
            .iter()
            .zip(&last)
            .map(|(a, b)| (b - a).abs() / a.abs().max(f64::MIN_POSITIVE))
            .collect()
    }

    pub fn error_norms<S: BalanceLaw>(&self, sys: &S) -> Option<Vec<Norms>> {
        sys.exact_solution(self.grid.x_lo, 0.0)?;
        Some(error_norms(
            &self.field,
            &self.grid,
            |x, t| sys.exact_solution(x, t).expect("checked above"),
            self.time,
        ))
    }
}

/// Marches the initial cell averages to `config.t_out`.
pub fn run<S: BalanceLaw>(sys: &S, grid: Grid, config: &RunConfig) -> Result<RunOutput> {
    let start = Instant::now();
    let stepper = Stepper::new(sys, grid, config.clone())?;
    let mut field = stepper.initial_field()?;
    let initial_totals = field.totals(grid.dx);
    let mut t = 0.0;
    let mut steps = Vec::new();
    while t < config.t_out {
        let nominal = compute_dt(sys, &field, config.cfl, grid.dx, config.max_dt)?;
        let dt = clip_dt(t, config.t_out, nominal);
        steps.push(stepper.step(&mut field, dt)?);
        t = if dt == nominal { t + dt } else { config.t_out };
    }
    Ok(RunOutput {
        grid,
        field,
        time: t,
        initial_totals,
        steps,
        wall_seconds: start.elapsed().as_secs_f64(),
    })
}

/// One line of a convergence table.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub order: usize,
    pub mesh: usize,
    /// Errors of the tracked unknown.
    pub errors: Norms,
    /// Observed orders against the previous mesh (NaN on the first).
    pub orders: Norms,
    pub cpu_seconds: f64,
    pub max_iterations: usize,
}

pub const DEFAULT_MESHES: [usize; 4] = [16, 32, 64, 128];

/// Runs every mesh on `[x_lo, x_hi]` and chains observed orders of unknown `var`.
pub fn convergence_study<S: BalanceLaw>(
    sys: &S,
    config: &RunConfig,
    domain: (f64, f64),
    meshes: &[usize],
    var: usize,
) -> Result<Vec<ConvergenceRow>> {
    if sys.exact_solution(domain.0, 0.0).is_none() {
        return Err(Error::InvalidConfig(format!("{} has no exact solution", sys.name())));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(meshes.len());
    for &n in meshes {
        let grid = Grid::new(domain.0, domain.1, n)?;
        let out = run(sys, grid, config)?;
        let errors = out.error_norms(sys).expect("exact solution checked")[var];
        let orders = match rows.last() {
            Some(prev) => Norms {
                linf: observed_order(prev.errors.linf, errors.linf),
                l1: observed_order(prev.errors.l1, errors.l1),
                l2: observed_order(prev.errors.l2, errors.l2),
            },
            None => Norms {
                linf: f64::NAN,
                l1: f64::NAN,
                l2: f64::NAN,
            },
        };
        rows.push(ConvergenceRow {
            order: config.order,
            mesh: n,
            errors,
            orders,
            cpu_seconds: out.wall_seconds,
            max_iterations: out.max_iterations(),
        });
    }
    Ok(rows)
}
