//! Implicit-Taylor predictor inside one space-time cell.
//!
//! At each node `(ξ, τ)` the state `D_0 = Q` and its spatial derivatives
//! `D_k = ∂x^k Q` are found by a nested fixed point: the derivatives follow a
//! linearized implicit evolution with coefficients frozen at the previous
//! `D_0`, then `D_0` takes a Newton step on the implicit Taylor residual.

use nalgebra::{DMatrix, DVector};

use crate::ck::CkEngine;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_lobatto, QuadratureRule};
use crate::series::MAX_DEGREE;
use crate::systems::{BalanceLaw, MAX_VARS};
use crate::weno::{basis_derivatives, ReconstructionPolynomial};

const STACK: usize = (MAX_DEGREE + 1) * MAX_VARS;
/// Attempts at halving a Newton step that leaves the admissible set.
const MAX_STEP_HALVINGS: usize = 5;
/// Contraction ratio above which the Newton matrix is refreshed.
const JACOBIAN_REFRESH_RATIO: f64 = 0.25;

/// Solves the linearized derivative evolution for `D_1..D_M`.
///
/// `w` holds `w^(k)` for `k = 0..=M`; on return `out[k * m..]` holds `D_k`
/// for `k ≥ 1` and `out[..m]` is `d0`.
pub fn solve_derivative_chain<S: BalanceLaw>(
    sys: &S,
    d0: &[f64],
    w: &[f64],
    tau: f64,
    degree: usize,
    out: &mut [f64],
) -> Result<()> {
    let m = sys.n_vars();
    out[..m].copy_from_slice(d0);
    if degree == 0 {
        return Ok(());
    }
    let mut a = [0.0; MAX_VARS * MAX_VARS];
    sys.quasilinear(d0, &mut a[..m * m]);
    let lu = if sys.has_source() && tau != 0.0 {
        let jac = sys.source_jacobian(d0);
        let lhs = DMatrix::identity(m, m) - jac * tau;
        let lu = lhs.lu();
        if lu.determinant().abs() < 1e-300 {
            return Err(Error::Singular("derivative evolution (I - τ J_S)"));
        }
        Some(lu)
    } else {
        None
    };
    for k in (1..=degree).rev() {
        let mut rhs = DVector::from_column_slice(&w[k * m..(k + 1) * m]);
        if k < degree {
            for r in 0..m {
                let mut acc = 0.0;
                for c in 0..m {
                    acc += a[r * m + c] * out[(k + 1) * m + c];
                }
                rhs[r] -= tau * acc;
            }
        }
        if let Some(lu) = &lu {
            rhs = lu.solve(&rhs).ok_or(Error::Singular("derivative evolution (I - τ J_S)"))?;
        }
        out[k * m..(k + 1) * m].copy_from_slice(rhs.as_slice());
    }
    Ok(())
}

/// Result of one point solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSolution {
    /// `D_0..D_M`, flat.
    pub stack: Vec<f64>,
    pub iterations: usize,
}

/// Nested fixed point at one node.
///
/// `w` is the stack of reconstruction derivatives at `ξ` in physical units,
/// `tau` the physical time offset from the start of the step.
pub fn solve_predictor_point<S: BalanceLaw>(
    engine: &CkEngine<'_, S>,
    w: &[f64],
    tau: f64,
    config: &RunConfig,
) -> Result<PointSolution> {
    solve_predictor_point_cached(engine, w, tau, config, &mut JacobianCache::default())
}

/// Factored Newton matrix kept between nodes that share the same `τ`.
#[derive(Debug, Clone, Default)]
pub struct JacobianCache {
    tau: f64,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

/// `dH/dD_0` with the derivative chain re-solved at every perturbed `D_0`.
fn composite_jacobian<S: BalanceLaw>(
    engine: &CkEngine<'_, S>,
    d0: &[f64],
    w: &[f64],
    tau: f64,
    stack: &mut [f64],
) -> Result<DMatrix<f64>> {
    let m = d0.len();
    let w0 = &w[..m];
    if engine.linear.is_some() {
        return engine.residual_jacobian(d0, stack, tau, w0);
    }
    let step = f64::EPSILON.cbrt();
    let mut jac = DMatrix::zeros(m, m);
    let mut x = [0.0; MAX_VARS];
    let (mut hp, mut hm) = ([0.0; MAX_VARS], [0.0; MAX_VARS]);
    for c in 0..m {
        x[..m].copy_from_slice(d0);
        let hc = step * (1.0 + d0[c].abs());
        x[c] = d0[c] + hc;
        solve_derivative_chain(engine.sys, &x[..m], w, tau, engine.degree, stack)?;
        engine.residual(&x[..m], stack, tau, w0, &mut hp)?;
        x[c] = d0[c] - hc;
        solve_derivative_chain(engine.sys, &x[..m], w, tau, engine.degree, stack)?;
        engine.residual(&x[..m], stack, tau, w0, &mut hm)?;
        for r in 0..m {
            jac[(r, c)] = (hp[r] - hm[r]) / (2.0 * hc);
        }
    }
    solve_derivative_chain(engine.sys, d0, w, tau, engine.degree, stack)?;
    Ok(jac)
}

/// Same as [`solve_predictor_point`], starting from a cached Newton matrix
/// when one was factored at the same `τ`.
pub fn solve_predictor_point_cached<S: BalanceLaw>(
    engine: &CkEngine<'_, S>,
    w: &[f64],
    tau: f64,
    config: &RunConfig,
    cache: &mut JacobianCache,
) -> Result<PointSolution> {
    let sys = engine.sys;
    let m = sys.n_vars();
    let degree = engine.degree;
    let len = (degree + 1) * m;
    let mut stack = [0.0; STACK];
    stack[..len].copy_from_slice(&w[..len]);
    if tau == 0.0 || degree == 0 {
        return Ok(PointSolution {
            stack: stack[..len].to_vec(),
            iterations: 1,
        });
    }
    let w0 = &w[..m];
    let mut d0 = [0.0; MAX_VARS];
    d0[..m].copy_from_slice(w0);
    if cache.tau != tau {
        cache.lu = None;
        cache.tau = tau;
    }
    let mut last_step = f64::INFINITY;
    let mut h = [0.0; MAX_VARS];
    for iter in 1..=config.max_iterations {
        solve_derivative_chain(sys, &d0[..m], w, tau, degree, &mut stack[..len])?;
        engine.residual(&d0[..m], &mut stack[..len], tau, w0, &mut h)?;
        if cache.lu.is_none() {
            let jac = composite_jacobian(engine, &d0[..m], w, tau, &mut stack[..len])?;
            cache.lu = Some(jac.lu());
        }
        let delta = cache
            .lu
            .as_ref()
            .expect("factorized above")
            .solve(&DVector::from_column_slice(&h[..m]))
            .ok_or(Error::Singular("predictor Newton matrix"))?;
        let mut scale = 1.0;
        let mut candidate = [0.0; MAX_VARS];
        let mut admissible = false;
        for _ in 0..=MAX_STEP_HALVINGS {
            for c in 0..m {
                candidate[c] = d0[c] - scale * delta[c];
            }
            if sys.is_admissible(&candidate[..m]) {
                admissible = true;
                break;
            }
            scale *= 0.5;
        }
        if !admissible {
            return Err(Error::Inadmissible(candidate[..m].to_vec()));
        }
        let step = (0..m)
            .map(|c| (candidate[c] - d0[c]).abs())
            .fold(0.0, f64::max);
        d0[..m].copy_from_slice(&candidate[..m]);
        let size = d0[..m].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if step <= config.tolerance * (1.0 + size) {
            solve_derivative_chain(sys, &d0[..m], w, tau, degree, &mut stack[..len])?;
            return Ok(PointSolution {
                stack: stack[..len].to_vec(),
                iterations: iter,
            });
        }
        if step > JACOBIAN_REFRESH_RATIO * last_step {
            cache.lu = None;
        }
        last_step = step;
    }
    Err(Error::PredictorDivergence {
        tau,
        iterations: config.max_iterations,
        residual: last_step,
    })
}

/// Quadrature nodes of the predictor and the basis data evaluated on them.
#[derive(Debug, Clone)]
pub struct PredictorRules {
    pub degree: usize,
    /// Gauss–Legendre in space, `M + 1` points.
    pub space: QuadratureRule,
    /// Gauss–Legendre in time for volume integrals, `M + 1` points.
    pub time: QuadratureRule,
    /// Gauss–Lobatto in time for the interface fluctuations.
    pub interface_time: QuadratureRule,
    /// `θ_l^(k)` at each spatial node: `[node][k][l]`.
    space_basis: Vec<Vec<Vec<f64>>>,
    /// Same at `ξ = 0` and `ξ = 1`.
    edge_basis: [Vec<Vec<f64>>; 2],
    /// `diff[a][b] = L_b'(ξ_a)` for the Lagrange basis on the spatial nodes.
    diff: Vec<Vec<f64>>,
}

impl PredictorRules {
    pub fn new(degree: usize) -> Result<Self> {
        let n = degree + 1;
        let space = gauss_legendre(n)?;
        let time = gauss_legendre(n)?;
        let interface_time = gauss_lobatto(n.max(2))?;
        let basis_at = |xi: f64| -> Vec<Vec<f64>> {
            (0..=degree).map(|k| basis_derivatives(degree, xi, k)).collect()
        };
        let space_basis = space.nodes.iter().map(|&x| basis_at(x)).collect();
        let edge_basis = [basis_at(0.0), basis_at(1.0)];
        let diff = lagrange_derivative_matrix(&space.nodes);
        Ok(Self {
            degree,
            space,
            time,
            interface_time,
            space_basis,
            edge_basis,
            diff,
        })
    }

    fn derivative_stack(basis: &[Vec<f64>], poly: &ReconstructionPolynomial, out: &mut [f64]) {
        let m = poly.n_vars;
        let n = poly.degree + 1;
        let mut scale = 1.0;
        for (k, row) in basis.iter().enumerate() {
            for c in 0..m {
                let b = &poly.coeffs[c * n..(c + 1) * n];
                out[k * m + c] = scale * b.iter().zip(row).map(|(x, y)| x * y).sum::<f64>();
            }
            scale /= poly.dx;
        }
    }
}

/// `D[a][b] = L_b'(x_a)` for the Lagrange basis through `nodes`.
pub fn lagrange_derivative_matrix(nodes: &[f64]) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let bary: Vec<f64> = (0..n)
        .map(|j| {
            1.0 / (0..n)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                d[a][b] = bary[b] / bary[a] / (nodes[a] - nodes[b]);
            }
        }
        d[a][a] = -(0..n).filter(|&b| b != a).map(|b| d[a][b]).sum::<f64>();
    }
    d
}

/// Predictor values over one cell.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictorTable {
    pub n_vars: usize,
    pub n_space: usize,
    pub n_time: usize,
    /// `Q(ξ_l, τ_j)`, entry `(j * n_space + l) * m + c`.
    pub values: Vec<f64>,
    /// `∂x Q` from the Lagrange interpolant in space, same layout.
    pub gradients: Vec<f64>,
    /// `Q(0, τ_u)` at the interface time nodes, entry `u * m + c`.
    pub left_trace: Vec<f64>,
    /// `Q(1, τ_u)`.
    pub right_trace: Vec<f64>,
    pub max_iterations: usize,
    pub total_iterations: usize,
}

impl PredictorTable {
    pub fn value(&self, time: usize, space: usize) -> &[f64] {
        let o = (time * self.n_space + space) * self.n_vars;
        &self.values[o..o + self.n_vars]
    }

    pub fn gradient(&self, time: usize, space: usize) -> &[f64] {
        let o = (time * self.n_space + space) * self.n_vars;
        &self.gradients[o..o + self.n_vars]
    }

    pub fn left(&self, u: usize) -> &[f64] {
        &self.left_trace[u * self.n_vars..(u + 1) * self.n_vars]
    }

    pub fn right(&self, u: usize) -> &[f64] {
        &self.right_trace[u * self.n_vars..(u + 1) * self.n_vars]
    }
}

/// Which parts of the table to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableScope {
    Full,
    /// Interface traces only (ghost cells).
    TracesOnly,
}

/// Solves the predictor at every node of one cell.
pub fn build_predictor_table<S: BalanceLaw>(
    engine: &CkEngine<'_, S>,
    poly: &ReconstructionPolynomial,
    dt: f64,
    rules: &PredictorRules,
    config: &RunConfig,
    scope: TableScope,
) -> Result<PredictorTable> {
    let m = poly.n_vars;
    let len = (rules.degree + 1) * m;
    let mut table = PredictorTable {
        n_vars: m,
        n_space: rules.space.len(),
        n_time: rules.time.len(),
        ..Default::default()
    };
    let track = |sol: &PointSolution, table: &mut PredictorTable| {
        table.max_iterations = table.max_iterations.max(sol.iterations);
        table.total_iterations += sol.iterations;
    };

    let nu = rules.interface_time.len();
    let mut edges = [[0.0; STACK]; 2];
    for (edge, basis) in edges.iter_mut().zip(&rules.edge_basis) {
        PredictorRules::derivative_stack(basis, poly, &mut edge[..len]);
    }
    table.left_trace = vec![0.0; nu * m];
    table.right_trace = vec![0.0; nu * m];
    let mut cache = JacobianCache::default();
    for (u, &tn) in rules.interface_time.nodes.iter().enumerate() {
        for (side, edge) in edges.iter().enumerate() {
            let sol = solve_predictor_point_cached(engine, &edge[..len], tn * dt, config, &mut cache)?;
            track(&sol, &mut table);
            let trace = if side == 0 { &mut table.left_trace } else { &mut table.right_trace };
            trace[u * m..(u + 1) * m].copy_from_slice(&sol.stack[..m]);
        }
    }
    if scope == TableScope::TracesOnly {
        return Ok(table);
    }

    let (ns, nt) = (table.n_space, table.n_time);
    let mut stacks = vec![[0.0; STACK]; ns];
    for (stack, basis) in stacks.iter_mut().zip(&rules.space_basis) {
        PredictorRules::derivative_stack(basis, poly, &mut stack[..len]);
    }
    table.values = vec![0.0; ns * nt * m];
    for (j, &tn) in rules.time.nodes.iter().enumerate() {
        for (l, stack) in stacks.iter().enumerate() {
            let sol = solve_predictor_point_cached(engine, &stack[..len], tn * dt, config, &mut cache)?;
            track(&sol, &mut table);
            let o = (j * ns + l) * m;
            table.values[o..o + m].copy_from_slice(&sol.stack[..m]);
        }
    }
    table.gradients = vec![0.0; ns * nt * m];
    let inv_dx = 1.0 / poly.dx;
    for j in 0..nt {
        for a in 0..ns {
            for c in 0..m {
                let g: f64 = (0..ns)
                    .map(|b| rules.diff[a][b] * table.values[(j * ns + b) * m + c])
                    .sum();
                table.gradients[(j * ns + a) * m + c] = g * inv_dx;
            }
        }
    }
    Ok(table)
}
