//! Uniform 1-D grid, ghosted cell storage, boundary filling and error norms.

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, QuadratureRule};

/// Points per cell used when averaging exact solutions.
pub const EXACT_AVERAGE_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_cells: usize,
    pub dx: f64,
}

impl Grid {
    pub fn new(x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidGrid("cell count must be positive".into()));
        }
        if !(x_hi > x_lo) || !x_lo.is_finite() || !x_hi.is_finite() {
            return Err(Error::InvalidGrid(format!("empty domain [{x_lo}, {x_hi}]")));
        }
        Ok(Self {
            x_lo,
            x_hi,
            n_cells,
            dx: (x_hi - x_lo) / n_cells as f64,
        })
    }

    /// Left face of cell `i` (zero based).
    pub fn face(&self, i: usize) -> f64 {
        self.x_lo + i as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x_lo + (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn length(&self) -> f64 {
        self.x_hi - self.x_lo
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn make_grid(x_lo: f64, x_hi: f64, n_cells: usize) -> Result<Grid> {
    Grid::new(x_lo, x_hi, n_cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Periodic,
    Transmissive,
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "transmissive" => Ok(Self::Transmissive),
            other => Err(Error::InvalidConfig(format!("unknown boundary kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Periodic => "periodic",
            Self::Transmissive => "transmissive",
        })
    }
}

/// Cell averages of `n_vars` unknowns with a ghost layer on each side.
///
/// Storage is cell-major: the state of cell `i` (which may be negative or
/// `>= n_cells` for ghosts) is a contiguous slice of `n_vars` values.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    n_cells: usize,
    n_vars: usize,
    ghost: usize,
    data: Vec<f64>,
}

impl CellField {
    pub fn zeros(n_cells: usize, n_vars: usize, ghost: usize) -> Self {
        Self {
            n_cells,
            n_vars,
            ghost,
            data: vec![0.0; (n_cells + 2 * ghost) * n_vars],
        }
    }

    /// Builds a field from interior values given cell by cell.
    pub fn from_cells(cells: &[Vec<f64>], ghost: usize) -> Result<Self> {
        let n_vars = cells.first().map(Vec::len).unwrap_or(0);
        if cells.is_empty() || n_vars == 0 {
            return Err(Error::InvalidGrid("empty field".into()));
        }
        let mut field = Self::zeros(cells.len(), n_vars, ghost);
        for (i, c) in cells.iter().enumerate() {
            if c.len() != n_vars {
                return Err(Error::InvalidGrid("ragged cell states".into()));
            }
            field.cell_mut(i as isize).copy_from_slice(c);
        }
        Ok(field)
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn ghost(&self) -> usize {
        self.ghost
    }

    fn offset(&self, i: isize) -> usize {
        let g = i + self.ghost as isize;
        assert!(
            g >= 0 && (g as usize) < self.n_cells + 2 * self.ghost,
            "cell index {i} outside ghosted range"
        );
        g as usize * self.n_vars
    }

    pub fn cell(&self, i: isize) -> &[f64] {
        let o = self.offset(i);
        &self.data[o..o + self.n_vars]
    }

    pub fn cell_mut(&mut self, i: isize) -> &mut [f64] {
        let o = self.offset(i);
        let m = self.n_vars;
        &mut self.data[o..o + m]
    }

    /// Interior values, cell-major.
    pub fn interior(&self) -> &[f64] {
        let o = self.ghost * self.n_vars;
        &self.data[o..o + self.n_cells * self.n_vars]
    }

    pub fn interior_mut(&mut self) -> &mut [f64] {
        let o = self.ghost * self.n_vars;
        let len = self.n_cells * self.n_vars;
        &mut self.data[o..o + len]
    }

    /// Interior values of one unknown.
    pub fn component(&self, var: usize) -> Vec<f64> {
        (0..self.n_cells as isize).map(|i| self.cell(i)[var]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.interior().iter().all(|v| v.is_finite())
    }

    /// `sum_i dx * Q_i` per unknown.
    pub fn totals(&self, dx: f64) -> Vec<f64> {
        let mut totals = vec![0.0; self.n_vars];
        for c in self.interior().chunks_exact(self.n_vars) {
            for (t, v) in totals.iter_mut().zip(c) {
                *t += dx * v;
            }
        }
        totals
    }
}

/// Fills every ghost cell of `field`.
///
/// `reach` is the stencil reach the caller needs; it must not exceed the ghost
/// width of the field.
pub fn apply_boundary(field: &mut CellField, kind: BoundaryKind, reach: usize) -> Result<()> {
    if reach > field.ghost {
        return Err(Error::InvalidConfig(format!(
            "ghost width {} below stencil reach {reach}",
            field.ghost
        )));
    }
    let n = field.n_cells as isize;
    let g = field.ghost as isize;
    let ghosts = (-g..0).chain(n..n + g);
    for i in ghosts {
        let src = match kind {
            BoundaryKind::Periodic => i.rem_euclid(n),
            BoundaryKind::Transmissive => i.clamp(0, n - 1),
        };
        let (so, dof) = (field.offset(src), field.offset(i));
        let m = field.n_vars;
        field.data.copy_within(so..so + m, dof);
    }
    Ok(())
}

/// Cell averages of `f` over every cell of `grid`, by 5-point Gauss–Legendre.
pub fn cell_averages(grid: &Grid, f: impl Fn(f64) -> Vec<f64>) -> Vec<Vec<f64>> {
    let rule = gauss_legendre(EXACT_AVERAGE_POINTS).expect("supported rule");
    (0..grid.n_cells)
        .map(|i| average_over(&rule, grid.face(i), grid.dx, &f))
        .collect()
}

fn average_over(rule: &QuadratureRule, x0: f64, dx: f64, f: &impl Fn(f64) -> Vec<f64>) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for (&xi, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = f(x0 + xi * dx);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, b) in acc.iter_mut().zip(v) {
            *a += w * b;
        }
    }
    acc
}

/// Discrete error norms of one unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Norms {
    pub linf: f64,
    pub l1: f64,
    pub l2: f64,
}

impl Norms {
    pub fn from_errors(errors: impl IntoIterator<Item = f64>, dx: f64) -> Self {
        let (mut linf, mut l1, mut l2) = (0.0f64, 0.0, 0.0);
        for e in errors {
            let a = e.abs();
            linf = linf.max(a);
            l1 += a;
            l2 += a * a;
        }
        Self {
            linf,
            l1: dx * l1,
            l2: (dx * l2).sqrt(),
        }
    }
}

/// Per-unknown L∞, L1 and L2 errors against exact cell averages at time `t`.
pub fn error_norms(
    field: &CellField,
    grid: &Grid,
    exact: impl Fn(f64, f64) -> Vec<f64>,
    t: f64,
) -> Vec<Norms> {
    let exact_avg = cell_averages(grid, |x| exact(x, t));
    (0..field.n_vars())
        .map(|v| {
            let errs = exact_avg
                .iter()
                .enumerate()
                .map(|(i, e)| field.cell(i as isize)[v] - e[v]);
            Norms::from_errors(errs, grid.dx)
        })
        .collect()
}

/// `log2(coarse / fine)` for mesh doubling; NaN when either error is not positive.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> f64 {
    if err_coarse > 0.0 && err_fine > 0.0 {
        (err_coarse / err_fine).log2()
    } else {
        f64::NAN
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn scalar_field(values: &[f64], ghost: usize) -> CellField {
        let cells: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        CellField::from_cells(&cells, ghost).unwrap()
    }

    #[test]
    fn grid_spacing() {
        let g = make_grid(0.0, 1.0, 16).unwrap();
        assert_eq!(g.dx, 0.0625);
        let g = make_grid(0.0, 1.0, 1).unwrap();
        assert_eq!(g.center(0), 0.5);
        let g = make_grid(0.0, 1.0, 100).unwrap();
        assert_abs_diff_eq!(g.dx, 0.01, epsilon = 1e-17);
        assert!(make_grid(0.0, 1.0, 0).is_err());
        assert!(make_grid(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn periodic_ghosts_wrap() {
        let mut f = scalar_field(&[1.0, 2.0, 3.0], 1);
        apply_boundary(&mut f, BoundaryKind::Periodic, 1).unwrap();
        assert_eq!(f.cell(-1), &[3.0]);
        assert_eq!(f.cell(3), &[1.0]);
    }

    #[test]
    fn transmissive_ghosts_copy_edges() {
        let mut f = scalar_field(&[1.0, 2.0, 3.0], 2);
        apply_boundary(&mut f, BoundaryKind::Transmissive, 2).unwrap();
        assert_eq!([f.cell(-2)[0], f.cell(-1)[0]], [1.0, 1.0]);
        assert_eq!([f.cell(3)[0], f.cell(4)[0]], [3.0, 3.0]);
    }

    #[test]
    fn periodic_sine_and_idempotence() {
        let g = make_grid(0.0, 1.0, 8).unwrap();
        let vals: Vec<f64> = g.centers().iter().map(|x| (2.0 * PI * x).sin()).collect();
        let mut f = scalar_field(&vals, 3);
        apply_boundary(&mut f, BoundaryKind::Periodic, 3).unwrap();
        for k in 1..=3isize {
            assert_eq!(f.cell(-k)[0], vals[(8 - k) as usize]);
            assert_eq!(f.cell(7 + k)[0], vals[(k - 1) as usize]);
        }
        let once = f.clone();
        apply_boundary(&mut f, BoundaryKind::Periodic, 3).unwrap();
        assert_eq!(once, f);
    }

    #[test]
    fn periodic_wraps_more_ghosts_than_cells() {
        let mut f = scalar_field(&[7.0], 3);
        apply_boundary(&mut f, BoundaryKind::Periodic, 3).unwrap();
        for k in -3..=3 {
            assert_eq!(f.cell(k)[0], 7.0);
        }
    }

    #[test]
    fn reach_beyond_ghost_width_rejected() {
        let mut f = scalar_field(&[1.0, 2.0], 1);
        assert!(apply_boundary(&mut f, BoundaryKind::Periodic, 2).is_err());
    }

    #[test]
    fn norms_of_exact_and_offset() {
        let g = make_grid(0.0, 2.0, 10).unwrap();
        let exact = |x: f64, _t: f64| vec![x * x];
        let avg = cell_averages(&g, |x| exact(x, 0.0));
        let f = CellField::from_cells(&avg, 1).unwrap();
        let n = error_norms(&f, &g, exact, 0.0)[0];
        assert_eq!((n.linf, n.l1, n.l2), (0.0, 0.0, 0.0));

        let shifted: Vec<Vec<f64>> = avg.iter().map(|c| vec![c[0] + 0.25]).collect();
        let f = CellField::from_cells(&shifted, 1).unwrap();
        let n = error_norms(&f, &g, exact, 0.0)[0];
        assert_abs_diff_eq!(n.linf, 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(n.l1, 0.25 * 2.0, epsilon = 1e-13);
    }

    #[test]
    fn l1_of_sine_against_zero() {
        let g = make_grid(0.0, 1.0, 400).unwrap();
        let f = CellField::zeros(400, 1, 1);
        // The exact L1 of |sin| is 2/pi; cell averaging perturbs it by O(dx^2).
        let n = error_norms(&f, &g, |x, _| vec![(2.0 * PI * x).sin()], 0.0)[0];
        assert_abs_diff_eq!(n.l1, 2.0 / PI, epsilon = 1e-4);
        assert!(n.l1 <= n.linf * g.length() + 1e-15);
        assert!(n.l2 * n.l2 <= n.linf * n.l1 + 1e-15);
    }

    #[test]
    fn orders() {
        assert_abs_diff_eq!(observed_order(4e-4, 1e-4), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(observed_order(3.07e-4, 3.83e-5), 3.00, epsilon = 5e-3);
        assert_eq!(observed_order(1e-3, 1e-3), 0.0);
        assert!(observed_order(0.0, 1e-3).is_nan());
        assert!(observed_order(1e-3, -1.0).is_nan());
    }
}
