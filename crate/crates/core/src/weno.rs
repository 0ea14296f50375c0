//! WENO reconstruction in the shifted Legendre basis on the unit cell.
//!
//! Candidate polynomials come from left, central and right stencils; the
//! stencil integrals, reconstruction operators and oscillation-index matrices
//! are computed once per degree in exact rational arithmetic.

use std::sync::OnceLock;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};

use crate::config::MAX_ORDER;

pub const WENO_POWER: i32 = 4;
pub const WENO_EPSILON: f64 = 1e-14;
pub const LAMBDA_SIDE: f64 = 1.0;
pub const LAMBDA_CENTRAL: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StencilKind {
    Left,
    Central,
    Right,
}

impl StencilKind {
    pub const ALL: [StencilKind; 3] = [StencilKind::Left, StencilKind::Central, StencilKind::Right];

    /// Cell offsets `j - i` covered by the stencil for degree `m`.
    pub fn offsets(self, m: usize) -> std::ops::RangeInclusive<isize> {
        let m = m as isize;
        match self {
            StencilKind::Left => -m..=0,
            StencilKind::Right => 0..=m,
            StencilKind::Central if m % 2 == 0 => -m / 2..=m / 2,
            StencilKind::Central => -m..=m,
        }
    }
}

type Q = BigRational;

fn rat(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn to_f64(q: &Q) -> f64 {
    q.to_f64().expect("finite rational")
}

fn binom(n: i64, k: i64) -> i64 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Monomial coefficients of `θ_l(ξ) = (-1)^l Σ_k C(l, k) C(l + k, k) (-ξ)^k`.
fn legendre_monomials(l: usize) -> Vec<i64> {
    let l = l as i64;
    let sign_l = if l % 2 == 0 { 1 } else { -1 };
    (0..=l)
        .map(|k| {
            let sign_k = if k % 2 == 0 { 1 } else { -1 };
            sign_l * sign_k * binom(l, k) * binom(l + k, k)
        })
        .collect()
}

/// Shifted Legendre polynomial `θ_l` on `[0, 1]`.
pub fn legendre(l: usize, xi: f64) -> f64 {
    legendre_monomials(l)
        .iter()
        .rev()
        .fold(0.0, |acc, &c| acc * xi + c as f64)
}

/// `∫_a^{a+1} θ_l(ξ) dξ`, exact.
fn legendre_cell_integral(l: usize, a: i64) -> Q {
    let mut total = Q::zero();
    for (k, c) in legendre_monomials(l).into_iter().enumerate() {
        let p = k as u32 + 1;
        let hi = BigInt::from(a + 1).pow(p);
        let lo = BigInt::from(a).pow(p);
        total += Q::new(BigInt::from(c) * (hi - lo), BigInt::from(p as i64));
    }
    total
}

fn rational_stencil_matrix(m: usize, kind: StencilKind) -> Vec<Vec<Q>> {
    kind.offsets(m)
        .map(|a| (0..=m).map(|l| legendre_cell_integral(l, a as i64)).collect())
        .collect()
}

/// Rows `j` of `∫_{j-i}^{j-i+1} θ_l(ξ) dξ` for the stencil; `2m + 1` rows for
/// the odd-degree central stencil, `m + 1` otherwise.
pub fn stencil_matrix(m: usize, kind: StencilKind) -> Vec<Vec<f64>> {
    rational_stencil_matrix(m, kind)
        .iter()
        .map(|r| r.iter().map(to_f64).collect())
        .collect()
}

/// Exact solve of a square system by Gauss–Jordan elimination.
fn solve_exact(mut a: Vec<Vec<Q>>, mut b: Vec<Vec<Q>>) -> Vec<Vec<Q>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("stencil matrices are nonsingular");
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip();
        a[col].iter_mut().for_each(|v| *v = &*v * &inv);
        b[col].iter_mut().for_each(|v| *v = &*v * &inv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..n {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
                for c in 0..b[r].len() {
                    let t = &f * &b[col][c];
                    b[r][c] -= t;
                }
            }
        }
    }
    b
}

/// Operator `R` with `β = R q` over the stencil values, exact.
fn rational_reconstruction(m: usize, kind: StencilKind) -> Vec<Vec<Q>> {
    let rows = rational_stencil_matrix(m, kind);
    let n = rows.len();
    if n == m + 1 {
        let identity = (0..n)
            .map(|r| (0..n).map(|c| if r == c { Q::one() } else { Q::zero() }).collect())
            .collect();
        return solve_exact(rows, identity);
    }
    // Odd-degree central: β_0 = q_i exactly (∫_0^1 θ_l = 0 for l > 0), the
    // remaining coefficients by least squares on q_j - q_i, j != i.
    let centre = m;
    let others: Vec<usize> = (0..n).filter(|&j| j != centre).collect();
    let mut ntn = vec![vec![Q::zero(); m]; m];
    for a in 0..m {
        for b in 0..m {
            for &j in &others {
                ntn[a][b] += &rows[j][a + 1] * &rows[j][b + 1];
            }
        }
    }
    // Right-hand side as a map from q: (N^T)(q_j - q_i).
    let mut rhs = vec![vec![Q::zero(); n]; m];
    for a in 0..m {
        for &j in &others {
            rhs[a][j] += &rows[j][a + 1];
            rhs[a][centre] -= &rows[j][a + 1];
        }
    }
    let tail = solve_exact(ntn, rhs);
    let mut r = vec![vec![Q::zero(); n]; m + 1];
    r[0][centre] = Q::one();
    r[1..].clone_from_slice(&tail[..m]);
    r
}

fn rational_oscillation_matrix(m: usize) -> Vec<Vec<Q>> {
    // Σ_{k=1}^{m} ∫_0^1 θ_a^(k) θ_b^(k) dξ via monomial derivatives.
    let polys: Vec<Vec<Q>> = (0..=m)
        .map(|l| legendre_monomials(l).into_iter().map(rat).collect())
        .collect();
    let derive = |p: &Vec<Q>| -> Vec<Q> {
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * rat(k as i64))
            .collect()
    };
    let mut derivs = polys;
    let mut sigma = vec![vec![Q::zero(); m + 1]; m + 1];
    for _ in 1..=m {
        derivs = derivs.iter().map(derive).collect();
        for a in 0..=m {
            for b in 0..=m {
                for (i, ca) in derivs[a].iter().enumerate() {
                    for (j, cb) in derivs[b].iter().enumerate() {
                        sigma[a][b] += ca * cb / rat((i + j + 1) as i64);
                    }
                }
            }
        }
    }
    sigma
}

/// Precomputed operators for one degree.
#[derive(Debug, Clone)]
pub struct WenoTables {
    pub degree: usize,
    /// Per stencil kind (left, central, right): `(m + 1) × n_S` matrix.
    pub reconstruction: [Vec<Vec<f64>>; 3],
    /// Symmetric oscillation-index matrix.
    pub oscillation: Vec<Vec<f64>>,
    /// Monomial coefficients of `θ_l`: `monomials[l][k]` multiplies `ξ^k`.
    pub monomials: Vec<Vec<f64>>,
}

fn build_tables(m: usize) -> WenoTables {
    let f = |r: Vec<Vec<Q>>| -> Vec<Vec<f64>> {
        r.iter().map(|row| row.iter().map(to_f64).collect()).collect()
    };
    WenoTables {
        degree: m,
        reconstruction: StencilKind::ALL.map(|k| f(rational_reconstruction(m, k))),
        oscillation: f(rational_oscillation_matrix(m)),
        monomials: (0..=m)
            .map(|l| legendre_monomials(l).into_iter().map(|c| c as f64).collect())
            .collect(),
    }
}

/// Cached tables for degree `m` (`0 ≤ m < MAX_ORDER`).
pub fn tables(m: usize) -> &'static WenoTables {
    static CACHE: [OnceLock<WenoTables>; MAX_ORDER] = [const { OnceLock::new() }; MAX_ORDER];
    CACHE[m].get_or_init(|| build_tables(m))
}

fn kind_index(kind: StencilKind) -> usize {
    match kind {
        StencilKind::Left => 0,
        StencilKind::Central => 1,
        StencilKind::Right => 2,
    }
}

/// Reconstruction operator of one stencil: `β = R q_S`.
pub fn stencil_reconstruction(m: usize, kind: StencilKind) -> &'static [Vec<f64>] {
    &tables(m).reconstruction[kind_index(kind)]
}

/// Legendre coefficients of the candidate polynomial of `kind` from the
/// averages over that stencil (ordered by increasing cell index).
pub fn candidate_polynomial(values: &[f64], m: usize, kind: StencilKind) -> Vec<f64> {
    let r = stencil_reconstruction(m, kind);
    assert_eq!(values.len(), r[0].len(), "stencil size mismatch");
    r.iter()
        .map(|row| row.iter().zip(values).map(|(a, b)| a * b).sum())
        .collect()
}

/// `Σ_{k=1}^{m} ∫_0^1 (p^(k))^2 dξ` for Legendre coefficients `beta`.
pub fn oscillation_index(beta: &[f64], m: usize) -> f64 {
    let s = &tables(m).oscillation;
    let mut oi = 0.0;
    for a in 1..=m {
        for b in 1..=m {
            oi += beta[a] * s[a][b] * beta[b];
        }
    }
    oi
}

/// Normalized WENO weights `(ω_L, ω_C, ω_R)`.
pub fn nonlinear_weights(oi_l: f64, oi_c: f64, oi_r: f64) -> [f64; 3] {
    let raw = |lambda: f64, oi: f64| lambda / (oi + WENO_EPSILON).powi(WENO_POWER);
    let w = [
        raw(LAMBDA_SIDE, oi_l),
        raw(LAMBDA_CENTRAL, oi_c),
        raw(LAMBDA_SIDE, oi_r),
    ];
    let total: f64 = w.iter().sum();
    if !total.is_finite() || total == 0.0 {
        // Every index overflowed or underflowed; fall back to the smallest one.
        let ois = [oi_l, oi_c, oi_r];
        let best = (0..3).min_by(|&a, &b| ois[a].total_cmp(&ois[b])).unwrap_or(1);
        let mut out = [0.0; 3];
        out[best] = 1.0;
        return out;
    }
    w.map(|v| v / total)
}

/// Window slice of one stencil inside a `2m + 1` window centred on the cell.
fn stencil_window(window: &[f64], m: usize, kind: StencilKind) -> &[f64] {
    let r = kind.offsets(m);
    let lo = (*r.start() + m as isize) as usize;
    let hi = (*r.end() + m as isize) as usize;
    &window[lo..=hi]
}

/// Blended Legendre coefficients and weights for a scalar window of `2m + 1`
/// averages centred on the cell.
pub fn reconstruct_scalar(window: &[f64], m: usize) -> (Vec<f64>, [f64; 3]) {
    assert_eq!(window.len(), 2 * m + 1, "window must hold 2M + 1 averages");
    if m == 0 {
        return (vec![window[0]], [0.0, 1.0, 0.0]);
    }
    let cands = StencilKind::ALL.map(|k| candidate_polynomial(stencil_window(window, m, k), m, k));
    let ois = cands.each_ref().map(|b| oscillation_index(b, m));
    let w = nonlinear_weights(ois[0], ois[1], ois[2]);
    let mut beta = vec![0.0; m + 1];
    for (s, cand) in cands.iter().enumerate() {
        for (b, c) in beta.iter_mut().zip(cand) {
            *b += w[s] * c;
        }
    }
    // The zeroth coefficient is the cell average for every candidate.
    beta[0] = window[m];
    (beta, w)
}

/// Per-cell degree-`M` polynomial on `ξ ∈ [0, 1]`, one coefficient set per unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionPolynomial {
    pub degree: usize,
    pub n_vars: usize,
    pub dx: f64,
    /// Legendre coefficients, entry `c * (degree + 1) + l`.
    pub coeffs: Vec<f64>,
}

impl ReconstructionPolynomial {
    pub fn legendre_coeffs(&self, var: usize) -> &[f64] {
        let n = self.degree + 1;
        &self.coeffs[var * n..(var + 1) * n]
    }

    /// `d^k/dx^k` in physical units at `ξ`, per unknown.
    pub fn eval_derivative(&self, xi: f64, k: usize) -> Vec<f64> {
        let basis = basis_derivatives(self.degree, xi, k);
        let scale = self.dx.powi(-(k as i32));
        (0..self.n_vars)
            .map(|c| {
                let b = self.legendre_coeffs(c);
                scale * b.iter().zip(&basis).map(|(x, y)| x * y).sum::<f64>()
            })
            .collect()
    }

    pub fn eval(&self, xi: f64) -> Vec<f64> {
        self.eval_derivative(xi, 0)
    }
}

/// `θ_l^(k)(ξ)` for `l = 0..=m` in reference units; zero once `k > l`.
pub fn basis_derivatives(m: usize, xi: f64, k: usize) -> Vec<f64> {
    let mono = &tables(m).monomials;
    mono.iter()
        .map(|coef| {
            let mut v = 0.0;
            for p in (k..coef.len()).rev() {
                let falling: f64 = (p - k + 1..=p).map(|i| i as f64).product();
                v = v * xi + coef[p] * falling;
            }
            v
        })
        .collect()
}

/// Reconstructs every unknown of a cell from a window of `2m + 1` cell states
/// (each of length `n_vars`), weights per unknown.
pub fn reconstruct(window: &[&[f64]], m: usize, dx: f64) -> ReconstructionPolynomial {
    let n_vars = window[m].len();
    let mut coeffs = Vec::with_capacity(n_vars * (m + 1));
    let mut scratch = vec![0.0; 2 * m + 1];
    for c in 0..n_vars {
        for (s, cell) in scratch.iter_mut().zip(window) {
            *s = cell[c];
        }
        coeffs.extend(reconstruct_scalar(&scratch, m).0);
    }
    ReconstructionPolynomial {
        degree: m,
        n_vars,
        dx,
        coeffs,
    }
}
