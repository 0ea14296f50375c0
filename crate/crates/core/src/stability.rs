//! Von Neumann analysis of the scheme on `∂t q + λ ∂x q = β q`.
//!
//! Everything is written in unit cell coordinates with `c = λΔt/Δx` and
//! `r = βΔt`. The data `q_j = e^{Iθj}` is reconstructed with fixed WENO
//! weights, evolved by the explicit or implicit predictor, and fed through the
//! one-step update; the resulting factor multiplies `q_i`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::MAX_ORDER;
use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, gauss_lobatto, QuadratureRule};
use crate::weno::{basis_derivatives, stencil_reconstruction, StencilKind};

pub const THETA_SAMPLES: usize = 128;
pub const DEFAULT_SCENARIOS: usize = 100;
/// Slack on `|A| <= 1` at the neutral boundary.
pub const STABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    Explicit,
    Implicit,
}

impl FromStr for PredictorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explicit" => Ok(Self::Explicit),
            "implicit" => Ok(Self::Implicit),
            other => Err(Error::InvalidConfig(format!("unknown predictor kind `{other}`"))),
        }
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Explicit => "explicit",
            Self::Implicit => "implicit",
        })
    }
}

/// Scheme and sampling parameters shared by every `(c, r)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityQuery {
    /// Order of accuracy `M + 1`.
    pub order: usize,
    pub predictor: PredictorKind,
    /// FORCE-α parameter; `1` is classical FORCE.
    pub alpha: f64,
    pub theta_samples: usize,
    pub scenarios: usize,
    pub seed: u64,
}

impl StabilityQuery {
    /// Explicit predictor with classical FORCE.
    pub fn explicit(order: usize) -> Self {
        Self {
            order,
            predictor: PredictorKind::Explicit,
            alpha: 1.0,
            theta_samples: THETA_SAMPLES,
            scenarios: DEFAULT_SCENARIOS,
            seed: 0,
        }
    }

    /// Implicit predictor with FORCE-α.
    pub fn implicit(order: usize, alpha: f64) -> Self {
        Self {
            predictor: PredictorKind::Implicit,
            alpha,
            ..Self::explicit(order)
        }
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(Error::InvalidConfig(format!("order must be in 1..={MAX_ORDER}, got {}", self.order)));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha must be >= 1, got {}", self.alpha)));
        }
        if self.theta_samples == 0 || self.scenarios == 0 {
            return Err(Error::InvalidConfig("theta samples and scenarios must be positive".into()));
        }
        Ok(())
    }

    /// Phase angles `2πk / n`, `k = 0..n`.
    pub fn thetas(&self) -> Vec<f64> {
        (0..self.theta_samples)
            .map(|k| 2.0 * PI * k as f64 / self.theta_samples as f64)
            .collect()
    }
}

/// `φ_{i+u}` as Legendre coefficients, indexed `[u + M][l]`.
///
/// `w_i(ξ) = Σ_u φ_{i+u}(ξ) q_{i+u}` for the blend of the three candidate
/// polynomials with fixed weights; the zeroth coefficient is `q_i` itself.
pub fn reconstruction_functionals(weights: [f64; 3], m: usize) -> Vec<Vec<f64>> {
    let mut phi = vec![vec![0.0; m + 1]; 2 * m + 1];
    phi[m][0] = 1.0;
    if m == 0 {
        return phi;
    }
    for (kind, &weight) in StencilKind::ALL.iter().zip(&weights) {
        let rec = stencil_reconstruction(m, *kind);
        let start = *kind.offsets(m).start();
        for (l, row) in rec.iter().enumerate().skip(1) {
            for (s, &v) in row.iter().enumerate() {
                let u = (start + s as isize + m as isize) as usize;
                phi[u][l] += weight * v;
            }
        }
    }
    phi
}

/// Reconstruction of the Fourier mode `q_j = e^{Iθj}` in cell `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicReconstruction {
    pub degree: usize,
    /// Complex Legendre coefficients.
    pub coeffs: Vec<Complex64>,
}

impl SymbolicReconstruction {
    /// `d^k w / dξ^k` at `ξ`.
    pub fn derivative(&self, xi: f64, k: usize) -> Complex64 {
        basis_derivatives(self.degree, xi, k)
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| c * b)
            .sum()
    }

    /// `w, w', ..., w^(M)` at `ξ`.
    pub fn derivative_stack(&self, xi: f64) -> Vec<Complex64> {
        (0..=self.degree).map(|k| self.derivative(xi, k)).collect()
    }
}

pub fn symbolic_reconstruction(theta: f64, weights: [f64; 3], m: usize) -> SymbolicReconstruction {
    let phi = reconstruction_functionals(weights, m);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); m + 1];
    for (u, row) in phi.iter().enumerate() {
        let mode = Complex64::from_polar(1.0, theta * (u as f64 - m as f64));
        for (c, &p) in coeffs.iter_mut().zip(row) {
            *c += mode * p;
        }
    }
    SymbolicReconstruction { degree: m, coeffs }
}

/// Quadrature rules of the update for degree `M`.
#[derive(Debug, Clone)]
struct UpdateRules {
    /// Gauss–Lobatto in time for the interface flux.
    flux_time: QuadratureRule,
    /// Gauss–Legendre in space and time for the source.
    volume: QuadratureRule,
}

impl UpdateRules {
    fn new(m: usize) -> Self {
        Self {
            flux_time: gauss_lobatto((m + 1).max(2)).expect("supported rule size"),
            volume: gauss_legendre(m + 1).expect("supported rule size"),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(r - c∂)^k` applied to the derivative stack `d`, keeping only `D_0`.
fn ck_term(d: &[Complex64], k: usize, c: f64, r: f64) -> Complex64 {
    (0..=k)
        .map(|j| d[j] * (binomial(k, j) * (-c).powi(j as i32) * r.powi((k - j) as i32)))
        .sum()
}

/// Predictor value at `(ξ, τ)` from the reconstruction stack `w` at `ξ`.
fn predictor_value(w: &[Complex64], tau: f64, c: f64, r: f64, kind: PredictorKind) -> Complex64 {
    let m = w.len() - 1;
    match kind {
        PredictorKind::Explicit => {
            let mut acc = w[0];
            let mut coef = 1.0;
            for k in 1..=m {
                coef *= tau / k as f64;
                acc += ck_term(w, k, c, r) * coef;
            }
            acc
        }
        PredictorKind::Implicit => {
            if tau == 0.0 || m == 0 {
                return w[0];
            }
            let denom = 1.0 - tau * r;
            let mut d = w.to_vec();
            d[m] = w[m] / denom;
            for j in (1..m).rev() {
                d[j] = (w[j] - d[j + 1] * (tau * c)) / denom;
            }
            // q + Σ_k (-τ)^k/k! (r - c∂)^k q = w, linear in q = d[0].
            d[0] = Complex64::new(0.0, 0.0);
            let mut lhs = 1.0;
            let mut rhs = w[0];
            let mut coef = 1.0;
            for k in 1..=m {
                coef *= -tau / k as f64;
                lhs += coef * r.powi(k as i32);
                rhs -= ck_term(&d, k, c, r) * coef;
            }
            rhs / lhs
        }
    }
}

/// Reconstruction stacks sampled where the update needs the predictor.
#[derive(Debug, Clone)]
struct SampledMode {
    /// At `ξ = 0` and `ξ = 1`.
    edges: [Vec<Complex64>; 2],
    /// At the spatial source nodes.
    nodes: Vec<Vec<Complex64>>,
}

impl SampledMode {
    fn new(rec: &SymbolicReconstruction, rules: &UpdateRules) -> Self {
        Self {
            edges: [rec.derivative_stack(0.0), rec.derivative_stack(1.0)],
            nodes: rules.volume.nodes.iter().map(|&x| rec.derivative_stack(x)).collect(),
        }
    }
}

/// `(Δt/Δx) F(q_L, q_R)` for FORCE-α on the linear flux `λq`.
fn force_alpha(ql: Complex64, qr: Complex64, c: f64, alpha: f64) -> Complex64 {
    (ql + qr) * (0.5 * c) - (qr - ql) * (0.25 * (alpha * c * c + 1.0 / alpha))
}

/// The predictor is linear in the reconstruction stack: `q(ξ, τ) = Σ_j P_j(τ) w^(j)(ξ)`.
/// Rows of `P` at the flux and source time nodes for one `(c, r)`.
#[derive(Debug, Clone)]
struct PredictorWeights {
    flux: Vec<Vec<f64>>,
    volume: Vec<Vec<f64>>,
}

impl PredictorWeights {
    fn new(m: usize, c: f64, r: f64, kind: PredictorKind, rules: &UpdateRules) -> Self {
        let row = |tau: f64| -> Vec<f64> {
            (0..=m)
                .map(|j| {
                    let mut unit = vec![Complex64::new(0.0, 0.0); m + 1];
                    unit[j] = Complex64::new(1.0, 0.0);
                    predictor_value(&unit, tau, c, r, kind).re
                })
                .collect()
        };
        Self {
            flux: rules.flux_time.nodes.iter().map(|&t| row(t)).collect(),
            volume: rules.volume.nodes.iter().map(|&t| row(t)).collect(),
        }
    }
}

fn apply(row: &[f64], w: &[Complex64]) -> Complex64 {
    row.iter().zip(w).map(|(p, v)| v * p).sum()
}

/// `A = 1 - c(f̂_{i+1/2} - f̂_{i-1/2}) + r ŝ_i` for cell `i = 0`.
fn amplitude_from_samples(
    mode: &SampledMode,
    theta: f64,
    c: f64,
    r: f64,
    alpha: f64,
    pred: &PredictorWeights,
    rules: &UpdateRules,
) -> Complex64 {
    let shift = Complex64::from_polar(1.0, theta);
    let mut flux = Complex64::new(0.0, 0.0);
    for (row, &wt) in pred.flux.iter().zip(&rules.flux_time.weights) {
        let inside = apply(row, &mode.edges[1]);
        let outside = apply(row, &mode.edges[0]) * shift;
        flux += force_alpha(inside, outside, c, alpha) * wt;
    }
    let mut source = Complex64::new(0.0, 0.0);
    if r != 0.0 {
        for (stack, &wx) in mode.nodes.iter().zip(&rules.volume.weights) {
            for (row, &wt) in pred.volume.iter().zip(&rules.volume.weights) {
                source += apply(row, stack) * (wx * wt);
            }
        }
    }
    // f̂_{i-1/2} is f̂_{i+1/2} shifted by one cell.
    Complex64::new(1.0, 0.0) - flux * (1.0 - shift.conj()) + source * r
}

fn amplitude(theta: f64, c: f64, r: f64, weights: [f64; 3], m: usize, alpha: f64, kind: PredictorKind) -> Complex64 {
    let rules = UpdateRules::new(m);
    let mode = SampledMode::new(&symbolic_reconstruction(theta, weights, m), &rules);
    let pred = PredictorWeights::new(m, c, r, kind, &rules);
    amplitude_from_samples(&mode, theta, c, r, alpha, &pred, &rules)
}

/// Amplification factor with the explicit Taylor predictor.
pub fn amplitude_explicit(theta: f64, c: f64, r: f64, weights: [f64; 3], m: usize, alpha: f64) -> Complex64 {
    amplitude(theta, c, r, weights, m, alpha, PredictorKind::Explicit)
}

/// Amplification factor with the implicit Taylor predictor.
pub fn amplitude_implicit(theta: f64, c: f64, r: f64, weights: [f64; 3], m: usize, alpha: f64) -> Complex64 {
    amplitude(theta, c, r, weights, m, alpha, PredictorKind::Implicit)
}

/// Random convex weights: uniform draws, normalized.
pub fn sample_weights(rng: &mut impl Rng) -> [f64; 3] {
    let raw: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let sum: f64 = raw.iter().sum();
    if sum > 0.0 {
        raw.map(|w| w / sum)
    } else {
        [1.0 / 3.0; 3]
    }
}

/// Per-stencil amplitudes `A_S(θ)` for all samples; the amplitude of any
/// weight triple is `Σ_S ω_S A_S(θ)`.
#[derive(Debug, Clone)]
struct StencilAmplitudes {
    per_theta: Vec<[Complex64; 3]>,
}

/// Precomputed reconstruction samples for one query.
#[derive(Debug, Clone)]
struct Analyzer {
    query: StabilityQuery,
    thetas: Vec<f64>,
    rules: UpdateRules,
    /// `[θ][S]`.
    modes: Vec<[SampledMode; 3]>,
}

impl Analyzer {
    fn new(query: &StabilityQuery) -> Result<Self> {
        query.validate()?;
        let m = query.degree();
        let rules = UpdateRules::new(m);
        let thetas = query.thetas();
        let onehot = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let modes = thetas
            .iter()
            .map(|&t| onehot.map(|w| SampledMode::new(&symbolic_reconstruction(t, w, m), &rules)))
            .collect();
        Ok(Self {
            query: query.clone(),
            thetas,
            rules,
            modes,
        })
    }

    fn stencil_amplitudes(&self, c: f64, r: f64) -> StencilAmplitudes {
        let q = &self.query;
        let pred = PredictorWeights::new(q.degree(), c, r, q.predictor, &self.rules);
        let per_theta = self
            .thetas
            .iter()
            .zip(&self.modes)
            .map(|(&t, modes)| {
                modes
                    .each_ref()
                    .map(|mode| amplitude_from_samples(mode, t, c, r, q.alpha, &pred, &self.rules))
            })
            .collect();
        StencilAmplitudes { per_theta }
    }

    fn fraction(&self, c: f64, r: f64, stream: u64) -> f64 {
        let amps = self.stencil_amplitudes(c, r);
        let stable_for = |w: [f64; 3]| {
            amps.per_theta.iter().all(|a| {
                let z = a[0] * w[0] + a[1] * w[1] + a[2] * w[2];
                z.norm() <= 1.0 + STABILITY_TOLERANCE
            })
        };
        if self.query.degree() == 0 {
            // No reconstruction weights at first order.
            return if stable_for([0.0, 1.0, 0.0]) { 1.0 } else { 0.0 };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.query.seed);
        rng.set_stream(stream);
        let stable = (0..self.query.scenarios)
            .filter(|_| stable_for(sample_weights(&mut rng)))
            .count();
        stable as f64 / self.query.scenarios as f64
    }
}

/// Share of random weight scenarios for which `max_θ |A| <= 1`.
pub fn stability_fraction(c: f64, r: f64, query: &StabilityQuery) -> Result<f64> {
    Ok(Analyzer::new(query)?.fraction(c, r, 0))
}

/// Stable fractions on a `(c, r)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityMap {
    pub c: Vec<f64>,
    pub r: Vec<f64>,
    /// Row-major over `r` then `c`: entry `ir * c.len() + ic`.
    pub fractions: Vec<f64>,
}

impl StabilityMap {
    pub fn get(&self, ic: usize, ir: usize) -> f64 {
        self.fractions[ir * self.c.len() + ic]
    }

    /// Sum of fractions weighted by the grid spacing.
    pub fn stable_area(&self) -> f64 {
        let spacing = |v: &[f64]| if v.len() > 1 { (v[v.len() - 1] - v[0]).abs() / (v.len() - 1) as f64 } else { 1.0 };
        self.fractions.iter().sum::<f64>() * spacing(&self.c) * spacing(&self.r)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "c,r,stable_fraction")?;
        for (ir, r) in self.r.iter().enumerate() {
            for (ic, c) in self.c.iter().enumerate() {
                writeln!(out, "{c},{r},{}", self.get(ic, ir))?;
            }
        }
        Ok(())
    }
}

/// `c = 0.01, 0.02, ..., 1.2`.
pub fn default_c_grid() -> Vec<f64> {
    (1..=120).map(|k| k as f64 / 100.0).collect()
}

/// `r = 0, -0.1, ..., -10`.
pub fn default_r_grid() -> Vec<f64> {
    (0..=100).map(|k| -(k as f64) / 10.0).collect()
}

/// Evaluates every grid point; point `p` draws its scenarios from stream `p`.
pub fn stability_map(c_grid: &[f64], r_grid: &[f64], query: &StabilityQuery) -> Result<StabilityMap> {
    let analyzer = Analyzer::new(query)?;
    let nc = c_grid.len();
    let fractions = (0..nc * r_grid.len())
        .into_par_iter()
        .map(|p| analyzer.fraction(c_grid[p % nc], r_grid[p / nc], p as u64))
        .collect();
    Ok(StabilityMap {
        c: c_grid.to_vec(),
        r: r_grid.to_vec(),
        fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weno::candidate_polynomial;
    use approx::assert_abs_diff_eq;

    const ONEHOT: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn constant_mode_reconstructs_to_one() {
        for m in 0..=4 {
            let rec = symbolic_reconstruction(0.0, [0.2, 0.5, 0.3], m);
            assert!(close(rec.coeffs[0], Complex64::new(1.0, 0.0), 1e-14));
            for c in &rec.coeffs[1..] {
                assert!(c.norm() < 1e-13, "{m}: {c}");
            }
        }
    }

    #[test]
    fn third_order_functionals() {
        let (wl, wc, wr) = (0.5, 0.3, 0.2);
        let phi = reconstruction_functionals([wl, wc, wr], 2);
        // Rows u = -2..=2, Legendre coefficients l = 0..=2.
        assert_abs_diff_eq!(phi[0][1], wl / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[0][2], wl / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[1][1], -wl - wc / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[1][2], -wl / 6.0 + wc / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[2][0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[2][1], 0.75 * (wl - wr), epsilon = 1e-15);
        assert_abs_diff_eq!(phi[2][2], wl / 12.0 - wc / 6.0 + wr / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[3][1], wr + wc / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[3][2], (wc / 2.0 - wr) / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[4][1], -wr / 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi[4][2], wr / 12.0, epsilon = 1e-15);
        // Functionals of a consistent reconstruction sum to the constant.
        for l in 0..=2 {
            let s: f64 = phi.iter().map(|row| row[l]).sum();
            assert_abs_diff_eq!(s, if l == 0 { 1.0 } else { 0.0 }, epsilon = 1e-15);
        }
    }

    #[test]
    fn central_weights_use_only_central_functionals() {
        let phi = reconstruction_functionals([0.0, 1.0, 0.0], 2);
        assert!(phi[0].iter().chain(&phi[4]).all(|&v| v == 0.0));
    }

    #[test]
    fn matches_candidate_polynomials_on_exponential_data() {
        for m in 1..=4 {
            for &theta in &[0.3, 1.7, 3.0, 5.5] {
                for (s, kind) in StencilKind::ALL.iter().enumerate() {
                    let rec = symbolic_reconstruction(theta, ONEHOT[s], m);
                    let offsets: Vec<isize> = kind.offsets(m).collect();
                    let re: Vec<f64> = offsets.iter().map(|&u| (theta * u as f64).cos()).collect();
                    let im: Vec<f64> = offsets.iter().map(|&u| (theta * u as f64).sin()).collect();
                    let (pr, pi) = (candidate_polynomial(&re, m, *kind), candidate_polynomial(&im, m, *kind));
                    for l in 0..=m {
                        assert!(close(rec.coeffs[l], Complex64::new(pr[l], pi[l]), 1e-12), "{m} {kind:?} {l}");
                    }
                }
            }
        }
    }

    #[test]
    fn first_order_force_closed_form() {
        for &c in &[0.0, 0.3, 0.9, 1.4] {
            for k in 0..16 {
                let theta = 2.0 * PI * k as f64 / 16.0;
                let a = amplitude_explicit(theta, c, 0.0, [0.0, 1.0, 0.0], 0, 1.0);
                let expected = Complex64::new(1.0 - 0.5 * (1.0 + c * c) * (1.0 - theta.cos()), -c * theta.sin());
                assert!(close(a, expected, 1e-14), "c={c} θ={theta}: {a} vs {expected}");
            }
        }
    }

    #[test]
    fn zero_phase_keeps_constants() {
        for m in 0..=4 {
            for &c in &[0.0, 0.1, 0.8] {
                for f in [amplitude_explicit, amplitude_implicit] {
                    let a = f(0.0, c, 0.0, [0.3, 0.4, 0.3], m, 1.7);
                    assert!(close(a, Complex64::new(1.0, 0.0), 1e-13), "{m} {c}: {a}");
                }
            }
        }
    }

    #[test]
    fn zero_speed_leaves_only_centred_dissipation() {
        // At c = 0 the predictor is w and the FORCE-α flux reduces to
        // -(1/4α)(q_R - q_L); the update then damps trace jumps only.
        for m in 0..=4 {
            for (alpha, f) in [(1.0, amplitude_explicit as fn(f64, f64, f64, [f64; 3], usize, f64) -> Complex64), (3.0, amplitude_implicit)] {
                for k in 0..8 {
                    let theta = 2.0 * PI * k as f64 / 8.0;
                    let w = [0.2, 0.5, 0.3];
                    let rec = symbolic_reconstruction(theta, w, m);
                    let shift = Complex64::from_polar(1.0, theta);
                    let jump = rec.derivative(0.0, 0) * shift - rec.derivative(1.0, 0);
                    let expected = Complex64::new(1.0, 0.0) + jump * (1.0 - shift.conj()) / (4.0 * alpha);
                    let a = f(theta, 0.0, 0.0, w, m, alpha);
                    assert!(close(a, expected, 1e-13), "{m}: {a} vs {expected}");
                }
            }
        }
    }

    #[test]
    fn implicit_predictor_reduces_to_reconstruction_at_zero_tau() {
        let rec = symbolic_reconstruction(1.1, [0.3, 0.3, 0.4], 3);
        let w = rec.derivative_stack(0.4);
        let q = predictor_value(&w, 0.0, 0.5, -2.0, PredictorKind::Implicit);
        assert_eq!(q, w[0]);
        let small = predictor_value(&w, 1e-9, 0.5, -2.0, PredictorKind::Implicit);
        assert!(close(small, w[0], 1e-8));
    }

    #[test]
    fn implicit_predictor_solves_its_equations() {
        // Residual of q + Σ (-τ)^k/k! (r - c∂)^k q = w with the chain equations.
        let rec = symbolic_reconstruction(2.2, [0.1, 0.6, 0.3], 4);
        let w = rec.derivative_stack(0.7);
        let (tau, c, r) = (0.6, 0.4, -3.0);
        let q = predictor_value(&w, tau, c, r, PredictorKind::Implicit);
        let mut d = w.clone();
        d[4] = w[4] / (1.0 - tau * r);
        for j in (1..4).rev() {
            d[j] = (w[j] - d[j + 1] * (tau * c)) / (1.0 - tau * r);
            let lhs = d[j] - (w[j] + (d[j] * r - d[j + 1] * c) * tau);
            assert!(lhs.norm() < 1e-13);
        }
        d[0] = q;
        let mut h = q - w[0];
        let mut coef = 1.0;
        for k in 1..=4 {
            coef *= -tau / k as f64;
            h += ck_term(&d, k, c, r) * coef;
        }
        assert!(h.norm() < 1e-13, "{h}");
    }

    #[test]
    fn explicit_predictor_is_exact_for_polynomial_advection_reaction() {
        // w = ξ² evolved by the truncated Taylor series of the exact solution.
        let w = [Complex64::new(0.25, 0.0), Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)];
        let (tau, c, r) = (0.5, 0.3, -0.4);
        let q = predictor_value(&w, tau, c, r, PredictorKind::Explicit);
        // (r - c∂)^k ξ² at ξ = 0.5, truncated at k = 2.
        let g1 = r * 0.25 - c * 1.0;
        let g2 = r * r * 0.25 - 2.0 * r * c * 1.0 + c * c * 2.0;
        assert_abs_diff_eq!(q.re, 0.25 + tau * g1 + tau * tau / 2.0 * g2, epsilon = 1e-15);
    }

    #[test]
    fn amplitude_is_linear_in_weights() {
        let w = [0.2, 0.45, 0.35];
        for m in 1..=4 {
            let a = amplitude_implicit(1.3, 0.2, -1.5, w, m, 2.0);
            let parts: Complex64 = (0..3).map(|s| amplitude_implicit(1.3, 0.2, -1.5, ONEHOT[s], m, 2.0) * w[s]).sum();
            assert!(close(a, parts, 1e-13));
        }
    }

    #[test]
    fn first_order_fraction_examples() {
        let q = StabilityQuery::explicit(1);
        assert_eq!(stability_fraction(0.5, 0.0, &q).unwrap(), 1.0);
        assert_eq!(stability_fraction(1.5, 0.0, &q).unwrap(), 0.0);
    }

    #[test]
    fn vanishing_step_is_stable_at_low_order() {
        for order in 1..=2 {
            for q in [StabilityQuery::explicit(order), StabilityQuery::implicit(order, 1.0)] {
                assert_eq!(stability_fraction(1e-3, 0.0, &q).unwrap(), 1.0, "{order} {:?}", q.predictor);
            }
        }
    }

    #[test]
    fn vanishing_step_with_central_weights_is_stable() {
        for m in 0..=4 {
            for k in 0..THETA_SAMPLES {
                let theta = 2.0 * PI * k as f64 / THETA_SAMPLES as f64;
                for f in [amplitude_explicit, amplitude_implicit] {
                    assert!(f(theta, 1e-3, 0.0, [0.0, 1.0, 0.0], m, 1.0).norm() <= 1.0 + STABILITY_TOLERANCE);
                }
            }
        }
    }

    #[test]
    fn one_sided_weights_amplify_at_vanishing_step() {
        // Centred dissipation acting on one-sided traces: max |A| = 1.0634 at
        // third order, from the classical edge values of the parabola.
        let max = (0..THETA_SAMPLES)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / THETA_SAMPLES as f64;
                let e = |j: f64| Complex64::from_polar(1.0, j * theta);
                let outer = (e(1.0) * 2.0 + e(0.0) * 5.0 - e(-1.0)) / 6.0;
                let inner = (e(-2.0) * 2.0 - e(-1.0) * 7.0 + e(0.0) * 11.0) / 6.0;
                let oracle = Complex64::new(1.0, 0.0) + (outer - inner) * (1.0 - e(-1.0)) / 4.0;
                let a = amplitude_explicit(theta, 0.0, 0.0, [1.0, 0.0, 0.0], 2, 1.0);
                assert!(close(a, oracle, 1e-13), "{a} vs {oracle}");
                a.norm()
            })
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(max, 1.063_438_771_651_935, epsilon = 1e-12);
    }

    #[test]
    fn map_is_deterministic_and_matches_fraction() {
        let q = StabilityQuery {
            scenarios: 10,
            theta_samples: 32,
            ..StabilityQuery::implicit(3, 1.0)
        };
        let one = stability_map(&[0.4], &[-1.0], &q).unwrap();
        assert_eq!(one.fractions, vec![stability_fraction(0.4, -1.0, &q).unwrap()]);
        let c = [0.2, 0.6, 1.0];
        let r = [0.0, -2.0];
        let a = stability_map(&c, &r, &q).unwrap();
        let b = stability_map(&c, &r, &q).unwrap();
        assert_eq!(a, b);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "c,r,stable_fraction");
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines[2].starts_with("0.6,0,"));
    }

    #[test]
    fn weights_are_convex() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let w = sample_weights(&mut rng);
            assert!(w.iter().all(|&v| v >= 0.0));
            assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn invalid_queries_are_rejected() {
        assert!(stability_fraction(0.5, 0.0, &StabilityQuery::explicit(0)).is_err());
        assert!(stability_fraction(0.5, 0.0, &StabilityQuery::implicit(3, 0.5)).is_err());
    }
}
