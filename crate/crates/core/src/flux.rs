//! FORCE-α path-conservative fluctuations and the cell integrals of the update.

use nalgebra::DMatrix;

use crate::predictor::{PredictorRules, PredictorTable};
use crate::quadrature::QuadratureRule;
use crate::systems::{BalanceLaw, MAX_VARS};

/// Points of the Gauss–Legendre rule along the segment path.
pub const PATH_POINTS: usize = 3;

/// `Ã = Σ_j ω_j A(Q_L + s_j (Q_R - Q_L))`, row-major into `out`.
pub fn segment_average_a<S: BalanceLaw>(
    sys: &S,
    ql: &[f64],
    qr: &[f64],
    rule: &QuadratureRule,
    out: &mut [f64],
) {
    let m = sys.n_vars();
    out[..m * m].iter_mut().for_each(|v| *v = 0.0);
    let mut q = [0.0; MAX_VARS];
    let mut a = [0.0; MAX_VARS * MAX_VARS];
    for (&s, &w) in rule.nodes.iter().zip(&rule.weights) {
        for c in 0..m {
            q[c] = ql[c] + s * (qr[c] - ql[c]);
        }
        sys.quasilinear(&q[..m], &mut a[..m * m]);
        for (o, v) in out[..m * m].iter_mut().zip(&a[..m * m]) {
            *o += w * v;
        }
    }
}

/// `A^± = Ã / 2 ± (α Δt)/(4 Δx) [Ã² + (Δx/(α Δt))² I]`.
pub fn force_alpha_matrices(a: &DMatrix<f64>, alpha: f64, dt: f64, dx: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = a.nrows();
    let k = alpha * dt / dx;
    let diss = (a * a + DMatrix::identity(m, m) / (k * k)) * (0.25 * k);
    let half = a * 0.5;
    (&half - &diss, &half + &diss)
}

/// Time-averaged fluctuations `(D⁻, D⁺)` at one interface.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationPair {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

/// Fluctuations between the right trace of `left` and the left trace of
/// `right`, averaged over the interface time rule.
pub fn interface_fluctuations<S: BalanceLaw>(
    sys: &S,
    left: &PredictorTable,
    right: &PredictorTable,
    time_rule: &QuadratureRule,
    path_rule: &QuadratureRule,
    alpha: f64,
    dt: f64,
    dx: f64,
) -> FluctuationPair {
    let m = sys.n_vars();
    let mut minus = vec![0.0; m];
    let mut plus = vec![0.0; m];
    let k = alpha * dt / dx;
    let inv_k2 = 1.0 / (k * k);
    let mut at = [0.0; MAX_VARS * MAX_VARS];
    for (u, &w) in time_rule.weights.iter().enumerate() {
        let (ql, qr) = (left.right(u), right.left(u));
        let mut jump = [0.0; MAX_VARS];
        for c in 0..m {
            jump[c] = qr[c] - ql[c];
        }
        if jump[..m].iter().all(|&j| j == 0.0) {
            continue;
        }
        segment_average_a(sys, ql, qr, path_rule, &mut at);
        // Ã ΔQ and Ã² ΔQ without forming matrices.
        let mut aj = [0.0; MAX_VARS];
        for r in 0..m {
            aj[r] = (0..m).map(|c| at[r * m + c] * jump[c]).sum();
        }
        for r in 0..m {
            let a2j: f64 = (0..m).map(|c| at[r * m + c] * aj[c]).sum();
            let diss = 0.25 * k * (a2j + inv_k2 * jump[r]);
            minus[r] += w * (0.5 * aj[r] - diss);
            plus[r] += w * (0.5 * aj[r] + diss);
        }
    }
    FluctuationPair { minus, plus }
}

/// Space-time average of `S(Q)` over the cell.
pub fn source_integral<S: BalanceLaw>(sys: &S, table: &PredictorTable, rules: &PredictorRules) -> Vec<f64> {
    let m = sys.n_vars();
    let mut acc = vec![0.0; m];
    if !sys.has_source() {
        return acc;
    }
    let mut s = [0.0; MAX_VARS];
    for (j, &wt) in rules.time.weights.iter().enumerate() {
        for (l, &wx) in rules.space.weights.iter().enumerate() {
            sys.source(table.value(j, l), &mut s[..m]);
            for c in 0..m {
                acc[c] += wt * wx * s[c];
            }
        }
    }
    acc
}

/// Space-time average of `A(Q) ∂x Q` over the cell.
pub fn noncons_volume_term<S: BalanceLaw>(sys: &S, table: &PredictorTable, rules: &PredictorRules) -> Vec<f64> {
    let m = sys.n_vars();
    let mut acc = vec![0.0; m];
    let mut a = [0.0; MAX_VARS * MAX_VARS];
    for (j, &wt) in rules.time.weights.iter().enumerate() {
        for (l, &wx) in rules.space.weights.iter().enumerate() {
            let g = table.gradient(j, l);
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            sys.quasilinear(table.value(j, l), &mut a[..m * m]);
            for r in 0..m {
                let ag: f64 = (0..m).map(|c| a[r * m + c] * g[c]).sum();
                acc[r] += wt * wx * ag;
            }
        }
    }
    acc
}
