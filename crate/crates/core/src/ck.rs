//! Cauchy–Kowalewskaya functionals `∂t^k Q = G^k(Q, ∂x Q, ..., ∂x^k Q)`.
//!
//! The generic engine seeds a [`SpaceTimeJet`] per unknown from the spatial
//! derivatives and fills time layers one by one from
//! `∂t Q = S(Q) - A(Q) ∂x Q`. Constant-coefficient linear systems use the
//! operator power `(B - A ∂x)^k` instead.
//!
//! Derivative stacks are flat slices: entry `k * m + c` is `∂x^k Q_c`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::{Scalar, SpaceTimeJet, MAX_DEGREE};
use crate::systems::{BalanceLaw, MAX_VARS};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Time derivatives `∂t^k Q` for `k = 0..=degree` from the spatial stack
/// `d` (length `(degree + 1) * m`), written to `out` with the same layout.
pub fn ck_time_derivatives<S: BalanceLaw>(
    sys: &S,
    d: &[f64],
    degree: usize,
    out: &mut [f64],
) -> Result<()> {
    let m = sys.n_vars();
    debug_assert!(degree <= MAX_DEGREE && d.len() >= (degree + 1) * m);
    let mut q = [SpaceTimeJet::zeros(degree, 0); MAX_VARS];
    let mut fact = 1.0;
    for j in 0..=degree {
        if j > 0 {
            fact *= j as f64;
        }
        for (c, jet) in q.iter_mut().enumerate().take(m) {
            jet.set_coeff(j, 0, d[j * m + c] / fact);
        }
    }
    let zero = SpaceTimeJet::cst(0.0);
    for k in 0..degree {
        let xdeg = degree - k;
        for jet in q.iter_mut().take(m) {
            jet.set_truncation(xdeg, k);
        }
        let mut a = [zero; MAX_VARS * MAX_VARS];
        sys.quasilinear(&q[..m], &mut a[..m * m]);
        let mut s = [zero; MAX_VARS];
        if sys.has_source() {
            sys.source(&q[..m], &mut s[..m]);
        }
        let mut dq = [zero; MAX_VARS];
        for c in 0..m {
            dq[c] = q[c].dx();
        }
        let inv = 1.0 / (k + 1) as f64;
        for r in 0..m {
            let mut rhs = s[r];
            for c in 0..m {
                rhs = rhs - a[r * m + c] * dq[c];
            }
            for j in 0..xdeg {
                q[r].set_coeff(j, k + 1, rhs.coeff(j, k) * inv);
            }
        }
    }
    let mut fact = 1.0;
    for k in 0..=degree {
        if k > 0 {
            fact *= k as f64;
        }
        for c in 0..m {
            out[k * m + c] = fact * q[c].coeff(0, k);
        }
    }
    if out[..(degree + 1) * m].iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("Cauchy-Kowalewskaya recursion"))
    }
}

/// `∂t^k q` of `∂t q + λ ∂x q = β q`: `Σ_j C(k, j) (-λ)^j β^(k-j) D_j`.
pub fn scalar_ck_closed_form(lambda: f64, beta: f64, d: &[f64], k: usize) -> f64 {
    (0..=k)
        .map(|j| binomial(k, j) * (-lambda).powi(j as i32) * beta.powi((k - j) as i32) * d[j])
        .sum()
}

/// Constant-coefficient system `∂t Q + A ∂x Q = B Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearCk {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl LinearCk {
    pub fn from_system<S: BalanceLaw>(sys: &S) -> Option<Self> {
        sys.linear_coefficients().map(|(a, b)| Self { a, b })
    }

    fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Applies `(B - A ∂x)^k` to the stack and returns the time derivatives
    /// in `out`, as [`ck_time_derivatives`].
    pub fn time_derivatives(&self, d: &[f64], degree: usize, out: &mut [f64]) {
        let m = self.m();
        let mut cur: Vec<f64> = d[..(degree + 1) * m].to_vec();
        out[..m].copy_from_slice(&cur[..m]);
        for k in 1..=degree {
            let mut next = vec![0.0; (degree + 1) * m];
            for j in 0..=degree - k {
                for r in 0..m {
                    let mut v = 0.0;
                    for c in 0..m {
                        v += self.b[(r, c)] * cur[j * m + c] - self.a[(r, c)] * cur[(j + 1) * m + c];
                    }
                    next[j * m + r] = v;
                }
            }
            out[k * m..(k + 1) * m].copy_from_slice(&next[..m]);
            cur = next;
        }
    }

    /// `∂H/∂D_0 = I + Σ_k (-τ)^k / k! B^k`.
    pub fn residual_jacobian(&self, tau: f64, degree: usize) -> DMatrix<f64> {
        let m = self.m();
        let mut jac = DMatrix::identity(m, m);
        let mut pow = DMatrix::identity(m, m);
        let mut coef = 1.0;
        for k in 1..=degree {
            pow = &pow * &self.b;
            coef *= -tau / k as f64;
            jac += &pow * coef;
        }
        jac
    }
}

/// Dispatches between the generic recursion and the linear closed form.
#[derive(Debug, Clone)]
pub struct CkEngine<'a, S: BalanceLaw> {
    pub sys: &'a S,
    pub linear: Option<LinearCk>,
    pub degree: usize,
}

impl<'a, S: BalanceLaw> CkEngine<'a, S> {
    pub fn new(sys: &'a S, degree: usize) -> Self {
        Self {
            sys,
            linear: LinearCk::from_system(sys),
            degree,
        }
    }

    /// Generic recursion only, even for linear systems.
    pub fn generic(sys: &'a S, degree: usize) -> Self {
        Self {
            sys,
            linear: None,
            degree,
        }
    }

    pub fn time_derivatives(&self, d: &[f64], out: &mut [f64]) -> Result<()> {
        match &self.linear {
            Some(l) => {
                l.time_derivatives(d, self.degree, out);
                Ok(())
            }
            None => ck_time_derivatives(self.sys, d, self.degree, out),
        }
    }

    /// `H(D_0) = D_0 - w_0 + Σ_k (-τ)^k / k! G^k(D_0, D_1, ..., D_k)`.
    ///
    /// `stack` holds `D_1..D_M` in its upper slots; its `D_0` slot is
    /// overwritten by `d0`.
    pub fn residual(&self, d0: &[f64], stack: &mut [f64], tau: f64, w0: &[f64], h: &mut [f64]) -> Result<()> {
        let m = self.sys.n_vars();
        stack[..m].copy_from_slice(d0);
        let mut g = [0.0; (MAX_DEGREE + 1) * MAX_VARS];
        self.time_derivatives(stack, &mut g)?;
        for c in 0..m {
            h[c] = d0[c] - w0[c];
        }
        let mut coef = 1.0;
        for k in 1..=self.degree {
            coef *= -tau / k as f64;
            for c in 0..m {
                h[c] += coef * g[k * m + c];
            }
        }
        if h[..m].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("predictor residual"))
        }
    }

    /// `∂H/∂D_0`, closed form for linear systems and central differences otherwise.
    pub fn residual_jacobian(&self, d0: &[f64], stack: &mut [f64], tau: f64, w0: &[f64]) -> Result<DMatrix<f64>> {
        let m = self.sys.n_vars();
        if let Some(l) = &self.linear {
            return Ok(l.residual_jacobian(tau, self.degree));
        }
        if tau == 0.0 {
            return Ok(DMatrix::identity(m, m));
        }
        let step = f64::EPSILON.cbrt();
        let mut jac = DMatrix::zeros(m, m);
        let mut x = [0.0; MAX_VARS];
        let (mut hp, mut hm) = ([0.0; MAX_VARS], [0.0; MAX_VARS]);
        for c in 0..m {
            x[..m].copy_from_slice(d0);
            let hc = step * (1.0 + d0[c].abs());
            x[c] = d0[c] + hc;
            self.residual(&x[..m], stack, tau, w0, &mut hp)?;
            x[c] = d0[c] - hc;
            self.residual(&x[..m], stack, tau, w0, &mut hm)?;
            for r in 0..m {
                jac[(r, c)] = (hp[r] - hm[r]) / (2.0 * hc);
            }
        }
        stack[..m].copy_from_slice(d0);
        Ok(jac)
    }
}

/// Evaluates `predictor_residual` as a free function: returns `H` and `∂H/∂D_0`.
pub fn predictor_residual<S: BalanceLaw>(
    sys: &S,
    d0: &[f64],
    stack: &[f64],
    tau: f64,
    w0: &[f64],
    degree: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let engine = CkEngine::new(sys, degree);
    let mut work = stack.to_vec();
    let mut h = vec![0.0; sys.n_vars()];
    engine.residual(d0, &mut work, tau, w0, &mut h)?;
    let jac = engine.residual_jacobian(d0, &mut work, tau, w0)?;
    Ok((h, jac))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{euler_ideal_gas, linear_system, scalar_advection_reaction, EulerIdealGas, EulerPrimitives};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn scalar_first_derivative_is_the_pde() {
        let sys = scalar_advection_reaction(1.3, -0.7);
        let d = [2.0, 0.5, -1.0];
        let mut out = [0.0; 3];
        ck_time_derivatives(&sys, &d, 2, &mut out).unwrap();
        assert_abs_diff_eq!(out[1], -1.3 * 0.5 - 0.7 * 2.0, epsilon = 1e-14);
        // (-λ ∂x + β)^2
        let expect = 1.69 * -1.0 - 2.0 * 1.3 * -0.7 * 0.5 + 0.49 * 2.0;
        assert_abs_diff_eq!(out[2], expect, epsilon = 1e-14);
        assert_abs_diff_eq!(scalar_ck_closed_form(1.3, -0.7, &d, 2), expect, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_pure_advection() {
        let d = [1.0, 2.0, 3.0, 4.0, 5.0];
        for k in 0..=4 {
            assert_abs_diff_eq!(
                scalar_ck_closed_form(2.0, 0.0, &d, k),
                (-2.0f64).powi(k as i32) * d[k],
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn generic_engine_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let (l, b) = (rng.gen_range(-3.0..3.0), rng.gen_range(-5.0..1.0));
            let sys = scalar_advection_reaction(l, b);
            let d: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut out = [0.0; 5];
            ck_time_derivatives(&sys, &d, 4, &mut out).unwrap();
            for k in 0..=4 {
                let exact = scalar_ck_closed_form(l, b, &d, k);
                assert!((out[k] - exact).abs() <= 1e-11 * (1.0 + exact.abs()), "{k}: {} vs {exact}", out[k]);
            }
        }
    }

    #[test]
    fn generic_engine_matches_linear_operator_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = linear_system(1.0, -1.0);
        let lin = LinearCk::from_system(&sys).unwrap();
        for _ in 0..200 {
            let d: Vec<f64> = (0..10).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (mut g, mut l) = ([0.0; 10], [0.0; 10]);
            ck_time_derivatives(&sys, &d, 4, &mut g).unwrap();
            lin.time_derivatives(&d, 4, &mut l);
            for i in 0..10 {
                assert!((g[i] - l[i]).abs() <= 1e-11 * (1.0 + l[i].abs()));
            }
        }
    }

    #[test]
    fn exact_solution_time_derivatives() {
        let (lambda, beta) = (1.0, -1.0);
        let sys = linear_system(lambda, beta);
        let x = 0.37;
        let k2 = 2.0 * PI;
        // j-th x-derivatives of Φ and Ψ at t = 0.
        let dsin = |j: usize| k2.powi(j as i32) * (k2 * x + j as f64 * PI / 2.0).sin();
        let dcos = |j: usize| k2.powi(j as i32) * (k2 * x + j as f64 * PI / 2.0).cos();
        let phi = |j: usize| dsin(j) + dcos(j);
        let psi = |j: usize| dsin(j) - dcos(j);
        let mut d = [0.0; 10];
        for j in 0..=4 {
            d[j * 2] = 0.5 * (phi(j) + psi(j));
            d[j * 2 + 1] = 0.5 * (phi(j) - psi(j));
        }
        let mut out = [0.0; 10];
        ck_time_derivatives(&sys, &d, 4, &mut out).unwrap();
        for k in 0..=4 {
            // Leibniz rule on e^{βt}, with ∂t Φ = -λ ∂x Φ and ∂t Ψ = λ ∂x Ψ.
            let mut exact = [0.0; 2];
            for i in 0..=k {
                let w = 0.5 * binomial(k, i) * beta.powi((k - i) as i32);
                let tphi = (-lambda).powi(i as i32) * phi(i);
                let tpsi = lambda.powi(i as i32) * psi(i);
                exact[0] += w * (tphi + tpsi);
                exact[1] += w * (tphi - tpsi);
            }
            for c in 0..2 {
                let got = out[k * 2 + c];
                assert!((got - exact[c]).abs() <= 1e-9 * (1.0 + exact[c].abs()), "k={k}: {got} vs {}", exact[c]);
            }
        }
    }

    #[test]
    fn euler_first_derivative_is_minus_a_dq() {
        let e = EulerIdealGas::default();
        let sys = euler_ideal_gas(1.4);
        let q = e.primitive_to_conserved(EulerPrimitives { rho: 1.0, u: 1.0, p: 2.0 }).unwrap();
        // ρ' = 0.2·2π, u and p constant.
        let drho = 0.2 * 2.0 * PI;
        let dq = [drho, drho, 0.5 * drho];
        let mut d = [0.0; 6];
        d[..3].copy_from_slice(&q);
        d[3..].copy_from_slice(&dq);
        let mut out = [0.0; 6];
        ck_time_derivatives(&sys, &d, 1, &mut out).unwrap();
        let a = e.matrix_a(&q);
        for r in 0..3 {
            let adq: f64 = (0..3).map(|c| a[(r, c)] * dq[c]).sum();
            assert_abs_diff_eq!(out[3 + r], -adq, epsilon = 1e-13);
        }
    }

    #[test]
    fn euler_advection_time_derivatives() {
        // ρ(x, t) = 1 + 0.2 sin(2π(x - t)), u = 1, p = 2 gives ∂t^k = (-∂x)^k.
        let e = EulerIdealGas::default();
        let sys = euler_ideal_gas(1.4);
        let x = 0.1;
        let k2 = 2.0 * PI;
        let rho_j = |j: usize| {
            let v = 0.2 * k2.powi(j as i32) * (k2 * x + j as f64 * PI / 2.0).sin();
            if j == 0 { 1.0 + v } else { v }
        };
        let mut d = [0.0; 15];
        for j in 0..=4 {
            let r = rho_j(j);
            let en = if j == 0 { 2.0 / 0.4 + 0.5 * r } else { 0.5 * r };
            d[j * 3..j * 3 + 3].copy_from_slice(&[r, r, en]);
        }
        let _ = e;
        let mut out = [0.0; 15];
        ck_time_derivatives(&sys, &d, 4, &mut out).unwrap();
        for k in 1..=4 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for c in 0..3 {
                let exact = sign * d[k * 3 + c];
                assert!((out[k * 3 + c] - exact).abs() <= 1e-10 * (1.0 + exact.abs()), "k={k} c={c}");
            }
        }
    }

    #[test]
    fn residual_examples() {
        let sys = scalar_advection_reaction(1.0, 0.0);
        let (h, j) = predictor_residual(&sys, &[0.3], &[0.0, 2.0], 0.0, &[0.5], 1).unwrap();
        assert_abs_diff_eq!(h[0], -0.2, epsilon = 1e-15);
        assert_eq!(j[(0, 0)], 1.0);

        // M = 1, β = 0: H = D0 - w0 + τ λ D1, so the root is the upwind value.
        let (h, j) = predictor_residual(&sys, &[0.3], &[0.0, 2.0], 0.1, &[0.5], 1).unwrap();
        assert_abs_diff_eq!(h[0], 0.3 - 0.5 + 0.1 * 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(j[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_jacobian_is_state_independent_and_matches_fd() {
        let sys = linear_system(1.0, -1.0);
        let stack = [0.0, 0.0, 1.0, -2.0, 0.5, 0.1, -0.3, 0.2];
        let lin = CkEngine::new(&sys, 3);
        let gen = CkEngine::generic(&sys, 3);
        let w0 = [0.2, 0.1];
        for d0 in [[0.0, 0.0], [3.0, -1.0]] {
            let mut s = stack;
            let jl = lin.residual_jacobian(&d0, &mut s, 0.05, &w0).unwrap();
            let jg = gen.residual_jacobian(&d0, &mut s, 0.05, &w0).unwrap();
            assert!((&jl - &jg).abs().max() < 1e-6 * jl.abs().max());
            let expect = (1.0 + 0.05 + 0.05f64.powi(2) / 2.0 + 0.05f64.powi(3) / 6.0) * 1.0;
            assert_abs_diff_eq!(jl[(0, 0)], expect, epsilon = 1e-14);
        }
    }
}
