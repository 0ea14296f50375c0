//! Balance laws `∂t Q + A(Q) ∂x Q = S(Q)` used by the solver.
//!
//! The quasilinear matrix and the source are written once over [`Scalar`] so
//! the same code evaluates on plain reals and on truncated series.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::series::Scalar;

/// Largest number of unknowns of any bundled system.
pub const MAX_VARS: usize = 3;

pub trait BalanceLaw: Sync + Send {
    fn n_vars(&self) -> usize;

    fn name(&self) -> &'static str;

    /// Writes `A(Q)` row-major into `a` (length `m * m`).
    fn quasilinear<T: Scalar>(&self, q: &[T], a: &mut [T]);

    /// Writes `S(Q)` into `s`.
    fn source<T: Scalar>(&self, q: &[T], s: &mut [T]);

    /// `false` when `S ≡ 0`.
    fn has_source(&self) -> bool {
        true
    }

    /// `∂S/∂Q` row-major.
    fn source_jacobian(&self, q: &[f64]) -> DMatrix<f64>;

    /// Real eigenvalues of `A(Q)`.
    fn eigenvalues(&self, q: &[f64]) -> Result<Vec<f64>>;

    fn initial_condition(&self, x: f64) -> Vec<f64>;

    fn exact_solution(&self, _x: f64, _t: f64) -> Option<Vec<f64>> {
        None
    }

    fn is_admissible(&self, q: &[f64]) -> bool {
        q.iter().all(|v| v.is_finite())
    }

    /// `(A, B)` when `A` is constant and `S(Q) = B Q`.
    fn linear_coefficients(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }

    fn matrix_a(&self, q: &[f64]) -> DMatrix<f64> {
        let m = self.n_vars();
        let mut a = [0.0; MAX_VARS * MAX_VARS];
        self.quasilinear(q, &mut a[..m * m]);
        DMatrix::from_row_slice(m, m, &a[..m * m])
    }

    fn source_vec(&self, q: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_vars()];
        self.source(q, &mut s);
        s
    }

    fn max_speed(&self, q: &[f64]) -> Result<f64> {
        Ok(self
            .eigenvalues(q)?
            .into_iter()
            .fold(0.0, |m: f64, l| m.max(l.abs())))
    }
}

/// `∂t q + λ ∂x q = β q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarAdvectionReaction {
    pub lambda: f64,
    pub beta: f64,
}

impl BalanceLaw for ScalarAdvectionReaction {
    fn n_vars(&self) -> usize {
        1
    }
    fn name(&self) -> &'static str {
        "scalar-advection-reaction"
    }
    fn quasilinear<T: Scalar>(&self, _q: &[T], a: &mut [T]) {
        a[0] = T::cst(self.lambda);
    }
    fn source<T: Scalar>(&self, q: &[T], s: &mut [T]) {
        s[0] = q[0].scale(self.beta);
    }
    fn has_source(&self) -> bool {
        self.beta != 0.0
    }
    fn source_jacobian(&self, _q: &[f64]) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, self.beta)
    }
    fn eigenvalues(&self, _q: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![self.lambda])
    }
    fn initial_condition(&self, x: f64) -> Vec<f64> {
        vec![(2.0 * PI * x).sin()]
    }
    fn exact_solution(&self, x: f64, t: f64) -> Option<Vec<f64>> {
        Some(vec![(self.beta * t).exp() * (2.0 * PI * (x - self.lambda * t)).sin()])
    }
    fn linear_coefficients(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((
            DMatrix::from_element(1, 1, self.lambda),
            DMatrix::from_element(1, 1, self.beta),
        ))
    }
}

/// Stiff scalar test `∂t q + ∂x q = β q (q - 1)(q - 1/2)` with a step at `x = 0.3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevequeYee {
    pub beta: f64,
}

impl LevequeYee {
    pub const STEP: f64 = 0.3;
}

impl BalanceLaw for LevequeYee {
    fn n_vars(&self) -> usize {
        1
    }
    fn name(&self) -> &'static str {
        "leveque-yee"
    }
    fn quasilinear<T: Scalar>(&self, _q: &[T], a: &mut [T]) {
        a[0] = T::cst(1.0);
    }
    fn source<T: Scalar>(&self, q: &[T], s: &mut [T]) {
        let q = q[0];
        s[0] = (q * q.shift(-1.0) * q.shift(-0.5)).scale(self.beta);
    }
    fn source_jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        let q = q[0];
        DMatrix::from_element(1, 1, self.beta * (3.0 * q * q - 3.0 * q + 0.5))
    }
    fn eigenvalues(&self, _q: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }
    fn initial_condition(&self, x: f64) -> Vec<f64> {
        vec![if x < Self::STEP { 1.0 } else { 0.0 }]
    }
    fn exact_solution(&self, x: f64, t: f64) -> Option<Vec<f64>> {
        Some(self.initial_condition(x - t))
    }
}

/// `∂t Q + [[0, λ], [λ, 0]] ∂x Q = β Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSystem {
    pub lambda: f64,
    pub beta: f64,
}

impl BalanceLaw for LinearSystem {
    fn n_vars(&self) -> usize {
        2
    }
    fn name(&self) -> &'static str {
        "linear-system"
    }
    fn quasilinear<T: Scalar>(&self, _q: &[T], a: &mut [T]) {
        a[0] = T::cst(0.0);
        a[1] = T::cst(self.lambda);
        a[2] = T::cst(self.lambda);
        a[3] = T::cst(0.0);
    }
    fn source<T: Scalar>(&self, q: &[T], s: &mut [T]) {
        s[0] = q[0].scale(self.beta);
        s[1] = q[1].scale(self.beta);
    }
    fn has_source(&self) -> bool {
        self.beta != 0.0
    }
    fn source_jacobian(&self, _q: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(2, 2) * self.beta
    }
    fn eigenvalues(&self, _q: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![-self.lambda, self.lambda])
    }
    fn initial_condition(&self, x: f64) -> Vec<f64> {
        self.exact_solution(x, 0.0).expect("closed form")
    }
    fn exact_solution(&self, x: f64, t: f64) -> Option<Vec<f64>> {
        let xm = 2.0 * PI * (x - self.lambda * t);
        let xp = 2.0 * PI * (x + self.lambda * t);
        let phi = xm.sin() + xm.cos();
        let psi = xp.sin() - xp.cos();
        let amp = 0.5 * (self.beta * t).exp();
        Some(vec![amp * (phi + psi), amp * (phi - psi)])
    }
    fn linear_coefficients(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((
            DMatrix::from_row_slice(2, 2, &[0.0, self.lambda, self.lambda, 0.0]),
            DMatrix::identity(2, 2) * self.beta,
        ))
    }
}

/// Non-conservative system in `Q = (u, v)`:
/// `A = [[λ, u], [1, λ]]`, `S = (2π u (u - 1), -2π (v - 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonConservativeSystem {
    pub lambda: f64,
    pub epsilon: f64,
}

impl BalanceLaw for NonConservativeSystem {
    fn n_vars(&self) -> usize {
        2
    }
    fn name(&self) -> &'static str {
        "noncons"
    }
    fn quasilinear<T: Scalar>(&self, q: &[T], a: &mut [T]) {
        a[0] = T::cst(self.lambda);
        a[1] = q[0];
        a[2] = T::cst(1.0);
        a[3] = T::cst(self.lambda);
    }
    fn source<T: Scalar>(&self, q: &[T], s: &mut [T]) {
        s[0] = (q[0] * q[0].shift(-1.0)).scale(2.0 * PI);
        s[1] = q[1].shift(-1.0).scale(-2.0 * PI);
    }
    fn source_jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[2.0 * PI * (2.0 * q[0] - 1.0), 0.0, 0.0, -2.0 * PI])
    }
    fn eigenvalues(&self, q: &[f64]) -> Result<Vec<f64>> {
        if !(q[0] >= 0.0) {
            return Err(Error::Inadmissible(q.to_vec()));
        }
        let s = q[0].sqrt();
        Ok(vec![self.lambda - s, self.lambda + s])
    }
    fn initial_condition(&self, x: f64) -> Vec<f64> {
        self.exact_solution(x, 0.0).expect("closed form")
    }
    fn exact_solution(&self, x: f64, t: f64) -> Option<Vec<f64>> {
        let arg = 2.0 * PI * (x - self.lambda * t);
        Some(vec![1.0 + self.epsilon * arg.cos(), 1.0 + self.epsilon * arg.sin()])
    }
    fn is_admissible(&self, q: &[f64]) -> bool {
        q[0] > 0.0 && q[1].is_finite()
    }
}

/// Ideal-gas Euler equations in conserved variables `(ρ, ρu, E)`; `A` is the
/// flux Jacobian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerIdealGas {
    pub gamma: f64,
}

impl Default for EulerIdealGas {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

/// Density, velocity and pressure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPrimitives {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl EulerIdealGas {
    pub fn primitive_to_conserved(&self, w: EulerPrimitives) -> Result<[f64; 3]> {
        if !(w.rho > 0.0 && w.p > 0.0 && w.u.is_finite()) {
            return Err(Error::Inadmissible(vec![w.rho, w.u, w.p]));
        }
        let e = w.p / (self.gamma - 1.0) + 0.5 * w.rho * w.u * w.u;
        Ok([w.rho, w.rho * w.u, e])
    }

    pub fn conserved_to_primitive(&self, q: &[f64]) -> Result<EulerPrimitives> {
        let rho = q[0];
        if !(rho > 0.0) {
            return Err(Error::Inadmissible(q.to_vec()));
        }
        let u = q[1] / rho;
        let p = (self.gamma - 1.0) * (q[2] - 0.5 * rho * u * u);
        if !(p > 0.0) {
            return Err(Error::Inadmissible(q.to_vec()));
        }
        Ok(EulerPrimitives { rho, u, p })
    }

    pub fn sound_speed(&self, w: &EulerPrimitives) -> f64 {
        (self.gamma * w.p / w.rho).sqrt()
    }
}

impl BalanceLaw for EulerIdealGas {
    fn n_vars(&self) -> usize {
        3
    }
    fn name(&self) -> &'static str {
        "euler"
    }
    fn quasilinear<T: Scalar>(&self, q: &[T], a: &mut [T]) {
        let g = self.gamma;
        let inv_rho = T::cst(1.0) / q[0];
        let u = q[1] * inv_rho;
        let h = q[2] * inv_rho;
        let u2 = u * u;
        a[0] = T::cst(0.0);
        a[1] = T::cst(1.0);
        a[2] = T::cst(0.0);
        a[3] = u2.scale(0.5 * (g - 3.0));
        a[4] = u.scale(3.0 - g);
        a[5] = T::cst(g - 1.0);
        a[6] = u * (u2.scale(g - 1.0) - h.scale(g));
        a[7] = h.scale(g) - u2.scale(1.5 * (g - 1.0));
        a[8] = u.scale(g);
    }
    fn source<T: Scalar>(&self, _q: &[T], s: &mut [T]) {
        s.iter_mut().for_each(|v| *v = T::cst(0.0));
    }
    fn has_source(&self) -> bool {
        false
    }
    fn source_jacobian(&self, _q: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(3, 3)
    }
    fn eigenvalues(&self, q: &[f64]) -> Result<Vec<f64>> {
        let w = self.conserved_to_primitive(q)?;
        let a = self.sound_speed(&w);
        Ok(vec![w.u - a, w.u, w.u + a])
    }
    fn initial_condition(&self, x: f64) -> Vec<f64> {
        self.exact_solution(x, 0.0).expect("closed form")
    }
    fn exact_solution(&self, x: f64, t: f64) -> Option<Vec<f64>> {
        let w = EulerPrimitives {
            rho: 1.0 + 0.2 * (2.0 * PI * (x - t)).sin(),
            u: 1.0,
            p: 2.0,
        };
        self.primitive_to_conserved(w).ok().map(|q| q.to_vec())
    }
    fn is_admissible(&self, q: &[f64]) -> bool {
        self.conserved_to_primitive(q).is_ok()
    }
}

/// Runtime selection among the bundled systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    Scalar(ScalarAdvectionReaction),
    LevequeYee(LevequeYee),
    Linear(LinearSystem),
    NonConservative(NonConservativeSystem),
    Euler(EulerIdealGas),
}

/// Evaluates `$body` with the concrete system behind a [`System`], so generic code
/// monomorphizes per system.
#[macro_export]
macro_rules! with_system {
    ($sys:expr, $s:ident => $body:expr) => {
        match $sys {
            $crate::systems::System::Scalar($s) => $body,
            $crate::systems::System::LevequeYee($s) => $body,
            $crate::systems::System::Linear($s) => $body,
            $crate::systems::System::NonConservative($s) => $body,
            $crate::systems::System::Euler($s) => $body,
        }
    };
}

impl BalanceLaw for System {
    fn n_vars(&self) -> usize {
        with_system!(self, s => s.n_vars())
    }
    fn name(&self) -> &'static str {
        with_system!(self, s => s.name())
    }
    fn quasilinear<T: Scalar>(&self, q: &[T], a: &mut [T]) {
        with_system!(self, s => s.quasilinear(q, a))
    }
    fn source<T: Scalar>(&self, q: &[T], s_out: &mut [T]) {
        with_system!(self, s => s.source(q, s_out))
    }
    fn has_source(&self) -> bool {
        with_system!(self, s => s.has_source())
    }
    fn source_jacobian(&self, q: &[f64]) -> DMatrix<f64> {
        with_system!(self, s => s.source_jacobian(q))
    }
    fn eigenvalues(&self, q: &[f64]) -> Result<Vec<f64>> {
        with_system!(self, s => s.eigenvalues(q))
    }
    fn initial_condition(&self, x: f64) -> Vec<f64> {
        with_system!(self, s => s.initial_condition(x))
    }
    fn exact_solution(&self, x: f64, t: f64) -> Option<Vec<f64>> {
        with_system!(self, s => s.exact_solution(x, t))
    }
    fn is_admissible(&self, q: &[f64]) -> bool {
        with_system!(self, s => s.is_admissible(q))
    }
    fn linear_coefficients(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        with_system!(self, s => s.linear_coefficients())
    }
}

pub fn scalar_advection_reaction(lambda: f64, beta: f64) -> System {
    System::Scalar(ScalarAdvectionReaction { lambda, beta })
}

pub fn leveque_yee(beta: f64) -> System {
    System::LevequeYee(LevequeYee { beta })
}

pub fn linear_system(lambda: f64, beta: f64) -> System {
    System::Linear(LinearSystem { lambda, beta })
}

pub fn noncons_system(lambda: f64, epsilon: f64) -> System {
    System::NonConservative(NonConservativeSystem { lambda, epsilon })
}

pub fn euler_ideal_gas(gamma: f64) -> System {
    System::Euler(EulerIdealGas { gamma })
}
