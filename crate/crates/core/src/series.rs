//! Truncated power-series arithmetic used by the Cauchy–Kowalewskaya engine.
//!
//! Balance laws write their quasilinear matrix and source once, generically
//! over [`Scalar`]; evaluating them on [`SpaceTimeJet`]s yields the local
//! space-time Taylor expansion of those terms.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Highest truncation degree (order 5 needs degree 4).
pub const MAX_DEGREE: usize = 4;
const N: usize = MAX_DEGREE + 1;
/// Degree marker of exact constants: they combine with any truncation.
const EXACT: u8 = u8::MAX;

/// Arithmetic needed by the generic system evaluators.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(c: f64) -> Self;
    fn scale(self, c: f64) -> Self;
    fn shift(self, c: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn cst(c: f64) -> Self {
        c
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn shift(self, c: f64) -> Self {
        self + c
    }
}

/// Univariate series `c_0 + c_1 s + ... + c_d s^d`, truncated at degree `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedSeries {
    c: [f64; N],
    deg: u8,
}

impl TruncatedSeries {
    pub fn new(coeffs: &[f64]) -> Self {
        assert!(
            !coeffs.is_empty() && coeffs.len() <= N,
            "series degree must be in 0..={MAX_DEGREE}"
        );
        let mut c = [0.0; N];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Self {
            c,
            deg: (coeffs.len() - 1) as u8,
        }
    }

    /// The variable `x0 + s` truncated at `degree`.
    pub fn variable(x0: f64, degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[0] = x0;
        if degree > 0 {
            coeffs[1] = 1.0;
        }
        Self::new(&coeffs)
    }

    pub fn degree(&self) -> Option<usize> {
        (self.deg != EXACT).then_some(self.deg as usize)
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.top()]
    }

    fn top(&self) -> usize {
        if self.deg == EXACT {
            0
        } else {
            self.deg as usize
        }
    }

    fn joint(a: &Self, b: &Self) -> u8 {
        a.deg.min(b.deg)
    }
}

impl Scalar for TruncatedSeries {
    fn cst(c: f64) -> Self {
        let mut s = [0.0; N];
        s[0] = c;
        Self { c: s, deg: EXACT }
    }
    fn scale(mut self, k: f64) -> Self {
        self.c.iter_mut().for_each(|v| *v *= k);
        self
    }
    fn shift(mut self, k: f64) -> Self {
        self.c[0] += k;
        self
    }
}

impl Add for TruncatedSeries {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let deg = Self::joint(&self, &o);
        let mut c = [0.0; N];
        for (k, v) in c.iter_mut().enumerate() {
            *v = self.c[k] + o.c[k];
        }
        Self { c, deg }
    }
}

impl Sub for TruncatedSeries {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for TruncatedSeries {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for TruncatedSeries {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.deg == EXACT {
            return o.scale(self.c[0]);
        }
        if o.deg == EXACT {
            return self.scale(o.c[0]);
        }
        let deg = Self::joint(&self, &o);
        let mut c = [0.0; N];
        for k in 0..=deg as usize {
            c[k] = (0..=k).map(|j| self.c[j] * o.c[k - j]).sum();
        }
        Self { c, deg }
    }
}

impl Div for TruncatedSeries {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if o.deg == EXACT {
            return self.scale(1.0 / o.c[0]);
        }
        let deg = Self::joint(&self, &o);
        let mut c = [0.0; N];
        for k in 0..=deg as usize {
            let acc: f64 = (1..=k).map(|j| o.c[j] * c[k - j]).sum();
            c[k] = (self.c[k] - acc) / o.c[0];
        }
        Self { c, deg }
    }
}

/// Bivariate series in `(x, t)` around one space-time point.
///
/// Coefficient `(j, k)` multiplies `x^j t^k`. The truncation is rectangular:
/// coefficients with `j <= xdeg` and `k <= tdeg` are meaningful, everything
/// else is ignored. Products and quotients are closed under that truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeJet {
    c: [[f64; N]; N],
    xdeg: u8,
    tdeg: u8,
}

impl SpaceTimeJet {
    /// Jet with all coefficients zero and the given truncation.
    pub fn zeros(xdeg: usize, tdeg: usize) -> Self {
        assert!(xdeg <= MAX_DEGREE && tdeg <= MAX_DEGREE);
        Self {
            c: [[0.0; N]; N],
            xdeg: xdeg as u8,
            tdeg: tdeg as u8,
        }
    }

    /// Seeds the pure-space layer from physical derivatives `d^j/dx^j Q`.
    pub fn from_space_derivatives(derivs: &[f64], tdeg: usize) -> Self {
        assert!(!derivs.is_empty());
        let mut jet = Self::zeros(derivs.len() - 1, tdeg);
        let mut fact = 1.0;
        for (j, d) in derivs.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            jet.c[j][0] = d / fact;
        }
        jet
    }

    pub fn is_exact(&self) -> bool {
        self.xdeg == EXACT
    }

    pub fn xdeg(&self) -> Option<usize> {
        (!self.is_exact()).then_some(self.xdeg as usize)
    }

    pub fn tdeg(&self) -> Option<usize> {
        (!self.is_exact()).then_some(self.tdeg as usize)
    }

    /// Changes the truncation; coefficients are kept.
    pub fn set_truncation(&mut self, xdeg: usize, tdeg: usize) {
        assert!(xdeg <= MAX_DEGREE && tdeg <= MAX_DEGREE);
        self.xdeg = xdeg as u8;
        self.tdeg = tdeg as u8;
    }

    #[inline]
    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.c[j][k]
    }

    #[inline]
    pub fn set_coeff(&mut self, j: usize, k: usize, v: f64) {
        self.c[j][k] = v;
    }

    /// `d/dx`; the spatial truncation drops by one.
    pub fn dx(&self) -> Self {
        if self.is_exact() {
            return Self::cst(0.0);
        }
        assert!(self.xdeg >= 1, "derivative of a spatially constant truncation");
        let mut out = Self::zeros(self.xdeg as usize - 1, self.tdeg as usize);
        for j in 0..self.xdeg as usize {
            for k in 0..=self.tdeg as usize {
                out.c[j][k] = (j + 1) as f64 * self.c[j + 1][k];
            }
        }
        out
    }

    #[inline]
    fn joint(a: &Self, b: &Self) -> (usize, usize) {
        (a.xdeg.min(b.xdeg) as usize, a.tdeg.min(b.tdeg) as usize)
    }

    fn zip(self, o: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let (xd, td) = Self::joint(&self, &o);
        if self.is_exact() && o.is_exact() {
            return Self::cst(f(self.c[0][0], o.c[0][0]));
        }
        let mut out = Self::zeros(xd, td);
        for j in 0..=xd {
            for k in 0..=td {
                out.c[j][k] = f(self.c[j][k], o.c[j][k]);
            }
        }
        out
    }
}

impl Scalar for SpaceTimeJet {
    fn cst(c: f64) -> Self {
        let mut m = [[0.0; N]; N];
        m[0][0] = c;
        Self {
            c: m,
            xdeg: EXACT,
            tdeg: EXACT,
        }
    }
    #[inline]
    fn scale(mut self, k: f64) -> Self {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= k;
            }
        }
        self
    }
    #[inline]
    fn shift(mut self, k: f64) -> Self {
        self.c[0][0] += k;
        self
    }
}

impl Add for SpaceTimeJet {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        if self.is_exact() {
            return o.shift(self.c[0][0]);
        }
        if o.is_exact() {
            return self.shift(o.c[0][0]);
        }
        self.zip(o, |a, b| a + b)
    }
}

impl Sub for SpaceTimeJet {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        if o.is_exact() {
            return self.shift(-o.c[0][0]);
        }
        if self.is_exact() {
            return (-o).shift(self.c[0][0]);
        }
        self.zip(o, |a, b| a - b)
    }
}

impl Neg for SpaceTimeJet {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for SpaceTimeJet {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.is_exact() {
            return o.scale(self.c[0][0]);
        }
        if o.is_exact() {
            return self.scale(o.c[0][0]);
        }
        let (xd, td) = Self::joint(&self, &o);
        let (xd, td) = (xd.min(N - 1), td.min(N - 1));
        let mut out = Self::zeros(xd, td);
        for (j, row) in out.c.iter_mut().enumerate().take(xd + 1) {
            for p in 0..=j {
                let (a, b) = (&self.c[p], &o.c[j - p]);
                for k in 0..=td {
                    let mut acc = 0.0;
                    for q in 0..=k {
                        acc += a[q] * b[k - q];
                    }
                    row[k] += acc;
                }
            }
        }
        out
    }
}

impl Div for SpaceTimeJet {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        if o.is_exact() {
            return self.scale(1.0 / o.c[0][0]);
        }
        let (xd, td) = Self::joint(&self, &o);
        let inv = 1.0 / o.c[0][0];
        let mut out = Self::zeros(xd, td);
        let num = if self.is_exact() {
            let mut n = Self::zeros(xd, td);
            n.c[0][0] = self.c[0][0];
            n
        } else {
            self
        };
        for j in 0..=xd {
            for k in 0..=td {
                let mut acc = num.c[j][k];
                for p in 0..=j {
                    for q in 0..=k {
                        if p + q > 0 {
                            acc -= o.c[p][q] * out.c[j - p][k - q];
                        }
                    }
                }
                out.c[j][k] = acc * inv;
            }
        }
        out
    }
}
