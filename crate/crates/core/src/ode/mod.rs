//! Solutions of `-f'' + V f = z f` on the half-line.
//!
//! Propagation walks the constant runs of a [`PotentialSpec`] and applies the
//! exact cell propagator on each. States carry a separate logarithmic scale so
//! that exponentially growing solutions never overflow.

mod cell;
mod free;
mod integrals;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::HalfPlanePoint;
use crate::potential::PotentialSpec;

pub(crate) use cell::CellMatrix;
pub use free::{free_log_derivative, free_m, free_solutions, free_v0_norm_sqr, sqrt_upper};
pub(crate) use integrals::walk_pair;
pub use integrals::{
    im_ubar_v_integral, pair_orbit, weighted_l2_integrals, PairOrbit, QuadratureGrid, ScaledIntegral, WeightedIntegrals,
};

/// `(f, f')` of a solution, scaled: the true pair is `(f, fprime) * e^{log_scale}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionPair {
    pub f: Complex64,
    pub fprime: Complex64,
    pub log_scale: f64,
}

impl SolutionPair {
    pub fn new(f: Complex64, fprime: Complex64) -> Result<Self> {
        let mut s = Self { f, fprime, log_scale: 0.0 };
        s.renormalize()?;
        Ok(s)
    }

    /// `u`-type data: `f = 1, f' = 0`.
    pub fn cosine_type() -> Self {
        Self { f: Complex64::new(1.0, 0.0), fprime: Complex64::new(0.0, 0.0), log_scale: 0.0 }
    }

    /// `v`-type (Dirichlet) data: `f = 0, f' = 1`.
    pub fn dirichlet() -> Self {
        Self { f: Complex64::new(0.0, 0.0), fprime: Complex64::new(1.0, 0.0), log_scale: 0.0 }
    }

    /// Data with prescribed logarithmic derivative `f'/f = ratio`.
    pub fn with_log_derivative(ratio: Complex64) -> Result<Self> {
        Self::new(Complex64::new(1.0, 0.0), ratio)
    }

    /// `f'/f`; independent of the scale.
    pub fn log_derivative(&self) -> Complex64 {
        self.fprime / self.f
    }

    pub fn unscaled(&self) -> (Complex64, Complex64) {
        let s = self.log_scale.exp();
        (self.f * s, self.fprime * s)
    }

    /// Brings `max(|f|, |f'|)` back into `[1/2, 2]`.
    pub(crate) fn renormalize(&mut self) -> Result<()> {
        let m = self.f.norm().max(self.fprime.norm());
        if !m.is_finite() {
            return Err(Error::NonFinite("solution state".into()));
        }
        if m == 0.0 {
            return Err(Error::InvalidArgument("trivial solution (f, f') = (0, 0)".into()));
        }
        if !(0.5..=2.0).contains(&m) {
            self.f /= m;
            self.fprime /= m;
            self.log_scale += m.ln();
        }
        Ok(())
    }

    #[inline]
    fn apply(&mut self, m: &CellMatrix) {
        let (f, fp) = m.apply(self.f, self.fprime);
        self.f = f;
        self.fprime = fp;
    }
}

/// `[[m11, m12], [m21, m22]] * e^{log_scale}`; columns are solutions
/// `(f, f')`. For the fundamental system the columns are `(u, u')` and `(v, v')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
    pub log_scale: f64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { m11: one, m12: zero, m21: zero, m22: one, log_scale: 0.0 }
    }

    /// Determinant of the true (unscaled) matrix.
    pub fn determinant(&self) -> Complex64 {
        (self.m11 * self.m22 - self.m12 * self.m21) * (2.0 * self.log_scale).exp()
    }

    /// Entries of the true matrix, row-major.
    pub fn unscaled(&self) -> [Complex64; 4] {
        let s = self.log_scale.exp();
        [self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s]
    }

    /// `self * rhs`
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = Self {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
            log_scale: self.log_scale + rhs.log_scale,
        };
        out.renormalize();
        out
    }

    /// Second column as a solution state (the `v` solution of a fundamental system).
    pub fn second_column(&self) -> SolutionPair {
        SolutionPair { f: self.m12, fprime: self.m22, log_scale: self.log_scale }
    }

    pub fn first_column(&self) -> SolutionPair {
        SolutionPair { f: self.m11, fprime: self.m21, log_scale: self.log_scale }
    }

    fn renormalize(&mut self) {
        let m = [self.m11, self.m12, self.m21, self.m22].iter().fold(0.0f64, |acc, e| acc.max(e.norm()));
        if m > 0.0 && m.is_finite() && !(0.5..=2.0).contains(&m) {
            self.m11 /= m;
            self.m12 /= m;
            self.m21 /= m;
            self.m22 /= m;
            self.log_scale += m.ln();
        }
    }

    fn left_apply(&mut self, c: &CellMatrix) {
        let (a, b) = c.apply(self.m11, self.m21);
        let (d, e) = c.apply(self.m12, self.m22);
        self.m11 = a;
        self.m21 = b;
        self.m12 = d;
        self.m22 = e;
    }
}

fn check_z(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Precondition(format!("spectral parameter z = {z} must have Im z > 0")));
    }
    Ok(())
}

fn check_range(v: &PotentialSpec, x_from: f64, x_to: f64) -> Result<()> {
    let x_max = v.x_max();
    let slack = 1e-12 * x_max;
    if !(x_from >= 0.0 && x_from <= x_to && x_to <= x_max + slack) {
        return Err(Error::InvalidWindow { a: x_from, b: x_to, x_max });
    }
    Ok(())
}

/// Applies the exact propagator from `x_from` to `x_to` (either direction,
/// any `z`, past `x_max` through the zero extension).
pub(crate) fn propagate_raw(
    v: &PotentialSpec,
    z: Complex64,
    x_from: f64,
    x_to: f64,
    mut state: SolutionPair,
) -> Result<SolutionPair> {
    if x_to == x_from {
        return Ok(state);
    }
    let (lo, hi) = if x_to > x_from { (x_from, x_to) } else { (x_to, x_from) };
    let mut runs = v.runs_between(lo, hi);
    let backward = x_to < x_from;
    if backward {
        runs.reverse();
    }
    for r in runs {
        let len = r.end - r.start;
        let n = cell::pieces_for(z, r.value, len);
        let step = if backward { -len / n as f64 } else { len / n as f64 };
        let m = CellMatrix::new(z, r.value, step);
        for _ in 0..n {
            state.apply(&m);
            state.renormalize()?;
        }
    }
    Ok(state)
}

/// Advances `state` from `x_from` to `x_to >= x_from` inside `[0, x_max]`.
pub fn propagate(v: &PotentialSpec, z: Complex64, x_from: f64, x_to: f64, state: SolutionPair) -> Result<SolutionPair> {
    check_z(z)?;
    check_range(v, x_from, x_to)?;
    propagate_raw(v, z, x_from, x_to, state)
}

/// Transfer matrix from `a` to `b`, `0 <= a <= b <= x_max`.
pub fn transfer_matrix(v: &PotentialSpec, z: Complex64, a: f64, b: f64) -> Result<TransferMatrix> {
    check_z(z)?;
    check_range(v, a, b)?;
    let mut m = TransferMatrix::identity();
    for r in v.runs_between(a, b) {
        let len = r.end - r.start;
        let n = cell::pieces_for(z, r.value, len);
        let c = CellMatrix::new(z, r.value, len / n as f64);
        for _ in 0..n {
            m.left_apply(&c);
            m.renormalize();
        }
    }
    if ![m.m11, m.m12, m.m21, m.m22].iter().all(|e| e.re.is_finite() && e.im.is_finite()) {
        return Err(Error::NonFinite("transfer matrix".into()));
    }
    Ok(m)
}

/// Columns `(u, u')`, `(v, v')` at `x` with `u(0) = 1, u'(0) = 0`, `v(0) = 0, v'(0) = 1`.
pub fn fundamental_system(v: &PotentialSpec, z: Complex64, x: f64) -> Result<TransferMatrix> {
    transfer_matrix(v, z, 0.0, x)
}

/// `-v'(x, z) / v(x, z)` for the Dirichlet solution; a Herglotz function of `z`.
pub fn log_derivative_at(v: &PotentialSpec, z: Complex64, x: f64) -> Result<HalfPlanePoint> {
    if !(x > 0.0) {
        return Err(Error::Precondition(format!("log-derivative needs x > 0, got {x}")));
    }
    let s = propagate(v, z, 0.0, x, SolutionPair::dirichlet())?;
    HalfPlanePoint::from_complex(-s.log_derivative())
}

/// `v'(x, lambda) / v(x, lambda)` at real spectral parameter. Infinite at
/// zeros of `v`.
pub fn dirichlet_log_derivative_real(v: &PotentialSpec, lambda: f64, x: f64) -> Result<f64> {
    if !lambda.is_finite() || !(x > 0.0) {
        return Err(Error::Precondition(format!("need finite lambda and x > 0, got {lambda}, {x}")));
    }
    check_range(v, 0.0, x)?;
    let s = propagate_raw(v, Complex64::new(lambda, 0.0), 0.0, x, SolutionPair::dirichlet())?;
    // the orbit is real up to rounding
    Ok(s.fprime.re / s.f.re)
}
