//! Weighted integrals along propagated orbits.
//!
//! Two solutions are advanced together over a common panel grid; on each
//! panel the integrand is sampled at both ends and at the midpoint and
//! integrated by Simpson's rule. Panels never straddle a jump of either
//! potential, so every integrand is smooth on its panel. Sums are kept as
//! mantissa and logarithmic scale.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use super::cell::CellMatrix;
use super::{check_range, check_z, SolutionPair};
use crate::error::{Error, Result};
use crate::potential::{PotentialSpec, Run};

/// Panel sizing: a panel is at most `max_step` long and spans a phase
/// `|sqrt(z - V)| * len` of at most `max_phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub max_step: f64,
    pub max_phase: f64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        Self { max_step: 0.02, max_phase: 0.02 }
    }
}

impl QuadratureGrid {
    pub fn refined(&self) -> Self {
        Self { max_step: self.max_step / 2.0, max_phase: self.max_phase / 2.0 }
    }

    fn panels(&self, z: Complex64, va: f64, vb: f64, len: f64) -> usize {
        let k = (z - va).norm().max((z - vb).norm()).sqrt();
        let step = self.max_step.min(self.max_phase / k.max(1e-300));
        (len / step).ceil().max(1.0) as usize
    }
}

/// `value * e^{log_scale}`, with an accumulated quadrature error estimate in
/// the same scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIntegral {
    pub value: f64,
    pub log_scale: f64,
    pub error: f64,
}

impl ScaledIntegral {
    pub fn to_f64(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            self.value * self.log_scale.exp()
        }
    }

    pub fn error_f64(&self) -> f64 {
        if self.error == 0.0 {
            0.0
        } else {
            self.error * self.log_scale.exp()
        }
    }

    /// `self / other` without forming either number.
    pub fn ratio(&self, other: &Self) -> f64 {
        if self.value == 0.0 {
            return 0.0;
        }
        self.value / other.value * (self.log_scale - other.log_scale).exp()
    }
}

pub(crate) trait Scalar: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Running sum of terms `value * e^{log}` with widely varying `log`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ScaledSum<T: Scalar> {
    pub mantissa: T,
    pub log_scale: f64,
}

impl<T: Scalar> Default for ScaledSum<T> {
    fn default() -> Self {
        Self { mantissa: T::zero(), log_scale: f64::NEG_INFINITY }
    }
}

impl<T: Scalar> ScaledSum<T> {
    pub fn add(&mut self, value: T, log: f64) {
        if value.magnitude() == 0.0 {
            return;
        }
        if self.log_scale == f64::NEG_INFINITY {
            self.mantissa = value;
            self.log_scale = log;
        } else if log > self.log_scale {
            self.mantissa = self.mantissa * (self.log_scale - log).exp() + value;
            self.log_scale = log;
        } else {
            self.mantissa = self.mantissa + value * (log - self.log_scale).exp();
        }
    }

    /// Re-expresses the sum in scale `log`.
    pub fn at_scale(&self, log: f64) -> T {
        if self.log_scale == f64::NEG_INFINITY {
            T::zero()
        } else {
            self.mantissa * (self.log_scale - log).exp()
        }
    }
}

/// Simpson accumulator for a real integrand, with `|Simpson - trapezoid|`
/// as a conservative per-panel error estimate.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SimpsonSum {
    sum: ScaledSum<f64>,
    err: ScaledSum<f64>,
}

impl SimpsonSum {
    pub fn add_panel(&mut self, len: f64, g: [f64; 3], log: f64) {
        let simpson = len / 6.0 * (g[0] + 4.0 * g[1] + g[2]);
        let trapezoid = len / 4.0 * (g[0] + 2.0 * g[1] + g[2]);
        self.sum.add(simpson, log);
        self.err.add((simpson - trapezoid).abs(), log);
    }

    pub fn finish(&self) -> ScaledIntegral {
        let log = if self.sum.log_scale.is_finite() { self.sum.log_scale } else { 0.0 };
        ScaledIntegral { value: self.sum.at_scale(log), log_scale: log, error: self.err.at_scale(log) }
    }
}

/// States of one solution at the start, middle and end of a panel, all in
/// one scale.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PanelStates {
    pub f: [Complex64; 3],
    pub fp: [Complex64; 3],
    pub log_scale: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Panel<'a> {
    pub t0: f64,
    pub len: f64,
    pub va: f64,
    pub vb: f64,
    pub a: &'a PanelStates,
    pub b: &'a PanelStates,
}

/// Splits `[0, x_to]` into stretches where both potentials are constant.
fn merged_runs(pa: &PotentialSpec, pb: &PotentialSpec, x_to: f64) -> Vec<(f64, f64, f64, f64)> {
    let ra: Vec<Run> = pa.runs_between(0.0, x_to);
    let rb: Vec<Run> = pb.runs_between(0.0, x_to);
    let mut out = Vec::with_capacity(ra.len().max(rb.len()));
    let (mut i, mut j) = (0, 0);
    let mut cursor = 0.0;
    while i < ra.len() && j < rb.len() {
        let end = ra[i].end.min(rb[j].end);
        if end > cursor {
            out.push((cursor, end, ra[i].value, rb[j].value));
        }
        cursor = end;
        if ra[i].end <= end {
            i += 1;
        }
        if rb[j].end <= end {
            j += 1;
        }
    }
    out
}

/// Advances two solutions (of potentials `pa` and `pb`) from 0 to `x_to`,
/// calling `visit` once per panel. Returns both end states.
#[allow(clippy::too_many_arguments)]
pub(crate) fn walk_pair<F>(
    pa: &PotentialSpec,
    pb: &PotentialSpec,
    z: Complex64,
    x_to: f64,
    init_a: SolutionPair,
    init_b: SolutionPair,
    grid: &QuadratureGrid,
    mut visit: F,
) -> Result<(SolutionPair, SolutionPair)>
where
    F: FnMut(&Panel<'_>),
{
    if !(grid.max_step > 0.0 && grid.max_phase > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid quadrature grid {grid:?}")));
    }
    let (mut sa, mut sb) = (init_a, init_b);
    for (start, end, va, vb) in merged_runs(pa, pb, x_to) {
        let n = grid.panels(z, va, vb, end - start);
        let len = (end - start) / n as f64;
        let half_a = CellMatrix::new(z, va, 0.5 * len);
        let half_b = CellMatrix::new(z, vb, 0.5 * len);
        for p in 0..n {
            let mut a = PanelStates { f: [sa.f; 3], fp: [sa.fprime; 3], log_scale: sa.log_scale };
            let mut b = PanelStates { f: [sb.f; 3], fp: [sb.fprime; 3], log_scale: sb.log_scale };
            for k in 1..3 {
                let (f, fp) = half_a.apply(a.f[k - 1], a.fp[k - 1]);
                a.f[k] = f;
                a.fp[k] = fp;
                let (f, fp) = half_b.apply(b.f[k - 1], b.fp[k - 1]);
                b.f[k] = f;
                b.fp[k] = fp;
            }
            visit(&Panel { t0: start + p as f64 * len, len, va, vb, a: &a, b: &b });
            sa.f = a.f[2];
            sa.fprime = a.fp[2];
            sb.f = b.f[2];
            sb.fprime = b.fp[2];
            sa.renormalize()?;
            sb.renormalize()?;
        }
    }
    Ok((sa, sb))
}

/// The three integrals bounding the separation of two Dirichlet
/// log-derivatives: `int (V - V~)^2 |v~|^2`, `int |v~|^2` and `int |v|^2` over
/// `[0, x]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedIntegrals {
    pub mismatch: ScaledIntegral,
    pub tilde_norm: ScaledIntegral,
    pub norm: ScaledIntegral,
}

/// Everything the walk over two Dirichlet solutions produces.
#[derive(Debug, Clone, Copy)]
pub struct PairOrbit {
    pub v: SolutionPair,
    pub vtilde: SolutionPair,
    pub integrals: WeightedIntegrals,
    /// `int_0^x (V - V~) v v~ dt`, scaled by `e^{cross_log_scale}`.
    pub cross: Complex64,
    pub cross_log_scale: f64,
}

pub fn pair_orbit(
    v: &PotentialSpec,
    vtilde: &PotentialSpec,
    z: Complex64,
    x: f64,
    grid: &QuadratureGrid,
) -> Result<PairOrbit> {
    check_z(z)?;
    check_range(v, 0.0, x)?;
    check_range(vtilde, 0.0, x)?;
    if !(x > 0.0) {
        return Err(Error::Precondition(format!("integration endpoint x = {x} must be positive")));
    }
    let mut mismatch = SimpsonSum::default();
    let mut tilde_norm = SimpsonSum::default();
    let mut norm = SimpsonSum::default();
    let mut cross = ScaledSum::<Complex64>::default();
    let (sv, st) = walk_pair(v, vtilde, z, x, SolutionPair::dirichlet(), SolutionPair::dirichlet(), grid, |p| {
        let d = p.va - p.vb;
        let bt = p.b.f.map(|f| f.norm_sqr());
        let av = p.a.f.map(|f| f.norm_sqr());
        tilde_norm.add_panel(p.len, bt, 2.0 * p.b.log_scale);
        norm.add_panel(p.len, av, 2.0 * p.a.log_scale);
        if d != 0.0 {
            mismatch.add_panel(p.len, bt.map(|g| d * d * g), 2.0 * p.b.log_scale);
            let c = [0, 1, 2].map(|k| p.a.f[k] * p.b.f[k] * d);
            let s = (c[0] + c[1] * 4.0 + c[2]) * (p.len / 6.0);
            cross.add(s, p.a.log_scale + p.b.log_scale);
        }
    })?;
    let cross_log_scale = if cross.log_scale.is_finite() { cross.log_scale } else { 0.0 };
    Ok(PairOrbit {
        v: sv,
        vtilde: st,
        integrals: WeightedIntegrals {
            mismatch: mismatch.finish(),
            tilde_norm: tilde_norm.finish(),
            norm: norm.finish(),
        },
        cross: cross.at_scale(cross_log_scale),
        cross_log_scale,
    })
}

pub fn weighted_l2_integrals(
    v: &PotentialSpec,
    vtilde: &PotentialSpec,
    z: Complex64,
    x: f64,
    grid: &QuadratureGrid,
) -> Result<WeightedIntegrals> {
    if !v.same_grid(vtilde) {
        return Err(Error::GridMismatch("weighted integrals need a shared grid".into()));
    }
    Ok(pair_orbit(v, vtilde, z, x, grid)?.integrals)
}

/// `int_0^n Im(conj(u) v) dt` along the fundamental system.
pub fn im_ubar_v_integral(v: &PotentialSpec, z: Complex64, n: f64, grid: &QuadratureGrid) -> Result<f64> {
    check_z(z)?;
    if !(n > 0.0) {
        return Err(Error::Precondition(format!("upper limit N = {n} must be positive")));
    }
    check_range(v, 0.0, n)?;
    let mut acc = SimpsonSum::default();
    walk_pair(v, v, z, n, SolutionPair::cosine_type(), SolutionPair::dirichlet(), grid, |p| {
        let g = [0, 1, 2].map(|k| (p.a.f[k].conj() * p.b.f[k]).im);
        acc.add_panel(p.len, g, p.a.log_scale + p.b.log_scale);
    })?;
    let out = acc.finish().to_f64();
    if out.is_nan() {
        return Err(Error::NonFinite("Im(conj(u) v) integral".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{free_solutions, sqrt_upper};
    use crate::potential::Interpolation;

    fn rect(x_max: f64, h: f64, lo: f64, hi: f64, height: f64) -> PotentialSpec {
        PotentialSpec::from_fn(x_max, h, Interpolation::PiecewiseConstant, |x| {
            if x >= lo - 1e-12 && x < hi - 1e-12 {
                height
            } else {
                0.0
            }
        })
        .unwrap()
    }

    // composite Simpson on closed forms, independent of the propagator
    fn oracle_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn identical_potentials_have_zero_mismatch() {
        let v = rect(6.0, 0.05, 1.0, 2.0, 3.0);
        let w = weighted_l2_integrals(&v, &v, Complex64::new(0.5, 1.0), 5.0, &QuadratureGrid::default()).unwrap();
        assert_eq!(w.mismatch.to_f64(), 0.0);
    }

    #[test]
    fn free_denominator_matches_closed_form() {
        let v = rect(8.0, 0.05, 2.0, 3.0, -1.5);
        let vt = PotentialSpec::zero(8.0, 0.05).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let l = 7.0;
        let w = weighted_l2_integrals(&v, &vt, z, l, &QuadratureGrid::default()).unwrap();
        let k = sqrt_upper(z);
        let (a, b) = (k.re, k.im);
        let exact = ((2.0 * b * l).sinh() / (2.0 * b) - (2.0 * a * l).sin() / (2.0 * a)) / (2.0 * (a * a + b * b));
        let got = w.tilde_norm.to_f64();
        assert!((got - exact).abs() <= 1e-8 * exact, "{got} vs {exact}");
        assert!(w.tilde_norm.error_f64() < 1e-3 * exact);
    }

    #[test]
    fn self_convergence_under_refinement() {
        let v = rect(6.0, 0.1, 0.5, 2.5, 2.0);
        let vt = rect(6.0, 0.1, 1.0, 4.0, -1.0);
        let z = Complex64::new(1.2, 0.7);
        let g = QuadratureGrid::default();
        let a = weighted_l2_integrals(&v, &vt, z, 6.0, &g).unwrap();
        let b = weighted_l2_integrals(&v, &vt, z, 6.0, &g.refined()).unwrap();
        for (x, y) in [(a.mismatch, b.mismatch), (a.tilde_norm, b.tilde_norm), (a.norm, b.norm)] {
            let (x, y) = (x.to_f64(), y.to_f64());
            assert!((x - y).abs() <= 1e-8 * y.abs(), "{x} vs {y}");
        }
    }

    #[test]
    fn imaginary_part_identity_along_orbit() {
        // Im(-v'/v) = Im z / |v|^2 * int |v|^2
        let v = rect(15.0, 0.05, 1.0, 4.0, 2.5);
        let z = Complex64::new(-0.7, 0.4);
        for &x in &[0.5, 3.0, 9.0, 15.0] {
            let o = pair_orbit(&v, &v, z, x, &QuadratureGrid::default()).unwrap();
            let lhs = (-o.v.log_derivative()).im;
            let rhs = z.im * o.integrals.norm.value * (o.integrals.norm.log_scale - 2.0 * o.v.log_scale).exp()
                / o.v.f.norm_sqr();
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs(), "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn lagrange_identity_along_orbit() {
        // v~ v' - v v~' = int (V - V~) v v~
        let v = rect(10.0, 0.05, 1.0, 3.0, 1.5);
        let vt = rect(10.0, 0.05, 2.0, 6.0, -0.8);
        let z = Complex64::new(0.3, 0.9);
        for &x in &[1.5, 4.0, 10.0] {
            let o = pair_orbit(&v, &vt, z, x, &QuadratureGrid::default()).unwrap();
            let w = (o.vtilde.f * o.v.fprime - o.v.f * o.vtilde.fprime)
                * (o.v.log_scale + o.vtilde.log_scale - o.cross_log_scale).exp();
            assert!((w - o.cross).norm() <= 1e-8 * o.cross.norm(), "x = {x}: {w} vs {}", o.cross);
        }
    }

    #[test]
    fn im_ubar_v_free_matches_closed_form_quadrature() {
        let v = PotentialSpec::zero(3.0, 0.05).unwrap();
        let z = Complex64::new(0.0, 1.0);
        let n = 2.0;
        let got = im_ubar_v_integral(&v, z, n, &QuadratureGrid::default()).unwrap();
        let want = oracle_simpson(
            |t| {
                let [u0, _, v0, _] = free_solutions(z, t);
                (u0.conj() * v0).im
            },
            0.0,
            n,
            20_000,
        );
        assert!((got - want).abs() <= 1e-9 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn im_ubar_v_positive_and_unbounded() {
        let v = rect(40.0, 0.05, 0.5, 1.0, 1.0);
        for re in [-2.0, -0.5, 0.0, 1.0, 3.0] {
            for im in [0.1, 0.5, 1.5] {
                let z = Complex64::new(re, im);
                let val = im_ubar_v_integral(&v, z, 3.0, &QuadratureGrid::default()).unwrap();
                assert!(val > 0.0, "z = {z}: {val}");
            }
        }
        let zero = PotentialSpec::zero(60.0, 0.1).unwrap();
        let z = Complex64::new(1.0, 0.5);
        let vals: Vec<f64> = [5.0, 15.0, 30.0, 60.0]
            .iter()
            .map(|&n| im_ubar_v_integral(&zero, z, n, &QuadratureGrid::default()).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > 10.0 * w[0]), "{vals:?}");
    }
}
