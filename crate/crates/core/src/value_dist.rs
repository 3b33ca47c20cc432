//! Value distribution of boundary functions.
//!
//! Two routes are offered. For a Herglotz function `F` the distribution is
//! the normalized angle integral `(1/pi) int_A theta(F(lambda + i d), S)`
//! at a small offset `d`. For a real function `g` it is measured directly as
//! `|{lambda in A : g(lambda) in S}|` by sampling and bisecting class changes.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{theta_angle, HalfPlanePoint, IntervalUnion};
use crate::quad::{integrate, QuadPolicy};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueDistributionReport {
    pub value: f64,
    pub d_used: f64,
    pub quad_error: f64,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingPolicy {
    /// Samples per interval of `A` on the coarsest grid.
    pub points: usize,
    /// Grid doublings tried while the crossing count changes.
    pub max_refinements: u32,
    pub bisection_steps: u32,
}

impl Default for SamplingPolicy {
    fn default() -> Self {
        Self { points: 2048, max_refinements: 4, bisection_steps: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealDistributionReport {
    pub value: f64,
    /// Number of class changes located on the final grid.
    pub crossings: usize,
    pub grid_points: usize,
    /// Whether the crossing count agreed between the last two grids.
    pub stable: bool,
}

fn finite_measure(a: &IntervalUnion) -> Result<()> {
    if a.has_minus_infinity_tail() || a.has_plus_infinity_tail() {
        return Err(Error::InvalidArgument(format!("A = {a} must have finite measure")));
    }
    Ok(())
}

/// `(1/pi) int_A theta(F(lambda + i d), S) d lambda`.
pub fn herglotz_value_distribution<F>(
    f: &F,
    a: &IntervalUnion,
    s: &IntervalUnion,
    d: f64,
    policy: &QuadPolicy,
) -> Result<ValueDistributionReport>
where
    F: Fn(Complex64) -> Result<HalfPlanePoint> + Sync,
{
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Precondition(format!("offset d = {d} must be positive")));
    }
    finite_measure(a)?;
    let total = a.measure();
    let mut report = ValueDistributionReport { value: 0.0, d_used: d, quad_error: 0.0, grid_points: 0 };
    for &(lo, hi) in a.intervals() {
        let len = hi - lo;
        // features of the integrand live on the scale d
        let panels = ((len / d).ceil() as usize).clamp(1, 200_000);
        let local = QuadPolicy { abs_tol: policy.abs_tol * len / total, ..*policy };
        let integrand = |lambda: f64| -> Result<f64> {
            let w = f(Complex64::new(lambda, d))?;
            Ok(theta_angle(w, s) / PI)
        };
        let r = integrate(&integrand, lo, hi, panels, &local)?;
        report.value += r.value;
        report.quad_error += r.error;
        report.grid_points += r.evals;
    }
    report.value = report.value.max(0.0);
    Ok(report)
}

fn classify<G>(g: &G, s: &IntervalUnion, x: f64) -> Result<bool>
where
    G: Fn(f64) -> Result<f64>,
{
    let y = g(x)?;
    Ok(!y.is_nan() && s.contains(y))
}

fn measure_on_grid<G>(g: &G, s: &IntervalUnion, lo: f64, hi: f64, n: usize, steps: u32) -> Result<(f64, usize)>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    let xs: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 }).collect();
    let classes: Vec<bool> = xs.par_iter().map(|&x| classify(g, s, x)).collect::<Result<_>>()?;
    let pieces: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (x0, x1) = (xs[i], xs[i + 1]);
            let (c0, c1) = (classes[i], classes[i + 1]);
            if c0 == c1 {
                return Ok((if c0 { x1 - x0 } else { 0.0 }, false));
            }
            let (mut l, mut r) = (x0, x1);
            for _ in 0..steps {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                if classify(g, s, m)? == c0 {
                    l = m;
                } else {
                    r = m;
                }
            }
            let t = 0.5 * (l + r);
            Ok((if c0 { t - x0 } else { x1 - t }, true))
        })
        .collect::<Result<_>>()?;
    let value = pieces.iter().map(|p| p.0).sum();
    let crossings = pieces.iter().filter(|p| p.1).count();
    Ok((value, crossings))
}

/// `|{lambda in A : g(lambda) in S}|`. Poles of `g` may return infinities
/// or NaN; they are isolated and carry no measure.
pub fn real_function_value_distribution<G>(
    g: &G,
    a: &IntervalUnion,
    s: &IntervalUnion,
    policy: &SamplingPolicy,
) -> Result<RealDistributionReport>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    finite_measure(a)?;
    if policy.points == 0 {
        return Err(Error::InvalidArgument("sampling policy needs at least one point".into()));
    }
    let mut out = RealDistributionReport { value: 0.0, crossings: 0, grid_points: 0, stable: true };
    for &(lo, hi) in a.intervals() {
        let mut n = policy.points;
        let (mut value, mut crossings) = measure_on_grid(g, s, lo, hi, n, policy.bisection_steps)?;
        let mut points = n + 1;
        let mut stable = false;
        for _ in 0..policy.max_refinements {
            n *= 2;
            let (v2, c2) = measure_on_grid(g, s, lo, hi, n, policy.bisection_steps)?;
            points += n + 1;
            let same = c2 == crossings;
            value = v2;
            crossings = c2;
            if same {
                stable = true;
                break;
            }
        }
        if !stable {
            log::warn!("crossing count on [{lo}, {hi}] did not stabilize after {} refinements", policy.max_refinements);
        }
        out.value += value;
        out.crossings += crossings;
        out.grid_points += points;
        out.stable &= stable;
    }
    Ok(out)
}

/// Acceptance predicate `|m1 - m2| <= epsilon |A| + 2 E_A(d)`, boundary included.
pub fn compare_value_distributions(m1: f64, m2: f64, a: &IntervalUnion, epsilon: f64, e_a_d: f64) -> bool {
    (m1 - m2).abs() <= epsilon * a.measure() + 2.0 * e_a_d
}

/// `(1/pi) int_A theta(i sqrt(lambda), S) d lambda`, the free limiting
/// distribution. The negative half of `A` is handled exactly: there
/// `i sqrt(lambda) = -sqrt|lambda|` lies on the real line.
pub fn free_asymptotic_distribution(a: &IntervalUnion, s: &IntervalUnion) -> Result<f64> {
    finite_measure(a)?;
    let mut total = 0.0;

    // lambda < 0: the set {-t^2 : t in S, t <= 0}
    let neg_s = s.clip(f64::NEG_INFINITY, 0.0);
    let image = IntervalUnion::from_intervals(neg_s.intervals().iter().map(|&(lo, hi)| (-(lo * lo), -(hi * hi))))?;
    total += a.clip(f64::NEG_INFINITY, 0.0).intersect(&image).measure();

    // lambda > 0 with lambda = t^2
    let policy = QuadPolicy { abs_tol: 1e-10, min_panels: 8, ..QuadPolicy::default() };
    for &(lo, hi) in a.clip(0.0, f64::INFINITY).intervals() {
        let integrand = |t: f64| -> Result<f64> {
            if t == 0.0 {
                return Ok(0.0);
            }
            let w = HalfPlanePoint::new(0.0, t)?;
            Ok(2.0 * t * theta_angle(w, s) / PI)
        };
        let r = integrate(&integrand, lo.sqrt(), hi.sqrt(), 8, &policy)?;
        total += r.value;
    }
    Ok(total)
}

/// Empirical stand-in for `E_A(d)`: the largest change `|M_d - M_{d/10}|`
/// over a few rational Herglotz functions whose limits are known.
pub fn empirical_e_a_d(a: &IntervalUnion, s: &IntervalUnion, d: f64) -> Result<f64> {
    let policy = QuadPolicy { abs_tol: 1e-9, ..QuadPolicy::default() };
    let calibration: [fn(Complex64) -> Complex64; 3] =
        [|z| z, |z| -1.0 / z, |z| z / 2.0 - 1.0 / (z - 1.5) - 0.5 / (z + 0.7)];
    let mut worst: f64 = 0.0;
    for f in calibration {
        let h = |z: Complex64| HalfPlanePoint::from_complex(f(z));
        let coarse = herglotz_value_distribution(&h, a, s, d, &policy)?;
        let fine = herglotz_value_distribution(&h, a, s, d / 10.0, &policy)?;
        worst = worst.max((coarse.value - fine.value).abs());
    }
    Ok(worst)
}
