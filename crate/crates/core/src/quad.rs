//! Adaptive Simpson quadrature over a fixed set of starting panels.
//!
//! Starting panels are refined independently and may be evaluated in
//! parallel; their contributions are summed in order so the result does not
//! depend on scheduling.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPolicy {
    /// Absolute tolerance for the whole integral, shared among panels by length.
    pub abs_tol: f64,
    pub min_panels: usize,
    pub max_depth: u32,
    pub max_evals: usize,
}

impl Default for QuadPolicy {
    fn default() -> Self {
        Self { abs_tol: 1e-8, min_panels: 16, max_depth: 30, max_evals: 5_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    pub evals: usize,
    /// False when some panel hit `max_depth` before meeting its tolerance.
    pub converged: bool,
}

struct Acc {
    value: f64,
    error: f64,
    evals: usize,
    converged: bool,
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    acc: &mut Acc,
    cap: usize,
) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    acc.evals += 2;
    let h = b - a;
    let left = h / 12.0 * (fa + 4.0 * flm + fm);
    let right = h / 12.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= 15.0 * tol || depth == 0 || acc.evals > cap {
        if diff.abs() > 15.0 * tol {
            acc.converged = false;
        }
        acc.value += left + right + diff / 15.0;
        acc.error += diff.abs() / 15.0;
        return Ok(());
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, acc, cap)?;
    refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, acc, cap)
}

/// Integrates `f` over `[a, b]` starting from `panels` equal panels.
pub fn integrate<F>(f: &F, a: f64, b: f64, panels: usize, policy: &QuadPolicy) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidInterval { lo: a, hi: b });
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evals: 0, converged: true });
    }
    let n = panels.max(policy.min_panels).max(1);
    let width = (b - a) / n as f64;
    let tol = policy.abs_tol / n as f64;
    let cap = policy.max_evals / n + 3;
    let parts: Vec<Result<Acc>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == n { b } else { a + (i + 1) as f64 * width };
            let fa = f(lo)?;
            let fm = f(0.5 * (lo + hi))?;
            let fb = f(hi)?;
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            let mut acc = Acc { value: 0.0, error: 0.0, evals: 3, converged: true };
            refine(f, lo, hi, fa, fm, fb, whole, tol, policy.max_depth, &mut acc, cap)?;
            Ok(acc)
        })
        .collect();
    let mut out = QuadResult { value: 0.0, error: 0.0, evals: 0, converged: true };
    for p in parts {
        let p = p?;
        out.value += p.value;
        out.error += p.error;
        out.evals += p.evals;
        out.converged &= p.converged;
    }
    if out.evals > policy.max_evals {
        return Err(Error::Quadrature(format!(
            "evaluation budget {} exhausted on [{a}, {b}] (error estimate {:.3e})",
            policy.max_evals, out.error
        )));
    }
    if !out.value.is_finite() {
        return Err(Error::NonFinite(format!("quadrature over [{a}, {b}]")));
    }
    Ok(out)
}
