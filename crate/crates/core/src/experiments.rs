//! Asymptotic value-distribution experiments on sparse potentials.
//!
//! For each window `(a_k, b_k)` two quantities are measured against the free
//! limit: the angle integral of the half-line m-function started at `a_k`,
//! and the direct value distribution of `v'(b_k, lambda) / v(b_k, lambda)`
//! at real `lambda`. The second route never leaves the real axis, so the two
//! columns are independent estimates of their common targets.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::IntervalUnion;
use crate::ode::dirichlet_log_derivative_real;
use crate::potential::{PotentialSpec, SparseWindowSequence};
use crate::quad::QuadPolicy;
use crate::value_dist::{
    free_asymptotic_distribution, herglotz_value_distribution, real_function_value_distribution, SamplingPolicy,
};
use crate::weyl::{m_function, MFunctionRequest};

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub potential: PotentialSpec,
    pub windows: SparseWindowSequence,
    pub a_set: IntervalUnion,
    pub s_set: IntervalUnion,
    /// Strictly decreasing offsets for the angle integrals.
    pub d_ladder: Vec<f64>,
    /// One-based inclusive range of windows to evaluate; `None` means all.
    pub k_range: Option<(usize, usize)>,
    /// Tolerance on non-increasing window masses.
    pub mass_tol: f64,
    /// Largest `L^2` mass a half window may carry in the negative-spectrum run.
    pub half_window_delta: f64,
    pub quad: QuadPolicy,
    pub sampling: SamplingPolicy,
}

impl ExperimentConfig {
    pub fn new(
        potential: PotentialSpec,
        windows: SparseWindowSequence,
        a_set: IntervalUnion,
        s_set: IntervalUnion,
    ) -> Self {
        Self {
            potential,
            windows,
            a_set,
            s_set,
            d_ladder: vec![1e-1, 1e-2, 1e-3],
            k_range: None,
            mass_tol: 1e-12,
            half_window_delta: 1e-3,
            quad: QuadPolicy { abs_tol: 1e-6, min_panels: 16, max_depth: 20, max_evals: 20_000_000 },
            sampling: SamplingPolicy { max_refinements: 6, ..SamplingPolicy::default() },
        }
    }

    /// Checks the ladder, `A`, `k_range` and the window sequence.
    pub fn validate(&self) -> Result<()> {
        if self.a_set.has_minus_infinity_tail() || self.a_set.has_plus_infinity_tail() || self.a_set.is_empty() {
            return Err(Error::InvalidArgument(format!("A = {} must be nonempty with finite measure", self.a_set)));
        }
        if self.d_ladder.is_empty()
            || self.d_ladder.iter().any(|d| !(*d > 0.0) || !d.is_finite())
            || self.d_ladder.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(Error::InvalidArgument(format!(
                "d ladder {:?} must be positive and strictly decreasing",
                self.d_ladder
            )));
        }
        if self.windows.is_empty() {
            return Err(Error::InvalidWindowSequence("no windows".into()));
        }
        if let Some((lo, hi)) = self.k_range {
            if lo == 0 || lo > hi || hi > self.windows.len() {
                return Err(Error::InvalidArgument(format!("k range {lo}..={hi} outside 1..={}", self.windows.len())));
            }
        }
        self.windows.validate(&self.potential, self.mass_tol)
    }

    /// Zero-based window indices selected by `k_range`.
    pub fn indices(&self) -> Vec<usize> {
        let (lo, hi) = self.k_range.unwrap_or((1, self.windows.len()));
        (lo - 1..hi).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    /// One-based window index.
    pub k: usize,
    pub l_k: f64,
    pub window_mass: f64,
    pub md_left: f64,
    pub md_right: f64,
    /// Free limit of the left column, `(1/pi) int_A theta(i sqrt(lambda), S)`.
    pub target: f64,
    /// Free limit of the right column, with `-S` in place of `S`.
    pub target_right: f64,
    pub discrepancy_left: f64,
    pub discrepancy_right: f64,
    /// Offset at which `md_left` was taken.
    pub d_used: f64,
    pub quad_error: f64,
    /// `|M_d - M_{d'}|` between the last two rungs of the ladder.
    pub ladder_change: f64,
    /// Whether the crossing count of the right column settled under refinement.
    pub right_stable: bool,
}

/// A row either computed or failed; failures do not stop the sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome<T> {
    Done(T),
    Failed { k: usize, error: Error },
}

impl<T> RowOutcome<T> {
    pub fn done(&self) -> Option<&T> {
        match self {
            RowOutcome::Done(r) => Some(r),
            RowOutcome::Failed { .. } => None,
        }
    }
}

/// Angle-integral value distribution of the m-function on `[start, inf)`
/// down the ladder; returns `(value, d, quad_error, last change)` at the
/// smallest offset whose evaluation succeeded.
pub fn left_distribution(
    v: &PotentialSpec,
    start: f64,
    a: &IntervalUnion,
    s: &IntervalUnion,
    ladder: &[f64],
    quad: &QuadPolicy,
) -> Result<(f64, f64, f64, f64)> {
    let f = |z: Complex64| m_function(&MFunctionRequest::new(v, start, z));
    let mut best: Option<(f64, f64, f64)> = None;
    let mut change = f64::NAN;
    let mut first_error = None;
    for &d in ladder {
        match herglotz_value_distribution(&f, a, s, d, quad) {
            Ok(r) => {
                if let Some((prev, _, _)) = best {
                    change = (r.value - prev).abs();
                }
                best = Some((r.value, d, r.quad_error));
            }
            Err(e) => {
                log::warn!("angle integral at d = {d} failed: {e}");
                first_error.get_or_insert(e);
                break;
            }
        }
    }
    match best {
        Some((value, d, err)) => Ok((value, d, err, change)),
        None => Err(first_error.unwrap_or(Error::Quadrature("empty d ladder".into()))),
    }
}

/// `|{lambda in A : v'(x, lambda) / v(x, lambda) in S}|` at real `lambda`.
pub fn right_distribution(
    v: &PotentialSpec,
    x: f64,
    a: &IntervalUnion,
    s: &IntervalUnion,
    sampling: &SamplingPolicy,
) -> Result<(f64, bool)> {
    let g = |lambda: f64| dirichlet_log_derivative_real(v, lambda, x);
    let r = real_function_value_distribution(&g, a, s, sampling)?;
    Ok((r.value, r.stable))
}

fn theorem2_row(cfg: &ExperimentConfig, idx: usize, target: f64, target_right: f64) -> Result<ConvergenceRow> {
    let (a_k, b_k) = cfg.windows.windows()[idx];
    let v = &cfg.potential;
    let window_mass = v.window_norm(a_k, b_k, 2)?;
    let (md_left, d_used, quad_error, ladder_change) =
        left_distribution(v, a_k, &cfg.a_set, &cfg.s_set, &cfg.d_ladder, &cfg.quad)?;
    let (md_right, right_stable) = right_distribution(v, b_k, &cfg.a_set, &cfg.s_set, &cfg.sampling)?;
    Ok(ConvergenceRow {
        k: idx + 1,
        l_k: b_k - a_k,
        window_mass,
        md_left,
        md_right,
        target,
        target_right,
        discrepancy_left: (md_left - target).abs(),
        discrepancy_right: (md_right - target_right).abs(),
        d_used,
        quad_error,
        ladder_change,
        right_stable,
    })
}

/// Both limits for every selected window, in `k` order.
pub fn run_theorem2(cfg: &ExperimentConfig) -> Result<Vec<RowOutcome<ConvergenceRow>>> {
    cfg.validate()?;
    let target = free_asymptotic_distribution(&cfg.a_set, &cfg.s_set)?;
    let target_right = free_asymptotic_distribution(&cfg.a_set, &cfg.s_set.negate())?;
    Ok(cfg
        .indices()
        .into_par_iter()
        .map(|idx| match theorem2_row(cfg, idx, target, target_right) {
            Ok(r) => RowOutcome::Done(r),
            Err(error) => RowOutcome::Failed { k: idx + 1, error },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryRow {
    pub k: usize,
    pub n_k: f64,
    pub specest1: f64,
    pub specest2: f64,
    pub gap: f64,
    /// Both half windows carry less than `half_window_delta` of `L^2` mass.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corollary2Record {
    /// `(1/pi) int_A theta(i sqrt(lambda), S)`
    pub target_left: f64,
    /// `(1/pi) int_A theta(i sqrt(lambda), -S)`
    pub target_right: f64,
    pub target_gap: f64,
    pub rows: Vec<RowOutcome<CorollaryRow>>,
}

fn corollary_row(cfg: &ExperimentConfig, idx: usize) -> Result<CorollaryRow> {
    let (a_k, b_k) = cfg.windows.windows()[idx];
    let n_k = 0.5 * (a_k + b_k);
    let v = &cfg.potential;
    let valid =
        v.window_norm(a_k, n_k, 2)? < cfg.half_window_delta && v.window_norm(n_k, b_k, 2)? < cfg.half_window_delta;
    let (specest1, _, _, _) = left_distribution(v, n_k, &cfg.a_set, &cfg.s_set, &cfg.d_ladder, &cfg.quad)?;
    let (specest2, _) = right_distribution(v, n_k, &cfg.a_set, &cfg.s_set, &cfg.sampling)?;
    Ok(CorollaryRow { k: idx + 1, n_k, specest1, specest2, gap: specest1 - specest2, valid })
}

/// Both sides of the negative-spectrum identity, in closed form and
/// empirically at the window midpoints.
pub fn run_corollary2(cfg: &ExperimentConfig) -> Result<Corollary2Record> {
    cfg.validate()?;
    let target_left = free_asymptotic_distribution(&cfg.a_set, &cfg.s_set)?;
    let target_right = free_asymptotic_distribution(&cfg.a_set, &cfg.s_set.negate())?;
    let rows = cfg
        .indices()
        .into_par_iter()
        .map(|idx| match corollary_row(cfg, idx) {
            Ok(r) => RowOutcome::Done(r),
            Err(error) => RowOutcome::Failed { k: idx + 1, error },
        })
        .collect();
    Ok(Corollary2Record { target_left, target_right, target_gap: target_left - target_right, rows })
}

/// Maximal windows of length at least `window_length` whose `L^2` mass stays
/// below `delta`, one per cluster of overlapping candidates (the longest).
pub fn sliding_window_scan(v: &PotentialSpec, window_length: f64, delta: f64) -> Result<SparseWindowSequence> {
    if !(window_length > 0.0) || window_length > v.x_max() {
        return Err(Error::InvalidArgument(format!(
            "window length {window_length} must lie in (0, x_max = {}]",
            v.x_max()
        )));
    }
    let n = v.samples().len() - 1;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for i in 0..n {
        let cell = v.window_norm(v.node(i), v.node(i + 1), 2)?;
        prefix.push(prefix[i] + cell);
    }
    // two pointers: for each left node the furthest right node with mass < delta
    let mut candidates = Vec::new();
    let mut j = 0usize;
    let mut last_j = None;
    for i in 0..n {
        if j < i {
            j = i;
        }
        while j < n && prefix[j + 1] - prefix[i] < delta {
            j += 1;
        }
        if j > i && last_j != Some(j) {
            let (a, b) = (v.node(i), v.node(j));
            if b - a >= window_length - 1e-9 * v.h() {
                candidates.push((a, b));
            }
        }
        last_j = Some(j);
    }
    let mut picked: Vec<(f64, f64)> = Vec::new();
    let mut cluster_end = f64::NEG_INFINITY;
    for (a, b) in candidates {
        if a < cluster_end {
            let last = picked.last_mut().expect("cluster has a member");
            if b - a > last.1 - last.0 {
                *last = (a, b);
            }
            cluster_end = cluster_end.max(b);
        } else {
            picked.push((a, b));
            cluster_end = b;
        }
    }
    SparseWindowSequence::new(picked)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn theorem2_csv(rows: &[RowOutcome<ConvergenceRow>]) -> String {
    let mut out = String::from(
        "k,l_k,window_mass,md_left,md_right,target,target_right,discrepancy_left,discrepancy_right,d_used,quad_error,ladder_change,right_stable,status\n",
    );
    for row in rows {
        match row {
            RowOutcome::Done(r) => {
                let nums = [
                    r.l_k,
                    r.window_mass,
                    r.md_left,
                    r.md_right,
                    r.target,
                    r.target_right,
                    r.discrepancy_left,
                    r.discrepancy_right,
                    r.d_used,
                    r.quad_error,
                    r.ladder_change,
                ];
                let body: Vec<String> = nums.iter().map(|&x| fmt_f(x)).collect();
                let _ = writeln!(out, "{},{},{},ok", r.k, body.join(","), r.right_stable);
            }
            RowOutcome::Failed { k, error } => {
                let msg = error.to_string().replace([',', '\n'], ";");
                let _ = writeln!(out, "{k},{},false,failed: {msg}", ["NaN"; 11].join(","));
            }
        }
    }
    out
}

pub fn corollary2_csv(record: &Corollary2Record) -> String {
    let mut out = String::from("k,n_k,specest1,specest2,gap\n");
    for row in &record.rows {
        match row {
            RowOutcome::Done(r) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.k,
                    fmt_f(r.n_k),
                    fmt_f(r.specest1),
                    fmt_f(r.specest2),
                    fmt_f(r.gap)
                );
            }
            RowOutcome::Failed { k, .. } => {
                let _ = writeln!(out, "{k},NaN,NaN,NaN,NaN");
            }
        }
    }
    out
}

/// Static SVG of both discrepancy columns against `k`.
pub fn discrepancy_svg(rows: &[RowOutcome<ConvergenceRow>]) -> String {
    let done: Vec<&ConvergenceRow> = rows.iter().filter_map(|r| r.done()).collect();
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let k_max = done.iter().map(|r| r.k).max().unwrap_or(1).max(2) as f64;
    let k_min = done.iter().map(|r| r.k).min().unwrap_or(1) as f64;
    let y_max = done.iter().flat_map(|r| [r.discrepancy_left, r.discrepancy_right]).fold(0.0, f64::max).max(1e-12);
    let px = |k: usize| pad + (k as f64 - k_min) / (k_max - k_min).max(1.0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - y / y_max * (h - 2.0 * pad);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <text x=\"{tx}\" y=\"{ty}\" font-size=\"12\" text-anchor=\"middle\">k</text>\n\
         <text x=\"10\" y=\"{pad}\" font-size=\"12\">{y_max:.3e}</text>\n",
        y0 = h - pad,
        x1 = w - pad,
        tx = w / 2.0,
        ty = h - 15.0,
    );
    for (name, colour, pick) in [
        ("left", "#1f77b4", (|r: &ConvergenceRow| r.discrepancy_left) as fn(&ConvergenceRow) -> f64),
        ("right", "#d62728", |r: &ConvergenceRow| r.discrepancy_right),
    ] {
        let pts: Vec<String> = done.iter().map(|r| format!("{:.2},{:.2}", px(r.k), py(pick(r)))).collect();
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\" points=\"{}\"><title>{name}</title></polyline>",
            pts.join(" ")
        );
        for r in &done {
            let _ =
                writeln!(svg, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{colour}\"/>", px(r.k), py(pick(r)));
        }
    }
    for r in &done {
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            px(r.k),
            h - pad + 15.0,
            r.k
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// True when the sequence never increases from index `start` on.
pub fn non_increasing_from(values: &[f64], start: usize) -> bool {
    values.iter().skip(start).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0])
}
