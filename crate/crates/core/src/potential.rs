//! Grid-sampled potentials on `[0, x_max]`.
//!
//! A [`PotentialSpec`] holds uniformly spaced samples together with an
//! interpolation rule. Piecewise-constant potentials take the value of the
//! left node on each cell `[x_i, x_{i+1})`. Both rules are reduced to a list
//! of constant runs, which is what the propagator consumes; piecewise-linear
//! data is sub-sampled at cell midpoints for that purpose.
//!
//! Beyond `x_max` every potential is extended by zero. Only the m-function
//! convergence diagnostic ever looks past `x_max`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Number of constant pieces per cell used when a piecewise-linear potential
/// is handed to the propagator.
pub const LINEAR_SUBDIVISION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    PiecewiseConstant,
    PiecewiseLinear,
}

/// A maximal stretch on which the propagator sees a constant potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    h: f64,
    samples: Vec<f64>,
    interpolation: Interpolation,
    runs: Vec<Run>,
}

impl PotentialSpec {
    pub fn new(h: f64, samples: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("grid spacing h = {h} must be positive")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidArgument("a potential needs at least two samples".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("potential sample {i}")));
        }
        let runs = build_runs(h, &samples, interpolation);
        Ok(Self { h, samples, interpolation, runs })
    }

    /// Samples `f` at the nodes `i h` of a grid covering `[0, x_max]`. The
    /// spacing is adjusted slightly so that `x_max` is a node.
    pub fn from_fn<F>(x_max: f64, h: f64, interpolation: Interpolation, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64,
    {
        let (n, h) = grid_for(x_max, h)?;
        let samples = (0..n).map(|i| f(i as f64 * h)).collect();
        Self::new(h, samples, interpolation)
    }

    pub fn zero(x_max: f64, h: f64) -> Result<Self> {
        Self::from_fn(x_max, h, Interpolation::PiecewiseConstant, |_| 0.0)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn x_max(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    pub fn sup_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at `x`, zero beyond `x_max`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let n = self.samples.len();
        if x < 0.0 || x > self.x_max() {
            return 0.0;
        }
        let i = ((x / self.h).floor() as usize).min(n - 1);
        match self.interpolation {
            Interpolation::PiecewiseConstant => self.samples[i],
            Interpolation::PiecewiseLinear => {
                if i == n - 1 {
                    return self.samples[i];
                }
                let t = (x - self.node(i)) / self.h;
                self.samples[i] + t * (self.samples[i + 1] - self.samples[i])
            }
        }
    }

    /// Constant runs covering `[a, b]`, clipped to it. The part beyond `x_max`
    /// is reported as a single zero run.
    pub fn runs_between(&self, a: f64, b: f64) -> Vec<Run> {
        let mut out = Vec::new();
        if !(b > a) {
            return out;
        }
        let x_max = self.x_max();
        if a < x_max {
            let first = self.runs.partition_point(|r| r.end <= a);
            for r in &self.runs[first..] {
                if r.start >= b {
                    break;
                }
                let start = r.start.max(a);
                let end = r.end.min(b);
                if end > start {
                    out.push(Run { start, end, value: r.value });
                }
            }
        }
        if b > x_max {
            let start = a.max(x_max);
            match out.last_mut() {
                Some(last) if last.value == 0.0 && last.end >= start => last.end = b,
                _ => out.push(Run { start, end: b, value: 0.0 }),
            }
        }
        out
    }

    /// `int_a^b |V|^p dx` for `p` in `{1, 2}`, exact for the interpolation rule.
    pub fn window_norm(&self, a: f64, b: f64, p: u32) -> Result<f64> {
        let x_max = self.x_max();
        let slack = 1e-12 * x_max.max(1.0);
        if !(a >= -slack && a < b && b <= x_max + slack) {
            return Err(Error::InvalidWindow { a, b, x_max });
        }
        if p != 1 && p != 2 {
            return Err(Error::InvalidArgument(format!("window norm exponent {p} must be 1 or 2")));
        }
        let (a, b) = (a.max(0.0), b.min(x_max));
        let n_cells = self.samples.len() - 1;
        let first = ((a / self.h).floor() as usize).min(n_cells - 1);
        let mut total = 0.0;
        for i in first..n_cells {
            let c0 = self.node(i);
            let c1 = self.node(i + 1);
            if c0 >= b {
                break;
            }
            let lo = c0.max(a);
            let hi = c1.min(b);
            if hi <= lo {
                continue;
            }
            let len = hi - lo;
            total += match self.interpolation {
                Interpolation::PiecewiseConstant => self.samples[i].abs().powi(p as i32) * len,
                Interpolation::PiecewiseLinear => {
                    let slope = (self.samples[i + 1] - self.samples[i]) / self.h;
                    let v0 = self.samples[i] + slope * (lo - c0);
                    let v1 = self.samples[i] + slope * (hi - c0);
                    linear_cell_norm(v0, v1, len, p)
                }
            };
        }
        Ok(total)
    }

    /// `V(x + offset)` on `[0, x_max - offset]`; `offset` must be a grid node.
    pub fn translated(&self, offset: f64) -> Result<Self> {
        let k = (offset / self.h).round();
        if (k * self.h - offset).abs() > 1e-9 * self.h || k < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "translation {offset} is not a nonnegative multiple of h = {}",
                self.h
            )));
        }
        let k = k as usize;
        if k + 2 > self.samples.len() {
            return Err(Error::InvalidArgument(format!("translation {offset} leaves fewer than two samples")));
        }
        Self::new(self.h, self.samples[k..].to_vec(), self.interpolation)
    }

    /// `t V`
    pub fn scaled(&self, t: f64) -> Result<Self> {
        Self::new(self.h, self.samples.iter().map(|v| t * v).collect(), self.interpolation)
    }

    /// `V + c`
    pub fn offset_by(&self, c: f64) -> Result<Self> {
        Self::new(self.h, self.samples.iter().map(|v| v + c).collect(), self.interpolation)
    }

    /// Same potential on the first `len` of its grid (rounded to a node).
    pub fn truncated(&self, len: f64) -> Result<Self> {
        let n = ((len / self.h).round() as usize + 1).min(self.samples.len());
        Self::new(self.h, self.samples[..n.max(2)].to_vec(), self.interpolation)
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.samples.len() == other.samples.len()
            && (self.h - other.h).abs() <= 1e-12 * self.h
            && self.interpolation == other.interpolation
    }

    pub fn read_csv(path: &Path, interpolation: Interpolation) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, interpolation)
    }

    /// Parses `x,v` CSV text. The abscissae must start at zero and be uniform
    /// to a relative tolerance of `1e-9` in the spacing.
    pub fn parse_csv(text: &str, interpolation: Interpolation) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty potential file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["x", "v"] {
            return Err(Error::Parse(format!("expected header 'x,v', found '{header}'")));
        }
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let (x, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("row {}: expected two columns", lineno + 2)))?;
            let x: f64 = x.trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
            let v: f64 = v.trim().parse().map_err(|e| Error::Parse(format!("row {}: {e}", lineno + 2)))?;
            xs.push(x);
            vs.push(v);
        }
        if xs.len() < 2 {
            return Err(Error::Parse("potential file needs at least two rows".into()));
        }
        let n = xs.len();
        let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        if !(h > 0.0) {
            return Err(Error::Parse("abscissae must be strictly increasing".into()));
        }
        if xs[0].abs() > 1e-9 * h {
            return Err(Error::Parse(format!("first abscissa must be 0, found {}", xs[0])));
        }
        for (i, w) in xs.windows(2).enumerate() {
            if ((w[1] - w[0]) - h).abs() > 1e-9 * h {
                return Err(Error::Parse(format!("non-uniform spacing between rows {} and {}", i + 2, i + 3)));
            }
        }
        Self::new(h, vs, interpolation)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,v\n");
        for (i, v) in self.samples.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.node(i), v);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn grid_for(x_max: f64, h: f64) -> Result<(usize, f64)> {
    if !(x_max > 0.0 && h > 0.0) || !x_max.is_finite() {
        return Err(Error::InvalidArgument(format!("need x_max > 0 and h > 0, got {x_max}, {h}")));
    }
    let cells = (x_max / h).round().max(1.0) as usize;
    Ok((cells + 1, x_max / cells as f64))
}

fn linear_cell_norm(v0: f64, v1: f64, len: f64, p: u32) -> f64 {
    if p == 2 {
        return len * (v0 * v0 + v0 * v1 + v1 * v1) / 3.0;
    }
    if v0 * v1 >= 0.0 {
        len * (v0 + v1).abs() / 2.0
    } else {
        len * (v0 * v0 + v1 * v1) / (2.0 * (v0.abs() + v1.abs()))
    }
}

fn build_runs(h: f64, samples: &[f64], interpolation: Interpolation) -> Vec<Run> {
    let n_cells = samples.len() - 1;
    let mut runs: Vec<Run> = Vec::new();
    let mut push = |start: f64, end: f64, value: f64| match runs.last_mut() {
        Some(last) if last.value == value => last.end = end,
        _ => runs.push(Run { start, end, value }),
    };
    match interpolation {
        Interpolation::PiecewiseConstant => {
            for (i, &value) in samples.iter().take(n_cells).enumerate() {
                push(i as f64 * h, (i + 1) as f64 * h, value);
            }
        }
        Interpolation::PiecewiseLinear => {
            let sub = LINEAR_SUBDIVISION;
            for i in 0..n_cells {
                let (v0, v1) = (samples[i], samples[i + 1]);
                for j in 0..sub {
                    let t = (j as f64 + 0.5) / sub as f64;
                    let x0 = (i as f64 + j as f64 / sub as f64) * h;
                    let x1 =
                        if j + 1 == sub { (i + 1) as f64 * h } else { (i as f64 + (j + 1) as f64 / sub as f64) * h };
                    push(x0, x1, v0 + t * (v1 - v0));
                }
            }
        }
    }
    runs
}

/// Ordered windows `(a_k, b_k)` inside `[0, x_max]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseWindowSequence {
    windows: Vec<(f64, f64)>,
}

impl SparseWindowSequence {
    pub fn new(windows: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &windows {
            if !(a >= 0.0 && a < b) || !b.is_finite() {
                return Err(Error::InvalidWindowSequence(format!("window ({a}, {b}) is not a valid interval")));
            }
        }
        if windows.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::InvalidWindowSequence("windows must be ordered by their left end".into()));
        }
        Ok(Self { windows })
    }

    pub fn windows(&self) -> &[(f64, f64)] {
        &self.windows
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.windows.iter().map(|(a, b)| b - a).collect()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.windows.iter().map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn masses(&self, v: &PotentialSpec) -> Result<Vec<f64>> {
        self.windows.iter().map(|&(a, b)| v.window_norm(a, b, 2)).collect()
    }

    /// Checks the sparse-sequence shape against `v`: lengths strictly
    /// increasing and `L^2` masses non-increasing (up to `mass_tol`).
    pub fn validate(&self, v: &PotentialSpec, mass_tol: f64) -> Result<()> {
        let x_max = v.x_max();
        if let Some(&(a, b)) = self.windows.iter().find(|&&(_, b)| b > x_max * (1.0 + 1e-12)) {
            return Err(Error::InvalidWindowSequence(format!("window ({a}, {b}) exceeds x_max = {x_max}")));
        }
        let lengths = self.lengths();
        if let Some(k) = lengths.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidWindowSequence(format!(
                "window lengths must increase: L_{} = {} then L_{} = {}",
                k + 1,
                lengths[k],
                k + 2,
                lengths[k + 1]
            )));
        }
        let masses = self.masses(v)?;
        if let Some(k) = masses.windows(2).position(|w| w[1] > w[0] + mass_tol) {
            return Err(Error::InvalidWindowSequence(format!(
                "window masses must not increase: {} then {}",
                masses[k],
                masses[k + 1]
            )));
        }
        Ok(())
    }

    /// Keeps each window that is longer than every window before it.
    pub fn record_lengths(&self) -> Self {
        let mut best = f64::NEG_INFINITY;
        let windows = self
            .windows
            .iter()
            .copied()
            .filter(|&(a, b)| {
                let keep = b - a > best;
                if keep {
                    best = b - a;
                }
                keep
            })
            .collect();
        Self { windows }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpShape {
    #[default]
    Rectangular,
    RaisedCosine,
}

/// Geometry of a bump train: a gap of length `first_gap * gap_growth^k`
/// precedes the `k`-th bump. The gaps are the sparse windows.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpTrain {
    pub height: f64,
    pub width: f64,
    pub gap_growth: f64,
    pub count: usize,
    pub first_gap: f64,
    pub h: f64,
    pub shape: BumpShape,
}

impl BumpTrain {
    pub fn new(height: f64, width: f64, gap_growth: f64, count: usize) -> Self {
        Self {
            height,
            width,
            gap_growth,
            count,
            first_gap: 10.0 * width,
            h: width / 20.0,
            shape: BumpShape::Rectangular,
        }
    }

    pub fn generate(&self) -> Result<(PotentialSpec, SparseWindowSequence)> {
        make_sparse_bump_train(self)
    }
}

/// Builds the bump-train potential and its gap windows. Bump edges are
/// snapped to the grid so that every gap carries exactly zero mass.
pub fn make_sparse_bump_train(p: &BumpTrain) -> Result<(PotentialSpec, SparseWindowSequence)> {
    if !(p.width > 0.0 && p.gap_growth > 1.0 && p.count >= 1 && p.first_gap > 0.0 && p.h > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid bump-train geometry {p:?}")));
    }
    if !p.height.is_finite() {
        return Err(Error::NonFinite("bump height".into()));
    }
    let h = p.h;
    let width_cells = (p.width / h).round().max(1.0) as usize;
    let mut bumps = Vec::with_capacity(p.count);
    let mut windows = Vec::with_capacity(p.count);
    let mut cursor = 0usize;
    for k in 0..p.count {
        let gap = p.first_gap * p.gap_growth.powi(k as i32);
        let gap_cells = (gap / h).round().max(1.0) as usize;
        windows.push((cursor as f64 * h, (cursor + gap_cells) as f64 * h));
        cursor += gap_cells;
        bumps.push(cursor);
        cursor += width_cells;
    }
    let n = cursor + width_cells + 1;
    let mut samples = vec![0.0; n];
    for &start in &bumps {
        for j in 0..width_cells {
            samples[start + j] = match p.shape {
                BumpShape::Rectangular => p.height,
                BumpShape::RaisedCosine => {
                    let t = (j as f64 + 0.5) / width_cells as f64;
                    0.5 * p.height * (1.0 - (2.0 * PI * t).cos())
                }
            };
        }
    }
    let v = PotentialSpec::new(h, samples, Interpolation::PiecewiseConstant)?;
    Ok((v, SparseWindowSequence::new(windows)?))
}

/// Pointwise sum of a sparse base and an `L^2` perturbation, the latter
/// resampled onto the base grid when needed.
pub fn make_l2_sparse(base: &PotentialSpec, perturbation: &PotentialSpec) -> Result<PotentialSpec> {
    let (xa, xb) = (base.x_max(), perturbation.x_max());
    if (xa - xb).abs() > 1e-9 * xa.max(xb) {
        return Err(Error::GridMismatch(format!("x_max differs: {xa} vs {xb}")));
    }
    let samples = if base.same_grid(perturbation) {
        base.samples.iter().zip(&perturbation.samples).map(|(a, b)| a + b).collect()
    } else {
        base.samples.iter().enumerate().map(|(i, a)| a + perturbation.evaluate(base.node(i).min(xb))).collect()
    };
    PotentialSpec::new(base.h, samples, base.interpolation)
}

/// `cos(sqrt x)` together with its sparse part `cos(sqrt x) - 1`.
#[derive(Debug, Clone)]
pub struct SlowOscillation {
    pub potential: PotentialSpec,
    pub sparse_part: PotentialSpec,
}

pub fn make_slow_oscillation(x_max: f64, h: f64) -> Result<SlowOscillation> {
    let potential = PotentialSpec::from_fn(x_max, h, Interpolation::PiecewiseConstant, |x| x.sqrt().cos())?;
    let sparse_part = potential.offset_by(-1.0)?;
    Ok(SlowOscillation { potential, sparse_part })
}
