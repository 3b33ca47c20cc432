//! Experiment configuration files.
//!
//! The format is sectioned `key = value` text (a TOML subset): strings are
//! quoted, lists use brackets. Unknown keys are rejected so a typo never
//! silently falls back to a default.
//!
//! ```text
//! [potential]
//! kind = "bump_train"      # bump_train | file | zero | slow_oscillation
//! height = 5.0
//! ...
//! [windows]
//! source = "generator"     # generator | list | scan
//! [experiment]
//! a = "1:2"
//! s = "0:inf"
//! d_ladder = [0.1, 0.01, 0.001]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::experiments::{sliding_window_scan, ExperimentConfig};
use crate::geometry::IntervalUnion;
use crate::potential::{
    make_slow_oscillation, BumpShape, BumpTrain, Interpolation, PotentialSpec, SparseWindowSequence,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    potential: RawPotential,
    #[serde(default)]
    windows: RawWindows,
    experiment: RawExperiment,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
enum RawPotential {
    BumpTrain {
        height: f64,
        width: f64,
        growth: f64,
        count: usize,
        first_gap: Option<f64>,
        h: Option<f64>,
        #[serde(default)]
        shape: RawShape,
    },
    File {
        path: PathBuf,
        #[serde(default)]
        interpolation: RawInterpolation,
    },
    Zero {
        x_max: f64,
        h: f64,
    },
    SlowOscillation {
        x_max: f64,
        h: f64,
        /// Use `cos(sqrt x) - 1` instead of `cos(sqrt x)`.
        #[serde(default)]
        sparse_part: bool,
    },
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawShape {
    #[default]
    Rectangular,
    RaisedCosine,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RawInterpolation {
    #[default]
    Constant,
    Linear,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWindows {
    /// `generator` (the bump-train gaps), `list` or `scan`.
    source: Option<String>,
    intervals: Option<Vec<[f64; 2]>>,
    window_length: Option<f64>,
    delta: Option<f64>,
    mass_tol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    a: String,
    s: String,
    d_ladder: Option<Vec<f64>>,
    k_range: Option<[usize; 2]>,
    corollary_a: Option<String>,
    half_window_delta: Option<f64>,
    sampling_points: Option<usize>,
    max_refinements: Option<u32>,
    quad_tol: Option<f64>,
}

/// A parsed configuration: the window sweep and, optionally, the
/// negative-spectrum run on the same potential and windows.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub theorem2: ExperimentConfig,
    pub corollary2: Option<ExperimentConfig>,
}

fn parse_set(text: &str, key: &str) -> Result<IntervalUnion> {
    IntervalUnion::parse(text).map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn build_potential(raw: &RawPotential, base_dir: &Path) -> Result<(PotentialSpec, Option<SparseWindowSequence>)> {
    match raw {
        RawPotential::BumpTrain { height, width, growth, count, first_gap, h, shape } => {
            let mut p = BumpTrain::new(*height, *width, *growth, *count);
            if let Some(g) = first_gap {
                p.first_gap = *g;
            }
            if let Some(h) = h {
                p.h = *h;
            }
            p.shape = match shape {
                RawShape::Rectangular => BumpShape::Rectangular,
                RawShape::RaisedCosine => BumpShape::RaisedCosine,
            };
            let (v, w) = p.generate()?;
            Ok((v, Some(w)))
        }
        RawPotential::File { path, interpolation } => {
            let interp = match interpolation {
                RawInterpolation::Constant => Interpolation::PiecewiseConstant,
                RawInterpolation::Linear => Interpolation::PiecewiseLinear,
            };
            let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
            Ok((PotentialSpec::read_csv(&full, interp)?, None))
        }
        RawPotential::Zero { x_max, h } => Ok((PotentialSpec::zero(*x_max, *h)?, None)),
        RawPotential::SlowOscillation { x_max, h, sparse_part } => {
            let s = make_slow_oscillation(*x_max, *h)?;
            Ok((if *sparse_part { s.sparse_part } else { s.potential }, None))
        }
    }
}

fn build_windows(
    raw: &RawWindows,
    v: &PotentialSpec,
    generated: Option<SparseWindowSequence>,
) -> Result<SparseWindowSequence> {
    let source = raw.source.as_deref().unwrap_or(if generated.is_some() { "generator" } else { "list" });
    match source {
        "generator" => {
            generated.ok_or_else(|| Error::Parse("windows.source = \"generator\" needs a bump_train potential".into()))
        }
        "list" => {
            let list = raw.intervals.as_ref().ok_or_else(|| Error::Parse("windows.intervals is required".into()))?;
            SparseWindowSequence::new(list.iter().map(|w| (w[0], w[1])).collect())
        }
        "scan" => {
            let length = raw.window_length.ok_or_else(|| Error::Parse("windows.window_length is required".into()))?;
            let delta = raw.delta.ok_or_else(|| Error::Parse("windows.delta is required".into()))?;
            sliding_window_scan(v, length, delta)
        }
        other => Err(Error::Parse(format!("unknown windows.source '{other}'"))),
    }
}

impl ExperimentPlan {
    /// Parses configuration text; relative potential paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let (potential, generated) = build_potential(&raw.potential, base_dir)?;
        let windows = build_windows(&raw.windows, &potential, generated)?;
        let e = &raw.experiment;
        let mut cfg = ExperimentConfig::new(potential, windows, parse_set(&e.a, "a")?, parse_set(&e.s, "s")?);
        if let Some(d) = &e.d_ladder {
            cfg.d_ladder = d.clone();
        }
        cfg.k_range = e.k_range.map(|[lo, hi]| (lo, hi));
        if let Some(t) = raw.windows.mass_tol {
            cfg.mass_tol = t;
        }
        if let Some(t) = e.half_window_delta {
            cfg.half_window_delta = t;
        }
        if let Some(n) = e.sampling_points {
            cfg.sampling.points = n;
        }
        if let Some(n) = e.max_refinements {
            cfg.sampling.max_refinements = n;
        }
        if let Some(t) = e.quad_tol {
            cfg.quad.abs_tol = t;
        }
        let corollary2 = match &e.corollary_a {
            Some(text) => {
                let mut c = cfg.clone();
                c.a_set = parse_set(text, "corollary_a")?;
                c.s_set = IntervalUnion::negative_half_line();
                Some(c)
            }
            None => None,
        };
        Ok(Self { theorem2: cfg, corollary2 })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUMP: &str = r#"
[potential]
kind = "bump_train"
height = 5.0
width = 1.0
growth = 2.0
count = 3
first_gap = 20.0

[experiment]
a = "1:2"
s = "0:inf"
d_ladder = [0.1, 0.01]
corollary_a = "-2:-1"
"#;

    #[test]
    fn bump_train_config() {
        let plan = ExperimentPlan::parse(BUMP, Path::new(".")).unwrap();
        assert_eq!(plan.theorem2.windows.len(), 3);
        assert_eq!(plan.theorem2.d_ladder, vec![0.1, 0.01]);
        let c = plan.corollary2.unwrap();
        assert_eq!(c.s_set, IntervalUnion::negative_half_line());
        assert_eq!(c.a_set.measure(), 1.0);
    }

    #[test]
    fn list_and_scan_windows() {
        let text = r#"
[potential]
kind = "zero"
x_max = 100.0
h = 0.5
[windows]
source = "list"
intervals = [[0.0, 10.0], [20.0, 50.0]]
[experiment]
a = "1:2"
s = "R+"
"#;
        let plan = ExperimentPlan::parse(text, Path::new(".")).unwrap();
        assert_eq!(plan.theorem2.windows.windows(), &[(0.0, 10.0), (20.0, 50.0)]);
        let scan = text
            .replace("source = \"list\"", "source = \"scan\"\nwindow_length = 5.0\ndelta = 0.1")
            .replace("intervals = [[0.0, 10.0], [20.0, 50.0]]\n", "");
        let plan = ExperimentPlan::parse(&scan, Path::new(".")).unwrap();
        assert_eq!(plan.theorem2.windows.windows(), &[(0.0, 100.0)]);
    }

    #[test]
    fn rejects_bad_text() {
        assert!(matches!(ExperimentPlan::parse("[potential\nkind=", Path::new(".")), Err(Error::Parse(_))));
        let typo = BUMP.replace("height", "heigth");
        assert!(matches!(ExperimentPlan::parse(&typo, Path::new(".")), Err(Error::Parse(_))));
        let bad_set = BUMP.replace("\"1:2\"", "\"1:\"");
        assert!(matches!(ExperimentPlan::parse(&bad_set, Path::new(".")), Err(Error::Parse(_))));
        let missing_file = "[potential]\nkind = \"file\"\npath = \"nope.csv\"\n[windows]\nintervals = [[0.0, 1.0]]\n[experiment]\na = \"1:2\"\ns = \"R\"\n";
        assert!(matches!(ExperimentPlan::parse(missing_file, Path::new("/nonexistent")), Err(Error::Io(_))));
    }
}
