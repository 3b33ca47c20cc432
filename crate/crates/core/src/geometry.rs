//! Geometry of the upper half-plane.
//!
//! Points of the open upper half-plane carry m-function values, logarithmic
//! derivatives and spectral parameters. Separation between two such points is
//! measured by `gamma_separation`, a monotone function of hyperbolic distance.
//! Subsets of the real line are represented by [`IntervalUnion`].

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex number with strictly positive imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlanePoint {
    re: f64,
    im: f64,
}

impl HalfPlanePoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !(im > 0.0) || !re.is_finite() || !im.is_finite() {
            return Err(Error::NotInUpperHalfPlane { re, im });
        }
        Ok(Self { re, im })
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl fmt::Display for HalfPlanePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

/// `|z1 - z2| / (sqrt(Im z1) sqrt(Im z2))`.
pub fn gamma_separation(z1: HalfPlanePoint, z2: HalfPlanePoint) -> f64 {
    let num = (z1.re - z2.re).hypot(z1.im - z2.im);
    num / (z1.im.sqrt() * z2.im.sqrt())
}

/// Hyperbolic distance `D`, related to gamma by `gamma = 2 sinh(D / 2)`.
pub fn hyperbolic_distance(z1: HalfPlanePoint, z2: HalfPlanePoint) -> f64 {
    2.0 * (gamma_separation(z1, z2) / 2.0).asinh()
}

/// Angle subtended at `z` by the set `s`, in `[0, pi]`.
pub fn theta_angle(z: HalfPlanePoint, s: &IntervalUnion) -> f64 {
    let (x, y) = (z.re, z.im);
    let total: f64 = s.intervals().iter().map(|&(lo, hi)| ((hi - x) / y).atan() - ((lo - x) / y).atan()).sum();
    total.clamp(0.0, PI)
}

/// Boundary convention for real points: `pi` on `s`, zero elsewhere.
pub fn theta_boundary(lambda: f64, s: &IntervalUnion) -> f64 {
    if s.contains(lambda) {
        PI
    } else {
        0.0
    }
}

/// Upper bound on `gamma(z1, z3)` given `gamma(z1, z2) < alpha` and
/// `gamma(z2, z3) < beta`, valid for `0 < alpha, beta <= 2`.
pub fn quasi_triangle_bound(alpha: f64, beta: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v > 0.0 && v <= 2.0) {
            return Err(Error::InvalidArgument(format!("{name} = {v} must lie in (0, 2]")));
        }
    }
    Ok(std::f64::consts::SQRT_2 * (alpha + beta))
}

/// Finite disjoint union of real intervals; the first and last interval may be
/// unbounded (`lo = -inf` or `hi = +inf`).
///
/// Endpoints are neither open nor closed: single points carry zero measure and
/// subtend zero angle. `contains` treats endpoints as members.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn real_line() -> Self {
        Self { intervals: vec![(f64::NEG_INFINITY, f64::INFINITY)] }
    }

    /// `(0, inf)`
    pub fn positive_half_line() -> Self {
        Self { intervals: vec![(0.0, f64::INFINITY)] }
    }

    /// `(-inf, 0)`
    pub fn negative_half_line() -> Self {
        Self { intervals: vec![(f64::NEG_INFINITY, 0.0)] }
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::from_intervals([(lo, hi)])
    }

    /// Builds a union from arbitrary (possibly overlapping) intervals. Each
    /// must satisfy `lo < hi`; NaN endpoints are rejected.
    pub fn from_intervals<I>(parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut v: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in parts {
            if lo.is_nan() || hi.is_nan() || !(lo < hi) || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInterval { lo, hi });
            }
            v.push((lo, hi));
        }
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (lo, hi) in v {
            match merged.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn has_minus_infinity_tail(&self) -> bool {
        self.intervals.first().is_some_and(|&(lo, _)| lo == f64::NEG_INFINITY)
    }

    pub fn has_plus_infinity_tail(&self) -> bool {
        self.intervals.last().is_some_and(|&(_, hi)| hi == f64::INFINITY)
    }

    /// Lebesgue measure; infinite when a tail is present.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(lo, hi)| hi - lo).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// `{-x : x in self}`
    pub fn negate(&self) -> Self {
        Self { intervals: self.intervals.iter().rev().map(|&(lo, hi)| (-hi, -lo)).collect() }
    }

    /// `R \ self`
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for &(lo, hi) in &self.intervals {
            if lo > cursor {
                out.push((cursor, lo));
            }
            cursor = hi;
        }
        if cursor < f64::INFINITY {
            out.push((cursor, f64::INFINITY));
        }
        Self { intervals: out }
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_intervals(self.intervals.iter().chain(other.intervals.iter()).copied())
            .expect("union of valid interval sets")
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { intervals: out }
    }

    /// Restriction to `[lo, hi]`.
    pub fn clip(&self, lo: f64, hi: f64) -> Self {
        match Self::interval(lo, hi) {
            Ok(window) => self.intersect(&window),
            Err(_) => Self::empty(),
        }
    }

    /// Smallest and largest endpoint, if any.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }

    /// Parses `"1:2"`, `"-inf:0"`, `"0:1, 2:3"` or the names `R`, `R+`, `R-`,
    /// `empty`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        match t {
            "R" | "real" => return Ok(Self::real_line()),
            "R+" => return Ok(Self::positive_half_line()),
            "R-" => return Ok(Self::negative_half_line()),
            "" | "empty" => return Ok(Self::empty()),
            _ => {}
        }
        let mut parts = Vec::new();
        for piece in t.split(',') {
            let (lo, hi) = piece
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("interval '{piece}' must look like lo:hi")))?;
            parts.push((parse_endpoint(lo)?, parse_endpoint(hi)?));
        }
        Self::from_intervals(parts)
    }
}

fn parse_endpoint(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        other => other.parse::<f64>().map_err(|e| Error::Parse(format!("endpoint '{other}': {e}"))),
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "empty");
        }
        let parts: Vec<String> = self.intervals.iter().map(|(lo, hi)| format!("{lo}:{hi}")).collect();
        write!(f, "{}", parts.join(", "))
    }
}
