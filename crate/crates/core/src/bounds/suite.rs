//! Seeded randomized draws for every verifier, with CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{
    check_lemma1, check_lemma2, check_lemma3, check_lemma4, check_theorem1, sup_a_norm, theorem1_search, z_grid,
    BoundCheckResult, SearchLimits, Theorem1Search, Tolerance,
};
use crate::error::{Error, Result};
use crate::geometry::HalfPlanePoint;
use crate::ode::QuadratureGrid;
use crate::potential::{Interpolation, PotentialSpec};

const GRID_H: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    Lemma1,
    Lemma2,
    Lemma3,
    Lemma4,
    Theorem1,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] =
        [CheckKind::Lemma1, CheckKind::Lemma2, CheckKind::Lemma3, CheckKind::Lemma4, CheckKind::Theorem1];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Lemma1 => "lemma1",
            CheckKind::Lemma2 => "lemma2",
            CheckKind::Lemma3 => "lemma3",
            CheckKind::Lemma4 => "lemma4",
            CheckKind::Theorem1 => "theorem1",
        }
    }

    /// Parses a check name; `all` expands to every check.
    pub fn parse_list(text: &str) -> Result<Vec<CheckKind>> {
        if text.trim() == "all" {
            return Ok(Self::ALL.to_vec());
        }
        text.split(',').map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.iter().copied().find(|k| k.name() == s).ok_or_else(|| Error::Parse(format!("unknown check '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub draws: usize,
    pub seed: u64,
    pub tol: Tolerance,
    pub grid: QuadratureGrid,
    /// Target accuracy for the `theorem1` draws.
    pub epsilon: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { draws: 100, seed: 0, tol: Tolerance::default(), grid: QuadratureGrid::default(), epsilon: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub check: CheckKind,
    /// Seed of the generator that produced this draw.
    pub seed: u64,
    pub result: BoundCheckResult,
}

/// Seed of draw `index` of `check` under the suite seed.
pub fn draw_seed(seed: u64, check: CheckKind, index: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(check.name().as_bytes());
    h.update((index as u64).to_le_bytes());
    let bytes = h.finalize();
    u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes"))
}

/// Piecewise-constant potential made of `count` random rectangles.
pub fn random_rectangles(rng: &mut ChaCha8Rng, x_max: f64, count: usize, height: f64) -> Result<PotentialSpec> {
    let mut rects = Vec::with_capacity(count);
    for _ in 0..count {
        let lo = rng.gen_range(0.0..x_max);
        let len = rng.gen_range(0.1..(x_max / 2.0).max(0.2));
        let v = rng.gen_range(-height..height);
        rects.push((lo, lo + len, v));
    }
    PotentialSpec::from_fn(x_max, GRID_H, Interpolation::PiecewiseConstant, |x| {
        rects.iter().filter(|r| x >= r.0 && x < r.1).map(|r| r.2).sum()
    })
}

fn random_z(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.2..2.0))
}

fn theorem1_grid() -> Vec<Complex64> {
    z_grid((1.0, 2.0), (0.5, 1.0), 5, 5)
}

/// One admissible potential on `[0, 4N]` with `int V^2` a random fraction of `delta`.
pub fn admissible_potential(rng: &mut ChaCha8Rng, search: &Theorem1Search) -> Result<PotentialSpec> {
    let x_max = 4.0 * search.n;
    let count = rng.gen_range(1..5);
    let raw = random_rectangles(rng, x_max, count, 1.0)?;
    let mass = raw.window_norm(0.0, x_max, 2)?;
    let target = rng.gen_range(0.2..0.95) * search.delta;
    if mass == 0.0 {
        return Ok(raw);
    }
    raw.scaled((target / mass).sqrt())
}

fn random_seeds(rng: &mut ChaCha8Rng, count: usize) -> Result<Vec<HalfPlanePoint>> {
    (0..count).map(|_| HalfPlanePoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0))).collect()
}

fn draw(check: CheckKind, seed: u64, opts: &SuiteOptions, search: Option<&Theorem1Search>) -> Result<BoundCheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = &opts.tol;
    match check {
        CheckKind::Lemma1 => {
            let x_max = rng.gen_range(2.0..20.0);
            let (nv, nt) = (rng.gen_range(1..5), rng.gen_range(1..5));
            let v = random_rectangles(&mut rng, x_max, nv, 3.0)?;
            let vt = random_rectangles(&mut rng, x_max, nt, 3.0)?;
            let z = random_z(&mut rng);
            let x = rng.gen_range(0.1..1.0) * v.x_max();
            check_lemma1(&v, &vt, z, x, &opts.grid, tol)
        }
        CheckKind::Lemma2 => {
            let z = random_z(&mut rng);
            let l_min = 1.0 / z.norm().sqrt();
            let l = if rng.gen_bool(0.1) { l_min } else { l_min + rng.gen_range(0.0..20.0) };
            let count = rng.gen_range(1..4);
            // rectangles inside [0, L] so that the mass is rarely zero
            let v = random_rectangles(&mut rng, l, count, 2.0)?;
            check_lemma2(&v, z, v.x_max().max(l_min), tol)
        }
        CheckKind::Lemma3 => {
            let z = random_z(&mut rng);
            let l_min = 1.0 / z.norm().sqrt();
            let l = if rng.gen_bool(0.1) { l_min } else { l_min * rng.gen_range(1.0..6.0) };
            check_lemma3(z, l, tol)
        }
        CheckKind::Lemma4 => {
            let n = rng.gen_range(1.0..15.0);
            let count = rng.gen_range(1..4);
            let raw = random_rectangles(&mut rng, n, count, 1.0)?;
            let re = rng.gen_range(-2.0..2.0);
            let im = rng.gen_range(0.3..1.5);
            let k = z_grid((re, re + 0.5), (im, im + 0.5), 2, 2);
            // keep the Gronwall exponent int |V| sup||A|| in a range where the bound is not vacuous
            let l1 = raw.window_norm(0.0, raw.x_max(), 1)?;
            let exponent = rng.gen_range(0.01..2.0);
            let v = if l1 > 0.0 { raw.scaled(exponent / (l1 * sup_a_norm(&k, raw.x_max())))? } else { raw };
            check_lemma4(&v, &k, v.x_max(), &opts.grid, tol)
        }
        CheckKind::Theorem1 => {
            let search = search.ok_or_else(|| Error::InvalidArgument("theorem1 draws need a search".into()))?;
            let v = admissible_potential(&mut rng, search)?;
            let seeds = random_seeds(&mut rng, 2)?;
            Ok(check_theorem1(&v, &theorem1_grid(), search, &seeds, tol)?.result)
        }
    }
}

/// Runs `opts.draws` seeded draws of every requested check. Rows come out
/// in check order, then draw order, whatever the scheduling.
pub fn run_suite(checks: &[CheckKind], opts: &SuiteOptions) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for &check in checks {
        let search = if check == CheckKind::Theorem1 {
            Some(theorem1_search(opts.epsilon, &theorem1_grid(), &SearchLimits::default(), &opts.grid)?)
        } else {
            None
        };
        let part: Vec<SuiteRow> = (0..opts.draws)
            .into_par_iter()
            .map(|i| {
                let seed = draw_seed(opts.seed, check, i);
                let result = draw(check, seed, opts, search.as_ref())?;
                Ok(SuiteRow { check, seed, result })
            })
            .collect::<Result<_>>()?;
        rows.extend(part);
    }
    Ok(rows)
}

/// Writes `check,seed,lhs,rhs,margin,pass` rows.
pub fn write_csv<W: Write>(out: &mut W, rows: &[SuiteRow]) -> Result<()> {
    writeln!(out, "check,seed,lhs,rhs,margin,pass")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{:.16e},{:.16e},{:.16e},{}",
            r.check, r.seed, r.result.lhs, r.result.rhs, r.result.margin, r.result.pass
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_check_lists() {
        assert_eq!(CheckKind::parse_list("all").unwrap().len(), 5);
        assert_eq!(CheckKind::parse_list("lemma3").unwrap(), vec![CheckKind::Lemma3]);
        assert!(CheckKind::parse_list("lemma9").is_err());
    }

    #[test]
    fn draws_are_reproducible() {
        let opts = SuiteOptions { draws: 5, seed: 7, ..SuiteOptions::default() };
        let a = run_suite(&[CheckKind::Lemma1, CheckKind::Lemma3], &opts).unwrap();
        let b = run_suite(&[CheckKind::Lemma1, CheckKind::Lemma3], &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.result.pass));
        let mut buf = Vec::new();
        write_csv(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("check,seed,lhs,rhs,margin,pass\n"));
        assert_eq!(text.lines().count(), 11);
        assert_ne!(draw_seed(7, CheckKind::Lemma1, 0), draw_seed(7, CheckKind::Lemma1, 1));
    }
}
