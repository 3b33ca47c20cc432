//! Verifiers for the estimates on logarithmic derivatives.
//!
//! Each check computes a left side from the solver and a right side from
//! the displayed bound, and passes when `lhs <= rhs (1 + tol_rel) + tol_abs`.

mod suite;

pub use suite::{
    admissible_potential, draw_seed, random_rectangles, run_suite, write_csv, CheckKind, SuiteOptions, SuiteRow,
};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{gamma_separation, HalfPlanePoint};
use crate::ode::{
    free_log_derivative, free_m, free_solutions, im_ubar_v_integral, log_derivative_at, pair_orbit, propagate,
    sqrt_upper, walk_pair, QuadratureGrid, SolutionPair,
};
use crate::potential::PotentialSpec;

pub const DEFAULT_TOL_REL: f64 = 1e-9;
pub const DEFAULT_TOL_ABS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: DEFAULT_TOL_REL, abs: DEFAULT_TOL_ABS }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheckResult {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub inputs_digest: String,
    pub pass: bool,
}

impl BoundCheckResult {
    pub fn new(lhs: f64, rhs: f64, inputs_digest: String, tol: &Tolerance) -> Self {
        let pass = lhs.is_finite() && rhs >= 0.0 && lhs <= rhs * (1.0 + tol.rel) + tol.abs;
        Self { lhs, rhs, margin: rhs - lhs, inputs_digest, pass }
    }
}

/// Short hex digest of the inputs of a check.
pub fn inputs_digest(check: &str, numbers: &[f64], potentials: &[&PotentialSpec]) -> String {
    let mut h = Sha256::new();
    h.update(check.as_bytes());
    for x in numbers {
        h.update(x.to_le_bytes());
    }
    for p in potentials {
        h.update(p.h().to_le_bytes());
        for s in p.samples() {
            h.update(s.to_le_bytes());
        }
    }
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// `C = sqrt(2) (1/sqrt(2) - 1/sinh(sqrt(2)))^{-1/2}`
pub fn constant_c() -> f64 {
    let r2 = std::f64::consts::SQRT_2;
    r2 * (1.0 / r2 - 1.0 / r2.sinh()).powf(-0.5)
}

/// `C' = 2^{1/4} C`
pub fn constant_c_prime() -> f64 {
    2f64.powf(0.25) * constant_c()
}

/// `sinh(2bL)/(2b) - sin(2aL)/(2a) > (1 - sqrt(2)/sinh(sqrt(2))) sinh(2bL)/(2b)`
pub fn sinh_inequality_holds(a: f64, b: f64, l: f64) -> bool {
    let r2 = std::f64::consts::SQRT_2;
    let sh = (2.0 * b * l).sinh() / (2.0 * b);
    let lhs = sh - (2.0 * a * l).sin() / (2.0 * a);
    lhs > (1.0 - r2 / r2.sinh()) * sh
}

/// Counts violations of the sinh inequality on an `n x n x n` grid with
/// `a, b` in `(0, 3]` and `L` from `1/sqrt|z|` up to `10/sqrt|z|`.
pub fn sinh_inequality_grid(n: usize) -> (usize, usize) {
    let mut checked = 0;
    let mut violations = 0;
    for i in 1..=n {
        let a = 3.0 * i as f64 / n as f64;
        for j in 1..=n {
            let b = 3.0 * j as f64 / n as f64;
            // |z| = a^2 + b^2
            let l0 = 1.0 / (a * a + b * b).sqrt();
            for k in 0..n {
                let l = l0 * (1.0 + 9.0 * k as f64 / (n - 1).max(1) as f64);
                checked += 1;
                if !sinh_inequality_holds(a, b, l) {
                    violations += 1;
                }
            }
        }
    }
    (checked, violations)
}

fn check_z(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::NotInUpperHalfPlane { re: z.re, im: z.im });
    }
    Ok(())
}

fn check_l(z: Complex64, l: f64) -> Result<()> {
    let l_min = 1.0 / z.norm().sqrt();
    if !(l >= l_min) || !l.is_finite() {
        return Err(Error::Precondition(format!("need L >= 1/sqrt|z| = {l_min}, got L = {l}")));
    }
    Ok(())
}

/// Separation of two Dirichlet log-derivatives against the weighted
/// `L^2` mismatch of the potentials.
pub fn check_lemma1(
    v: &PotentialSpec,
    vtilde: &PotentialSpec,
    z: Complex64,
    x: f64,
    grid: &QuadratureGrid,
    tol: &Tolerance,
) -> Result<BoundCheckResult> {
    check_z(z)?;
    if !(x > 0.0) || x > v.x_max().min(vtilde.x_max()) + 1e-12 {
        return Err(Error::Precondition(format!("need 0 < x <= x_max, got x = {x}")));
    }
    let lhs = gamma_separation(log_derivative_at(v, z, x)?, log_derivative_at(vtilde, z, x)?);
    let orbit = pair_orbit(v, vtilde, z, x, grid)?;
    let w = orbit.integrals;
    let rhs = w.mismatch.ratio(&w.tilde_norm).sqrt() / z.im;
    let digest = inputs_digest("lemma1", &[z.re, z.im, x], &[v, vtilde]);
    Ok(BoundCheckResult::new(lhs, rhs, digest, tol))
}

/// Separation from the free log-derivative against `C |z|^{1/4} / Im z`
/// times the `L^2` norm of the potential on `[0, L]`.
pub fn check_lemma2(v: &PotentialSpec, z: Complex64, l: f64, tol: &Tolerance) -> Result<BoundCheckResult> {
    check_z(z)?;
    check_l(z, l)?;
    if l > v.x_max() + 1e-12 {
        return Err(Error::Precondition(format!("L = {l} exceeds x_max = {}", v.x_max())));
    }
    let lhs = gamma_separation(log_derivative_at(v, z, l)?, free_log_derivative(z, l)?);
    let l2 = v.window_norm(0.0, l, 2)?;
    let rhs = constant_c() * z.norm().powf(0.25) / z.im * l2.sqrt();
    let digest = inputs_digest("lemma2", &[z.re, z.im, l], &[v]);
    Ok(BoundCheckResult::new(lhs, rhs, digest, tol))
}

/// The three auxiliary facts about `sqrt z = a + ib`:
/// `Re z >= 0 => b/a <= 1`, `1 + (b/a)^2 <= 4 (1 + (Re z/Im z)^2)`, `b > Im z / (2 sqrt|z|)`.
pub fn lemma3_auxiliary(z: Complex64) -> [bool; 3] {
    let k = sqrt_upper(z);
    let (a, b) = (k.re, k.im);
    let r = b / a;
    [z.re < 0.0 || r <= 1.0, 1.0 + r * r <= 4.0 * (1.0 + (z.re / z.im).powi(2)), b > z.im / (2.0 * z.norm().sqrt())]
}

/// Convergence of the free log-derivative to `i sqrt z`.
pub fn check_lemma3(z: Complex64, l: f64, tol: &Tolerance) -> Result<BoundCheckResult> {
    check_z(z)?;
    check_l(z, l)?;
    let lhs = gamma_separation(free_log_derivative(z, l)?, HalfPlanePoint::from_complex(free_m(z))?);
    let k = sqrt_upper(z);
    let (a, b) = (k.re, k.im);
    let rhs = constant_c_prime() * (1.0 + (b / a).powi(2)).sqrt() / (4.0 * b * l).exp_m1().sqrt();
    let digest = inputs_digest("lemma3", &[z.re, z.im, l], &[]);
    let mut out = BoundCheckResult::new(lhs, rhs, digest, tol);
    out.pass &= lemma3_auxiliary(z).iter().all(|&ok| ok);
    Ok(out)
}

/// Operator norm on two-dimensional `l^2`, from the singular values.
pub fn operator_norm(m: [Complex64; 4]) -> f64 {
    let fro2: f64 = m.iter().map(|e| e.norm_sqr()).sum();
    let det = (m[0] * m[3] - m[1] * m[2]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    (0.5 * (fro2 + disc.sqrt())).sqrt()
}

/// Free transfer matrix `[[u0, v0], [u0', v0']]` and `||A|| = |u0|^2 + |v0|^2`.
fn free_matrix(z: Complex64, x: f64) -> ([Complex64; 4], f64) {
    let [u0, u0p, v0, v0p] = free_solutions(z, x);
    ([u0, v0, u0p, v0p], u0.norm_sqr() + v0.norm_sqr())
}

/// `||M(x) - M0(x)||` on the panel nodes of `[0, n]` against the Gronwall
/// bound `||M0(x)|| (exp(int_0^n |V| ||A||) - 1)`; reports the tightest node
/// over all `z`.
pub fn check_lemma4(
    v: &PotentialSpec,
    k_grid: &[Complex64],
    n: f64,
    grid: &QuadratureGrid,
    tol: &Tolerance,
) -> Result<BoundCheckResult> {
    let mut worst: Option<(f64, f64, f64)> = None;
    for (lhs, rhs) in lemma4_nodes(v, k_grid, n, grid)? {
        let badness = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if worst.is_none_or(|w| badness > w.0) {
            worst = Some((badness, lhs, rhs));
        }
    }
    let (_, lhs, rhs) = worst.expect("non-empty grid");
    let mut numbers = vec![n];
    for z in k_grid {
        numbers.push(z.re);
        numbers.push(z.im);
    }
    let digest = inputs_digest("lemma4", &numbers, &[v]);
    Ok(BoundCheckResult::new(lhs, rhs, digest, tol))
}

/// Largest `||M(x) - M0(x)||` over the panel nodes and the grid.
pub fn max_transfer_deviation(v: &PotentialSpec, k_grid: &[Complex64], n: f64, grid: &QuadratureGrid) -> Result<f64> {
    Ok(lemma4_nodes(v, k_grid, n, grid)?.iter().fold(0.0, |m, p| m.max(p.0)))
}

/// `(||M - M0||, Gronwall bound)` at every panel node for every `z`.
fn lemma4_nodes(v: &PotentialSpec, k_grid: &[Complex64], n: f64, grid: &QuadratureGrid) -> Result<Vec<(f64, f64)>> {
    if k_grid.is_empty() {
        return Err(Error::InvalidArgument("empty z-grid".into()));
    }
    if !(n > 0.0) || n > v.x_max() + 1e-12 {
        return Err(Error::Precondition(format!("need 0 < N <= x_max, got N = {n}")));
    }
    let mut out = Vec::new();
    for &z in k_grid {
        check_z(z)?;
        // M(0) = M0(0) = I
        let mut nodes: Vec<(f64, f64)> = vec![(0.0, 1.0)];
        let mut exponent = 0.0;
        walk_pair(v, v, z, n, SolutionPair::cosine_type(), SolutionPair::dirichlet(), grid, |p| {
            let g = [0, 1, 2].map(|k| free_matrix(z, p.t0 + 0.5 * p.len * k as f64).1 * p.va.abs());
            exponent += p.len / 6.0 * (g[0] + 4.0 * g[1] + g[2]);
            let (su, sv) = (p.a.log_scale.exp(), p.b.log_scale.exp());
            let m = [p.a.f[2] * su, p.b.f[2] * sv, p.a.fp[2] * su, p.b.fp[2] * sv];
            let x = p.t0 + p.len;
            let (m0, _) = free_matrix(z, x);
            let diff = [m[0] - m0[0], m[1] - m0[1], m[2] - m0[2], m[3] - m0[3]];
            nodes.push((operator_norm(diff), operator_norm(m0)));
        })?;
        let growth = exponent.exp_m1();
        out.extend(nodes.into_iter().map(|(lhs, m0_norm)| (lhs, m0_norm * growth)));
    }
    Ok(out)
}

/// Samples of the free quantities entering the constructive `delta_0`.
struct FreeProfile {
    step: f64,
    m0_norm: Vec<f64>,
    uv_abs: Vec<f64>,
    a_sup: f64,
}

impl FreeProfile {
    fn new(z: Complex64, n: f64) -> Self {
        let panels = ((n / 0.005).ceil() as usize).max(2) & !1;
        let step = n / panels as f64;
        let mut m0_norm = Vec::with_capacity(panels + 1);
        let mut uv_abs = Vec::with_capacity(panels + 1);
        let mut a_sup: f64 = 0.0;
        for i in 0..=panels {
            let (m0, a) = free_matrix(z, i as f64 * step);
            m0_norm.push(operator_norm(m0));
            uv_abs.push(m0[0].norm() + m0[1].norm());
            a_sup = a_sup.max(a);
        }
        Self { step, m0_norm, uv_abs, a_sup }
    }

    /// `int_0^N E (|u0| + |v0| + E)` with `E = ||M0|| (e^{delta0 sup||A||} - 1)`,
    /// an upper bound for `|int Im(conj(u) v) - int Im(conj(u0) v0)|`.
    fn perturbation_bound(&self, delta0: f64) -> f64 {
        let g = (delta0 * self.a_sup).exp_m1();
        let n = self.m0_norm.len() - 1;
        let mut s = 0.0;
        for i in 0..=n {
            let e = self.m0_norm[i] * g;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * e * (self.uv_abs[i] + e);
        }
        s * self.step / 3.0
    }
}

/// `sup ||A(t, z)||` over `t` in `[0, n]` and the grid.
pub fn sup_a_norm(k_grid: &[Complex64], n: f64) -> f64 {
    k_grid.iter().map(|&z| FreeProfile::new(z, n).a_sup).fold(0.0, f64::max)
}

/// Largest `delta_0` (by bisection) such that the Gronwall perturbation bound
/// stays below `slack(z)` for every `z` in the grid.
pub fn gronwall_delta0<F>(k_grid: &[Complex64], n: f64, slack: F) -> Result<f64>
where
    F: Fn(Complex64) -> Result<f64>,
{
    let mut profiles = Vec::with_capacity(k_grid.len());
    for &z in k_grid {
        check_z(z)?;
        let s = slack(z)?;
        if !(s > 0.0) {
            return Err(Error::SearchLimit(format!("no room for a perturbation at z = {z} (slack {s})")));
        }
        profiles.push((FreeProfile::new(z, n), s));
    }
    let ok = |d: f64| profiles.iter().all(|(p, s)| p.perturbation_bound(d) < *s);
    let mut hi = 1.0;
    while ok(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(hi);
        }
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !(lo > 0.0) {
        return Err(Error::SearchLimit("delta_0 bisection collapsed to zero".into()));
    }
    Ok(lo)
}

/// `delta_0` with `|int Im(conj(u) v) - int Im(conj(u0) v0)| < epsilon` on `[0, n]`
/// whenever `int_0^n |V| < delta_0`.
pub fn lemma4_delta0(k_grid: &[Complex64], n: f64, epsilon: f64) -> Result<f64> {
    gronwall_delta0(k_grid, n, |_| Ok(epsilon))
}

/// Checks the corollary inequality for one potential: the largest change of
/// `int_0^n Im(conj(u) v)` over the grid against `epsilon`.
pub fn check_lemma4_corollary(
    v: &PotentialSpec,
    k_grid: &[Complex64],
    n: f64,
    epsilon: f64,
    grid: &QuadratureGrid,
    tol: &Tolerance,
) -> Result<BoundCheckResult> {
    let zero = PotentialSpec::zero(v.x_max(), v.h())?;
    let mut lhs: f64 = 0.0;
    for &z in k_grid {
        let i = im_ubar_v_integral(v, z, n, grid)?;
        let i0 = im_ubar_v_integral(&zero, z, n, grid)?;
        lhs = lhs.max((i - i0).abs());
    }
    let mut numbers = vec![n, epsilon];
    for z in k_grid {
        numbers.push(z.re);
        numbers.push(z.im);
    }
    let digest = inputs_digest("lemma4_corollary", &numbers, &[v]);
    // the corollary is strict
    let mut out = BoundCheckResult::new(lhs, epsilon, digest, tol);
    out.pass &= lhs < epsilon;
    Ok(out)
}

/// Uniform grid of `nx x ny` points over `[re0, re1] x [im0, im1]`.
pub fn z_grid(re: (f64, f64), im: (f64, f64), nx: usize, ny: usize) -> Vec<Complex64> {
    let at = |lo: f64, hi: f64, i: usize, n: usize| {
        if n <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    };
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push(Complex64::new(at(re.0, re.1, i, nx), at(im.0, im.1, j, ny)));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem1Search {
    pub epsilon: f64,
    pub n: f64,
    pub delta0: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub n_step: f64,
    pub n_max: f64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { n_step: 0.25, n_max: 200.0 }
    }
}

fn inequality2_lhs(z: Complex64, n: f64) -> f64 {
    let k = sqrt_upper(z);
    constant_c_prime() * (1.0 + (k.im / k.re).powi(2)).sqrt() / (4.0 * k.im * n).exp_m1().sqrt()
}

/// Constructs `(delta, N)`: the smallest `N` on
/// the search lattice satisfying the three inequalities for every grid `z`,
/// then `delta_0` from the Gronwall bound, then `delta` from `N delta < delta_0^2`
/// and `C |z|^{1/4} sqrt(delta) / Im z < epsilon / 6`.
pub fn theorem1_search(
    epsilon: f64,
    k_grid: &[Complex64],
    limits: &SearchLimits,
    grid: &QuadratureGrid,
) -> Result<Theorem1Search> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if k_grid.is_empty() {
        return Err(Error::InvalidArgument("empty z-grid".into()));
    }
    for &z in k_grid {
        check_z(z)?;
    }
    let zero = PotentialSpec::zero(limits.n_max, 0.5)?;
    let mut n = limits.n_step;
    let found = loop {
        if n > limits.n_max {
            return Err(Error::SearchLimit(format!("no N <= {} satisfies the recipe", limits.n_max)));
        }
        let mut all = true;
        for &z in k_grid {
            let cond3 = n > 1.0 / z.norm().sqrt();
            let cond2 = inequality2_lhs(z, n) < epsilon / 6.0;
            if !(cond2 && cond3) {
                all = false;
                break;
            }
            let cond1 = im_ubar_v_integral(&zero, z, n, grid)? > 12.0 / (epsilon * z.im);
            if !cond1 {
                all = false;
                break;
            }
        }
        if all {
            break n;
        }
        n += limits.n_step;
    };
    let delta0 =
        gronwall_delta0(k_grid, found, |z| Ok(im_ubar_v_integral(&zero, z, found, grid)? - 6.0 / (epsilon * z.im)))?;
    let c = constant_c();
    let from_lemma2 =
        k_grid.iter().map(|z| (epsilon * z.im / (6.0 * c * z.norm().powf(0.25))).powi(2)).fold(f64::INFINITY, f64::min);
    let delta = 0.99 * (delta0 * delta0 / found).min(from_lemma2);
    Ok(Theorem1Search { epsilon, n: found, delta0, delta })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub search: Theorem1Search,
    /// Worst `gamma(-f'(L)/f(L), i sqrt z)` against `epsilon`.
    pub result: BoundCheckResult,
    /// Whether the three `epsilon/6` separations held individually everywhere.
    pub sub_inequalities_hold: bool,
    pub evaluations: usize,
}

/// Verifies the uniform estimate for one admissible potential: every `z`
/// in the grid, every `L` in `{N, 2N, 4N}`, the Dirichlet solution and each
/// solution with `-f'(0)/f(0)` in `seeds`.
pub fn check_theorem1(
    v: &PotentialSpec,
    k_grid: &[Complex64],
    search: &Theorem1Search,
    seeds: &[HalfPlanePoint],
    tol: &Tolerance,
) -> Result<Theorem1Report> {
    let eps = search.epsilon;
    let ladder = [search.n, 2.0 * search.n, 4.0 * search.n];
    let l_top = ladder[2];
    if v.x_max() + 1e-9 < l_top {
        return Err(Error::Precondition(format!("potential must cover [0, {l_top}]")));
    }
    let mass = v.window_norm(0.0, l_top, 2)?;
    if !(mass < search.delta) {
        return Err(Error::Precondition(format!("int V^2 = {mass} is not below delta = {}", search.delta)));
    }
    let mut worst: f64 = 0.0;
    let mut subs = true;
    let mut evaluations = 0;
    for &z in k_grid {
        check_z(z)?;
        let target = HalfPlanePoint::from_complex(free_m(z))?;
        let mut starts = vec![SolutionPair::dirichlet()];
        for s in seeds {
            starts.push(SolutionPair::with_log_derivative(-s.to_complex())?);
        }
        for &l in &ladder {
            let w_v = log_derivative_at(v, z, l)?;
            let w_v0 = free_log_derivative(z, l)?;
            subs &= gamma_separation(w_v, w_v0) < eps / 6.0;
            subs &= gamma_separation(w_v0, target) < eps / 6.0;
            for st in &starts {
                let s = propagate(v, z, 0.0, l, *st)?;
                let w = HalfPlanePoint::from_complex(-s.log_derivative())?;
                worst = worst.max(gamma_separation(w, target));
                subs &= gamma_separation(w, w_v) < eps / 6.0;
                evaluations += 1;
            }
        }
    }
    let mut numbers = vec![eps, search.n, search.delta];
    for z in k_grid {
        numbers.push(z.re);
        numbers.push(z.im);
    }
    for s in seeds {
        numbers.push(s.re());
        numbers.push(s.im());
    }
    let digest = inputs_digest("theorem1", &numbers, &[v]);
    let mut result = BoundCheckResult::new(worst, eps, digest, tol);
    result.pass &= worst < eps;
    Ok(Theorem1Report { search: *search, result, sub_inequalities_hold: subs, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Interpolation;

    fn rect(x_max: f64, lo: f64, hi: f64, height: f64) -> PotentialSpec {
        PotentialSpec::from_fn(x_max, 0.05, Interpolation::PiecewiseConstant, |x| {
            if x >= lo - 1e-9 && x < hi - 1e-9 {
                height
            } else {
                0.0
            }
        })
        .unwrap()
    }

    #[test]
    fn constants_are_below_the_stated_values() {
        let c = constant_c();
        assert!((c - 3.2416).abs() < 1e-3 && c < 3.3, "{c}");
        assert!(constant_c_prime() < 3.9);
        assert!((constant_c_prime() / c - 2f64.powf(0.25)).abs() < 1e-15);
    }

    #[test]
    fn sinh_inequality_on_a_dense_grid() {
        let (checked, bad) = sinh_inequality_grid(22);
        assert!(checked >= 10_000);
        assert_eq!(bad, 0);
    }

    #[test]
    fn lemma1_identical_and_bounded() {
        let v = rect(10.0, 2.0, 4.0, 1.5);
        let w = rect(10.0, 3.0, 6.0, -0.7);
        let z = Complex64::new(0.4, 0.6);
        let tol = Tolerance::default();
        let same = check_lemma1(&v, &v, z, 8.0, &QuadratureGrid::default(), &tol).unwrap();
        assert!(same.pass && same.lhs < 1e-12 && same.rhs == 0.0);
        let r = check_lemma1(&v, &w, z, 8.0, &QuadratureGrid::default(), &tol).unwrap();
        assert!(r.pass && r.margin > 0.0);
        // sup-norm corollary
        assert!(r.lhs <= (1.5 + 0.7) / z.im);
    }

    #[test]
    fn lemma2_examples() {
        let tol = Tolerance::default();
        let z = Complex64::new(0.0, 1.0);
        let zero = PotentialSpec::zero(6.0, 0.05).unwrap();
        let r = check_lemma2(&zero, z, 5.0, &tol).unwrap();
        assert!(r.pass && r.lhs < 1e-12);
        let v = rect(6.0, 1.0, 2.0, 0.3);
        let r = check_lemma2(&v, z, 5.0, &tol).unwrap();
        assert!(r.pass && r.margin > 0.0);
        assert!(check_lemma2(&v, Complex64::new(0.01, 0.01), 5.0, &tol).is_err());
    }

    #[test]
    fn lemma2_rhs_scales_like_the_square_root_of_the_mass() {
        let tol = Tolerance::default();
        let z = Complex64::new(1.0, 0.5);
        let v = rect(6.0, 1.0, 2.0, 0.8);
        let base = check_lemma2(&v, z, 5.0, &tol).unwrap().rhs;
        for &t in &[0.25, 0.5, 1.0] {
            let r = check_lemma2(&v.scaled(t).unwrap(), z, 5.0, &tol).unwrap();
            assert!((r.rhs - t * base).abs() < 1e-12 * base);
        }
    }

    #[test]
    fn lemma3_closed_form_behaviour() {
        let tol = Tolerance::default();
        let z = Complex64::new(0.0, 1.0);
        let r = check_lemma3(z, 3.0, &tol).unwrap();
        assert!(r.pass);
        // the left side decreases and approaches 2 sqrt|z| e^{-2bL} / a
        let k = sqrt_upper(z);
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let l = 1.0 + 0.5 * i as f64;
            let r = check_lemma3(z, l, &tol).unwrap();
            assert!(r.pass && r.lhs < prev);
            prev = r.lhs;
            if l > 10.0 {
                let asym = 2.0 * z.norm().sqrt() / k.re * (-2.0 * k.im * l).exp();
                assert!((r.lhs / asym - 1.0).abs() < 1e-3);
            }
        }
        let l0 = 1.0 / z.norm().sqrt();
        assert!(check_lemma3(z, l0, &tol).unwrap().pass);
        assert!(check_lemma3(z, 0.9 * l0, &tol).is_err());
    }

    #[test]
    fn lemma3_uniform_on_a_compact_set() {
        let tol = Tolerance::default();
        let k = z_grid((-1.0, 1.0), (0.5, 1.5), 5, 5);
        let worst = |l: f64| k.iter().map(|&z| check_lemma3(z, l, &tol).unwrap().lhs).fold(0.0, f64::max);
        let (a, b, c) = (worst(3.0), worst(10.0), worst(30.0));
        assert!(a > b && b > c && c < 1e-5, "{a} {b} {c}");
    }

    #[test]
    fn operator_norm_matches_known_matrices() {
        let c = |x: f64, y: f64| Complex64::new(x, y);
        assert!((operator_norm([c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-2.0, 0.0)]) - 3.0).abs() < 1e-14);
        // rank one: |x| |y|
        let m = [c(1.0, 1.0), c(2.0, 0.0), c(0.5, 0.5), c(1.0, 0.0)];
        let want = (2.0f64 + 4.0).sqrt() * (1.0f64 + 0.25).sqrt();
        assert!((operator_norm(m) - want).abs() < 1e-12);
    }

    #[test]
    fn lemma4_zero_and_scaling() {
        let tol = Tolerance::default();
        let k = z_grid((1.0, 2.0), (0.5, 1.0), 2, 2);
        let zero = PotentialSpec::zero(5.0, 0.05).unwrap();
        let r = check_lemma4(&zero, &k, 5.0, &QuadratureGrid::default(), &tol).unwrap();
        assert!(r.pass && r.lhs < 1e-12);
        let v = rect(5.0, 1.0, 2.5, 0.4);
        let mut prev = f64::INFINITY;
        for &t in &[1.0, 0.5, 0.25] {
            let vt = v.scaled(t).unwrap();
            assert!(check_lemma4(&vt, &k, 5.0, &QuadratureGrid::default(), &tol).unwrap().pass);
            let lhs_max = max_transfer_deviation(&vt, &k, 5.0, &QuadratureGrid::default()).unwrap();
            assert!(lhs_max <= prev);
            prev = lhs_max;
        }
    }

    #[test]
    fn delta0_is_monotone_in_epsilon() {
        let k = z_grid((1.0, 2.0), (0.5, 1.0), 3, 3);
        let d1 = lemma4_delta0(&k, 5.0, 0.1).unwrap();
        let d2 = lemma4_delta0(&k, 5.0, 0.01).unwrap();
        assert!(d2 < d1 && d2 > 0.0);
    }
}
