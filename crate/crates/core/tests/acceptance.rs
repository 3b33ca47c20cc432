//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weylvd::bounds::{
    admissible_potential, check_lemma4_corollary, check_theorem1, constant_c, constant_c_prime, lemma4_delta0,
    random_rectangles, run_suite, sinh_inequality_grid, theorem1_search, z_grid, CheckKind, SearchLimits, SuiteOptions,
    Tolerance,
};
use weylvd::config::ExperimentPlan;
use weylvd::experiments::{non_increasing_from, run_corollary2, run_theorem2};
use weylvd::geometry::{gamma_separation, quasi_triangle_bound};
use weylvd::ode::{free_m, QuadratureGrid};
use weylvd::quad::QuadPolicy;
use weylvd::value_dist::herglotz_value_distribution;
use weylvd::{m_function, HalfPlanePoint, IntervalUnion, MFunctionRequest, PotentialSpec};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn k_box() -> Vec<Complex64> {
    z_grid((1.0, 2.0), (0.5, 1.0), 5, 5)
}

fn suite_passes(check: CheckKind, draws: usize, seed: u64) -> Result<(usize, usize), String> {
    let opts = SuiteOptions { draws, seed, ..SuiteOptions::default() };
    let rows = run_suite(&[check], &opts).map_err(|e| e.to_string())?;
    Ok((rows.iter().filter(|r| r.result.pass).count(), rows.len()))
}

fn bump_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/bump_train.cfg")
}

fn criterion1() -> Outcome {
    let t = Instant::now();
    let v = PotentialSpec::zero(100.0, 0.05).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for z in z_grid((-2.0, 2.0), (0.5, 2.0), 5, 5) {
        let m = m_function(&MFunctionRequest::new(&v, 0.0, z)).map_err(|e| e.to_string())?;
        let free = HalfPlanePoint::from_complex(free_m(z)).map_err(|e| e.to_string())?;
        worst = worst.max(gamma_separation(m, free));
    }
    let el = t.elapsed();
    Ok((worst < 1e-7 && el < Duration::from_secs(1), format!("max gamma {worst:.2e} (< 1e-7), {el:.2?} (< 1 s)")))
}

fn criterion2() -> Outcome {
    let t = Instant::now();
    let (ok, n) = suite_passes(CheckKind::Lemma1, 100, 2)?;
    let el = t.elapsed();
    Ok((ok == n && n == 100 && el < Duration::from_secs(30), format!("{ok}/{n} draws pass, {el:.2?} (< 30 s)")))
}

fn criterion3() -> Outcome {
    let (ok2, n2) = suite_passes(CheckKind::Lemma2, 100, 3)?;
    let (ok3, n3) = suite_passes(CheckKind::Lemma3, 100, 3)?;
    let (c, cp) = (constant_c(), constant_c_prime());
    let (checked, bad) = sinh_inequality_grid(22);
    let pass = ok2 == n2 && ok3 == n3 && n2 == 100 && n3 == 100 && c < 3.3 && cp < 3.9 && checked >= 10_000 && bad == 0;
    Ok((
        pass,
        format!(
            "lemma2 {ok2}/{n2}, lemma3 {ok3}/{n3}, C = {c:.5}, C' = {cp:.5}, sinh grid {bad} violations of {checked}"
        ),
    ))
}

fn criterion4() -> Outcome {
    let (ok, n) = suite_passes(CheckKind::Lemma4, 50, 4)?;
    let grid = QuadratureGrid::default();
    let k = k_box();
    let search = theorem1_search(0.1, &k, &SearchLimits::default(), &grid).map_err(|e| e.to_string())?;
    let n_len = search.n;
    let delta0 = lemma4_delta0(&k, n_len, 0.1).map_err(|e| e.to_string())?;
    let mut valid = 0;
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + i);
        let count = rng.gen_range(1..5);
        let raw = random_rectangles(&mut rng, n_len, count, 1.0).map_err(|e| e.to_string())?;
        let l1 = raw.window_norm(0.0, n_len, 1).map_err(|e| e.to_string())?;
        let frac = rng.gen_range(0.2..0.95);
        let v = if l1 > 0.0 { raw.scaled(frac * delta0 / l1).map_err(|e| e.to_string())? } else { raw };
        let r = check_lemma4_corollary(&v, &k, n_len, 0.1, &grid, &Tolerance::default()).map_err(|e| e.to_string())?;
        valid += usize::from(r.pass);
    }
    Ok((
        ok == n && n == 50 && delta0 > 0.0 && valid == 20,
        format!("{ok}/{n} draws pass; delta0 = {delta0:.3e} at N = {n_len}; corollary holds for {valid}/20 potentials"),
    ))
}

fn criterion5() -> Outcome {
    let t = Instant::now();
    let k = k_box();
    let search =
        theorem1_search(0.1, &k, &SearchLimits::default(), &QuadratureGrid::default()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for i in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i);
        let v = admissible_potential(&mut rng, &search).map_err(|e| e.to_string())?;
        let seeds = [
            HalfPlanePoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0)).map_err(|e| e.to_string())?,
            HalfPlanePoint::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0)).map_err(|e| e.to_string())?,
        ];
        let r = check_theorem1(&v, &k, &search, &seeds, &Tolerance::default()).map_err(|e| e.to_string())?;
        worst = worst.max(r.result.lhs);
        ok += usize::from(r.result.pass && r.result.lhs < 0.1);
    }
    let el = t.elapsed();
    Ok((
        ok == 20 && el < Duration::from_secs(300),
        format!(
            "N = {}, delta = {:.3e}; {ok}/20 potentials, worst gamma {worst:.3e} (< 0.1), {el:.2?} (< 5 min)",
            search.n, search.delta
        ),
    ))
}

fn criterion6() -> Outcome {
    let a = IntervalUnion::interval(1.0, 2.0).map_err(|e| e.to_string())?;
    let s = IntervalUnion::interval(-1.0, -0.5).map_err(|e| e.to_string())?;
    let policy = QuadPolicy { abs_tol: 1e-9, ..QuadPolicy::default() };
    let inv = |z: Complex64| HalfPlanePoint::from_complex(-1.0 / z);
    let m_inv = herglotz_value_distribution(&inv, &a, &s, 1e-3, &policy).map_err(|e| e.to_string())?.value;
    let id = HalfPlanePoint::from_complex;
    let m_id = herglotz_value_distribution(&id, &a, &s, 1e-3, &policy).map_err(|e| e.to_string())?.value;
    let exact = a.intersect(&s).measure() + 0.0;
    Ok((
        (m_inv - 1.0).abs() <= 0.01 && (m_id - exact).abs() <= 0.005,
        format!("-1/z gives {m_inv:.6} (1 +- 0.01); identity gives {m_id:.6} ({exact} +- 0.005)"),
    ))
}

fn criterion7() -> Outcome {
    let plan = ExperimentPlan::load(&bump_config()).map_err(|e| e.to_string())?;
    let cfg = plan.theorem2;
    let a_len = cfg.a_set.measure();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let t = Instant::now();
    let rows = pool.install(|| run_theorem2(&cfg)).map_err(|e| e.to_string())?;
    let el = t.elapsed();
    let done: Vec<_> = rows.iter().filter_map(|r| r.done()).collect();
    if done.len() != rows.len() || done.len() != 6 || cfg.potential.x_max() > 2000.0 {
        return Ok((false, format!("{} of {} rows computed, x_max {}", done.len(), rows.len(), cfg.potential.x_max())));
    }
    let left: Vec<f64> = done.iter().map(|r| r.discrepancy_left).collect();
    let right: Vec<f64> = done.iter().map(|r| r.discrepancy_right).collect();
    // "eventually": over the second half of the sweep, k >= 3 of 6
    let from = (done.len() - 1) / 2;
    let mono = non_increasing_from(&left, from) && non_increasing_from(&right, from);
    let last = done.last().expect("six rows");
    let agree = (last.md_left - last.md_right).abs();
    let tol = 0.05 * a_len;
    let pass = mono
        && last.discrepancy_left < tol
        && last.discrepancy_right < tol
        && agree < tol
        && el < Duration::from_secs(600);
    Ok((
        pass,
        format!(
            "non-increasing from k = {}: {mono}; final left {:.2e}, right {:.2e}, |left - right| {agree:.2e} (< {tol}); single thread {el:.2?} (< 10 min)",
            from + 1,
            last.discrepancy_left,
            last.discrepancy_right
        ),
    ))
}

fn criterion8() -> Outcome {
    let plan = ExperimentPlan::load(&bump_config()).map_err(|e| e.to_string())?;
    let cfg = plan.corollary2.ok_or("config has no corollary section")?;
    let rec = run_corollary2(&cfg).map_err(|e| e.to_string())?;
    let a_len = cfg.a_set.measure();
    let last = rec.rows.last().and_then(|r| r.done()).ok_or("largest k failed")?;
    Ok((
        rec.target_gap == a_len && a_len == 1.0 && last.gap > 0.8 * a_len,
        format!(
            "targets {} - {} = {} (|A| = {a_len}); gap at k = {}: {:.6} (> 0.8)",
            rec.target_left, rec.target_right, rec.target_gap, last.k, last.gap
        ),
    ))
}

fn criterion9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut triples, mut violations, mut tries) = (0usize, 0usize, 0usize);
    let point = |rng: &mut ChaCha8Rng, base: Option<HalfPlanePoint>| {
        let (re0, im0) = base.map_or((0.0, 1.0), |b| (b.re(), b.im()));
        let im = im0 * (rng.gen_range(-1.2f64..1.2)).exp();
        HalfPlanePoint::new(re0 + im0 * rng.gen_range(-2.0..2.0), im).expect("positive imaginary part")
    };
    while triples < 10_000 {
        tries += 1;
        if tries > 1_000_000 {
            return Err("could not draw enough admissible triples".into());
        }
        let z2 = point(&mut rng, None);
        let z1 = point(&mut rng, Some(z2));
        let z3 = point(&mut rng, Some(z2));
        let (a, b) = (gamma_separation(z1, z2), gamma_separation(z2, z3));
        if !(a > 0.0 && a <= 2.0 && b > 0.0 && b <= 2.0) {
            continue;
        }
        triples += 1;
        let bound = quasi_triangle_bound(a, b).map_err(|e| e.to_string())?;
        if gamma_separation(z1, z3) > bound {
            violations += 1;
        }
    }
    Ok((violations == 0, format!("{triples} triples, {violations} violations")))
}

fn run_bin(args: &[&str], threads: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_weylvd"))
        .args(args)
        .env("WEYLVD_THREADS", threads)
        .env("RUST_LOG", "error")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if status.success() {
        Ok(())
    } else {
        Err(format!("weylvd {args:?} exited with {status}"))
    }
}

fn criterion10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let cfg = bump_config().to_string_lossy().into_owned();
    for (run, threads) in [("a", "0"), ("b", "1")] {
        run_bin(&["bounds", "--check", "all", "--seed", "42", "--out", &p(&format!("bounds_{run}.csv"))], threads)?;
        run_bin(&["sparse-experiment", "--config", &cfg, "--outdir", &p(&format!("exp_{run}"))], threads)?;
    }
    let read = |name: String| std::fs::read(name).map_err(|e| e.to_string());
    let same_bounds = read(p("bounds_a.csv"))? == read(p("bounds_b.csv"))?;
    let mut same_exp = true;
    for f in ["theorem2.csv", "corollary2.csv", "manifest.json"] {
        same_exp &= read(p(&format!("exp_a/{f}")))? == read(p(&format!("exp_b/{f}")))?;
    }
    Ok((
        same_bounds && same_exp,
        format!("bounds CSV identical: {same_bounds}; experiment outputs identical: {same_exp} (auto vs 1 thread)"),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("free-case exactness", criterion1),
        ("lemma1 verifier", criterion2),
        ("lemma2/lemma3 verifiers and constants", criterion3),
        ("lemma4 verifier and delta0 branch", criterion4),
        ("theorem1 constructive check", criterion5),
        ("value-distribution calibration", criterion6),
        ("sparse-window experiment", criterion7),
        ("negative-spectrum witness", criterion8),
        ("quasi-triangle property", criterion9),
        ("determinism", criterion10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (pass, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!("criterion {:>2} {} {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
