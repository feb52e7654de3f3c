//! Standalone acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p borp-core --test acceptance`.

use std::f64::consts::FRAC_PI_2;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use borp_core::controlled::{driver_as_controlled, make_controlled};
use borp_core::experiments::{median, regularity_profile, ProfileConfig};
use borp_core::field::{Componentwise, Profile, VectorField};
use borp_core::grid::{delta3, SampledPath};
use borp_core::lift::{lift_md_leftpoint, lift_scalar, ScalarLift};
use borp_core::orlicz::{luxemburg_norm, SampledFunction, YoungFunction};
use borp_core::path_gen::{fbm_covariance, simulate_bm, DriverSpec, FbmMethod, FbmSampler};
use borp_core::rde::{solve_onestep, solve_picard, RdeProblem};
use borp_core::sewing::{integrand_germ, rough_integral, SEWING_TOL};
use borp_core::{RegularityParams, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const PICARD_TOL: f64 = 1e-12;
const PICARD_MAX_ITER: usize = 200;

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(name: &str, budget: Option<Duration>, check: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let result = check();
    let elapsed = start.elapsed();
    let (passed, detail) = match result {
        Ok(o) => (o.passed, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = budget.is_none_or(|b| elapsed <= b);
    let budget_note = budget.map(|b| format!(" / budget {:.0} s", b.as_secs_f64())).unwrap_or_default();
    let ok = passed && in_time;
    println!(
        "{} {name}: {detail} [{:.2} s{budget_note}]",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    ok
}

fn bm(n_steps: usize, dim: usize, seed: u64) -> Result<SampledPath> {
    simulate_bm(&DriverSpec::brownian(dim, 1.0, n_steps, seed))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn chen_exactness() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (n_steps, seed) in [(1 << 8, 21), (1 << 12, 22)] {
        let scalar = bm(n_steps, 1, seed)?;
        let plane = bm(n_steps, 2, seed)?;
        let lifts = [
            ("stratonovich", lift_scalar(&scalar, ScalarLift::Stratonovich)?),
            ("ito", lift_scalar(&scalar, ScalarLift::Ito)?),
            ("leftpoint", lift_md_leftpoint(&plane)?),
        ];
        for (name, rp) in &lifts {
            let r = rp.chen_report();
            worst = worst.max(r.max_defect / r.bound);
            lines.push(format!("N={n_steps} {name} {:.1e}/{}", r.max_defect, if r.exhaustive { "all" } else { "1e5" }));
        }
    }
    Ok(Outcome {
        passed: worst <= 1.0,
        detail: format!("worst defect/bound {worst:.2e} <= 1 ({})", lines.join(", ")),
    })
}

fn telescoping_identity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let x = bm(1 << 10, 1, 100 + seed)?;
        let rp = lift_scalar(&x, ScalarLift::Stratonovich)?;
        let z = driver_as_controlled(&rp)?;
        let got = rough_integral(&rp, &z, SEWING_TOL)?.sewing.final_value()[0];
        let (x0, xt) = (x.point(0)[0], x.point(x.n_steps())[0]);
        worst = worst.max((got - 0.5 * (xt * xt - x0 * x0)).abs());
    }
    Ok(Outcome { passed: worst <= 1e-12, detail: format!("max |error| {worst:.2e} <= 1e-12 over 20 seeds") })
}

fn luxemburg_closed_forms() -> Result<Outcome> {
    let n = 1 << 12;
    let ones = SampledFunction::from_fn(1.0, n, |_| 1.0)?;
    let half = SampledFunction::from_fn(1.0, n, |t| if t < 0.5 { 1.0 } else { 0.0 })?;
    let e1 = (luxemburg_norm(&ones, &YoungFunction::new(2.0)?) - 1.0 / 2f64.ln().sqrt()).abs();
    let e2 = (luxemburg_norm(&half, &YoungFunction::new(1.0)?) - 1.0 / 3f64.ln()).abs();
    Ok(Outcome {
        passed: e1 <= 1e-9 && e2 <= 1e-9,
        detail: format!("|const - 1/sqrt(ln 2)| = {e1:.1e}, |indicator - 1/ln 3| = {e2:.1e} (<= 1e-9)"),
    })
}

fn power_identity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let betas = [2.0, 2.5, 3.0, 4.0];
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(16..=512);
        let length = rng.gen_range(0.5..2.0);
        let scale = rng.gen_range(0.1..5.0);
        let values: Vec<f64> = (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal).abs()).collect();
        let f = SampledFunction::new(length / n as f64, length, values)?;
        let beta = betas[rng.gen_range(0..betas.len())];
        for p in [0.5, 2.0, 3.0] {
            let lhs = luxemburg_norm(&f.map(|v| v.powf(p))?, &YoungFunction::new(beta)?);
            let rhs = luxemburg_norm(&f, &YoungFunction::new(p * beta)?).powf(p);
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
    }
    Ok(Outcome { passed: worst <= 1e-8, detail: format!("max relative error {worst:.2e} <= 1e-8 (100 functions x 3 powers)") })
}

fn random_walk(rng: &mut ChaCha8Rng, n_steps: usize, dim: usize, sd: f64) -> Result<SampledPath> {
    let mut values = vec![0.0; (n_steps + 1) * dim];
    for c in 0..dim {
        values[c] = rng.gen_range(-1.0..1.0);
    }
    for i in 1..=n_steps {
        for c in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            values[i * dim + c] = values[(i - 1) * dim + c] + sd * z;
        }
    }
    SampledPath::new(1.0, dim, values)
}

fn germ_defect_identity() -> Result<Outcome> {
    let (n_steps, m, n) = (1 << 6, 2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let rp = lift_md_leftpoint(&bm(n_steps, n, 300 + k)?)?;
        let y = random_walk(&mut rng, n_steps, m * n, 0.2)?;
        let yp = random_walk(&mut rng, n_steps, m * n * n, 0.2)?;
        let z = make_controlled(y, yp.clone(), &rp)?;
        let d3 = delta3(&integrand_germ(&rp, &z)?);
        let (x, xx, r) = (rp.path(), rp.second_level(), z.remainder());
        for s in 0..=n_steps {
            for u in s..=n_steps {
                let (rsu, dyp) = (r.get(s, u), yp.increment(s, u));
                for t in u..=n_steps {
                    let got = d3.get(s, u, t);
                    let (dx, xut) = (x.increment(u, t), xx.get(u, t));
                    for i in 0..m {
                        let mut expect = 0.0;
                        for j in 0..n {
                            expect -= rsu[i * n + j] * dx[j];
                            for kk in 0..n {
                                expect -= dyp[(i * n + j) * n + kk] * xut[kk * n + j];
                            }
                        }
                        worst = worst.max((got[i] - expect).abs());
                    }
                }
            }
        }
    }
    Ok(Outcome { passed: worst <= 1e-13, detail: format!("max entrywise gap {worst:.2e} <= 1e-13 on all triples, 5 paths") })
}

fn sin_problem(w: &SampledPath, y0: f64) -> Result<RdeProblem> {
    let rp = lift_scalar(w, ScalarLift::Stratonovich)?;
    let field: Arc<dyn VectorField> = Arc::new(Componentwise::scalar(Profile::Sin));
    RdeProblem::new(rp, field, vec![y0], RegularityParams::new(0.45, 2.0, f64::INFINITY)?)
}

fn flow_oracle(w: f64, y0: f64) -> f64 {
    2.0 * (w.exp() * (0.5 * y0).tan()).atan()
}

fn rde_closed_form() -> Result<Outcome> {
    let y0 = FRAC_PI_2;
    let levels = [10u32, 11, 12, 13];
    let finest = 1usize << 13;
    let mut errors = vec![Vec::new(); levels.len()];
    for seed in 0..20 {
        let w = bm(finest, 1, seed)?;
        for (li, &k) in levels.iter().enumerate() {
            let wk = w.decimate(finest >> k)?;
            let sol = solve_picard(&sin_problem(&wk, y0)?, PICARD_TOL, PICARD_MAX_ITER)?;
            let err = (0..=wk.n_steps())
                .map(|i| (sol.y.point(i)[0] - flow_oracle(wk.point(i)[0], y0)).abs())
                .fold(0.0, f64::max);
            errors[li].push(err);
        }
    }
    let worst_at_4096 = errors[2].iter().copied().fold(0.0, f64::max);
    let medians: Vec<f64> = errors.iter_mut().map(|e| median(e)).collect();
    let xs: Vec<f64> = levels.iter().map(|&k| k as f64).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.log2()).collect();
    let rate = -slope(&xs, &ys);
    Ok(Outcome {
        passed: worst_at_4096 <= 5e-3 && rate >= 0.5,
        detail: format!(
            "max sup error at N=4096 {worst_at_4096:.2e} <= 5e-3; median errors {} give rate {rate:.2} >= 0.5",
            medians.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn scheme_cross_validation() -> Result<Outcome> {
    let levels = [10u32, 11, 12, 13];
    let finest = 1usize << 13;
    let floor = 10.0 * PICARD_TOL;
    let mut diffs = vec![Vec::new(); levels.len()];
    for seed in 0..10 {
        let w = bm(finest, 1, 500 + seed)?;
        for (li, &k) in levels.iter().enumerate() {
            let p = sin_problem(&w.decimate(finest >> k)?, FRAC_PI_2)?;
            let a = solve_picard(&p, PICARD_TOL, PICARD_MAX_ITER)?;
            let b = solve_onestep(&p)?;
            diffs[li].push(a.y.sup_distance(&b.y)?);
        }
    }
    let medians: Vec<f64> = diffs.iter_mut().map(|d| median(d)).collect();
    let floored: Vec<f64> = medians.iter().map(|d| d.max(floor)).collect();
    let decreasing = floored.windows(2).all(|w| w[1] <= w[0]);
    Ok(Outcome {
        passed: medians[2] <= 1e-2 && decreasing,
        detail: format!(
            "median sup differences {} (N=1024..8192); N=4096 value <= 1e-2, non-increasing above the {floor:.0e} solver floor",
            medians.iter().map(|m| format!("{m:.2e}")).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn fbm_law() -> Result<Outcome> {
    let seeds = 2000u64;
    let mut passed = true;
    let mut parts = Vec::new();
    for hurst in [0.35, 0.4, 0.5] {
        let sampler = FbmSampler::new(hurst, 1.0, 1 << 10, FbmMethod::Circulant)?;
        let (mut prod, mut sq) = (Vec::new(), Vec::new());
        for seed in 0..seeds {
            let p = sampler.sample(seed, 1)?;
            let (a, b) = (p.point(1 << 9)[0], p.point(1 << 10)[0]);
            prod.push(a * b);
            sq.push(a * a);
        }
        for (name, samples, target) in
            [("cov(0.5,1)", &prod, fbm_covariance(hurst, 0.5, 1.0)), ("var(0.5)", &sq, fbm_covariance(hurst, 0.5, 0.5))]
        {
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let z = (mean - target).abs() / (var / n).sqrt();
            passed &= z <= 4.0;
            parts.push(format!("H={hurst} {name} {z:.2}σ"));
        }
    }
    let circ = FbmSampler::new(0.4, 1.0, 1 << 8, FbmMethod::Circulant)?;
    let chol = FbmSampler::new(0.4, 1.0, 1 << 8, FbmMethod::Cholesky)?;
    let end = |s: &FbmSampler| -> Result<Vec<f64>> { (0..seeds).map(|k| Ok(s.sample(k, 1)?.point(1 << 8)[0])).collect() };
    let d = ks_statistic(end(&circ)?, end(&chol)?);
    let critical = 1.628 * (2.0 / seeds as f64).sqrt();
    passed &= d < critical;
    Ok(Outcome {
        passed,
        detail: format!("{} (all <= 4σ); KS {d:.4} < {critical:.4}", parts.join(", ")),
    })
}

fn regularity_profile_check() -> Result<Outcome> {
    let report = regularity_profile(&ProfileConfig::default())?;
    let inf = report.summary(f64::INFINITY).expect("q = inf is configured");
    let one = report.summary(1.0).expect("q = 1 is configured");
    let fmt = |v: &[f64]| v.iter().map(|m| format!("{m:.3}")).collect::<Vec<_>>().join(", ");
    Ok(Outcome {
        passed: inf.spread < 2.0 && one.strictly_increasing,
        detail: format!(
            "q=inf medians [{}] spread {:.3} < 2; q=1 medians [{}] strictly increasing: {}",
            fmt(&inf.medians),
            inf.spread,
            fmt(&one.medians),
            one.strictly_increasing
        ),
    })
}

fn driver_stability() -> Result<Outcome> {
    let w = bm(1 << 12, 1, 13)?;
    let base = solve_picard(&sin_problem(&w, FRAC_PI_2)?, PICARD_TOL, PICARD_MAX_ITER)?;
    let mut ratios = Vec::new();
    for eps in [1e-2, 1e-3, 1e-4] {
        let bump = SampledPath::from_fn(1.0, 1 << 12, 1, |t, o| o[0] = eps * (2.0 * std::f64::consts::PI * t).sin())?;
        let perturbed = SampledPath::new(1.0, 1, w.values().iter().zip(bump.values()).map(|(a, b)| a + b).collect())?;
        let shift = perturbed.sup_distance(&w)?;
        let sol = solve_picard(&sin_problem(&perturbed, FRAC_PI_2)?, PICARD_TOL, PICARD_MAX_ITER)?;
        ratios.push(sol.y.sup_distance(&base.y)? / shift);
    }
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        passed: lo > 0.0 && hi / lo <= 4.0,
        detail: format!(
            "response ratios {} for eps = 1e-2, 1e-3, 1e-4; max/min {:.3} <= 4",
            ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(", "),
            hi / lo
        ),
    })
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        run("chen_exactness", Some(secs(30)), chen_exactness),
        run("telescoping_integral", Some(secs(10)), telescoping_identity),
        run("luxemburg_closed_forms", None, luxemburg_closed_forms),
        run("power_identity", None, power_identity),
        run("germ_defect_identity", None, germ_defect_identity),
        run("rde_closed_form_oracle", Some(secs(300)), rde_closed_form),
        run("picard_vs_onestep", None, scheme_cross_validation),
        run("fbm_law", None, fbm_law),
        run("regularity_profile", Some(secs(600)), regularity_profile_check),
        run("driver_stability", None, driver_stability),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
