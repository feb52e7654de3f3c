use borp_core::orlicz::{eval_young, luxemburg_norm, orlicz_lp_equivalence_ratio, SampledFunction, YoungFunction, LUXEMBURG_TOL};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn sampled(values: Vec<f64>, length: f64) -> SampledFunction {
    let n = values.len();
    SampledFunction::new(length / n as f64, length, values).unwrap()
}

fn gaussian_abs(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal).abs()).collect()
}

fn values_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..10.0, 1..200)
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn luxemburg_is_homogeneous(values in values_strategy(), beta in 0.3f64..4.0, length in 0.2f64..3.0) {
        let phi = YoungFunction::new(beta).unwrap();
        let f = sampled(values, length);
        let base = luxemburg_norm(&f, &phi);
        for c in [0.1, 2.0, 100.0] {
            let scaled = luxemburg_norm(&f.map(|v| c * v).unwrap(), &phi);
            prop_assert!((scaled - c * base).abs() <= 4.0 * LUXEMBURG_TOL * c * base + 1e-300);
        }
        prop_assert_eq!(luxemburg_norm(&f.map(|_| 0.0).unwrap(), &phi), 0.0);
    }

    #[test]
    fn luxemburg_is_monotone(values in values_strategy(), bumps in prop::collection::vec(0.0f64..1.0, 200), beta in 0.3f64..4.0) {
        let phi = YoungFunction::new(beta).unwrap();
        let bigger: Vec<f64> = values.iter().zip(&bumps).map(|(v, b)| v + b).collect();
        let f = sampled(values, 1.0);
        let g = sampled(bigger, 1.0);
        let (nf, ng) = (luxemburg_norm(&f, &phi), luxemburg_norm(&g, &phi));
        prop_assert!(nf <= ng * (1.0 + 2.0 * LUXEMBURG_TOL));
    }

    #[test]
    fn power_identity_above_the_linear_branch(values in values_strategy(), beta in 2.0f64..4.0, length in 0.2f64..3.0) {
        // with β ≥ 1 and pβ ≥ 1 both Young functions are exactly exp(x^β) − 1
        let f = sampled(values.iter().map(|v| v + 1e-3).collect(), length);
        for p in [0.5, 2.0, 3.0] {
            let lhs = luxemburg_norm(&f.map(|v| v.powf(p)).unwrap(), &YoungFunction::new(beta).unwrap());
            let rhs = luxemburg_norm(&f, &YoungFunction::new(p * beta).unwrap()).powf(p);
            prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs);
        }
    }

    #[test]
    fn young_function_is_nondecreasing(beta in 0.1f64..5.0, x in 0.0f64..5.0, dx in 0.0f64..1.0) {
        let phi = YoungFunction::new(beta).unwrap();
        prop_assert!(phi.value(x) <= phi.value(x + dx));
        prop_assert!(phi.value(x) >= 0.0);
    }
}

#[test]
fn young_midpoint_convexity() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..10_000 {
        let beta = rng.gen_range(0.1..5.0);
        let phi = YoungFunction::new(beta).unwrap();
        let (x, y) = (rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0));
        let mid = eval_young(&phi, 0.5 * (x + y)).unwrap();
        let avg = 0.5 * (eval_young(&phi, x).unwrap() + eval_young(&phi, y).unwrap());
        // on the linear branch both sides agree up to rounding
        assert!(mid <= avg * (1.0 + 4.0 * f64::EPSILON), "beta {beta} x {x} y {y}");
    }
}

#[test]
fn holder_product_constant_is_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (phi1, phi2) = (YoungFunction::new(1.0).unwrap(), YoungFunction::new(2.0).unwrap());
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(8..400);
        let length = rng.gen_range(0.3..2.0);
        let (sf, sg) = (rng.gen_range(0.1..3.0), rng.gen_range(0.1..3.0));
        let f = sampled(gaussian_abs(&mut rng, n, sf), length);
        let g = sampled(gaussian_abs(&mut rng, n, sg), length);
        let fg = sampled(f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect(), length);
        let c = luxemburg_norm(&fg, &phi1) / (luxemburg_norm(&f, &phi2) * luxemburg_norm(&g, &phi2));
        worst = worst.max(c);
    }
    println!("empirical product constant {worst:.4}");
    assert!(worst <= 4.0);
}

#[test]
fn beta_embedding_constant_is_stable() {
    let constant = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..200 {
            let (n, scale) = (rng.gen_range(8..400), rng.gen_range(0.01..5.0));
            let f = sampled(gaussian_abs(&mut rng, n, scale), 1.0);
            for (b1, b2) in [(0.5, 1.0), (1.0, 2.0), (0.7, 3.0)] {
                let r = luxemburg_norm(&f, &YoungFunction::new(b1).unwrap())
                    / luxemburg_norm(&f, &YoungFunction::new(b2).unwrap());
                worst = worst.max(r);
            }
        }
        worst
    };
    let (a, b) = (constant(5), constant(6));
    println!("empirical embedding constants {a:.4} {b:.4}");
    assert!(a.is_finite() && a < 4.0);
    assert!((a - b).abs() <= 0.2 * a.max(b));
}

#[test]
fn gaussian_equivalence_ratio_is_stable_in_p_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let f = sampled(gaussian_abs(&mut rng, 4096, 1.0), 1.0);
    let phi = YoungFunction::new(2.0).unwrap();
    let (s32, l) = orlicz_lp_equivalence_ratio(&f, &phi, 32).unwrap();
    let (s64, _) = orlicz_lp_equivalence_ratio(&f, &phi, 64).unwrap();
    let (r32, r64) = (s32 / l, s64 / l);
    println!("ratios {r32:.4} {r64:.4}");
    assert!(r32 > 0.1 && r32 < 10.0);
    assert!((r64 - r32).abs() <= 0.2 * r32);
}
