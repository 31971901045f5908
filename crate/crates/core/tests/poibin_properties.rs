use event_forecast::poibin::{PoiBin, PoiBinMethod};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn exact_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..500 {
        let m = 1 + i % 12;
        let pi: Vec<f64> = (0..m).map(|_| rng.random()).collect();
        let exact = PoiBin::new(pi.clone(), PoiBinMethod::ExactDp).unwrap();
        let brute = PoiBin::new(pi, PoiBinMethod::BruteForce).unwrap();
        assert!(max_abs_diff(exact.pmf(), brute.pmf()) < 1e-12);
    }
    for _ in 0..100 {
        let pi: Vec<f64> = (0..10).map(|_| rng.random()).collect();
        let exact = PoiBin::exact(pi.clone()).unwrap();
        let brute = PoiBin::new(pi, PoiBinMethod::BruteForce).unwrap();
        assert!(max_abs_diff(exact.cmf_values(), brute.cmf_values()) < 1e-12);
    }
}

#[test]
fn equal_probabilities_give_binomial() {
    for (m, p) in [(1u64, 0.3), (17, 0.5), (60, 0.07), (250, 0.81)] {
        let d = PoiBin::exact(vec![p; m as usize]).unwrap();
        let binom = Binomial::new(p, m).unwrap();
        for (k, mass) in d.pmf().iter().enumerate() {
            assert!((mass - binom.pmf(k as u64)).abs() < 1e-12, "m={m} k={k}");
        }
    }
}

#[test]
fn poisson_approximation_is_close_for_small_probabilities() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let m = rng.random_range(200..800);
        let pi: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..0.05)).collect();
        let ratio = pi.iter().map(|p| p * p).sum::<f64>() / pi.iter().sum::<f64>();
        assert!(ratio < 0.05);
        let exact = PoiBin::exact(pi.clone()).unwrap();
        let approx = PoiBin::new(pi, PoiBinMethod::Poisson).unwrap();
        let tv = 0.5 * exact.pmf().iter().zip(approx.pmf()).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv < 0.01, "total variation {tv}");
        assert_eq!(approx.cmf(m).unwrap(), 1.0);
    }
}

#[test]
fn normal_approximation_is_reasonable_for_large_m() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let pi: Vec<f64> = (0..1000).map(|_| rng.random_range(0.1..0.9)).collect();
    let exact = PoiBin::exact(pi.clone()).unwrap();
    let normal = PoiBin::new(pi, PoiBinMethod::Normal).unwrap();
    assert!(max_abs_diff(exact.cmf_values(), normal.cmf_values()) < 0.01);
    for q in [0.025, 0.5, 0.975] {
        let (a, b) = (exact.quantile(q).unwrap(), normal.quantile(q).unwrap());
        assert!(a.abs_diff(b) <= 1, "{a} {b}");
    }
}

#[test]
fn auto_uses_exact_for_moderate_m() {
    let d = PoiBin::new(vec![0.2; 645], PoiBinMethod::Auto).unwrap();
    assert_eq!(d.method(), PoiBinMethod::ExactDp);
}

proptest! {
    #[test]
    fn mass_and_moments(pi in prop::collection::vec(0.0f64..=1.0, 0..300)) {
        let d = PoiBin::exact(pi).unwrap();
        let pmf = d.pmf();
        prop_assert!(pmf.iter().all(|&p| p >= 0.0));
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        let var: f64 = pmf.iter().enumerate().map(|(k, p)| (k as f64 - mean).powi(2) * p).sum();
        prop_assert!((mean - d.mean()).abs() < 1e-10);
        prop_assert!((var - d.variance()).abs() < 1e-10);
        prop_assert!(d.cmf_values().windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(*d.cmf_values().last().unwrap(), 1.0);
    }

    #[test]
    fn permutation_invariance(pi in prop::collection::vec(0.0f64..=1.0, 1..60), seed in any::<u64>()) {
        let mut shuffled = pi.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = PoiBin::exact(pi).unwrap();
        let b = PoiBin::exact(shuffled).unwrap();
        prop_assert!(max_abs_diff(a.pmf(), b.pmf()) < 1e-13);
    }

    #[test]
    fn quantile_is_generalized_inverse(pi in prop::collection::vec(0.0f64..=1.0, 1..80), q in 1e-6f64..(1.0 - 1e-6)) {
        let d = PoiBin::exact(pi).unwrap();
        let y = d.quantile(q).unwrap();
        prop_assert!(d.cmf(y).unwrap() >= q || y == d.trials());
        if y > 0 {
            prop_assert!(d.cmf(y - 1).unwrap() < q);
        }
    }
}
