use event_forecast::bootstrap::{
    bootstrap_cmfs, interval_from_cmf, plugin_cmf, plugin_interval, prediction_interval, replicate_fit,
    resample_dataset, sample_truncated, BootstrapConfig,
};
use event_forecast::data::{InterimDataset, Outcome, SubjectRecord};
use event_forecast::fit::{DropoutModel, FitOptions, FittedModels, ModelSpec};
use event_forecast::poibin::PoiBinMethod;
use event_forecast::probability::pi_vector;
use event_forecast::survival::{Baseline, Family, LinkScale, SplineKnots, SurvivalModel};
use event_forecast::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const PH: LinkScale = LinkScale::ProportionalHazards;

/// Trial with uniform entry over [0, 3], interim at 4, Weibull-PH events
/// (`H0 = lambda0 t^shape`, hazard ratio `hr` in arm 1) and exponential dropout.
fn trial(seed: u64, n: usize, shape: f64, lambda0: f64, hr: f64, psi: f64) -> InterimDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_c = 4.0;
    let subjects = (0..n)
        .map(|i| {
            let z = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
            let entry = 3.0 * rng.random::<f64>();
            let t = (-(1.0 - rng.random::<f64>()).ln() / (lambda0 * hr.powf(z))).powf(1.0 / shape);
            let l = if psi > 0.0 {
                -(1.0 - rng.random::<f64>()).ln() / psi
            } else {
                f64::INFINITY
            };
            let admin = t_c - entry;
            let (t_obs, outcome) = if admin < t.min(l) {
                (admin, Outcome::AdminCensored)
            } else if t <= l {
                (t, Outcome::Event)
            } else {
                (l, Outcome::Dropout)
            };
            SubjectRecord {
                id: format!("p{i}"),
                entry_time: entry,
                t_obs,
                outcome,
                z: vec![z],
            }
        })
        .collect();
    InterimDataset::new(subjects, t_c, vec!["arm".into()]).unwrap()
}

fn ks_statistic(mut x: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn truncated_draws(model: &SurvivalModel, z: &[f64], tau: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            let t = sample_truncated(model, z, tau, u).unwrap();
            assert!(t > 0.0 && t <= tau);
            t
        })
        .collect()
}

fn cfg(replicates: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig::new(replicates, 0.05, seed).unwrap()
}

#[test]
fn all_censored_data_resamples_to_itself() {
    let subjects = (0..20)
        .map(|i| SubjectRecord {
            id: format!("c{i}"),
            entry_time: 0.1 * i as f64,
            t_obs: 5.0 - 0.1 * i as f64,
            outcome: Outcome::AdminCensored,
            z: vec![(i % 2) as f64],
        })
        .collect();
    let d = InterimDataset::new(subjects, 5.0, vec!["arm".into()]).unwrap();
    let m = SurvivalModel::new(Baseline::Exponential { rate: 0.2 }, PH, vec![0.1]).unwrap();
    assert_eq!(resample_dataset(&d, &m, &DropoutModel::NoDropout, 3).unwrap(), d);
}

#[test]
fn resampling_keeps_the_conditioning_set() {
    let d = trial(1, 400, 0.8, 0.3, 0.6, 0.1);
    assert!(d.count(Outcome::Dropout) > 10 && d.count(Outcome::Event) > 10);
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let r = resample_dataset(&d, &fits.event.model, &fits.dropout.model, 11).unwrap();
    assert_eq!(r.t_c(), d.t_c());
    let mut moved = 0;
    for (a, b) in d.subjects().iter().zip(r.subjects()) {
        assert_eq!((&a.id, a.entry_time, a.outcome, &a.z), (&b.id, b.entry_time, b.outcome, &b.z));
        match a.outcome {
            Outcome::AdminCensored => assert_eq!(a.t_obs, b.t_obs),
            _ => {
                assert!(b.t_obs > 0.0 && b.t_obs <= d.elapsed(a));
                moved += usize::from(a.t_obs != b.t_obs);
            }
        }
    }
    assert_eq!(moved, d.count(Outcome::Event) + d.count(Outcome::Dropout));
    assert_eq!(r, resample_dataset(&d, &fits.event.model, &fits.dropout.model, 11).unwrap());
}

#[test]
fn truncated_exponential_draws_follow_the_truncated_law() {
    let m = SurvivalModel::baseline_only(Baseline::Exponential { rate: 0.7 }, PH).unwrap();
    let tau = 1.8;
    let draws = truncated_draws(&m, &[], tau, 100_000, 2);
    let d = ks_statistic(draws, |t| (1.0 - (-0.7 * t).exp()) / (1.0 - (-0.7 * tau).exp()));
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn truncated_draws_follow_each_link_family() {
    let norm = Normal::standard();
    let beta = 0.2f64.ln();
    let z = [1.0];

    let weibull = SurvivalModel::new(Baseline::Weibull { shape: 0.6, scale: 1.4 }, PH, vec![beta]).unwrap();
    let weibull_cdf = |t: f64| 1.0 - (-1.4 * t.powf(0.6) * beta.exp()).exp();

    let po = SurvivalModel::new(
        Baseline::LogLogistic { shape: 1.7, scale: 2.0 },
        LinkScale::ProportionalOdds,
        vec![0.8],
    )
    .unwrap();
    let po_cdf = |t: f64| 1.0 / (1.0 + (-(1.7 * (t.ln() - 2f64.ln()) + 0.8)).exp());

    let lp = SurvivalModel::new(
        Baseline::LogNormal { meanlog: 0.4, sdlog: 1.3 },
        LinkScale::LinearProbit,
        vec![-0.5],
    )
    .unwrap();
    let lp_cdf = |t: f64| norm.cdf((t.ln() - 0.4) / 1.3 - 0.5);

    let knots = SplineKnots::new(-3.0, 1.5, vec![-0.5]).unwrap();
    let rp = SurvivalModel::new(
        Baseline::RoystonParmar {
            knots,
            coefficients: vec![-0.5, 1.2, 0.02],
        },
        PH,
        vec![0.3],
    )
    .unwrap();
    let rp_cdf = |t: f64| {
        let x = t.ln();
        let cube = |d: f64| d.max(0.0).powi(3);
        let lam = (1.5 - -0.5) / (1.5 - -3.0);
        let s = -0.5 + 1.2 * x + 0.02 * (cube(x + 0.5) - lam * cube(x + 3.0) - (1.0 - lam) * cube(x - 1.5));
        1.0 - (-(s + 0.3).exp()).exp()
    };

    let cases: [(&str, &SurvivalModel, &dyn Fn(f64) -> f64); 4] = [
        ("weibull-ph", &weibull, &weibull_cdf),
        ("loglogistic-po", &po, &po_cdf),
        ("lognormal-lp", &lp, &lp_cdf),
        ("spline-ph", &rp, &rp_cdf),
    ];
    for (name, m, cdf) in cases {
        for tau in [0.4, 2.0] {
            let draws = truncated_draws(m, &z, tau, 100_000, 7);
            let f_tau = cdf(tau);
            let d = ks_statistic(draws, |t| cdf(t) / f_tau);
            assert!(d < 0.01, "{name} τ={tau}: KS {d}");
        }
    }
}

#[test]
fn weibull_truncated_draw_matches_direct_inversion() {
    let (shape, scale, hr) = (0.6, 1.4, 0.2f64);
    let m = SurvivalModel::new(Baseline::Weibull { shape, scale }, PH, vec![hr.ln()]).unwrap();
    let tau = 1.3f64;
    let f_tau = 1.0 - (-scale * hr * tau.powf(shape)).exp();
    for i in 1..200 {
        let u = i as f64 / 200.0;
        let direct = (-(1.0 - u * f_tau).ln() / (scale * hr)).powf(1.0 / shape);
        let t = sample_truncated(&m, &[1.0], tau, u).unwrap();
        assert!((t - direct).abs() < 1e-12 * direct.max(1.0), "u={u}: {t} vs {direct}");
    }
}

#[test]
fn single_replicate_is_the_replicate_plugin() {
    let d = trial(3, 300, 0.6, 0.4, 0.5, 0.08);
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let c = BootstrapConfig {
        poibin_method: PoiBinMethod::ExactDp,
        ..cfg(1, 42)
    };
    let boot = bootstrap_cmfs(&d, &fits, &[1.0], &c).unwrap().remove(0);
    let rep = replicate_fit(&d, &fits, &c, 0).unwrap().unwrap();
    let direct = plugin_cmf(&d, &rep.event, &rep.dropout, 1.0, PoiBinMethod::ExactDp).unwrap();
    assert_eq!(boot.cmf, direct);
    assert_eq!((boot.replicates_used, boot.replicates_dropped), (1, 0));
}

#[test]
fn empty_risk_set_gives_zero_interval() {
    let subjects = (0..30)
        .map(|i| SubjectRecord {
            id: format!("e{i}"),
            entry_time: 0.0,
            t_obs: 0.1 + 0.1 * i as f64,
            outcome: if i % 3 == 0 { Outcome::Dropout } else { Outcome::Event },
            z: vec![],
        })
        .collect();
    let d = InterimDataset::new(subjects, 5.0, vec![]).unwrap();
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let cmf = bootstrap_cmfs(&d, &fits, &[1.0], &cfg(10, 1)).unwrap().remove(0);
    let pi = prediction_interval(&cmf, 0.05).unwrap();
    assert_eq!((pi.lower, pi.upper, pi.m_at_risk), (0, 0, 0));
    assert_eq!(cmf.mean(), 0.0);
}

#[test]
fn exponential_bootstrap_mean_is_near_the_truth() {
    let (rate, psi, dt) = (0.3, 0.05, 1.0);
    let d = trial(5, 500, 1.0, rate, 1.0, psi);
    let spec = ModelSpec::natural(Family::Exponential);
    let fits = FittedModels::fit(&d, spec, Family::Exponential, &FitOptions::default()).unwrap();
    let cmf = bootstrap_cmfs(&d, &fits, &[dt], &cfg(500, 6)).unwrap().remove(0);
    // independent oracle: every at-risk subject has the same competing-risk probability
    let p = rate / (rate + psi) * (1.0 - (-(rate + psi) * dt).exp());
    let m = cmf.m_at_risk() as f64;
    let (mean, sd) = (m * p, (m * p * (1.0 - p)).sqrt());
    assert!((cmf.mean() - mean).abs() < 3.0 * sd, "{} vs {mean} ± {sd}", cmf.mean());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let d = trial(8, 300, 0.6, 0.4, 0.5, 0.08);
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let run = |threads| {
        let c = BootstrapConfig {
            threads: Some(threads),
            ..cfg(40, 77)
        };
        bootstrap_cmfs(&d, &fits, &[0.5, 1.0], &c).unwrap()
    };
    let one = run(1);
    let cmf_bits = |v: &[event_forecast::bootstrap::BootstrapCmf]| {
        v.iter().flat_map(|c| c.cmf.iter().map(|x| x.to_bits())).collect::<Vec<_>>()
    };
    for threads in [2, 4] {
        assert_eq!(cmf_bits(&one), cmf_bits(&run(threads)));
    }
}

#[test]
fn intervals_nest_in_alpha_and_grow_with_horizon() {
    let d = trial(9, 400, 0.6, 0.3, 0.4, 0.05);
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let horizons = [0.25, 0.5, 1.0, 2.0, 4.0];
    let cmfs = bootstrap_cmfs(&d, &fits, &horizons, &cfg(50, 3)).unwrap();
    for c in &cmfs {
        let mut prev: Option<(usize, usize)> = None;
        for alpha in [0.01, 0.05, 0.1, 0.2, 0.5] {
            let pi = interval_from_cmf(&c.cmf, alpha, c.horizon).unwrap();
            if let Some((lo, hi)) = prev {
                assert!(lo <= pi.lower && pi.upper <= hi, "α={alpha} not nested");
            }
            prev = Some((pi.lower, pi.upper));
        }
    }
    for w in cmfs.windows(2) {
        assert!(w[1].mean() >= w[0].mean());
        let (a, b) = (prediction_interval(&w[0], 0.05).unwrap(), prediction_interval(&w[1], 0.05).unwrap());
        assert!(b.lower >= a.lower && b.upper >= a.upper);
    }
}

#[test]
fn too_many_failed_refits_is_an_error() {
    let d = trial(10, 200, 0.6, 0.4, 0.5, 0.08);
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let mut starved = FitOptions::default();
    starved.simplex.max_evals = 2;
    starved.simplex.restarts = 0;
    let c = BootstrapConfig {
        fit_options: starved,
        max_refit_retries: 1,
        ..cfg(10, 1)
    };
    assert!(replicate_fit(&d, &fits, &c, 0).unwrap().is_none());
    match bootstrap_cmfs(&d, &fits, &[1.0], &c) {
        Err(Error::Bootstrap { dropped, requested }) => assert_eq!((dropped, requested), (10, 10)),
        other => panic!("expected a bootstrap failure, got {other:?}"),
    }
}

#[test]
fn bootstrap_interval_widens_the_plugin_interval() {
    let d = trial(12, 600, 0.6, 0.3, 0.4, 0.05);
    let fits = FittedModels::fit(&d, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let plug = plugin_interval(&d, &fits.event.model, &fits.dropout.model, 1.0, 0.05).unwrap();
    let cmf = bootstrap_cmfs(&d, &fits, &[1.0], &cfg(200, 5)).unwrap().remove(0);
    let boot = prediction_interval(&cmf, 0.05).unwrap();
    let plug_mean = pi_vector(&fits.event.model, &fits.dropout.model, &d, 1.0)
        .unwrap()
        .expected_events();
    assert!(boot.width() >= plug.width(), "{boot:?} vs {plug:?}");
    assert!(boot.lower <= plug.lower && boot.upper >= plug.upper);
    assert!((cmf.mean() - plug_mean).abs() < 0.05 * plug_mean);
}
