//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Tolerances and runtime budgets are fixed below.

use std::time::{Duration, Instant};

use event_forecast::bootstrap::{bootstrap_cmfs, interval_from_cmf, sample_truncated, BootstrapConfig};
use event_forecast::commands::predict;
use event_forecast::data::Outcome;
use event_forecast::fit::{DropoutModel, FitOptions, FittedModels, ModelSpec};
use event_forecast::io::RunConfig;
use event_forecast::poibin::PoiBin;
use event_forecast::probability::{pi_general, AtRiskProfile};
use event_forecast::sim::{
    calibrate_lambda0, generate_trial, run_scenario, synthetic_trial, ModelUnderTest, ScenarioSpec, TrialShape,
};
use event_forecast::survival::{Baseline, Family, LinkScale, SplineKnots, SurvivalModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const PH: LinkScale = LinkScale::ProportionalHazards;

struct Verdict {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// ---------------------------------------------------------------- oracles

/// All 2^m outcomes of the Bernoulli trials.
fn enumerate_pmf(pi: &[f64]) -> Vec<f64> {
    let m = pi.len();
    let mut f = vec![0.0; m + 1];
    for mask in 0u32..(1 << m) {
        let p: f64 = pi
            .iter()
            .enumerate()
            .map(|(j, &q)| if mask >> j & 1 == 1 { q } else { 1.0 - q })
            .product();
        f[mask.count_ones() as usize] += p;
    }
    f
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

fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

// -------------------------------------------------------------- criteria

fn poisson_binomial_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let pi: Vec<f64> = (0..10).map(|_| rng.random::<f64>()).collect();
        let exact = PoiBin::exact(pi.clone()).unwrap();
        let oracle = enumerate_pmf(&pi);
        let mut acc = 0.0;
        for (y, o) in oracle.iter().enumerate() {
            acc += o;
            worst = worst.max((exact.pmf()[y] - o).abs()).max((exact.cmf_values()[y] - acc.min(1.0)).abs());
        }
    }
    outcome(worst < 1e-12, format!("max abs error {worst:.2e} (tol 1e-12)"))
}

fn closed_form_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let lambda = 10f64.powf(rng.random_range(-2.0..1.0));
        let psi = 10f64.powf(rng.random_range(-3.0..0.5));
        let tau = rng.random_range(0.0..5.0);
        let dt = rng.random_range(0.01..5.0);
        let event = SurvivalModel::baseline_only(Baseline::Exponential { rate: lambda }, PH).unwrap();
        let dropout = DropoutModel::parametric(Baseline::Exponential { rate: psi }).unwrap();
        let q = pi_general(&event, &dropout, &AtRiskProfile { tau, z: vec![] }, dt).unwrap();
        let want = lambda * (1.0 - (-(lambda + psi) * dt).exp()) / (lambda + psi);
        worst = worst.max((q - want).abs());
    }
    outcome(worst < 1e-8, format!("max abs error {worst:.2e} over 1000 tuples (tol 1e-8)"))
}

fn truncated_sampler_fidelity() -> Verdict {
    let norm = Normal::standard();
    let beta = 0.2f64.ln();
    let weibull = SurvivalModel::new(Baseline::Weibull { shape: 0.6, scale: 1.4 }, PH, vec![beta]).unwrap();
    let po = SurvivalModel::new(
        Baseline::LogLogistic { shape: 1.7, scale: 2.0 },
        LinkScale::ProportionalOdds,
        vec![0.8],
    )
    .unwrap();
    let lp = SurvivalModel::new(
        Baseline::LogNormal { meanlog: 0.4, sdlog: 1.3 },
        LinkScale::LinearProbit,
        vec![-0.5],
    )
    .unwrap();
    let rp = SurvivalModel::new(
        Baseline::RoystonParmar {
            knots: SplineKnots::new(-3.0, 1.5, vec![-0.5]).unwrap(),
            coefficients: vec![-0.5, 1.2, 0.02],
        },
        PH,
        vec![0.3],
    )
    .unwrap();
    let weibull_cdf = |t: f64| 1.0 - (-1.4 * t.powf(0.6) * beta.exp()).exp();
    let po_cdf = |t: f64| 1.0 / (1.0 + (-(1.7 * (t.ln() - 2f64.ln()) + 0.8)).exp());
    let lp_cdf = |t: f64| norm.cdf((t.ln() - 0.4) / 1.3 - 0.5);
    let rp_cdf = |t: f64| {
        let x = t.ln();
        let cube = |d: f64| d.max(0.0).powi(3);
        let lam = 2.0 / 4.5;
        let s = -0.5 + 1.2 * x + 0.02 * (cube(x + 0.5) - lam * cube(x + 3.0) - (1.0 - lam) * cube(x - 1.5));
        1.0 - (-(s + 0.3).exp()).exp()
    };
    let cases: [(&str, &SurvivalModel, &dyn Fn(f64) -> f64); 4] = [
        ("weibull-ph", &weibull, &weibull_cdf),
        ("loglogistic-po", &po, &po_cdf),
        ("lognormal-lp", &lp, &lp_cdf),
        ("rp1-ph", &rp, &rp_cdf),
    ];
    let tau = 1.5;
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for (i, (name, m, cdf)) in cases.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3 + i as u64);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| sample_truncated(m, &[1.0], tau, open_unit(&mut rng)).unwrap())
            .collect();
        let f_tau = cdf(tau);
        let d = ks_statistic(draws, |t| cdf(t) / f_tau);
        worst = worst.max(d);
        parts.push(format!("{name} {d:.4}"));
    }
    outcome(worst < 0.01, format!("KS {} (tol 0.01)", parts.join(", ")))
}

fn calibration_reproduction() -> Verdict {
    let s2 = ScenarioSpec::s2(1.0, 1.0, 0.2, 0.2, 1000);
    let s1 = ScenarioSpec::s1(1.0, 1.0, 0.8, 0.1, 0.1, 0.5, 1000);
    let runs = 50;
    let l2: Vec<f64> = (0..runs).map(|s| calibrate_lambda0(&s2, 1000 + s).unwrap().lambda0).collect();
    let l1: Vec<f64> = (0..runs).map(|s| calibrate_lambda0(&s1, 2000 + s).unwrap().lambda0).collect();
    let share = |v: &[f64], lo: f64, hi: f64| v.iter().filter(|x| (lo..=hi).contains(*x)).count() as f64 / v.len() as f64;
    let mean2 = l2.iter().sum::<f64>() / runs as f64;
    let mean1 = l1.iter().sum::<f64>() / runs as f64;
    let (in2, in1) = (share(&l2, 2.438, 2.991), share(&l1, 0.362, 0.411));
    outcome(
        in2 >= 0.95 && (mean2 - 2.816).abs() <= 0.15 && in1 >= 0.95,
        format!(
            "S2 mean {mean2:.3}, {:.0}% in [2.438, 2.991]; S1 mean {mean1:.3}, {:.0}% in [0.362, 0.411]",
            100.0 * in2,
            100.0 * in1
        ),
    )
}

fn true_bounds_reproduction() -> Verdict {
    let mut spec = ScenarioSpec::s2(1.0, 1.0, 0.2, 0.2, 1000);
    spec.n_sim = 200;
    let r = run_scenario(&spec, &ModelUnderTest::Oracle, 5, None).unwrap();
    let (lo, hi) = (r.summary.mean_true_lower, r.summary.mean_true_upper);
    outcome(
        (lo - 34.0).abs() <= 3.0 && (hi - 56.6).abs() <= 3.0 && r.summary.replicates_failed == 0,
        format!("mean true interval ({lo:.2}, {hi:.2}) vs (34.0, 56.6) ± 3"),
    )
}

fn coverage_at_desk_scale() -> Verdict {
    let mut spec = ScenarioSpec::s2(2.0, 1.0, 0.2, 0.2, 1000);
    spec.n_sim = 200;
    spec.b = 100;
    let model = ModelUnderTest::Bootstrap {
        event: ModelSpec::natural(Family::Weibull),
    };
    let r = run_scenario(&spec, &model, 6, None).unwrap();
    let s = &r.summary;
    outcome(
        (0.91..=0.985).contains(&s.ucp) && !s.unreliable,
        format!(
            "UCP {:.4} ± {:.4} (target [0.91, 0.985]), {} failed replicates, width ratio {:.3}",
            s.ucp,
            s.ucp_se,
            s.replicates_failed,
            s.mean_width_ratio.unwrap_or(f64::NAN)
        ),
    )
}

fn property_suites() -> Verdict {
    let mut failures = Vec::new();

    // quantile round trips per family
    let knots = SplineKnots::new(-2.0, 1.5, vec![-0.3]).unwrap();
    let models = [
        SurvivalModel::new(Baseline::Exponential { rate: 0.7 }, PH, vec![0.4]).unwrap(),
        SurvivalModel::new(Baseline::Weibull { shape: 0.6, scale: 1.3 }, PH, vec![0.4]).unwrap(),
        SurvivalModel::new(Baseline::LogNormal { meanlog: 0.2, sdlog: 0.9 }, LinkScale::LinearProbit, vec![0.4])
            .unwrap(),
        SurvivalModel::new(
            Baseline::LogLogistic { shape: 1.6, scale: 1.1 },
            LinkScale::ProportionalOdds,
            vec![0.4],
        )
        .unwrap(),
        SurvivalModel::new(Baseline::GeneralizedGamma { mu: 0.3, sigma: 0.8, q: 0.5 }, PH, vec![0.4]).unwrap(),
        SurvivalModel::new(
            Baseline::RoystonParmar {
                knots,
                coefficients: vec![0.1, 1.3, 0.03],
            },
            LinkScale::ProportionalOdds,
            vec![0.4],
        )
        .unwrap(),
    ];
    let mut worst = 0.0f64;
    for m in &models {
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            let t = m.quantile(u, &[1.0]).unwrap();
            worst = worst.max((m.cdf(t, &[1.0]).unwrap() - u).abs() / u);
        }
    }
    if worst >= 1e-7 {
        failures.push(format!("quantile round trip {worst:.1e}"));
    }

    // indicator exclusivity on generated data
    for spec in [
        ScenarioSpec::s2(1.0, 1.0, 0.2, 0.2, 1000),
        ScenarioSpec::s1(2.0, 1.0, 0.8, 0.5, 0.3, 0.5, 1000),
    ] {
        let cal = calibrate_lambda0(&spec, 7).unwrap();
        for r in 0..10 {
            let t = generate_trial(&spec, &cal, 7, r).unwrap();
            for (i, s) in t.dataset.subjects().iter().enumerate() {
                let flags = usize::from(s.delta()) + usize::from(s.epsilon()) + usize::from(s.gamma());
                let admin = t.dataset.t_c() - s.entry_time;
                let censored = admin < t.event_times[i].min(t.dropout_times[i]);
                if flags != 1 || s.gamma() != censored {
                    failures.push(format!("indicator mismatch for subject {}", s.id));
                }
            }
        }
    }

    // bootstrap reproducibility, nesting in alpha, monotone CMF mean
    let data = synthetic_trial(
        &TrialShape {
            n: 400,
            events: 90,
            dropouts: 20,
            accrual_span: 2.0,
            interim: 3.0,
            shape: 0.8,
            hazard_ratio: 0.6,
        },
        8,
    )
    .unwrap();
    let fits = FittedModels::fit(&data, ModelSpec::natural(Family::Weibull), Family::Exponential, &FitOptions::default())
        .unwrap();
    let horizons = [0.25, 0.5, 1.0, 2.0];
    let run = |threads| {
        let cfg = BootstrapConfig {
            threads: Some(threads),
            ..BootstrapConfig::new(50, 0.05, 9).unwrap()
        };
        bootstrap_cmfs(&data, &fits, &horizons, &cfg).unwrap()
    };
    let one = run(1);
    let bits = |v: &[event_forecast::bootstrap::BootstrapCmf]| {
        v.iter().flat_map(|c| c.cmf.iter().map(|x| x.to_bits())).collect::<Vec<_>>()
    };
    if bits(&one) != bits(&run(4)) {
        failures.push("bootstrap differs across thread counts".into());
    }
    for c in &one {
        let widths: Vec<_> = [0.01, 0.05, 0.2]
            .iter()
            .map(|&a| interval_from_cmf(&c.cmf, a, c.horizon).unwrap())
            .collect();
        if widths.windows(2).any(|w| w[1].lower < w[0].lower || w[1].upper > w[0].upper) {
            failures.push(format!("intervals not nested at horizon {}", c.horizon));
        }
    }
    if one.windows(2).any(|w| w[1].mean() < w[0].mean()) {
        failures.push("CMF mean not monotone in the horizon".into());
    }
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            format!("quantile round trip {worst:.1e}; exclusivity, reproducibility, nesting, monotonicity hold")
        } else {
            failures.join("; ")
        },
    )
}

fn case_study_smoke() -> Verdict {
    let shape = TrialShape {
        n: 809,
        events: 164,
        dropouts: 62,
        accrual_span: 2.5,
        interim: 3.5,
        shape: 0.9,
        hazard_ratio: 0.7,
    };
    let data = synthetic_trial(&shape, 2024).unwrap();
    let cfg = RunConfig::from_toml(
        "schema_version = 1\ncovariates = [\"treatment\"]\nhorizons = [0.5, 1.0, 1.5, 2.0]\nbootstrap_replicates = 5000\nseed = 1",
    )
    .unwrap();
    let report = predict(&data, &cfg, None).unwrap();
    let sane = report.rows.len() == 4
        && report.rows.iter().all(|r| r.m_at_risk == 583 && r.lower <= r.upper)
        && data.count(Outcome::Event) == 164
        && data.count(Outcome::Dropout) == 62;
    let last = report.rows.last().unwrap();
    outcome(
        sane,
        format!(
            "809 subjects, 164 events, 62 dropouts, B=5000: interval at horizon {} is [{}, {}] (shape check only)",
            last.horizon, last.lower, last.upper
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, Duration); 8] = [
        ("1 Poisson-binomial exactness", poisson_binomial_exactness, Duration::from_secs(5)),
        ("2 closed-form event probability", closed_form_oracle, Duration::from_secs(10)),
        ("3 truncated sampler fidelity", truncated_sampler_fidelity, Duration::from_secs(60)),
        ("4 baseline-scale calibration", calibration_reproduction, Duration::from_secs(300)),
        ("5 true-bounds reproduction", true_bounds_reproduction, Duration::from_secs(300)),
        ("6 coverage at desk scale", coverage_at_desk_scale, Duration::from_secs(1800)),
        ("7 property suites", property_suites, Duration::from_secs(600)),
        ("8 case-study-shaped smoke test", case_study_smoke, Duration::from_secs(1800)),
    ];
    let mut failed = 0;
    for (name, check, budget) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= budget;
        failed += usize::from(!pass);
        println!(
            "{} criterion {name}: {} [{:.1}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
