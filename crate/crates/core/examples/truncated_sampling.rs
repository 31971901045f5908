//! Draws event times from a fitted model truncated to `(0, tau]` and compares
//! the empirical CDF with the target.
//!
//! ```text
//! cargo run --release --example truncated_sampling
//! ```

use event_forecast::bootstrap::sample_truncated;
use event_forecast::rng::stream_rng;
use event_forecast::survival::{Baseline, LinkScale, SurvivalModel};
use rand::Rng;

fn main() -> event_forecast::Result<()> {
    let model = SurvivalModel::new(
        Baseline::LogLogistic { shape: 1.7, scale: 2.0 },
        LinkScale::ProportionalOdds,
        vec![0.8],
    )?;
    let (z, tau) = ([1.0], 1.5);
    let mut rng = stream_rng(3, 0);
    let mut draws = Vec::with_capacity(50_000);
    while draws.len() < 50_000 {
        let u: f64 = rng.random();
        if u > 0.0 {
            draws.push(sample_truncated(&model, &z, tau, u)?);
        }
    }
    let f_tau = model.cdf(tau, &z)?;
    println!("{:>6} {:>10} {:>10}", "t", "empirical", "target");
    for t in [0.1, 0.3, 0.6, 0.9, 1.2, 1.5] {
        let empirical = draws.iter().filter(|&&d| d <= t).count() as f64 / draws.len() as f64;
        println!("{t:>6} {empirical:>10.4} {:>10.4}", model.cdf(t, &z)? / f_tau);
    }
    Ok(())
}
