//! Fits candidate event-time models to a censored interim dataset and ranks
//! them by BIC.
//!
//! ```text
//! cargo run --release --example fit_models
//! ```

use event_forecast::commands::compare_models;
use event_forecast::fit::{fit_dropout_model, ModelSpec};
use event_forecast::sim::{synthetic_trial, TrialShape};
use event_forecast::survival::{Family, LinkScale};

fn main() -> event_forecast::Result<()> {
    let shape = TrialShape {
        n: 400,
        events: 120,
        dropouts: 30,
        accrual_span: 2.0,
        interim: 3.0,
        shape: 0.8,
        hazard_ratio: 0.6,
    };
    let data = synthetic_trial(&shape, 7)?;
    let specs = [
        ModelSpec::natural(Family::Exponential),
        ModelSpec::natural(Family::Weibull),
        ModelSpec::natural(Family::LogNormal),
        ModelSpec::natural(Family::LogLogistic),
        ModelSpec::natural(Family::GeneralizedGamma),
        ModelSpec::new(Family::RoystonParmar { knots: 1 }, LinkScale::ProportionalHazards),
        ModelSpec::new(Family::Weibull, LinkScale::ProportionalOdds),
    ];
    println!("{:<28} {:>3} {:>11} {:>10} {:>10}", "model", "q", "loglik", "AIC", "BIC");
    for row in compare_models(&data, &specs)? {
        println!(
            "{:<28} {:>3} {:>11.3} {:>10.3} {:>10.3}{}",
            row.model,
            row.q,
            row.loglik,
            row.aic,
            row.bic,
            if row.converged { "" } else { "  (not converged)" }
        );
    }
    let dropout = fit_dropout_model(&data, Family::Exponential)?;
    let rate = dropout.model.model().map_or(0.0, |m| m.baseline().parameters()[0]);
    println!("\nexponential dropout rate {rate:.4}, loglik {:.3}", dropout.loglik);
    Ok(())
}
