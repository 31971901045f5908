//! Prediction intervals for the number of additional events: plug-in and
//! conditional parametric bootstrap.
//!
//! ```text
//! cargo run --release --example bootstrap_interval
//! ```

use event_forecast::bootstrap::{bootstrap_cmfs, plugin_interval, prediction_interval, BootstrapConfig};
use event_forecast::fit::{FitOptions, FittedModels, ModelSpec};
use event_forecast::sim::{synthetic_trial, TrialShape};
use event_forecast::survival::Family;

fn main() -> event_forecast::Result<()> {
    let shape = TrialShape {
        n: 500,
        events: 110,
        dropouts: 40,
        accrual_span: 2.5,
        interim: 3.0,
        shape: 0.9,
        hazard_ratio: 0.7,
    };
    let data = synthetic_trial(&shape, 11)?;
    let fits = FittedModels::fit(
        &data,
        ModelSpec::natural(Family::Weibull),
        Family::Exponential,
        &FitOptions::default(),
    )?;
    let horizons = [0.5, 1.0, 2.0];
    let cfg = BootstrapConfig::new(300, 0.05, 42)?;
    let cmfs = bootstrap_cmfs(&data, &fits, &horizons, &cfg)?;
    println!("{} subjects at risk", data.at_risk().count());
    println!("{:>4} {:>10} {:>12} {:>12}", "dt", "mean", "plug-in", "bootstrap");
    for cmf in &cmfs {
        let boot = prediction_interval(cmf, cfg.alpha)?;
        let plug = plugin_interval(&data, &fits.event.model, &fits.dropout.model, cmf.horizon, cfg.alpha)?;
        println!(
            "{:>4} {:>10.2} {:>12} {:>12}",
            cmf.horizon,
            cmf.mean(),
            format!("[{}, {}]", plug.lower, plug.upper),
            format!("[{}, {}]", boot.lower, boot.upper)
        );
    }
    Ok(())
}
