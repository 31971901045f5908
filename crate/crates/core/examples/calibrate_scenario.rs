//! Calibrates the baseline event scale of simulation scenarios to a target
//! interim censoring proportion.
//!
//! ```text
//! cargo run --release --example calibrate_scenario
//! ```

use event_forecast::sim::{calibrate_lambda0, ScenarioSpec};

fn main() -> event_forecast::Result<()> {
    let scenarios = [
        ScenarioSpec::s2(1.0, 1.0, 0.2, 0.2, 2000),
        ScenarioSpec::s2(1.0, 1.0, 1.0, 0.8, 2000),
        ScenarioSpec::s1(1.0, 1.0, 1.0, 0.5, 1.0, 0.5, 2000),
    ];
    println!("{:<6} {:>5} {:>6} {:>8} {:>10} {:>10} {:>8}", "study", "HR", "rho", "target", "lambda0", "achieved", "rho*");
    for spec in &scenarios {
        let cal = calibrate_lambda0(spec, 1)?;
        println!(
            "{:<6} {:>5} {:>6} {:>8} {:>10.4} {:>10.4} {:>8}",
            format!("{:?}", spec.study),
            spec.hr,
            spec.rho,
            spec.p_censor_target,
            cal.lambda0,
            cal.achieved_censoring,
            cal.norta.map_or("-".to_string(), |n| format!("{:.4}", n.rho_star))
        );
    }
    Ok(())
}
