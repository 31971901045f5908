//! Small Monte Carlo coverage study comparing the oracle, plug-in and
//! bootstrap intervals on one scenario.
//!
//! ```text
//! cargo run --release --example coverage_study
//! ```

use event_forecast::fit::ModelSpec;
use event_forecast::sim::{run_scenario, ModelUnderTest, ScenarioSpec};
use event_forecast::survival::Family;

fn main() -> event_forecast::Result<()> {
    let spec = ScenarioSpec {
        n_sim: 100,
        b: 50,
        ..ScenarioSpec::s2(1.0, 1.0, 0.5, 0.5, 500)
    };
    let weibull = ModelSpec::natural(Family::Weibull);
    println!("{:<10} {:>7} {:>7} {:>9} {:>11}", "model", "UCP", "se", "realized", "width ratio");
    for model in [
        ModelUnderTest::Oracle,
        ModelUnderTest::Plugin { event: weibull },
        ModelUnderTest::Bootstrap { event: weibull },
    ] {
        let r = run_scenario(&spec, &model, 5, None)?;
        let s = &r.summary;
        let name = match model {
            ModelUnderTest::Oracle => "oracle",
            ModelUnderTest::Plugin { .. } => "plug-in",
            ModelUnderTest::Bootstrap { .. } => "bootstrap",
        };
        println!(
            "{name:<10} {:>7.4} {:>7.4} {:>9.3} {:>11}",
            s.ucp,
            s.ucp_se,
            s.realized_coverage,
            s.mean_width_ratio.map_or("-".into(), |w| format!("{w:.3}"))
        );
    }
    Ok(())
}
