//! Probability that a subject still at risk at the interim has the event
//! within the next `dt`, with and without competing dropout.
//!
//! ```text
//! cargo run --example event_probability
//! ```

use event_forecast::fit::DropoutModel;
use event_forecast::probability::{pi_exponential_closed, pi_general, pi_no_dropout, AtRiskProfile};
use event_forecast::survival::{Baseline, LinkScale, SurvivalModel};

fn main() -> event_forecast::Result<()> {
    let hr: f64 = 0.7;
    let weibull = SurvivalModel::new(
        Baseline::Weibull { shape: 0.6, scale: 0.9 },
        LinkScale::ProportionalHazards,
        vec![hr.ln()],
    )?;
    let dropout = DropoutModel::parametric(Baseline::Exponential { rate: 0.1 })?;
    println!("Weibull-PH events, exponential dropout (rate 0.1), dt = 1");
    println!("{:>5} {:>5} {:>12} {:>12}", "tau", "z", "no dropout", "dropout");
    for tau in [0.25, 1.0, 2.5] {
        for z in [0.0, 1.0] {
            let prof = AtRiskProfile { tau, z: vec![z] };
            println!(
                "{tau:>5} {z:>5} {:>12.6} {:>12.6}",
                pi_no_dropout(&weibull, &prof, 1.0)?,
                pi_general(&weibull, &dropout, &prof, 1.0)?
            );
        }
    }

    let exp = SurvivalModel::baseline_only(Baseline::Exponential { rate: 0.4 }, LinkScale::ProportionalHazards)?;
    let prof = AtRiskProfile { tau: 1.3, z: vec![] };
    println!(
        "\nexponential/exponential: closed form {:.12}, quadrature {:.12}",
        pi_exponential_closed(0.4, 0.1, 1.0)?,
        pi_general(&exp, &dropout, &prof, 1.0)?
    );
    Ok(())
}
