//! Distribution of the number of events among subjects with unequal event
//! probabilities, under each evaluation method.
//!
//! ```text
//! cargo run --example poisson_binomial
//! ```

use event_forecast::bootstrap::interval_from_cmf;
use event_forecast::poibin::{PoiBin, PoiBinMethod};

fn main() -> event_forecast::Result<()> {
    let pi: Vec<f64> = (0..18).map(|j| 0.05 + 0.05 * j as f64).collect();
    println!("m = {}, mean = {:.3}", pi.len(), pi.iter().sum::<f64>());
    println!("{:<12} {:>8} {:>8} {:>8}", "method", "F(4)", "F(8)", "95% PI");
    for method in [
        PoiBinMethod::BruteForce,
        PoiBinMethod::ExactDp,
        PoiBinMethod::Poisson,
        PoiBinMethod::Normal,
    ] {
        let d = PoiBin::new(pi.clone(), method)?;
        let pi95 = interval_from_cmf(d.cmf_values(), 0.05, 1.0)?;
        println!(
            "{:<12} {:>8.5} {:>8.5} {:>8}",
            method.to_string(),
            d.cmf(4)?,
            d.cmf(8)?,
            format!("[{}, {}]", pi95.lower, pi95.upper)
        );
    }
    Ok(())
}
