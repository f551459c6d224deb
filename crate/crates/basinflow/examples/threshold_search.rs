//! Locate the basin boundary along a ray: geometric bracketing first, then
//! bisection on the dichotomy verdict down to a tight scalar interval.
//!
//! Run with: cargo run --example threshold_search

use basinflow::classify::ClassifierConfig;
use basinflow::grid::{eigenmode, norm_h1, RectDomain};
use basinflow::threshold::{bisect, bracket_ray, ThresholdConfig};
use basinflow::ProblemSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = RectDomain::unit(17)?;
    let spec = ProblemSpec::cubic_preset(domain);
    let ccfg = ClassifierConfig::for_domain(&domain);
    let mut tcfg = ThresholdConfig::default_for(&ccfg);
    tcfg.tol_s = 1e-6;

    let e1 = eigenmode(&domain, 1, 1)?;
    let v = e1.scaled(1.0 / norm_h1(&e1));

    let bracket = bracket_ray(&v, &spec, &ccfg, &tcfg)?;
    println!(
        "bracket after {} probes: decay at s = {}, blow-up at s = {}",
        bracket.probes, bracket.s_low, bracket.s_high
    );

    let result = bisect(&v, bracket, &spec, &ccfg, &tcfg)?;
    println!("\nbisection ({} iterations):", result.history.len());
    for (i, (lo, hi)) in result.history.iter().enumerate() {
        if i < 4 || i + 2 >= result.history.len() {
            println!("  [{lo:.10}, {hi:.10}]  width {:.3e}", hi - lo);
        } else if i == 4 {
            println!("  ...");
        }
    }
    println!(
        "\nthreshold scalar s* = {:.8} (escalations: {}, inconclusive: {})",
        result.s_star, result.escalations, result.inconclusive
    );
    println!(
        "datum {} * v separates decay from blow-up along this ray;",
        result.s_star
    );
    println!("the same search backs the steady-state extraction pipeline.");
    Ok(())
}
