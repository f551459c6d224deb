//! Audit the structural conditions on a model before trusting any run:
//! both shipped presets come out clean, and a broken model is caught with
//! a concrete numeric witness.
//!
//! Run with: cargo run --example hypothesis_audit

use basinflow::grid::RectDomain;
use basinflow::model::{verify_conditions, NonlocalModel, SamplePlan};
use basinflow::ProblemSpec;
use std::sync::Arc;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = RectDomain::unit(9)?;
    let plan = SamplePlan::default();

    for (name, spec) in [
        ("example1 (exponential)", ProblemSpec::exponential_planar_preset(domain)),
        ("example2 (polynomial)", ProblemSpec::polynomial_preset(domain)),
    ] {
        let report = verify_conditions(&spec, &plan);
        println!("=== {name}: all_pass = {} ===", report.all_pass());
        println!("{report}");
    }

    // Sabotage the density: a negative g breaks the growth pairing, and the
    // audit pins the failure to a sample point.
    let broken = ProblemSpec::new(
        domain,
        basinflow::model::NonlinearityModel::polynomial(1.4, 1.2, 0.2)?,
        NonlocalModel::custom(Arc::new(|t| -1.0 - t * t), Arc::new(|t| -2.0 * t)),
        basinflow::model::CoefficientModel::identity(),
    )?;
    let report = verify_conditions(&broken, &plan);
    println!("=== negative density: all_pass = {} ===", report.all_pass());
    let check = report
        .get("growth_compatibility")
        .expect("check always present");
    println!("growth_compatibility: {:?} — {}", check.verdict, check.details);
    if let Some(w) = &check.witness {
        println!("witness: {} (lhs {:.4e} vs rhs {:.4e})", w.location, w.lhs, w.rhs);
    }
    Ok(())
}
