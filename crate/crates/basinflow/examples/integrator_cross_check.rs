//! Cross-check the time stepper against an independent solution built from
//! the variation-of-constants formula in the Laplacian eigenbasis.
//!
//! Run with: cargo run --example integrator_cross_check

use basinflow::flow::{evolve, mild_solution, StepperConfig, StopRules};
use basinflow::grid::{eigenmode, norm_h1, norm_l2, RectDomain};
use basinflow::ProblemSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = RectDomain::unit(9)?;
    let spec = ProblemSpec::polynomial_preset(domain);
    let e1 = eigenmode(&domain, 1, 1)?;
    let u0 = e1.scaled(0.1 / norm_h1(&e1));

    let stepper = StepperConfig {
        dt: 1e-4,
        solver_tol: 1e-12,
        max_cg_iters: 2000,
        sample_stride: 10,
    };

    println!(
        "{:>8} {:>14} {:>14} {:>12} {:>14}",
        "t", "|evolved|", "|integral|", "L2 gap", "fixed-pt delta"
    );
    for step in 1..=4 {
        let t = 0.0125 * step as f64;
        let out = evolve(&spec, u0.clone(), &stepper, &StopRules::until(t))?;
        let (mild, delta) = mild_solution(&spec, &u0, t, 256, 1e-13, 120)?;
        let mut diff = out.state.u.clone();
        diff.axpy(-1.0, &mild);
        println!(
            "{:8.4} {:14.6e} {:14.6e} {:12.4e} {:14.4e}",
            t,
            norm_l2(&out.state.u),
            norm_l2(&mild),
            norm_l2(&diff),
            delta
        );
    }
    println!("\nboth solvers are first-principles implementations; agreement");
    println!("to O(dt) over the horizon validates the operator splitting.");
    Ok(())
}
