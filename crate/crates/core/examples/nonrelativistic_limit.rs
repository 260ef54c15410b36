// Relativistic against Schrodinger-Bohm trajectories as v/c shrinks. Both
// the trajectory deviation and max |dT/dsigma - 1| fall as (v/c)^2.

use bohmflow::nonrel::{nr_limit_scan, NrScan};
use bohmflow::spacetime::{Constants, ParticleParams};

fn run_example() -> bohmflow::Result<()> {
    let scan = NrScan {
        terms: vec![([1.0, 0.0], vec![1.0]), ([0.5, 0.0], vec![-0.5])],
        particle: ParticleParams::neutral(1.0)?,
        constants: Constants::natural(),
        x0: vec![0.3],
        steps: 400,
        unit_span: 3.0,
    };
    let r = nr_limit_scan(&scan, &[0.01, 0.03, 0.1])?;
    for run in &r.runs {
        println!(
            "v/c {:<5} relative deviation {:.3e}, max|dT/dsigma - 1| {:.3e}",
            run.v_over_c, run.max_deviation, run.decoupling.max_deviation
        );
    }
    println!("exponents: deviation {:.3}, decoupling {:.3}", r.scaling_exponent, r.decoupling_exponent);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
