// Rejection and metropolis ensembles of |psi|^2 over a spacetime box, and a
// two-sample KS comparison per coordinate.

use bohmflow::scenario::Scenario;
use bohmflow::stats::{compare_ensembles, sample_equilibrium, SamplerMethod, SamplerTuning};

fn run_example() -> bohmflow::Result<()> {
    let s = Scenario::load("two_mode", &[])?;
    let psi = s.relativistic()?;
    let region = &s.sampler.as_ref().expect("two_mode has a sampler").region;
    let tuning = SamplerTuning::default();
    let a = sample_equilibrium(&psi, region, 2000, 1, SamplerMethod::Rejection, &tuning)?;
    let b = sample_equilibrium(&psi, region, 2000, 2, SamplerMethod::Metropolis, &tuning)?;
    println!("acceptance: rejection {:.3}, metropolis {:.3}", a.acceptance_rate, b.acceptance_rate);
    for (k, r) in compare_ensembles(&a, &b).iter().enumerate() {
        println!("coordinate {k}: D = {:.4}, critical {:.4}, agree {}", r.statistic, r.critical, r.passed);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
