// Boost, integrate, unboost: the worldline is frame independent. Then the
// probability of a spacetime box against that of its boosted image.

use bohmflow::dynamics::{integrate, IntegratorConfig};
use bohmflow::fields::EMPotential;
use bohmflow::scenario::Scenario;
use bohmflow::spacetime::lorentz_boost;
use bohmflow::stats::frame_independence_test;

fn run_example() -> bohmflow::Result<()> {
    let s = Scenario::load("two_mode", &[])?;
    let psi = s.relativistic()?;
    let beta = 0.5;
    let cfg = IntegratorConfig::rk4(0.01, 200);
    let x0 = s.initial_events()?;
    let a = integrate(&psi, &[EMPotential::Zero], &x0, &cfg)?;
    let b = integrate(&psi.boosted(beta, 0)?, &[EMPotential::Zero], &[lorentz_boost(&x0[0], beta, 0)?], &cfg)?;
    let back = lorentz_boost(&b.last().positions[0], -beta, 0)?;
    println!("unboosted run ends at   {:?}", a.last().positions[0].components());
    println!("boosted run, mapped back {:?}", back.components());
    let f = s.frames.as_ref().expect("two_mode has a frames section");
    let r = frame_independence_test(&psi, &f.region, beta, 20_000, f.seed)?;
    println!(
        "P(V) = {:.4} +- {:.4}, P'(LV) = {:.4} +- {:.4}, within 3 SE: {}",
        r.probability, r.standard_error, r.probability_boosted, r.standard_error_boosted, r.passed
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
