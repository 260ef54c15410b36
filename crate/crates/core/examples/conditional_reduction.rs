// With equal temporal offsets the conditional wave function obeys a
// single-time Schrodinger equation in sigma; with a spread larger than the
// clock precision the reduction is refused.

use bohmflow::nonrel::{conditional_wavefunction, single_time_reduction, TemporalOffsets};
use bohmflow::scenario::Scenario;

fn run_example() -> bohmflow::Result<()> {
    let s = Scenario::load("conditional", &[])?;
    let phi = conditional_wavefunction(s.nonrelativistic()?, s.offsets()?)?;
    let x = s.initial_positions();
    for sigma in [0.0, 0.5, 1.0] {
        println!("sigma {sigma}: residual of i hbar d_sigma phi = H phi: {:.2e}", phi.sigma_schrodinger_residual(&x, sigma)?);
    }
    let reduced = single_time_reduction(&s.offsets()?)?;
    println!("equal offsets reduce to {:?}", reduced.deltas);
    match single_time_reduction(&TemporalOffsets::new(vec![0.0, 0.2], 0.05)?) {
        Err(e) => println!("unequal offsets: {e}"),
        Ok(_) => println!("unequal offsets: reduced"),
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
