// A free plane wave moves on a straight timelike worldline: X = 0.3 sigma,
// T = omega sigma and proper time equal to sigma.

use bohmflow::dynamics::{integrate, IntegratorConfig};
use bohmflow::fields::EMPotential;
use bohmflow::spacetime::{Constants, FourVector, ParticleParams};
use bohmflow::wavefunction::{Branch, ModeSumWaveFunction};

fn run_example() -> bohmflow::Result<()> {
    let psi = ModeSumWaveFunction::plane_wave(&[0.3], Branch::Positive, ParticleParams::neutral(1.0)?, Constants::natural())?;
    let rec = integrate(&psi, &[EMPotential::Zero], &[FourVector::new(&[0.0], 0.0)], &IntegratorConfig::rk4(0.01, 100))?;
    let end = rec.last();
    println!("sigma = {:.2}", end.sigma);
    println!("X = {:.12}  (0.3 sigma)", end.positions[0].spatial()[0]);
    println!("T = {:.12}  (sqrt(1.09) sigma)", end.positions[0].temporal());
    println!("tau = {:.12}, class {}", end.proper_times[0], end.interval_class[0].as_str());
    assert!((end.positions[0].spatial()[0] - 0.3).abs() < 1e-12);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
