// A gauge pair (phase-transformed psi with a pure-gauge potential) drives
// the same trajectories as the untransformed state with no potential.

use bohmflow::dynamics::{integrate, IntegratorConfig};
use bohmflow::fields::{EMPotential, GaugeFunction};
use bohmflow::spacetime::{Constants, FourVector, ParticleParams};
use bohmflow::wavefunction::{gauge_transform, Branch, ModeSumWaveFunction};
use num_complex::Complex64;

fn run_example() -> bohmflow::Result<()> {
    let psi = ModeSumWaveFunction::superposition(
        &[
            (Complex64::new(1.0, 0.0), vec![0.3], Branch::Positive),
            (Complex64::new(0.8, 0.0), vec![-0.5], Branch::Positive),
        ],
        ParticleParams::new(1.0, 1.0)?,
        Constants::natural(),
    )?;
    let chi = GaugeFunction::Wave { amplitude: 0.7, wavevector: vec![0.9, 0.4] };
    let cfg = IntegratorConfig::rk4(0.01, 100);
    let x0 = [FourVector::new(&[0.5], 0.0)];
    let plain = integrate(&psi, &[EMPotential::Zero], &x0, &cfg)?;
    let gauged = integrate(&gauge_transform(&psi, chi.clone())?, &[EMPotential::PureGauge { chi }], &x0, &cfg)?;
    let diff = plain
        .states
        .iter()
        .zip(&gauged.states)
        .map(|(a, b)| a.positions[0].sub(&b.positions[0]).euclidean_norm())
        .fold(0.0, f64::max);
    println!("final event (plain):  {:?}", plain.last().positions[0].components());
    println!("final event (gauged): {:?}", gauged.last().positions[0].components());
    println!("max difference over 100 steps: {diff:.2e}");
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
