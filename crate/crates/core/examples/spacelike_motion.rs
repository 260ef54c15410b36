// Superposing both frequency branches makes the quantum term exceed m^2 c^2
// at t = 0. The particle then leaves the light cone: dT/dsigma = 0 and proper
// time stops accumulating.

use bohmflow::dynamics::{integrate, IntegratorConfig};
use bohmflow::fields::EMPotential;
use bohmflow::spacetime::{Constants, FourVector, ParticleParams};
use bohmflow::wavefunction::{Branch, ModeSumWaveFunction};
use num_complex::Complex64;

fn run_example() -> bohmflow::Result<()> {
    let one = Complex64::new(1.0, 0.0);
    let psi = ModeSumWaveFunction::superposition(
        &[(one, vec![0.3], Branch::Positive), (one, vec![0.3], Branch::Negative)],
        ParticleParams::neutral(1.0)?,
        Constants::natural(),
    )?;
    let rec = integrate(&psi, &[EMPotential::Zero], &[FourVector::new(&[0.0], 0.0)], &IntegratorConfig::rk4(0.1, 10))?;
    for st in rec.states.iter().step_by(5) {
        println!(
            "sigma {:.1}: x = {:.3}, ct = {:.3}, Q/m^2c^2 = {:.4}, {} (tau valid: {})",
            st.sigma,
            st.positions[0].spatial()[0],
            st.positions[0].temporal(),
            st.quantum_ratio[0],
            st.interval_class[0].as_str(),
            st.tau_valid[0]
        );
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
