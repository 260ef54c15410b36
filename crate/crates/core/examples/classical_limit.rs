// Shrinking hbar at fixed physical packet geometry: the quantum term, the
// proper-time lag and the deviation from the classical path all fall.

use bohmflow::dynamics::{classical_limit_study, IntegratorConfig, PacketFamily};
use bohmflow::spacetime::ParticleParams;

fn run_example() -> bohmflow::Result<()> {
    let family = PacketFamily {
        center_momentum: vec![0.5],
        width: 5.0,
        n_modes: 31,
        particle: ParticleParams::neutral(1.0)?,
        c: 1.0,
    };
    let r = classical_limit_study(&family, &[1.0, 0.25, 0.0625], &IntegratorConfig::rk4(0.05, 200))?;
    println!("{:>8} {:>14} {:>14} {:>14}", "hbar", "max Q/m2c2", "max |tau-sig|", "max path dev");
    for e in &r.entries {
        println!("{:>8} {:>14.4e} {:>14.4e} {:>14.4e}", e.hbar, e.max_quantum_ratio, e.max_tau_deviation, e.max_path_deviation);
    }
    println!("Q exponent {:.3}, monotone {}", r.quantum_ratio_exponent, r.monotone);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
