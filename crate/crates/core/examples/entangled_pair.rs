// Two entangled particles, each with its own time coordinate, advanced by
// one shared parameter sigma. Prints the per-particle mass-shell residual.

use bohmflow::dynamics::{integrate, mass_shell_residual};
use bohmflow::scenario::Scenario;

fn run_example() -> bohmflow::Result<()> {
    let s = Scenario::load("entangled_pair", &[])?;
    let psi = s.relativistic()?;
    let rec = integrate(&psi, &s.fields(), &s.initial_events()?, &s.integrator_config()?)?;
    for st in rec.states.iter().step_by(25) {
        let res = mass_shell_residual(&psi, &s.fields(), &st.positions)?;
        println!(
            "sigma {:.2}: t1 = {:.4} x1 = {:+.4} | t2 = {:.4} x2 = {:+.4} | shell residuals {:.1e} {:.1e}",
            st.sigma,
            st.positions[0].temporal(),
            st.positions[0].spatial()[0],
            st.positions[1].temporal(),
            st.positions[1].spatial()[0],
            res[0],
            res[1]
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
