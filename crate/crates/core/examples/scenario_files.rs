// Load a bundled scenario with a dotted-path override, run it and write the
// trajectory table the command line would write.

use bohmflow::io::{trajectory_csv, write_atomic};
use bohmflow::runner::{simulate, Simulation};
use bohmflow::scenario::Scenario;

fn run_example() -> bohmflow::Result<()> {
    let s = Scenario::load("plane_wave", &["integrator.d_sigma=0.005".into()])?;
    let Simulation::Relativistic(rec) = simulate(&s)? else { unreachable!("plane_wave is relativistic") };
    let csv = trajectory_csv(&rec, s.constants.c);
    let path = std::env::temp_dir().join(format!("bohmflow-example-{}.csv", std::process::id()));
    write_atomic(&path, csv.as_bytes())?;
    println!("{} rows written to {}", csv.lines().count() - 1, path.display());
    println!("{}", csv.lines().next().unwrap_or_default());
    println!("{}", csv.lines().last().unwrap_or_default());
    std::fs::remove_file(&path)?;
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
