// Sample |psi|^2, push every configuration along the guide flow and test
// the result against |psi|^2 again, for the true and a corrupted flow.

use bohmflow::runner::equivariance;
use bohmflow::scenario::Scenario;

fn run_example() -> bohmflow::Result<()> {
    // a smaller ensemble keeps the example quick
    let s = Scenario::load("three_mode_torus", &["sampler.n=2000".into()])?;
    for scale in [1.0, 1.1] {
        let r = equivariance(&s, scale)?;
        println!(
            "spatial velocity x{scale}: worst KS {:.4} vs {:.4}, chi-square p {:.3}, displacement {:.3} box, passed {}",
            r.statistic, r.critical, r.chi_square.p_value, r.mean_displacement, r.passed
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
