// Classical Lorentz-force motion: hyperbolic motion in a constant electric
// field against its closed form, and a cyclotron orbit.

use bohmflow::dynamics::classical_integrate;
use bohmflow::fields::{Axis, EMPotential, Plane};
use bohmflow::spacetime::{FourVector, ParticleParams};

fn run_example() -> bohmflow::Result<()> {
    let p = ParticleParams::new(1.0, 1.0)?;
    let tr = classical_integrate(
        &p,
        &EMPotential::ConstantElectric { e_field: 1.0, axis: Axis::X },
        &FourVector::new(&[0.0], 0.0),
        &FourVector::new(&[0.0], 1.0),
        0.01,
        200,
        1.0,
    )?;
    for j in (0..=200).step_by(50) {
        let tau = tr.tau[j];
        println!("tau {tau:.1}: x = {:.10}, cosh(tau) - 1 = {:.10}", tr.positions[j].spatial()[0], tau.cosh() - 1.0);
    }
    let (b, v) = (2.0, 0.6);
    let g = 1.0 / (1.0 - v * v as f64).sqrt();
    let r = g * v / b;
    let tr = classical_integrate(
        &p,
        &EMPotential::ConstantMagnetic { b_field: b, plane: Plane::Xy },
        &FourVector::new(&[0.0, r], 0.0),
        &FourVector::new(&[g * v, 0.0], g),
        std::f64::consts::TAU / b / 500.0,
        5000,
        1.0,
    )?;
    let end = tr.positions.last().unwrap().spatial();
    println!("orbit radius {r:.6}, after 10 periods {:.6}", (end[0] * end[0] + end[1] * end[1]).sqrt());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
