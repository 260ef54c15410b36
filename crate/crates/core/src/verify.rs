//! The invariant suite behind `bohmflow verify`: analytic oracles and
//! structural identities, then every bundled scenario against its own
//! `expect` block.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{classical_integrate, integrate, mass_shell_residual, IntegratorConfig};
use crate::error::Result;
use crate::fields::{Axis, EMPotential, Plane};
use crate::nonrel::{
    conditional_wavefunction, nr_integrate, single_time_integrate, single_time_reduction, TemporalOffsets,
};
use crate::runner::{check_expectations, Check};
use crate::scenario::{Scenario, BUNDLED};
use crate::spacetime::{lorentz_boost, FourVector, ParticleParams};
use crate::stats::{sample_equilibrium, SamplerTuning};
use crate::wavefunction::{gauge_transform, ModeSumWaveFunction, WaveFunction};

fn bundled(name: &str) -> Result<Scenario> {
    Scenario::parse(crate::scenario::bundled(name).expect("bundled scenario"), Path::new(name), &[])
}

fn max_diff(a: &[FourVector], b: &[FourVector]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p.sub(q).euclidean_norm()).fold(0.0, f64::max)
}

fn plane_wave() -> Result<Check> {
    let s = bundled("plane_wave")?;
    let rec = integrate(&s.relativistic()?, &s.fields(), &s.initial_events()?, &IntegratorConfig::rk4(0.01, 100))?;
    let w = (1.0f64 + 0.09).sqrt();
    let mut err: f64 = 0.0;
    for st in &rec.states {
        let x = &st.positions[0];
        err = err
            .max((x.spatial()[0] - 0.3 * st.sigma).abs())
            .max((x.temporal() - w * st.sigma).abs())
            .max((st.proper_times[0] - st.sigma).abs());
    }
    Ok(Check::new("plane wave X = 0.3 sigma, T = omega sigma, tau = sigma", err < 1e-9, format!("max error {err:.2e}")))
}

/// Random configurations of `psi` inside `[-5, 5]` per coordinate, skipping nodes.
fn random_points<W: WaveFunction>(psi: &W, n: usize, seed: u64) -> Vec<Vec<FourVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = psi.spatial_dim();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<FourVector> = (0..psi.n_particles())
            .map(|_| {
                let s: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
                FourVector::new(&s, rng.random_range(-5.0..5.0))
            })
            .collect();
        if psi.polar_data(&x).map(|p| p.rho > 1e-6).unwrap_or(false) {
            out.push(x);
        }
    }
    out
}

fn mass_shell() -> Result<Check> {
    let s = bundled("entangled_pair")?;
    let psi = s.relativistic()?;
    let c2 = s.constants.c * s.constants.c;
    let mut worst: f64 = 0.0;
    for x in random_points(&psi, 100, 5) {
        for r in mass_shell_residual(&psi, &s.fields(), &x)? {
            worst = worst.max(r.abs() / c2);
        }
    }
    Ok(Check::new("mass shell V.V = -c^2 + Q/m^2", worst < 1e-8, format!("max residual {worst:.2e} c^2")))
}

/// `hbar^2 box R / R` by central differences of `R = |psi|`.
pub fn quantum_term_fd<W: WaveFunction>(psi: &W, x: &[FourVector], particle: usize, h: f64) -> Result<f64> {
    let r = |x: &[FourVector]| -> Result<f64> { Ok(psi.evaluate(x)?.norm()) };
    let r0 = r(x)?;
    let dim = x[particle].dim() + 1;
    let mut boxr = 0.0;
    for mu in 0..dim {
        let shifted = |s: f64| {
            let mut y = x.to_vec();
            y[particle].set_component(mu, x[particle].component(mu) + s);
            y
        };
        let second = (r(&shifted(h))? - 2.0 * r0 + r(&shifted(-h))?) / (h * h);
        boxr += if mu + 1 == dim { -second } else { second };
    }
    let hbar = psi.constants().hbar;
    Ok(hbar * hbar * boxr / r0)
}

fn quantum_term() -> Result<Check> {
    let s = bundled("two_mode")?;
    let psi = s.relativistic()?;
    let mut worst: f64 = 0.0;
    for x in random_points(&psi, 50, 6) {
        let q = psi.polar_data(&x)?.quantum_term[0];
        let fd = quantum_term_fd(&psi, &x, 0, 1e-3)?;
        worst = worst.max((q - fd).abs() / q.abs().max(1e-3));
    }
    Ok(Check::new("quantum term against finite differences", worst < 1e-4, format!("max relative error {worst:.2e}")))
}

fn klein_gordon() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for name in ["two_mode", "three_mode_torus", "entangled_pair", "spacelike"] {
        let psi = bundled(name)?.relativistic()?;
        for x in random_points(&psi, 20, 7) {
            for r in psi.klein_gordon_residual(&x)? {
                worst = worst.max(r);
            }
            for r in psi.continuity_residual(&x)? {
                worst = worst.max(r);
            }
        }
    }
    Ok(Check::new("Klein-Gordon and continuity residuals", worst < 1e-9, format!("max {worst:.2e}")))
}

fn classical_oracle() -> Result<Vec<Check>> {
    let p = ParticleParams::new(1.0, 1.0)?;
    let e = EMPotential::ConstantElectric { e_field: 1.0, axis: Axis::X };
    let rest = FourVector::new(&[0.0], 1.0);
    let tr = classical_integrate(&p, &e, &FourVector::new(&[0.0], 0.0), &rest, 1e-3, 2000, 1.0)?;
    let mut worst: f64 = 0.0;
    for (tau, x) in tr.tau.iter().zip(&tr.positions).skip(1) {
        let exact = tau.cosh() - 1.0;
        worst = worst.max((x.spatial()[0] - exact).abs() / exact);
    }
    let hyper = Check::new("hyperbolic motion in a constant E field", worst < 1e-6, format!("max relative error {worst:.2e}"));
    let b = 2.0;
    let field = EMPotential::ConstantMagnetic { b_field: b, plane: Plane::Xy };
    let (v, g) = (0.6, 1.25);
    let r = g * v / b;
    let period = std::f64::consts::TAU / b;
    let tr = classical_integrate(
        &p,
        &field,
        &FourVector::new(&[0.0, r], 0.0),
        &FourVector::new(&[g * v, 0.0], g),
        period / 1000.0,
        10_000,
        1.0,
    )?;
    let drift = tr
        .positions
        .iter()
        .map(|x| ((x.spatial()[0].powi(2) + x.spatial()[1].powi(2)).sqrt() - r).abs() / r)
        .fold(0.0, f64::max);
    let orbit = Check::new("cyclotron radius over ten periods", drift < 1e-6, format!("relative drift {drift:.2e}"));
    Ok(vec![hyper, orbit])
}

fn gauge() -> Result<Check> {
    let g = bundled("gauge_pair")?;
    let plain = bundled("two_mode")?;
    let cfg = IntegratorConfig::rk4(0.01, 100);
    let chi = g.gauge().expect("gauge_pair has a gauge").clone();
    let a = integrate(&gauge_transform(g.relativistic()?, chi)?, &g.fields(), &g.initial_events()?, &cfg)?;
    let b = integrate(&plain.relativistic()?, &plain.fields(), &plain.initial_events()?, &cfg)?;
    let d = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(p, q)| max_diff(&p.positions, &q.positions))
        .fold(0.0, f64::max);
    Ok(Check::new("gauge invariance of trajectories", d < 1e-8, format!("max difference {d:.2e}")))
}

fn lorentz() -> Result<Check> {
    let s = bundled("three_mode_torus")?;
    let psi = s.relativistic()?;
    let beta = 0.5;
    let boosted = psi.boosted(beta, 0)?;
    let cfg = IntegratorConfig::rk4(0.01, 200);
    let x0 = s.initial_events()?;
    let a = integrate(&psi, &s.fields(), &x0, &cfg)?;
    let b = integrate(&boosted, &s.fields(), &[lorentz_boost(&x0[0], beta, 0)?], &cfg)?;
    let mut d: f64 = 0.0;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        d = d.max(lorentz_boost(&sb.positions[0], -beta, 0)?.sub(&sa.positions[0]).euclidean_norm());
    }
    Ok(Check::new("boost, integrate, unboost", d < 1e-6, format!("max difference {d:.2e}")))
}

fn conditional() -> Result<Vec<Check>> {
    let s = bundled("conditional")?;
    let psi = s.nonrelativistic()?;
    let offsets = s.offsets()?;
    let cfg = s.integrator_config()?;
    let a = nr_integrate(&conditional_wavefunction(psi.clone(), offsets.clone())?, &s.initial_positions(), &cfg)?;
    let b = single_time_integrate(&psi, offsets.deltas[0], &s.initial_positions(), &cfg)?;
    let mut d: f64 = 0.0;
    for (sa, sb) in a.states.iter().zip(&b.states) {
        for (p, q) in sa.positions.iter().zip(&sb.positions) {
            d = d.max(p.iter().zip(q).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max));
        }
    }
    let same = Check::new("conditional system equals single-time run", d < 1e-10, format!("max difference {d:.2e}"));
    let refused = single_time_reduction(&TemporalOffsets::new(vec![0.0, 0.3], 0.1)?).is_err();
    let refuse = Check::new("reduction refused when epsilon < Lambda", refused, "offsets 0 and 0.3, epsilon 0.1");
    Ok(vec![same, refuse])
}

fn reproducible_samples() -> Result<Check> {
    let s = bundled("two_mode")?;
    let psi = s.relativistic()?;
    let sp = s.sampler.as_ref().expect("two_mode has a sampler");
    let run = |seed| sample_equilibrium(&psi, &sp.region, 500, seed, sp.method, &SamplerTuning::default());
    let (a, b, c) = (run(4)?, run(4)?, run(5)?);
    Ok(Check::new(
        "same seed gives identical ensembles",
        a.samples == b.samples && a.samples != c.samples,
        "500 rejection samples, seeds 4, 4, 5",
    ))
}

/// Measured order of the RK4 guide integrator on `psi`.
pub fn rk4_order(psi: &ModeSumWaveFunction, x0: &[FourVector], span: f64, coarse: usize) -> Result<f64> {
    let fields = vec![EMPotential::Zero; psi.n_particles()];
    let end = |n: usize| -> Result<Vec<FourVector>> {
        Ok(integrate(psi, &fields, x0, &IntegratorConfig::rk4(span / n as f64, n))?.last().positions.clone())
    };
    let reference = end(coarse * 64)?;
    let e1 = max_diff(&end(coarse)?, &reference);
    let e2 = max_diff(&end(coarse * 2)?, &reference);
    Ok((e1 / e2).log2())
}

fn integrator_order() -> Result<Check> {
    let s = bundled("two_mode")?;
    let order = rk4_order(&s.relativistic()?, &s.initial_events()?, 4.0, 10)?;
    Ok(Check::new("RK4 convergence order", order >= 3.7, format!("measured order {order:.3}")))
}

/// Analytic and structural checks, each a fraction of a second.
pub fn invariant_suite() -> Result<Vec<Check>> {
    let mut out = vec![plane_wave()?, mass_shell()?, quantum_term()?, klein_gordon()?];
    out.extend(classical_oracle()?);
    out.push(gauge()?);
    out.push(lorentz()?);
    out.extend(conditional()?);
    out.push(reproducible_samples()?);
    out.push(integrator_order()?);
    Ok(out)
}

/// Every bundled scenario against its `expect` block.
pub fn smoke_suite() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, _) in BUNDLED {
        out.extend(check_expectations(&bundled(name)?)?);
    }
    Ok(out)
}
