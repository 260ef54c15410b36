use std::path::Path;

use bohmflow::dynamics::{guide_velocity, integrate, mass_shell_residual, IntegratorConfig};
use bohmflow::fields::{EMPotential, GaugeFunction};
use bohmflow::scenario::{bundled, Scenario};
use bohmflow::spacetime::{lorentz_boost, Constants, FourVector, ParticleParams};
use bohmflow::stats::{compare_ensembles, sample_equilibrium, SamplerMethod, SamplerTuning};
use bohmflow::wavefunction::{gauge_transform, Branch, ModeSumWaveFunction, WaveFunction};
use num_complex::Complex64;
use proptest::prelude::*;

fn scenario(name: &str) -> Scenario {
    Scenario::parse(bundled(name).unwrap(), Path::new(name), &[]).unwrap()
}

#[test]
fn rejection_and_metropolis_agree_on_two_mode() {
    let s = scenario("two_mode");
    let psi = s.relativistic().unwrap();
    let region = &s.sampler.as_ref().unwrap().region;
    let t = SamplerTuning::default();
    let a = sample_equilibrium(&psi, region, 5000, 101, SamplerMethod::Rejection, &t).unwrap();
    let b = sample_equilibrium(&psi, region, 5000, 202, SamplerMethod::Metropolis, &t).unwrap();
    for r in compare_ensembles(&a, &b) {
        assert!(r.passed, "coordinate {}: D = {} >= {}", r.coordinate, r.statistic, r.critical);
    }
}

#[test]
fn ensembles_are_reproducible() {
    let s = scenario("three_mode_torus");
    let psi = s.relativistic().unwrap();
    let region = &s.sampler.as_ref().unwrap().region;
    let t = SamplerTuning::default();
    for m in [SamplerMethod::Rejection, SamplerMethod::Metropolis] {
        let a = sample_equilibrium(&psi, region, 300, 9, m, &t).unwrap();
        let b = sample_equilibrium(&psi, region, 300, 9, m, &t).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!(a.samples.iter().flatten().all(|x| region.contains(&[x.spatial()[0], x.temporal()])));
    }
}

fn three_modes(k: [f64; 3], c: [(f64, f64); 3]) -> ModeSumWaveFunction {
    let modes: Vec<(Complex64, Vec<f64>, Branch)> =
        k.iter().zip(c).map(|(k, (re, im))| (Complex64::new(re, im), vec![*k], Branch::Positive)).collect();
    ModeSumWaveFunction::superposition(&modes, ParticleParams::new(1.0, 0.7).unwrap(), Constants::new(1.3, 0.8).unwrap())
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mass_shell_holds_off_nodes(
        k in prop::array::uniform3(-2.0f64..2.0),
        re in prop::array::uniform3(0.1f64..1.0),
        x in -10.0f64..10.0,
        ct in -10.0f64..10.0,
    ) {
        let psi = three_modes(k, [(re[0], 0.0), (re[1], 0.3), (re[2], -0.2)]);
        let ev = [FourVector::new(&[x], ct)];
        let rho = psi.polar_data(&ev).map(|p| p.rho).unwrap_or(0.0);
        prop_assume!(rho > 1e-6);
        let c2 = 1.3f64 * 1.3;
        let r = mass_shell_residual(&psi, &[EMPotential::Zero], &ev).unwrap()[0];
        prop_assert!(r.abs() < 1e-8 * c2 / rho.min(1.0), "residual {r} at rho {rho}");
    }

    #[test]
    fn gauge_pair_moves_like_the_plain_state(
        amp in 0.0f64..2.0,
        q in prop::array::uniform2(-1.5f64..1.5),
        x in -5.0f64..5.0,
    ) {
        let psi = three_modes([0.4, -0.3, 1.1], [(1.0, 0.0), (0.5, 0.2), (0.3, 0.0)]);
        let chi = GaugeFunction::Wave { amplitude: amp, wavevector: q.to_vec() };
        let g = gauge_transform(&psi, chi.clone()).unwrap();
        let ev = [FourVector::new(&[x], 0.5)];
        let a = guide_velocity(&psi, &[EMPotential::Zero], &ev).unwrap();
        let b = guide_velocity(&g, &[EMPotential::PureGauge { chi }], &ev).unwrap();
        prop_assert!(a[0].sub(&b[0]).euclidean_norm() < 1e-9);
    }

    #[test]
    fn boosted_velocity_is_the_boosted_field(
        beta in -0.6f64..0.6,
        x in -5.0f64..5.0,
        ct in -5.0f64..5.0,
    ) {
        let psi = three_modes([0.4, -0.3, 1.1], [(1.0, 0.0), (0.5, 0.2), (0.3, 0.0)]);
        let boosted = psi.boosted(beta, 0).unwrap();
        let ev = FourVector::new(&[x], ct);
        let v = guide_velocity(&psi, &[EMPotential::Zero], &[ev]).unwrap()[0];
        let vb = guide_velocity(&boosted, &[EMPotential::Zero], &[lorentz_boost(&ev, beta, 0).unwrap()]).unwrap()[0];
        let expect = lorentz_boost(&v, beta, 0).unwrap();
        prop_assert!(vb.sub(&expect).euclidean_norm() < 1e-9 * (1.0 + v.euclidean_norm()));
    }

    #[test]
    fn plane_wave_trajectories_are_straight(k in -3.0f64..3.0, x0 in -5.0f64..5.0) {
        let p = ParticleParams::neutral(1.0).unwrap();
        let psi = ModeSumWaveFunction::plane_wave(&[k], Branch::Positive, p, Constants::natural()).unwrap();
        let rec = integrate(&psi, &[EMPotential::Zero], &[FourVector::new(&[x0], 0.0)], &IntegratorConfig::rk4(0.1, 10)).unwrap();
        let end = rec.last();
        let w = (1.0 + k * k).sqrt();
        prop_assert!((end.positions[0].spatial()[0] - x0 - k).abs() < 1e-12);
        prop_assert!((end.positions[0].temporal() - w).abs() < 1e-12);
        prop_assert!((end.proper_times[0] - 1.0).abs() < 1e-12);
    }
}
