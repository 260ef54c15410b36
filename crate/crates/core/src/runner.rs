//! Scenario-level operations shared by the command line, the examples and
//! the smoke suite. Nothing here touches the file system.

use serde::{Deserialize, Serialize};

use crate::dynamics::{classical_limit_study, integrate, ClassicalLimitReport, IntervalClass, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::nonrel::{conditional_wavefunction, nr_integrate, nr_limit_scan, LimitScanReport, NRRecord};
use crate::scenario::Scenario;
use crate::stats::{
    equivariance_test, frame_independence_test, sample_equilibrium, Ensemble, EquivarianceOptions,
    EquivarianceReport, FrameReport, SamplerTuning,
};
use crate::wavefunction::{gauge_transform, WaveFunction};

/// Accepted band of the fitted exponents in limit scans.
pub const EXPONENT_BAND: (f64, f64) = (1.7, 2.3);

pub fn in_band(v: f64) -> bool {
    (EXPONENT_BAND.0..=EXPONENT_BAND.1).contains(&v)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Simulation {
    Relativistic(TrajectoryRecord),
    Nonrelativistic(NRRecord),
}

/// Applies the scenario's gauge phase, if any, and hands the result to `f`.
fn with_psi<T>(s: &Scenario, f: impl FnOnce(&dyn WaveFunctionDyn) -> Result<T>) -> Result<T> {
    let psi = s.relativistic()?;
    match s.gauge() {
        Some(chi) => f(&gauge_transform(psi, chi.clone())?),
        None => f(&psi),
    }
}

/// Object-safe bridge so one code path serves plain and gauge-transformed
/// wave functions.
trait WaveFunctionDyn {
    fn integrate(&self, s: &Scenario) -> Result<TrajectoryRecord>;
    fn equivariance(&self, s: &Scenario, opts: &EquivarianceOptions) -> Result<EquivarianceReport>;
    fn sample(&self, s: &Scenario) -> Result<Ensemble>;
}

impl<W: WaveFunction> WaveFunctionDyn for W {
    fn integrate(&self, s: &Scenario) -> Result<TrajectoryRecord> {
        integrate(self, &s.fields(), &s.initial_events()?, &s.integrator_config()?)
    }

    fn equivariance(&self, s: &Scenario, opts: &EquivarianceOptions) -> Result<EquivarianceReport> {
        let sp = s.sampler.as_ref().ok_or_else(|| Error::config("scenario has no sampler section"))?;
        equivariance_test(self, &s.fields(), &sp.region, &s.equivariance_config()?, opts)
    }

    fn sample(&self, s: &Scenario) -> Result<Ensemble> {
        let sp = s.sampler.as_ref().ok_or_else(|| Error::config("scenario has no sampler section"))?;
        sample_equilibrium(self, &sp.region, sp.n, sp.seed, sp.method, &SamplerTuning::default())
    }
}

pub fn simulate(s: &Scenario) -> Result<Simulation> {
    if s.is_relativistic() {
        with_psi(s, |psi| psi.integrate(s)).map(Simulation::Relativistic)
    } else {
        let phi = conditional_wavefunction(s.nonrelativistic()?, s.offsets()?)?;
        nr_integrate(&phi, &s.initial_positions(), &s.integrator_config()?).map(Simulation::Nonrelativistic)
    }
}

/// Summary written next to an exported ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub test: String,
    pub method: crate::stats::SamplerMethod,
    pub n: usize,
    pub seed: u64,
    pub acceptance_rate: f64,
}

pub fn sample(s: &Scenario) -> Result<(Ensemble, SampleReport)> {
    let ens = with_psi(s, |psi| psi.sample(s))?;
    let report = SampleReport {
        test: "sample".into(),
        method: ens.method,
        n: ens.samples.len(),
        seed: ens.seed,
        acceptance_rate: ens.acceptance_rate,
    };
    Ok((ens, report))
}

/// Equivariance run; `spatial_velocity_scale != 1` corrupts the flow.
pub fn equivariance(s: &Scenario, spatial_velocity_scale: f64) -> Result<EquivarianceReport> {
    let sp = s.sampler.as_ref().ok_or_else(|| Error::config("scenario has no sampler section"))?;
    let opts = EquivarianceOptions {
        n: sp.n,
        seed: sp.seed,
        method: sp.method,
        spatial_velocity_scale,
        ..Default::default()
    };
    with_psi(s, |psi| psi.equivariance(s, &opts))
}

pub fn frames(s: &Scenario) -> Result<FrameReport> {
    let f = s.frames.as_ref().ok_or_else(|| Error::config("scenario has no frames section"))?;
    if s.gauge().is_some() {
        return Err(Error::config("frame test takes an untransformed free wave function"));
    }
    frame_independence_test(&s.relativistic()?, &f.region, f.beta, f.n, f.seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitMode {
    Classical,
    Nonrelativistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum LimitReport {
    Classical {
        passed: bool,
        #[serde(flatten)]
        report: ClassicalLimitReport,
    },
    Nonrelativistic {
        passed: bool,
        #[serde(flatten)]
        report: LimitScanReport,
    },
}

impl LimitReport {
    pub fn passed(&self) -> bool {
        match self {
            LimitReport::Classical { passed, .. } | LimitReport::Nonrelativistic { passed, .. } => *passed,
        }
    }
}

pub fn limits(s: &Scenario, mode: LimitMode) -> Result<LimitReport> {
    match mode {
        LimitMode::Classical => {
            let spec = s
                .limits
                .as_ref()
                .and_then(|l| l.classical.as_ref())
                .ok_or_else(|| Error::config("scenario has no limits.classical section"))?;
            let cfg = crate::dynamics::IntegratorConfig::rk4(spec.d_sigma, spec.n_steps);
            let report = classical_limit_study(&s.packet_family()?, &spec.hbar_values, &cfg)?;
            Ok(LimitReport::Classical {
                passed: report.monotone && in_band(report.quantum_ratio_exponent),
                report,
            })
        }
        LimitMode::Nonrelativistic => {
            let spec = s
                .limits
                .as_ref()
                .and_then(|l| l.nonrelativistic.as_ref())
                .ok_or_else(|| Error::config("scenario has no limits.nonrelativistic section"))?;
            let report = nr_limit_scan(&s.nr_scan()?, &spec.v_over_c)?;
            Ok(LimitReport::Nonrelativistic {
                passed: in_band(report.scaling_exponent) && in_band(report.decoupling_exponent),
                report,
            })
        }
    }
}

/// Outcome of one embedded assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Runs the scenario and evaluates its `expect` block. A scenario without
/// one must still simulate to completion.
pub fn check_expectations(s: &Scenario) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let sim = simulate(s)?;
    let complete = match &sim {
        Simulation::Relativistic(r) => r.is_complete(),
        Simulation::Nonrelativistic(r) => r.termination == crate::dynamics::Termination::Completed,
    };
    out.push(Check::new(format!("{}: simulate", s.name), complete, "run reaches the end of its span"));
    let Some(x) = &s.expect else { return Ok(out) };
    if let Some(events) = &x.final_events {
        let mut worst: f64 = 0.0;
        for (i, ev) in events.iter().enumerate() {
            let (t, pos): (Option<f64>, Vec<f64>) = match &sim {
                Simulation::Relativistic(r) => {
                    let p = &r.last().positions[i];
                    (Some(p.temporal() / s.constants.c), p.spatial().to_vec())
                }
                Simulation::Nonrelativistic(r) => (None, r.last().positions[i].clone()),
            };
            if let Some(t) = t {
                worst = worst.max((t - ev.t).abs());
            }
            for (a, b) in pos.iter().zip(&ev.x) {
                worst = worst.max((a - b).abs());
            }
        }
        out.push(Check::new(
            format!("{}: final events", s.name),
            worst <= x.tolerance,
            format!("max error {worst:.3e} (tolerance {:.1e})", x.tolerance),
        ));
    }
    if let Some(classes) = &x.initial_interval {
        let Simulation::Relativistic(r) = &sim else {
            return Err(Error::config("initial_interval needs a relativistic scenario"));
        };
        let got: Vec<IntervalClass> = r.states[0].interval_class.clone();
        out.push(Check::new(
            format!("{}: initial interval class", s.name),
            &got == classes,
            format!("{:?}", got.iter().map(|c| c.as_str()).collect::<Vec<_>>()),
        ));
    }
    if let Some(want) = x.equivariance_passes {
        let r = equivariance(s, 1.0)?;
        out.push(Check::new(
            format!("{}: equivariance", s.name),
            r.passed == want,
            format!("KS {:.4} vs {:.4}, edge loss {:.4}", r.statistic, r.critical, r.edge_loss),
        ));
    }
    if let Some(want) = x.frames_pass {
        let r = frames(s)?;
        out.push(Check::new(
            format!("{}: frame independence", s.name),
            r.passed == want,
            format!("|P - P'| = {:.3e} vs 3 SE = {:.3e}", r.statistic, r.critical),
        ));
    }
    if let Some(want) = x.limits_pass {
        let l = s.limits.as_ref().ok_or_else(|| Error::config("limits_pass without a limits section"))?;
        let modes = [
            (l.classical.is_some(), LimitMode::Classical),
            (l.nonrelativistic.is_some(), LimitMode::Nonrelativistic),
        ];
        for (_, mode) in modes.iter().filter(|(on, _)| *on) {
            let r = limits(s, *mode)?;
            out.push(Check::new(
                format!("{}: {mode:?} limit", s.name),
                r.passed() == want,
                "scaling assertions",
            ));
        }
    }
    Ok(out)
}
