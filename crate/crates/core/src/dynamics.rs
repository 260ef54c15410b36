//! sigma-parameterized guide equations, proper-time bookkeeping and the
//! classical Lorentz-force oracle.
//!
//! Velocities are contravariant four-vectors `V^mu = dX^mu / dsigma` whose
//! temporal slot holds `c dT/dsigma`, so events and velocities share a layout
//! and `X += V dsigma` is the whole update rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::EMPotential;
use crate::spacetime::{Constants, FourVector, ParticleParams};
use crate::wavefunction::{gaussian_packet, PolarData, WaveFunction};

/// Half-width of the null band in `interval_class`, relative to `c^2`.
pub const NULL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodePolicy {
    /// Stop and return the partial record.
    Halt,
    /// Retry a failing step once as two half steps, then halt.
    Substep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub d_sigma: f64,
    pub n_steps: usize,
    pub method: Method,
    pub node_policy: NodePolicy,
}

impl IntegratorConfig {
    pub fn rk4(d_sigma: f64, n_steps: usize) -> Self {
        Self {
            d_sigma,
            n_steps,
            method: Method::Rk4,
            node_policy: NodePolicy::Halt,
        }
    }

    /// Derives `n_steps` from a span; the span must be a whole number of steps.
    pub fn from_span(d_sigma: f64, span: f64, method: Method, node_policy: NodePolicy) -> Result<Self> {
        if !(d_sigma.is_finite() && d_sigma > 0.0) {
            return Err(Error::config(format!("d_sigma must be > 0, got {d_sigma}")));
        }
        if !(span.is_finite() && span >= 0.0) {
            return Err(Error::config(format!("sigma span must be >= 0, got {span}")));
        }
        let n = (span / d_sigma).round();
        if (n * d_sigma - span).abs() > 1e-9 * span.max(d_sigma) {
            return Err(Error::config(format!(
                "sigma span {span} is not a whole number of steps of {d_sigma}"
            )));
        }
        Ok(Self {
            d_sigma,
            n_steps: n as usize,
            method,
            node_policy,
        })
    }

    pub fn span(&self) -> f64 {
        self.d_sigma * self.n_steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_sigma.is_finite() && self.d_sigma > 0.0) {
            return Err(Error::config(format!("d_sigma must be > 0, got {}", self.d_sigma)));
        }
        Ok(())
    }
}

/// Sign class of the instantaneous `V.V = -c^2 + Q/m^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalClass {
    Timelike,
    Null,
    Spacelike,
}

impl IntervalClass {
    /// Classifies from `q_ratio = Q / (m^2 c^2)`.
    pub fn from_quantum_ratio(q_ratio: f64) -> Self {
        let s = q_ratio - 1.0;
        if s.abs() <= NULL_TOLERANCE {
            IntervalClass::Null
        } else if s > 0.0 {
            IntervalClass::Spacelike
        } else {
            IntervalClass::Timelike
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IntervalClass::Timelike => "timelike",
            IntervalClass::Null => "null",
            IntervalClass::Spacelike => "spacelike",
        }
    }
}

/// One recorded point of a run. `velocities`, `quantum_ratio` and
/// `interval_class` are evaluated at `positions`; `tau_valid[i]` is false when
/// the step that produced this state had an imaginary `dtau` somewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryState {
    pub sigma: f64,
    pub positions: Vec<FourVector>,
    pub velocities: Vec<FourVector>,
    pub proper_times: Vec<f64>,
    pub tau_valid: Vec<bool>,
    pub quantum_ratio: Vec<f64>,
    pub interval_class: Vec<IntervalClass>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// A node was met and `node_policy` gave up; the record is partial.
    NodeHalt { sigma: f64, particle: usize, rho: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub states: Vec<TrajectoryState>,
    pub termination: Termination,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("a record holds at least the initial state")
    }

    pub fn is_complete(&self) -> bool {
        self.termination == Termination::Completed
    }
}

fn check_fields<W: WaveFunction>(psi: &W, fields: &[EMPotential]) -> Result<()> {
    if fields.len() != psi.n_particles() {
        return Err(Error::DimensionMismatch {
            expected: psi.n_particles(),
            found: fields.len(),
        });
    }
    for f in fields {
        f.validate(psi.spatial_dim())?;
    }
    Ok(())
}

/// Velocity of every particle from precomputed polar data.
fn velocities_from_polar(
    pd: &PolarData,
    particles: &[ParticleParams],
    fields: &[EMPotential],
    x: &[FourVector],
    c: f64,
) -> Vec<FourVector> {
    pd.grad_s
        .iter()
        .zip(particles)
        .zip(fields)
        .zip(x)
        .map(|(((g, p), f), e)| {
            // covariant p_mu - (e/c) A_mu, raised; A_t = -phi
            let a = f.potential_at(e).covariant();
            g.add_scaled(&a, -p.charge / c).scale(1.0 / p.mass).index_flipped()
        })
        .collect()
}

/// Contravariant guide velocities
/// `V^mu = (d^mu S - (e/c) A^mu) / m`, temporal slot `c dT/dsigma`.
pub fn guide_velocity<W: WaveFunction>(
    psi: &W,
    fields: &[EMPotential],
    x: &[FourVector],
) -> Result<Vec<FourVector>> {
    check_fields(psi, fields)?;
    let pd = psi.polar_data(x)?;
    Ok(velocities_from_polar(&pd, psi.particles(), fields, x, psi.constants().c))
}

/// `V.V - (-c^2 + Q/m^2)` per particle.
pub fn mass_shell_residual<W: WaveFunction>(
    psi: &W,
    fields: &[EMPotential],
    x: &[FourVector],
) -> Result<Vec<f64>> {
    check_fields(psi, fields)?;
    let c = psi.constants().c;
    let pd = psi.polar_data(x)?;
    let v = velocities_from_polar(&pd, psi.particles(), fields, x, c);
    Ok(v.iter()
        .zip(&pd.quantum_term)
        .zip(psi.particles())
        .map(|((v, q), p)| v.dot(v) - (-c * c + q / (p.mass * p.mass)))
        .collect())
}

/// Velocities and `Q/(m^2 c^2)` at one configuration.
struct FlowSample {
    v: Vec<FourVector>,
    q_ratio: Vec<f64>,
}

/// The velocity field with an optional spatial rescaling used by the
/// equivariance power check.
pub(crate) struct Flow<'a, W> {
    psi: &'a W,
    fields: &'a [EMPotential],
    spatial_scale: f64,
}

impl<'a, W: WaveFunction> Flow<'a, W> {
    pub(crate) fn new(psi: &'a W, fields: &'a [EMPotential], spatial_scale: f64) -> Result<Self> {
        check_fields(psi, fields)?;
        Ok(Self {
            psi,
            fields,
            spatial_scale,
        })
    }

    fn sample(&self, x: &[FourVector]) -> Result<FlowSample> {
        let k = self.psi.constants();
        let pd = self.psi.polar_data(x)?;
        let mut v = velocities_from_polar(&pd, self.psi.particles(), self.fields, x, k.c);
        if self.spatial_scale != 1.0 {
            for vi in &mut v {
                for mu in 0..vi.dim() {
                    vi.set_component(mu, vi.component(mu) * self.spatial_scale);
                }
            }
        }
        let q_ratio = pd
            .quantum_term
            .iter()
            .zip(self.psi.particles())
            .map(|(q, p)| q / (p.mass * k.c).powi(2))
            .collect();
        Ok(FlowSample { v, q_ratio })
    }
}

/// `dtau/dsigma = sqrt(1 - Q/(m^2 c^2))`, `None` where the radicand is negative.
fn tau_rate(q_ratio: f64) -> Option<f64> {
    let r = 1.0 - q_ratio;
    if r >= 0.0 {
        Some(r.sqrt())
    } else {
        None
    }
}

struct StepOut {
    x: Vec<FourVector>,
    /// Per particle; `None` marks an imaginary increment.
    dtau: Vec<Option<f64>>,
}

fn shifted(x: &[FourVector], v: &[FourVector], h: f64) -> Vec<FourVector> {
    x.iter().zip(v).map(|(e, vi)| e.add_scaled(vi, h)).collect()
}

fn check_finite(x: &[FourVector], sigma: f64) -> Result<()> {
    if x.iter().all(FourVector::is_finite) {
        Ok(())
    } else {
        Err(Error::Integration {
            sigma,
            detail: format!("non-finite position after step: {x:?}"),
        })
    }
}

fn step<W: WaveFunction>(
    flow: &Flow<'_, W>,
    x: &[FourVector],
    start: &FlowSample,
    h: f64,
    method: Method,
) -> Result<StepOut> {
    let n = x.len();
    match method {
        Method::Euler => Ok(StepOut {
            x: shifted(x, &start.v, h),
            dtau: start.q_ratio.iter().map(|q| tau_rate(*q).map(|r| r * h)).collect(),
        }),
        Method::Rk4 => {
            let k2 = flow.sample(&shifted(x, &start.v, h / 2.0))?;
            let k3 = flow.sample(&shifted(x, &k2.v, h / 2.0))?;
            let k4 = flow.sample(&shifted(x, &k3.v, h))?;
            let mut out = Vec::with_capacity(n);
            let mut dtau = Vec::with_capacity(n);
            for i in 0..n {
                let incr = start.v[i]
                    .add_scaled(&k2.v[i], 2.0)
                    .add_scaled(&k3.v[i], 2.0)
                    .add(&k4.v[i]);
                out.push(x[i].add_scaled(&incr, h / 6.0));
                let rates = [
                    tau_rate(start.q_ratio[i]),
                    tau_rate(k2.q_ratio[i]),
                    tau_rate(k3.q_ratio[i]),
                    tau_rate(k4.q_ratio[i]),
                ];
                dtau.push(match rates {
                    [Some(a), Some(b), Some(c), Some(d)] => Some(h * (a + 2.0 * b + 2.0 * c + d) / 6.0),
                    _ => None,
                });
            }
            Ok(StepOut { x: out, dtau })
        }
    }
}

fn node_info(e: &Error) -> Option<(usize, f64)> {
    match e {
        Error::NodeProximity { particle, rho, .. } => Some((*particle, *rho)),
        _ => None,
    }
}

/// Takes one step under the node policy. `Ok(None)` means a node stopped it.
fn guarded_step<W: WaveFunction>(
    flow: &Flow<'_, W>,
    x: &[FourVector],
    start: &FlowSample,
    config: &IntegratorConfig,
) -> Result<std::result::Result<(StepOut, FlowSample), (usize, f64)>> {
    let attempt = |x: &[FourVector], start: &FlowSample, h: f64| -> Result<(StepOut, FlowSample)> {
        let s = step(flow, x, start, h, config.method)?;
        let next = flow.sample(&s.x)?;
        Ok((s, next))
    };
    match attempt(x, start, config.d_sigma) {
        Ok(v) => Ok(Ok(v)),
        Err(e) => {
            let Some(info) = node_info(&e) else { return Err(e) };
            if config.node_policy == NodePolicy::Halt {
                return Ok(Err(info));
            }
            let h = config.d_sigma / 2.0;
            let first = match attempt(x, start, h) {
                Ok(v) => v,
                Err(e) => return node_info(&e).map(Err).ok_or(e),
            };
            match attempt(&first.0.x, &first.1, h) {
                Ok((second, next)) => {
                    let dtau = first
                        .0
                        .dtau
                        .iter()
                        .zip(&second.dtau)
                        .map(|(a, b)| Some((*a)? + (*b)?))
                        .collect();
                    Ok(Ok((StepOut { x: second.x, dtau }, next)))
                }
                Err(e) => node_info(&e).map(Err).ok_or(e),
            }
        }
    }
}

fn make_state(sigma: f64, x: Vec<FourVector>, s: &FlowSample, tau: &[f64], valid: Vec<bool>) -> TrajectoryState {
    TrajectoryState {
        sigma,
        positions: x,
        velocities: s.v.clone(),
        proper_times: tau.to_vec(),
        tau_valid: valid,
        quantum_ratio: s.q_ratio.clone(),
        interval_class: s.q_ratio.iter().map(|q| IntervalClass::from_quantum_ratio(*q)).collect(),
    }
}

/// Integrates the guide equations from `initial` at `sigma = 0`.
///
/// The initial configuration must be off nodes. A node met later ends the
/// run early with [`Termination::NodeHalt`] and the partial record.
pub fn integrate<W: WaveFunction>(
    psi: &W,
    fields: &[EMPotential],
    initial: &[FourVector],
    config: &IntegratorConfig,
) -> Result<TrajectoryRecord> {
    run(&Flow::new(psi, fields, 1.0)?, initial, config, true)
}

pub(crate) fn run<W: WaveFunction>(
    flow: &Flow<'_, W>,
    initial: &[FourVector],
    config: &IntegratorConfig,
    keep_all: bool,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    flow.psi.check_configuration(initial)?;
    let n = initial.len();
    let mut x = initial.to_vec();
    let mut sample = flow.sample(&x)?;
    let mut tau = vec![0.0; n];
    let mut states = vec![make_state(0.0, x.clone(), &sample, &tau, vec![true; n])];
    let mut termination = Termination::Completed;
    for j in 0..config.n_steps {
        let sigma = (j + 1) as f64 * config.d_sigma;
        match guarded_step(flow, &x, &sample, config)? {
            Ok((out, next)) => {
                check_finite(&out.x, sigma)?;
                let mut valid = vec![true; n];
                for i in 0..n {
                    match out.dtau[i] {
                        Some(d) => tau[i] += d,
                        None => valid[i] = false,
                    }
                }
                x = out.x;
                sample = next;
                if keep_all || j + 1 == config.n_steps {
                    states.push(make_state(sigma, x.clone(), &sample, &tau, valid));
                }
            }
            Err((particle, rho)) => {
                termination = Termination::NodeHalt {
                    sigma: sigma - config.d_sigma,
                    particle,
                    rho,
                };
                if !keep_all && states.last().map(|s| s.sigma) != Some(sigma - config.d_sigma) {
                    states.push(make_state(sigma - config.d_sigma, x.clone(), &sample, &tau, vec![true; n]));
                }
                break;
            }
        }
    }
    Ok(TrajectoryRecord { states, termination })
}

/// Final configuration only; `spatial_scale` multiplies the spatial
/// velocity components (1 for the true flow). `Ok(None)` on a node halt.
pub fn integrate_endpoint<W: WaveFunction>(
    psi: &W,
    fields: &[EMPotential],
    initial: &[FourVector],
    config: &IntegratorConfig,
    spatial_scale: f64,
) -> Result<Option<Vec<FourVector>>> {
    let rec = run(&Flow::new(psi, fields, spatial_scale)?, initial, config, false)?;
    Ok(rec.is_complete().then(|| rec.last().positions.clone()))
}

/// Worldline of a classical point charge, parameterized by proper time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrajectory {
    pub tau: Vec<f64>,
    pub positions: Vec<FourVector>,
    /// Contravariant `dX/dtau`, temporal slot `c dt/dtau`.
    pub velocities: Vec<FourVector>,
    /// Largest `|U.U + c^2| / c^2` seen; reported, never corrected.
    pub max_norm_drift: f64,
}

/// RK4 for `m dU_nu/dtau = (e/c) F_{nu mu} U^mu` over `n_steps` of `d_tau`.
pub fn classical_integrate(
    particle: &ParticleParams,
    field: &EMPotential,
    x0: &FourVector,
    u0: &FourVector,
    d_tau: f64,
    n_steps: usize,
    c: f64,
) -> Result<ClassicalTrajectory> {
    field.validate(x0.dim())?;
    if u0.dim() != x0.dim() {
        return Err(Error::DimensionMismatch {
            expected: x0.dim(),
            found: u0.dim(),
        });
    }
    let norm_err = |u: &FourVector| (u.dot(u) + c * c).abs() / (c * c);
    if norm_err(u0) > 1e-9 {
        return Err(Error::config(format!(
            "initial four-velocity is off the unit hyperboloid: |U.U + c^2|/c^2 = {:.3e}",
            norm_err(u0)
        )));
    }
    if !(d_tau.is_finite() && d_tau > 0.0) {
        return Err(Error::config(format!("proper-time step must be > 0, got {d_tau}")));
    }
    let coupling = particle.charge / (particle.mass * c);
    let accel = |x: &FourVector, u: &FourVector| field.field_tensor_at(x).contract(u).index_flipped().scale(coupling);
    let (mut x, mut u) = (*x0, *u0);
    let mut out = ClassicalTrajectory {
        tau: vec![0.0],
        positions: vec![x],
        velocities: vec![u],
        max_norm_drift: norm_err(&u),
    };
    let h = d_tau;
    for j in 0..n_steps {
        let (x1, u1) = (u, accel(&x, &u));
        let (xa, ua) = (x.add_scaled(&x1, h / 2.0), u.add_scaled(&u1, h / 2.0));
        let (x2, u2) = (ua, accel(&xa, &ua));
        let (xb, ub) = (x.add_scaled(&x2, h / 2.0), u.add_scaled(&u2, h / 2.0));
        let (x3, u3) = (ub, accel(&xb, &ub));
        let (xc, uc) = (x.add_scaled(&x3, h), u.add_scaled(&u3, h));
        let (x4, u4) = (uc, accel(&xc, &uc));
        x = x.add_scaled(&x1.add_scaled(&x2, 2.0).add_scaled(&x3, 2.0).add(&x4), h / 6.0);
        u = u.add_scaled(&u1.add_scaled(&u2, 2.0).add_scaled(&u3, 2.0).add(&u4), h / 6.0);
        let tau = (j + 1) as f64 * h;
        if !(x.is_finite() && u.is_finite()) {
            return Err(Error::Integration {
                sigma: tau,
                detail: "non-finite classical state".into(),
            });
        }
        out.max_norm_drift = out.max_norm_drift.max(norm_err(&u));
        out.tau.push(tau);
        out.positions.push(x);
        out.velocities.push(u);
    }
    Ok(out)
}

/// Free-packet family scanned over hbar at fixed physical geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketFamily {
    /// Physical center momentum `p0 = hbar k0`.
    pub center_momentum: Vec<f64>,
    /// Spatial width (length units), independent of hbar.
    pub width: f64,
    pub n_modes: usize,
    pub particle: ParticleParams,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLimitEntry {
    pub hbar: f64,
    /// Largest Euclidean spacetime distance between the Bohmian worldline at
    /// `sigma` and the classical one at `tau = sigma`.
    pub max_path_deviation: f64,
    pub max_tau_deviation: f64,
    pub max_quantum_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLimitReport {
    pub entries: Vec<ClassicalLimitEntry>,
    /// Least-squares slope of `log max|Q|/m^2c^2` against `log hbar`.
    pub quantum_ratio_exponent: f64,
    pub monotone: bool,
}

/// Least-squares slope of `log y` on `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Runs the Bohmian packet center against the free classical worldline for
/// each `hbar` (strictly decreasing).
pub fn classical_limit_study(
    family: &PacketFamily,
    hbar_values: &[f64],
    config: &IntegratorConfig,
) -> Result<ClassicalLimitReport> {
    if hbar_values.len() < 2 {
        return Err(Error::config("classical limit scan needs at least two hbar values"));
    }
    if hbar_values.windows(2).any(|w| !(w[1] < w[0])) || hbar_values.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::config("hbar values must be positive and strictly decreasing"));
    }
    let dim = family.center_momentum.len();
    let m = family.particle.mass;
    let c = family.c;
    let v: Vec<f64> = family.center_momentum.iter().map(|p| p / m).collect();
    let v2: f64 = v.iter().map(|a| a * a).sum();
    let u0 = FourVector::new(&v, (c * c + v2).sqrt());
    let x0 = FourVector::zero(dim);
    let classical = classical_integrate(
        &family.particle,
        &EMPotential::Zero,
        &x0,
        &u0,
        config.d_sigma,
        config.n_steps,
        c,
    )?;
    let mut entries = Vec::with_capacity(hbar_values.len());
    for &hbar in hbar_values {
        let constants = Constants::new(c, hbar)?;
        let k0: Vec<f64> = family.center_momentum.iter().map(|p| p / hbar).collect();
        let psi = gaussian_packet(&k0, family.width, family.n_modes, family.particle, constants)?;
        let rec = integrate(&psi, &[EMPotential::Zero], &[x0], config)?;
        if !rec.is_complete() {
            return Err(Error::Integration {
                sigma: rec.last().sigma,
                detail: format!("packet trajectory met a node at hbar = {hbar}"),
            });
        }
        let mut e = ClassicalLimitEntry {
            hbar,
            max_path_deviation: 0.0,
            max_tau_deviation: 0.0,
            max_quantum_ratio: 0.0,
        };
        for (s, xc) in rec.states.iter().zip(&classical.positions) {
            e.max_path_deviation = e.max_path_deviation.max(s.positions[0].sub(xc).euclidean_norm());
            e.max_tau_deviation = e.max_tau_deviation.max((s.proper_times[0] - s.sigma).abs());
            e.max_quantum_ratio = e.max_quantum_ratio.max(s.quantum_ratio[0].abs());
        }
        entries.push(e);
    }
    let monotone = entries.windows(2).all(|w| {
        w[1].max_quantum_ratio < w[0].max_quantum_ratio
            && w[1].max_tau_deviation < w[0].max_tau_deviation
            && w[1].max_path_deviation < w[0].max_path_deviation
    });
    let hb: Vec<f64> = entries.iter().map(|e| e.hbar).collect();
    let q: Vec<f64> = entries.iter().map(|e| e.max_quantum_ratio).collect();
    Ok(ClassicalLimitReport {
        quantum_ratio_exponent: log_log_slope(&hb, &q),
        entries,
        monotone,
    })
}
