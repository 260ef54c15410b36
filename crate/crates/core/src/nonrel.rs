//! Non-relativistic limit: redefined phase, temporal decoupling
//! `T = sigma + delta`, the sigma-parameterized conditional wave function and
//! the harness comparing relativistic and non-relativistic trajectories.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{guide_velocity, integrate, log_log_slope, IntegratorConfig, Method, Termination, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::fields::EMPotential;
use crate::spacetime::{Constants, FourVector, ParticleParams, MAX_SPATIAL_DIM};
use crate::wavefunction::{Branch, ModeSumWaveFunction, WaveFunction};

/// `S~ = S + c^2 sum_j m_j t_j` at the gradient level. Layout is kept:
/// spatial slots unchanged, temporal slot `dS~/d(ct) = dS/d(ct) + m c`.
pub fn phase_redefine(grad_s: &[FourVector], particles: &[ParticleParams], constants: &Constants) -> Vec<FourVector> {
    grad_s
        .iter()
        .zip(particles)
        .map(|(g, p)| {
            let mut out = *g;
            out.set_component(g.dim(), g.temporal() + p.mass * constants.c);
            out
        })
        .collect()
}

/// `dS/dt~ ` from a redefined gradient: `c * dS~/d(ct)`.
pub fn redefined_time_derivative(grad_s_tilde: &FourVector, c: f64) -> f64 {
    c * grad_s_tilde.temporal()
}

/// Residual of `dS/d(ct) = -m c + (1/c) dS~/dt`, the real-metric form of
/// `dS/d(ict) = i m c - (i/c) dS~/dt`.
pub fn phase_identity_residual(grad_s: &FourVector, grad_s_tilde: &FourVector, particle: &ParticleParams, c: f64) -> f64 {
    grad_s.temporal() - (-particle.mass * c + redefined_time_derivative(grad_s_tilde, c) / c)
}

/// Per-particle clock offsets `delta_i` and clock precision `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalOffsets {
    pub deltas: Vec<f64>,
    pub epsilon_clock: f64,
}

impl TemporalOffsets {
    pub fn new(deltas: Vec<f64>, epsilon_clock: f64) -> Result<Self> {
        if deltas.is_empty() || deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::config("offsets need one finite delta per particle"));
        }
        if !(epsilon_clock.is_finite() && epsilon_clock >= 0.0) {
            return Err(Error::config(format!("epsilon_clock must be >= 0, got {epsilon_clock}")));
        }
        Ok(Self { deltas, epsilon_clock })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            deltas: vec![0.0; n],
            epsilon_clock: 0.0,
        }
    }

    /// `Lambda = max_ij |delta_i - delta_j|`, always recomputed.
    pub fn lambda(&self) -> f64 {
        let hi = self.deltas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = self.deltas.iter().cloned().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    pub fn all_equal(&self) -> bool {
        self.lambda() == 0.0
    }
}

/// Replaces every delta by the mean; refused unless `epsilon > Lambda`.
pub fn single_time_reduction(offsets: &TemporalOffsets) -> Result<TemporalOffsets> {
    let lambda = offsets.lambda();
    if !(offsets.epsilon_clock > lambda) {
        return Err(Error::ReductionNotJustified {
            lambda,
            epsilon: offsets.epsilon_clock,
        });
    }
    if lambda == 0.0 {
        return Ok(offsets.clone());
    }
    let mean = offsets.deltas.iter().sum::<f64>() / offsets.deltas.len() as f64;
    Ok(TemporalOffsets {
        deltas: vec![mean; offsets.deltas.len()],
        epsilon_clock: offsets.epsilon_clock,
    })
}

/// One product term: coefficient and one wavevector per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct NRTerm {
    pub coefficient: Complex64,
    pub wavevectors: Vec<Vec<f64>>,
}

/// Multi-time Schrodinger wave function as an exact mode sum with
/// dispersion `hbar k^2 / 2m + e phi / hbar` per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct NRWaveFunction {
    terms: Vec<NRTerm>,
    particles: Vec<ParticleParams>,
    constants: Constants,
    /// Constant scalar potential felt by each particle.
    potentials: Vec<f64>,
    dim: usize,
    node_epsilon: f64,
}

/// Exact values and derivatives at one multi-time configuration.
#[derive(Debug, Clone)]
pub struct NRDerivatives {
    pub psi: Complex64,
    pub grad: Vec<Vec<Complex64>>,
    pub laplacian: Vec<Complex64>,
    pub dt: Vec<Complex64>,
}

impl NRWaveFunction {
    pub fn new(terms: Vec<NRTerm>, particles: Vec<ParticleParams>, constants: Constants) -> Result<Self> {
        if terms.is_empty() || particles.is_empty() {
            return Err(Error::config("a non-relativistic mode sum needs terms and particles"));
        }
        let dim = terms[0].wavevectors.first().map(Vec::len).unwrap_or(0);
        if !(1..=MAX_SPATIAL_DIM).contains(&dim) {
            return Err(Error::config("wavevectors need 1..=3 components"));
        }
        let mut max_c: f64 = 0.0;
        for (t, term) in terms.iter().enumerate() {
            if term.wavevectors.len() != particles.len() {
                return Err(Error::config(format!(
                    "term {t} has {} wavevectors for {} particles",
                    term.wavevectors.len(),
                    particles.len()
                )));
            }
            if term.wavevectors.iter().any(|k| k.len() != dim || k.iter().any(|v| !v.is_finite())) {
                return Err(Error::config(format!("term {t} has a malformed wavevector")));
            }
            max_c = max_c.max(term.coefficient.norm());
        }
        if !(max_c > 0.0 && max_c.is_finite()) {
            return Err(Error::config("coefficients must be finite and not all zero"));
        }
        let n = particles.len();
        Ok(Self {
            terms,
            particles,
            constants,
            potentials: vec![0.0; n],
            dim,
            node_epsilon: crate::wavefunction::NODE_EPSILON_REL * max_c * max_c,
        })
    }

    /// Sets the constant potential `phi_i` of each particle.
    pub fn with_potentials(mut self, potentials: Vec<f64>) -> Result<Self> {
        if potentials.len() != self.particles.len() || potentials.iter().any(|p| !p.is_finite()) {
            return Err(Error::config("one finite constant potential per particle is required"));
        }
        self.potentials = potentials;
        Ok(self)
    }

    /// Same wavevectors and coefficients as a positive-branch relativistic sum.
    pub fn from_relativistic(psi: &ModeSumWaveFunction) -> Result<Self> {
        let terms = psi
            .terms()
            .iter()
            .map(|t| {
                if t.modes.iter().any(|m| m.branch() != Branch::Positive) {
                    return Err(Error::config("only positive-branch modes have a non-relativistic partner"));
                }
                Ok(NRTerm {
                    coefficient: t.coefficient,
                    wavevectors: t.modes.iter().map(|m| m.wavevector().to_vec()).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, psi.particles().to_vec(), psi.constants())
    }

    pub fn particles(&self) -> &[ParticleParams] {
        &self.particles
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    pub fn spatial_dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[NRTerm] {
        &self.terms
    }

    pub fn potentials(&self) -> &[f64] {
        &self.potentials
    }

    fn frequency(&self, k: &[f64], i: usize) -> f64 {
        let p = &self.particles[i];
        let hbar = self.constants.hbar;
        let k2: f64 = k.iter().map(|v| v * v).sum();
        hbar * k2 / (2.0 * p.mass) + p.charge * self.potentials[i] / hbar
    }

    fn check(&self, x: &[Vec<f64>], t: &[f64]) -> Result<()> {
        let n = self.particles.len();
        if x.len() != n || t.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len().min(t.len()),
            });
        }
        if let Some(bad) = x.iter().find(|v| v.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: bad.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[Vec<f64>], t: &[f64]) -> Result<Complex64> {
        Ok(self.derivatives(x, t)?.psi)
    }

    pub fn derivatives(&self, x: &[Vec<f64>], t: &[f64]) -> Result<NRDerivatives> {
        self.check(x, t)?;
        let n = self.particles.len();
        let zero = Complex64::new(0.0, 0.0);
        let i_unit = Complex64::new(0.0, 1.0);
        let mut d = NRDerivatives {
            psi: zero,
            grad: vec![vec![zero; self.dim]; n],
            laplacian: vec![zero; n],
            dt: vec![zero; n],
        };
        for term in &self.terms {
            let mut phase = 0.0;
            for (i, k) in term.wavevectors.iter().enumerate() {
                let kx: f64 = k.iter().zip(&x[i]).map(|(a, b)| a * b).sum();
                phase += kx - self.frequency(k, i) * t[i];
            }
            let value = term.coefficient * Complex64::cis(phase);
            d.psi += value;
            for (i, k) in term.wavevectors.iter().enumerate() {
                for (g, kk) in d.grad[i].iter_mut().zip(k) {
                    *g += i_unit * kk * value;
                }
                let k2: f64 = k.iter().map(|v| v * v).sum();
                d.laplacian[i] -= k2 * value;
                d.dt[i] -= i_unit * self.frequency(k, i) * value;
            }
        }
        Ok(d)
    }

    /// `|i hbar d_t psi - (-hbar^2/2m lap + e phi) psi|` per particle,
    /// relative to the largest of the three terms.
    pub fn schrodinger_residual(&self, x: &[Vec<f64>], t: &[f64]) -> Result<Vec<f64>> {
        let d = self.derivatives(x, t)?;
        let hbar = self.constants.hbar;
        let i_unit = Complex64::new(0.0, 1.0);
        Ok((0..self.particles.len())
            .map(|i| {
                let p = &self.particles[i];
                let lhs = i_unit * hbar * d.dt[i];
                let kin = -hbar * hbar / (2.0 * p.mass) * d.laplacian[i];
                let pot = p.charge * self.potentials[i] * d.psi;
                let scale = lhs.norm().max(kin.norm()).max(pot.norm());
                if scale == 0.0 {
                    0.0
                } else {
                    (lhs - kin - pot).norm() / scale
                }
            })
            .collect())
    }

    /// Residuals of the polar pair
    /// `|grad S~|^2 + 2m (dS~/dt + e phi) = hbar^2 lap R / R` and
    /// `div(R^2 grad S~ / m) + d_t R^2 = 0`, each relative to its largest term.
    pub fn polar_residuals(&self, x: &[Vec<f64>], t: &[f64]) -> Result<Vec<(f64, f64)>> {
        let d = self.derivatives(x, t)?;
        let hbar = self.constants.hbar;
        let rho = d.psi.norm_sqr();
        Ok((0..self.particles.len())
            .map(|i| {
                let p = &self.particles[i];
                let lg: Vec<Complex64> = d.grad[i].iter().map(|g| g / d.psi).collect();
                let grad_s2: f64 = lg.iter().map(|g| (hbar * g.im).powi(2)).sum();
                let s_t = hbar * (d.dt[i] / d.psi).im;
                let lap_r = (d.laplacian[i] / d.psi).re + lg.iter().map(|g| g.im * g.im).sum::<f64>();
                let a = grad_s2;
                let b = 2.0 * p.mass * (s_t + p.charge * self.potentials[i]);
                let q = hbar * hbar * lap_r;
                let s1 = a.abs().max(b.abs()).max(q.abs());
                let hj = if s1 == 0.0 { 0.0 } else { (a + b - q).abs() / s1 };
                let div = hbar / p.mass * (d.psi.conj() * d.laplacian[i]).im;
                let rho_t = 2.0 * (d.psi.conj() * d.dt[i]).re;
                let s2 = div.abs().max(rho_t.abs()).max(1e-300 * rho);
                let cont = if s2 <= 1e-300 * rho { 0.0 } else { (div + rho_t).abs() / s2 };
                (hj, cont)
            })
            .collect())
    }

    /// `hbar Im(grad psi / psi) / m` per particle.
    pub fn velocities(&self, x: &[Vec<f64>], t: &[f64]) -> Result<Vec<Vec<f64>>> {
        let d = self.derivatives(x, t)?;
        let rho = d.psi.norm_sqr();
        if !(rho > self.node_epsilon) {
            return Err(Error::NodeProximity {
                particle: 0,
                rho,
                threshold: self.node_epsilon,
            });
        }
        let hbar = self.constants.hbar;
        Ok(d.grad
            .iter()
            .zip(&self.particles)
            .map(|(g, p)| g.iter().map(|gk| hbar * (gk / d.psi).im / p.mass).collect())
            .collect())
    }
}

/// Free NR Gaussian packet on the same k-grid as the relativistic builder.
pub fn nr_gaussian_packet(
    center_k: &[f64],
    width: f64,
    n_modes: usize,
    particle: ParticleParams,
    constants: Constants,
) -> Result<NRWaveFunction> {
    let rel = crate::wavefunction::gaussian_packet(center_k, width, n_modes, particle, constants)?;
    NRWaveFunction::from_relativistic(&rel)
}

/// Bohmian trajectory of the continuous free Gaussian
/// `psi(x, 0) ~ exp(-x^2 / (2 w^2) + i k0 x)`, started at `x0`.
pub fn gaussian_trajectory_oracle(x0: f64, k0: f64, width: f64, mass: f64, hbar: f64, t: f64) -> f64 {
    let s = hbar * t / (mass * width * width);
    x0 * (1.0 + s * s).sqrt() + hbar * k0 * t / mass
}

/// For a single NR plane wave, `S~(x, t) - (m v x - m v^2 t / 2)` must equal
/// the phase of the plane wave with `hbar k' = hbar k - m v` at `(x - v t, t)`.
/// Returns the absolute discrepancy.
pub fn galilean_phase_residual(k: f64, mass: f64, hbar: f64, v: f64, x: f64, t: f64) -> f64 {
    let phase = |k: f64, x: f64, t: f64| hbar * (k * x - hbar * k * k * t / (2.0 * mass));
    let shifted = phase(k, x, t) - (mass * v * x - mass * v * v * t / 2.0);
    let kp = k - mass * v / hbar;
    (shifted - phase(kp, x - v * t, t)).abs()
}

/// `phi(x, sigma) = psi(x^(1), sigma + delta_1, .., x^(N), sigma + delta_N)`.
#[derive(Debug, Clone)]
pub struct ConditionalWaveFunction {
    psi: NRWaveFunction,
    offsets: TemporalOffsets,
}

pub fn conditional_wavefunction(psi: NRWaveFunction, offsets: TemporalOffsets) -> Result<ConditionalWaveFunction> {
    if offsets.deltas.len() != psi.particles.len() {
        return Err(Error::DimensionMismatch {
            expected: psi.particles.len(),
            found: offsets.deltas.len(),
        });
    }
    Ok(ConditionalWaveFunction { psi, offsets })
}

impl ConditionalWaveFunction {
    pub fn inner(&self) -> &NRWaveFunction {
        &self.psi
    }

    pub fn offsets(&self) -> &TemporalOffsets {
        &self.offsets
    }

    fn times(&self, sigma: f64) -> Vec<f64> {
        self.offsets.deltas.iter().map(|d| sigma + d).collect()
    }

    pub fn evaluate(&self, x: &[Vec<f64>], sigma: f64) -> Result<Complex64> {
        self.psi.evaluate(x, &self.times(sigma))
    }

    /// `i hbar d_sigma phi = sum_i (-hbar^2/2m_i lap_i + e_i phi_i) phi`, relative.
    pub fn sigma_schrodinger_residual(&self, x: &[Vec<f64>], sigma: f64) -> Result<f64> {
        let d = self.psi.derivatives(x, &self.times(sigma))?;
        let hbar = self.psi.constants.hbar;
        let i_unit = Complex64::new(0.0, 1.0);
        let lhs = i_unit * hbar * d.dt.iter().sum::<Complex64>();
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut scale = lhs.norm();
        for (i, p) in self.psi.particles.iter().enumerate() {
            let kin = -hbar * hbar / (2.0 * p.mass) * d.laplacian[i];
            let pot = p.charge * self.psi.potentials[i] * d.psi;
            scale = scale.max(kin.norm()).max(pot.norm());
            rhs += kin + pot;
        }
        Ok(if scale == 0.0 { 0.0 } else { (lhs - rhs).norm() / scale })
    }

    pub fn velocities(&self, x: &[Vec<f64>], sigma: f64) -> Result<Vec<Vec<f64>>> {
        self.psi.velocities(x, &self.times(sigma))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NRState {
    pub sigma: f64,
    pub positions: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NRRecord {
    pub states: Vec<NRState>,
    pub termination: Termination,
}

impl NRRecord {
    pub fn last(&self) -> &NRState {
        self.states.last().expect("a record holds at least the initial state")
    }
}

fn axpy(x: &[Vec<f64>], v: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    x.iter().zip(v).map(|(a, b)| a.iter().zip(b).map(|(p, q)| p + h * q).collect()).collect()
}

/// Shared RK4/Euler loop over a velocity field `f(x, s)`.
fn nr_loop<F>(f: F, initial: &[Vec<f64>], config: &IntegratorConfig) -> Result<NRRecord>
where
    F: Fn(&[Vec<f64>], f64) -> Result<Vec<Vec<f64>>>,
{
    config.validate()?;
    let h = config.d_sigma;
    let mut x = initial.to_vec();
    let mut v = f(&x, 0.0)?;
    let mut states = vec![NRState {
        sigma: 0.0,
        positions: x.clone(),
        velocities: v.clone(),
    }];
    for j in 0..config.n_steps {
        let s = j as f64 * h;
        let attempt = || -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
            let next = match config.method {
                Method::Euler => axpy(&x, &v, h),
                Method::Rk4 => {
                    let k2 = f(&axpy(&x, &v, h / 2.0), s + h / 2.0)?;
                    let k3 = f(&axpy(&x, &k2, h / 2.0), s + h / 2.0)?;
                    let k4 = f(&axpy(&x, &k3, h), s + h)?;
                    let mut out = x.clone();
                    for i in 0..x.len() {
                        for c in 0..x[i].len() {
                            out[i][c] += h / 6.0 * (v[i][c] + 2.0 * k2[i][c] + 2.0 * k3[i][c] + k4[i][c]);
                        }
                    }
                    out
                }
            };
            let vn = f(&next, s + h)?;
            Ok((next, vn))
        };
        match attempt() {
            Ok((next, vn)) => {
                if next.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::Integration {
                        sigma: s + h,
                        detail: "non-finite position".into(),
                    });
                }
                x = next;
                v = vn;
                states.push(NRState {
                    sigma: (j + 1) as f64 * h,
                    positions: x.clone(),
                    velocities: v.clone(),
                });
            }
            Err(Error::NodeProximity { particle, rho, .. }) => {
                return Ok(NRRecord {
                    states,
                    termination: Termination::NodeHalt { sigma: s, particle, rho },
                })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(NRRecord {
        states,
        termination: Termination::Completed,
    })
}

/// Integrates `dX_i/dsigma = grad_i S~ / m_i` with `t_i = sigma + delta_i`.
pub fn nr_integrate(phi: &ConditionalWaveFunction, initial: &[Vec<f64>], config: &IntegratorConfig) -> Result<NRRecord> {
    nr_loop(|x, s| phi.velocities(x, s), initial, config)
}

/// Ordinary single-time Bohmian integration from frame time `t0`: every
/// particle's time argument is `t0 + s`.
pub fn single_time_integrate(psi: &NRWaveFunction, t0: f64, initial: &[Vec<f64>], config: &IntegratorConfig) -> Result<NRRecord> {
    let n = psi.particles.len();
    nr_loop(|x, s| psi.velocities(x, &vec![s + t0; n]), initial, config)
}

/// Outcome of a dT/dsigma scan at one v/c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecouplingReport {
    pub v_over_c: f64,
    pub max_deviation: f64,
    /// `max_deviation / (v/c)^2`.
    pub k_constant: f64,
}

/// `max |dT_i/dsigma - 1|` over the given configurations.
pub fn temporal_decoupling_check(
    psi: &ModeSumWaveFunction,
    fields: &[EMPotential],
    points: &[Vec<FourVector>],
    v_over_c: f64,
) -> Result<DecouplingReport> {
    if !(v_over_c > 0.0) {
        return Err(Error::config("v_over_c must be > 0"));
    }
    let speed = psi.mean_speed_parameter();
    if speed > v_over_c * (1.0 + 1e-9) {
        return Err(Error::config(format!(
            "characteristic hbar k / m c = {speed} exceeds the declared v/c = {v_over_c}"
        )));
    }
    let c = psi.constants().c;
    let mut max_dev: f64 = 0.0;
    for x in points {
        for v in guide_velocity(psi, fields, x)? {
            max_dev = max_dev.max((v.temporal() / c - 1.0).abs());
        }
    }
    Ok(DecouplingReport {
        v_over_c,
        max_deviation: max_dev,
        k_constant: max_dev / (v_over_c * v_over_c),
    })
}

/// Relativistic spatial positions read at equal frame times.
fn hermite_at_time(rec: &TrajectoryRecord, particle: usize, t: f64, c: f64) -> Option<Vec<f64>> {
    let s = &rec.states;
    let time = |j: usize| s[j].positions[particle].temporal() / c;
    if t < time(0) - 1e-12 || t > time(s.len() - 1) + 1e-12 {
        return None;
    }
    let mut j = s.partition_point(|st| st.positions[particle].temporal() / c <= t).saturating_sub(1);
    j = j.min(s.len().saturating_sub(2));
    if s.len() == 1 {
        return Some(s[0].positions[particle].spatial().to_vec());
    }
    let (t0, t1) = (time(j), time(j + 1));
    let h = t1 - t0;
    let u = (t - t0) / h;
    let (h00, h10, h01, h11) = (
        2.0 * u * u * u - 3.0 * u * u + 1.0,
        u * u * u - 2.0 * u * u + u,
        -2.0 * u * u * u + 3.0 * u * u,
        u * u * u - u * u,
    );
    let (a, b) = (&s[j], &s[j + 1]);
    let dim = a.positions[particle].dim();
    Some(
        (0..dim)
            .map(|k| {
                let da = a.velocities[particle].component(k) * c / a.velocities[particle].temporal();
                let db = b.velocities[particle].component(k) * c / b.velocities[particle].temporal();
                h00 * a.positions[particle].component(k)
                    + h10 * h * da
                    + h01 * b.positions[particle].component(k)
                    + h11 * h * db
            })
            .collect(),
    )
}

/// One relativistic-vs-NR comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRun {
    pub v_over_c: f64,
    /// `max |X_rel - X_nr|` over the run divided by the largest NR displacement.
    pub max_deviation: f64,
    pub max_abs_deviation: f64,
    pub max_displacement: f64,
    pub decoupling: DecouplingReport,
}

/// Integrates the relativistic system and its NR partner from matched
/// initial conditions and compares spatial positions at `T_i = sigma + delta_i`.
pub fn limit_comparison(
    psi: &ModeSumWaveFunction,
    offsets: &TemporalOffsets,
    initial: &[Vec<f64>],
    config: &IntegratorConfig,
    v_over_c: f64,
) -> Result<LimitRun> {
    let n = psi.n_particles();
    if offsets.deltas.len() != n || initial.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: offsets.deltas.len().min(initial.len()),
        });
    }
    let c = psi.constants().c;
    let fields = vec![EMPotential::Zero; n];
    let rel_init: Vec<FourVector> = initial
        .iter()
        .zip(&offsets.deltas)
        .map(|(x, d)| FourVector::event(x, *d, c))
        .collect();
    // run the relativistic system a little longer so every T_i = sigma + delta_i
    // of the NR span is bracketed
    let mut rel_cfg = *config;
    rel_cfg.n_steps += (config.n_steps / 10).max(4);
    let rel = integrate(psi, &fields, &rel_init, &rel_cfg)?;
    let phi = conditional_wavefunction(NRWaveFunction::from_relativistic(psi)?, offsets.clone())?;
    let nr = nr_integrate(&phi, initial, config)?;
    if nr.termination != Termination::Completed || !rel.is_complete() {
        return Err(Error::Integration {
            sigma: nr.last().sigma,
            detail: "limit comparison run met a node".into(),
        });
    }
    let mut max_dev: f64 = 0.0;
    let mut max_disp: f64 = 0.0;
    for st in &nr.states {
        for i in 0..n {
            let t = st.sigma + offsets.deltas[i];
            let xr = hermite_at_time(&rel, i, t, c).ok_or_else(|| Error::Integration {
                sigma: st.sigma,
                detail: format!("relativistic record does not reach T = {t}"),
            })?;
            let dev = xr.iter().zip(&st.positions[i]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let disp = st.positions[i].iter().zip(&initial[i]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            max_dev = max_dev.max(dev);
            max_disp = max_disp.max(disp);
        }
    }
    let points: Vec<Vec<FourVector>> = rel.states.iter().map(|s| s.positions.clone()).collect();
    let decoupling = temporal_decoupling_check(psi, &fields, &points, v_over_c)?;
    Ok(LimitRun {
        v_over_c,
        max_deviation: if max_disp > 0.0 { max_dev / max_disp } else { 0.0 },
        max_abs_deviation: max_dev,
        max_displacement: max_disp,
        decoupling,
    })
}

/// Single-particle scan template in dimensionless form. At a scanned `v/c`
/// wavevectors are `k (v/c) m c / hbar`, the start is `x0 hbar / (m v)` and the
/// span is `unit_span / ((v/c)^2 c)`. The non-relativistic problem is then the
/// same at every `v/c`, so the remaining deviation is the relativistic one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrScan {
    pub terms: Vec<(Complex64Json, Vec<f64>)>,
    pub particle: ParticleParams,
    pub constants: Constants,
    pub x0: Vec<f64>,
    pub steps: usize,
    pub unit_span: f64,
}

/// `[re, im]` as stored in scenario files.
pub type Complex64Json = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitScanReport {
    pub runs: Vec<LimitRun>,
    /// `log(dev_2 / dev_1) / log(v_2 / v_1)` over consecutive pairs, last pair.
    pub scaling_exponent: f64,
    pub decoupling_exponent: f64,
}

impl NrScan {
    /// Relativistic mode sum at a given `v/c`.
    pub fn wavefunction(&self, v_over_c: f64) -> Result<ModeSumWaveFunction> {
        let scale = v_over_c * self.particle.mass * self.constants.c / self.constants.hbar;
        let modes: Vec<(Complex64, Vec<f64>, Branch)> = self
            .terms
            .iter()
            .map(|(c, k)| {
                (
                    Complex64::new(c[0], c[1]),
                    k.iter().map(|v| v * scale).collect(),
                    Branch::Positive,
                )
            })
            .collect();
        ModeSumWaveFunction::superposition(&modes, self.particle, self.constants)
    }

    /// Length scale `hbar / (m v)` at `v/c`.
    pub fn length_scale(&self, v_over_c: f64) -> f64 {
        self.constants.hbar / (self.particle.mass * self.constants.c * v_over_c)
    }

    pub fn config(&self, v_over_c: f64) -> IntegratorConfig {
        let span = self.unit_span / (v_over_c * v_over_c) / self.constants.c;
        IntegratorConfig::rk4(span / self.steps as f64, self.steps)
    }

    pub fn run(&self, v_over_c: f64) -> Result<LimitRun> {
        let psi = self.wavefunction(v_over_c)?;
        let x0: Vec<f64> = self.x0.iter().map(|v| v * self.length_scale(v_over_c)).collect();
        limit_comparison(&psi, &TemporalOffsets::zero(1), &[x0], &self.config(v_over_c), v_over_c)
    }
}

/// Runs the scan over increasing `v/c` values and fits the scaling exponents.
pub fn nr_limit_scan(scan: &NrScan, v_values: &[f64]) -> Result<LimitScanReport> {
    if v_values.len() < 2 {
        return Err(Error::config("non-relativistic scan needs at least two v/c values"));
    }
    if v_values.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::config("v/c values must lie in (0, 1)"));
    }
    let runs = v_values.iter().map(|v| scan.run(*v)).collect::<Result<Vec<_>>>()?;
    let v: Vec<f64> = runs.iter().map(|r| r.v_over_c).collect();
    let dev: Vec<f64> = runs.iter().map(|r| r.max_deviation).collect();
    let dec: Vec<f64> = runs.iter().map(|r| r.decoupling.max_deviation).collect();
    Ok(LimitScanReport {
        scaling_exponent: log_log_slope(&v, &dev),
        decoupling_exponent: log_log_slope(&v, &dec),
        runs,
    })
}
