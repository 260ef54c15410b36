//! Exact multi-particle, multi-time Klein-Gordon wave functions.
//!
//! A [`ModeSumWaveFunction`] is a finite sum of product terms, each a
//! complex coefficient times one on-shell plane wave per particle:
//!
//! ```text
//! psi(x^(1), .., x^(N)) = sum_terms c * prod_i exp(i (k^(i) . x^(i) - omega^(i) t^(i)))
//! ```
//!
//! so it solves every free Klein-Gordon equation exactly and all first and
//! second derivatives are available in closed form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::GaugeFunction;
use crate::spacetime::{lorentz_boost, Constants, FourVector, ParticleParams, MAX_SPATIAL_DIM};

/// Relative node threshold: `node_epsilon = NODE_EPSILON_REL * max|c|^2`.
pub const NODE_EPSILON_REL: f64 = 1e-12;

/// Which root of the mass-shell relation a mode uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// `omega = sign * c * sqrt(|k|^2 + (m c / hbar)^2)`.
pub fn mass_shell_frequency(k: &[f64], branch: Branch, mass: f64, constants: &Constants) -> f64 {
    let mc_hbar = mass * constants.c / constants.hbar;
    let k2: f64 = k.iter().map(|v| v * v).sum();
    branch.sign() * constants.c * (k2 + mc_hbar * mc_hbar).sqrt()
}

/// One on-shell plane wave bound to a particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveMode {
    k: [f64; MAX_SPATIAL_DIM],
    dim: usize,
    omega: f64,
    branch: Branch,
}

impl PlaneWaveMode {
    /// Builds a mode whose frequency is derived from the mass shell.
    pub fn on_shell(
        k: &[f64],
        branch: Branch,
        particle: &ParticleParams,
        constants: &Constants,
    ) -> Result<Self> {
        if !(1..=MAX_SPATIAL_DIM).contains(&k.len()) {
            return Err(Error::config(format!(
                "wavevector needs 1..=3 components, got {}",
                k.len()
            )));
        }
        if !k.iter().all(|v| v.is_finite()) {
            return Err(Error::config("wavevector components must be finite"));
        }
        let mut kk = [0.0; MAX_SPATIAL_DIM];
        kk[..k.len()].copy_from_slice(k);
        Ok(Self {
            k: kk,
            dim: k.len(),
            omega: mass_shell_frequency(k, branch, particle.mass, constants),
            branch,
        })
    }

    pub fn wavevector(&self) -> &[f64] {
        &self.k[..self.dim]
    }

    pub fn frequency(&self) -> f64 {
        self.omega
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Covariant wave four-vector `(k, -omega / c)`: the phase is `k_mu x^mu`.
    pub fn covariant(&self, c: f64) -> FourVector {
        FourVector::new(self.wavevector(), -self.omega / c)
    }

    /// Relative violation of `hbar^2 (omega^2/c^2 - |k|^2) = m^2 c^2`.
    pub fn shell_violation(&self, particle: &ParticleParams, constants: &Constants) -> f64 {
        let c = constants.c;
        let k2: f64 = self.wavevector().iter().map(|v| v * v).sum();
        let lhs = constants.hbar.powi(2) * (self.omega * self.omega / (c * c) - k2);
        let rhs = (particle.mass * c).powi(2);
        (lhs - rhs).abs() / rhs
    }

    fn phase(&self, x: &FourVector, c: f64) -> f64 {
        let s: f64 = self.wavevector().iter().zip(x.spatial()).map(|(k, v)| k * v).sum();
        s - self.omega * x.temporal() / c
    }
}

/// A coefficient times one mode per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub coefficient: Complex64,
    pub modes: Vec<PlaneWaveMode>,
}

/// `rho = |psi|^2`, the covariant phase gradient per particle and the
/// quantum term `hbar^2 box R / R` per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarData {
    pub rho: f64,
    /// `dS/dx^mu` per particle, covariant layout `(d/dx^k, d/d(ct))`.
    pub grad_s: Vec<FourVector>,
    pub quantum_term: Vec<f64>,
}

/// Common surface of wave functions that can drive the guide equations.
pub trait WaveFunction: Send + Sync {
    fn particles(&self) -> &[ParticleParams];
    fn constants(&self) -> Constants;
    fn spatial_dim(&self) -> usize;
    fn node_epsilon(&self) -> f64;
    fn evaluate(&self, x: &[FourVector]) -> Result<Complex64>;
    /// Errors with [`Error::NodeProximity`] where `rho <= node_epsilon`.
    fn polar_data(&self, x: &[FourVector]) -> Result<PolarData>;

    fn n_particles(&self) -> usize {
        self.particles().len()
    }

    fn check_configuration(&self, x: &[FourVector]) -> Result<()> {
        if x.len() != self.n_particles() {
            return Err(Error::DimensionMismatch {
                expected: self.n_particles(),
                found: x.len(),
            });
        }
        for e in x {
            if e.dim() != self.spatial_dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.spatial_dim(),
                    found: e.dim(),
                });
            }
        }
        Ok(())
    }
}

impl<W: WaveFunction + ?Sized> WaveFunction for &W {
    fn particles(&self) -> &[ParticleParams] {
        (**self).particles()
    }
    fn constants(&self) -> Constants {
        (**self).constants()
    }
    fn spatial_dim(&self) -> usize {
        (**self).spatial_dim()
    }
    fn node_epsilon(&self) -> f64 {
        (**self).node_epsilon()
    }
    fn evaluate(&self, x: &[FourVector]) -> Result<Complex64> {
        (**self).evaluate(x)
    }
    fn polar_data(&self, x: &[FourVector]) -> Result<PolarData> {
        (**self).polar_data(x)
    }
}

/// `psi`, its covariant first derivatives and per-particle d'Alembertian.
#[derive(Debug, Clone)]
pub struct Derivatives {
    pub psi: Complex64,
    /// `first[i][mu] = d psi / dx^mu` of particle `i`, flat layout.
    pub first: Vec<Vec<Complex64>>,
    /// `box_i psi = (laplacian_i - d^2/d(ct_i)^2) psi`.
    pub dalembertian: Vec<Complex64>,
}

/// Finite superposition of product plane-wave terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSumWaveFunction {
    terms: Vec<ProductTerm>,
    particles: Vec<ParticleParams>,
    constants: Constants,
    dim: usize,
    node_epsilon: f64,
}

impl ModeSumWaveFunction {
    pub fn new(
        terms: Vec<ProductTerm>,
        particles: Vec<ParticleParams>,
        constants: Constants,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::config("a mode sum needs at least one term"));
        }
        if particles.is_empty() {
            return Err(Error::config("a mode sum needs at least one particle"));
        }
        let dim = terms[0]
            .modes
            .first()
            .map(|m| m.dim)
            .ok_or_else(|| Error::config("product term without modes"))?;
        let mut max_c: f64 = 0.0;
        for (t, term) in terms.iter().enumerate() {
            if term.modes.len() != particles.len() {
                return Err(Error::config(format!(
                    "term {t} has {} modes for {} particles",
                    term.modes.len(),
                    particles.len()
                )));
            }
            if !(term.coefficient.re.is_finite() && term.coefficient.im.is_finite()) {
                return Err(Error::config(format!("term {t} has a non-finite coefficient")));
            }
            for (i, m) in term.modes.iter().enumerate() {
                if m.dim != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: m.dim,
                    });
                }
                if m.shell_violation(&particles[i], &constants) > 1e-12 {
                    return Err(Error::config(format!(
                        "term {t}, particle {i}: mode is off the mass shell"
                    )));
                }
            }
            max_c = max_c.max(term.coefficient.norm());
        }
        if max_c == 0.0 {
            return Err(Error::config("all coefficients are zero"));
        }
        Ok(Self {
            terms,
            particles,
            constants,
            dim,
            node_epsilon: NODE_EPSILON_REL * max_c * max_c,
        })
    }

    /// Single-particle, single-mode plane wave with unit coefficient.
    pub fn plane_wave(
        k: &[f64],
        branch: Branch,
        particle: ParticleParams,
        constants: Constants,
    ) -> Result<Self> {
        let mode = PlaneWaveMode::on_shell(k, branch, &particle, &constants)?;
        Self::new(
            vec![ProductTerm {
                coefficient: Complex64::new(1.0, 0.0),
                modes: vec![mode],
            }],
            vec![particle],
            constants,
        )
    }

    /// Single-particle superposition of positive-branch modes with the given
    /// coefficients.
    pub fn superposition(
        modes: &[(Complex64, Vec<f64>, Branch)],
        particle: ParticleParams,
        constants: Constants,
    ) -> Result<Self> {
        let terms = modes
            .iter()
            .map(|(c, k, b)| {
                Ok(ProductTerm {
                    coefficient: *c,
                    modes: vec![PlaneWaveMode::on_shell(k, *b, &particle, &constants)?],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, vec![particle], constants)
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    /// Per-term value `c * exp(i sum_i k^(i)_mu x^mu_(i))`.
    fn term_values(&self, x: &[FourVector]) -> impl Iterator<Item = Complex64> + '_ {
        let c = self.constants.c;
        let x = x.to_vec();
        self.terms.iter().map(move |term| {
            let phase: f64 = term
                .modes
                .iter()
                .zip(&x)
                .map(|(m, e)| m.phase(e, c))
                .sum();
            term.coefficient * Complex64::cis(phase)
        })
    }

    /// Exact first derivatives and d'Alembertians.
    pub fn derivatives(&self, x: &[FourVector]) -> Result<Derivatives> {
        self.check_configuration(x)?;
        let n = self.particles.len();
        let ev = self.dim + 1;
        let c = self.constants.c;
        let mut psi = Complex64::new(0.0, 0.0);
        let mut first = vec![vec![Complex64::new(0.0, 0.0); ev]; n];
        let mut boxed = vec![Complex64::new(0.0, 0.0); n];
        let i_unit = Complex64::new(0.0, 1.0);
        for (term, value) in self.terms.iter().zip(self.term_values(x)) {
            psi += value;
            for (i, m) in term.modes.iter().enumerate() {
                let kc = m.covariant(c);
                for mu in 0..ev {
                    first[i][mu] += i_unit * kc.component(mu) * value;
                }
                // d_mu d_nu -> -k_mu k_nu; contracting with the inverse metric
                boxed[i] -= kc.dot(&kc) * value;
            }
        }
        Ok(Derivatives {
            psi,
            first,
            dalembertian: boxed,
        })
    }

    /// `|box_i psi - (m_i c / hbar)^2 psi| / ((m_i c / hbar)^2 |psi|)` per particle.
    pub fn klein_gordon_residual(&self, x: &[FourVector]) -> Result<Vec<f64>> {
        let d = self.derivatives(x)?;
        let hbar = self.constants.hbar;
        let c = self.constants.c;
        Ok(self
            .particles
            .iter()
            .zip(&d.dalembertian)
            .map(|(p, b)| {
                let k2 = (p.mass * c / hbar).powi(2);
                (b - k2 * d.psi).norm() / (k2 * d.psi.norm())
            })
            .collect())
    }

    /// Free continuity identity `d^mu (R^2 d_mu S) = 0` per particle, expanded as
    /// `d^mu rho d_mu S + rho box S` and returned relative to the larger term.
    pub fn continuity_residual(&self, x: &[FourVector]) -> Result<Vec<f64>> {
        let d = self.derivatives(x)?;
        let hbar = self.constants.hbar;
        let rho = d.psi.norm_sqr();
        let ev = self.dim + 1;
        let mut out = Vec::with_capacity(self.particles.len());
        for i in 0..self.particles.len() {
            let log_grad: Vec<Complex64> = d.first[i].iter().map(|f| f / d.psi).collect();
            let grad_s = FourVector::from_components(
                &log_grad.iter().map(|g| hbar * g.im).collect::<Vec<_>>(),
            );
            let grad_rho = FourVector::from_components(
                &d.first[i]
                    .iter()
                    .map(|f| 2.0 * (d.psi.conj() * f).re)
                    .collect::<Vec<_>>(),
            );
            // box log psi = box psi / psi - (d log psi)^2
            let mut sq = Complex64::new(0.0, 0.0);
            for mu in 0..ev {
                let sign = if mu == self.dim { -1.0 } else { 1.0 };
                sq += sign * log_grad[mu] * log_grad[mu];
            }
            let box_s = hbar * (d.dalembertian[i] / d.psi - sq).im;
            let t1 = grad_rho.dot(&grad_s);
            let t2 = rho * box_s;
            let scale = t1.abs().max(t2.abs());
            out.push(if scale == 0.0 { 0.0 } else { (t1 + t2).abs() / scale });
        }
        Ok(out)
    }

    /// The same state seen from a frame boosted by `beta` along `axis`:
    /// `psi'(x') = psi(L^-1 x')`. Every mode's contravariant wave four-vector is
    /// boosted and its frequency re-derived from the mass shell.
    pub fn boosted(&self, beta: f64, axis: usize) -> Result<Self> {
        let c = self.constants.c;
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let modes = term
                    .modes
                    .iter()
                    .zip(&self.particles)
                    .map(|(m, p)| {
                        let k_up = FourVector::new(m.wavevector(), m.omega / c);
                        let kb = lorentz_boost(&k_up, beta, axis)?;
                        let branch = if kb.temporal() >= 0.0 {
                            Branch::Positive
                        } else {
                            Branch::Negative
                        };
                        PlaneWaveMode::on_shell(kb.spatial(), branch, p, &self.constants)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ProductTerm {
                    coefficient: term.coefficient,
                    modes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, self.particles.clone(), self.constants)
    }

    /// Same terms with `hbar` replaced; frequencies are re-derived.
    pub fn with_constants(&self, constants: Constants) -> Result<Self> {
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let modes = term
                    .modes
                    .iter()
                    .zip(&self.particles)
                    .map(|(m, p)| PlaneWaveMode::on_shell(m.wavevector(), m.branch, p, &constants))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ProductTerm {
                    coefficient: term.coefficient,
                    modes,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms, self.particles.clone(), constants)
    }

    /// Largest `hbar |k| / (m c)` over all modes.
    pub fn max_speed_parameter(&self) -> f64 {
        let c = self.constants.c;
        let hbar = self.constants.hbar;
        self.terms
            .iter()
            .flat_map(|t| t.modes.iter().zip(&self.particles))
            .map(|(m, p)| {
                let k: f64 = m.wavevector().iter().map(|v| v * v).sum::<f64>().sqrt();
                hbar * k / (p.mass * c)
            })
            .fold(0.0, f64::max)
    }

    /// `|c|^2`-weighted mean momentum magnitude over `m c`, per particle, maximized.
    pub fn mean_speed_parameter(&self) -> f64 {
        let c = self.constants.c;
        let hbar = self.constants.hbar;
        let total: f64 = self.terms.iter().map(|t| t.coefficient.norm_sqr()).sum();
        (0..self.particles.len())
            .map(|i| {
                let mut mean = vec![0.0; self.dim];
                for t in &self.terms {
                    let w = t.coefficient.norm_sqr() / total;
                    for (acc, k) in mean.iter_mut().zip(t.modes[i].wavevector()) {
                        *acc += w * k;
                    }
                }
                let k = mean.iter().map(|v| v * v).sum::<f64>().sqrt();
                hbar * k / (self.particles[i].mass * c)
            })
            .fold(0.0, f64::max)
    }
}

/// Polar data from exact derivatives via the complex-log identity
/// `box R / R = Re(box psi / psi) + Im(d log psi) . Im(d log psi)`.
pub(crate) fn polar_from_derivatives(
    d: &Derivatives,
    dim: usize,
    hbar: f64,
    node_epsilon: f64,
) -> Result<PolarData> {
    let rho = d.psi.norm_sqr();
    if !(rho > node_epsilon) {
        return Err(Error::NodeProximity {
            particle: 0,
            rho,
            threshold: node_epsilon,
        });
    }
    let mut grad_s = Vec::with_capacity(d.first.len());
    let mut quantum_term = Vec::with_capacity(d.first.len());
    for (first, boxed) in d.first.iter().zip(&d.dalembertian) {
        let im: Vec<f64> = first.iter().map(|f| (f / d.psi).im).collect();
        let im_v = FourVector::from_components(&im);
        // covariant . covariant with the inverse metric: same signature
        let q = (boxed / d.psi).re + im_v.dot(&im_v);
        grad_s.push(im_v.scale(hbar));
        quantum_term.push(hbar * hbar * q);
        debug_assert_eq!(im.len(), dim + 1);
    }
    Ok(PolarData {
        rho,
        grad_s,
        quantum_term,
    })
}

impl WaveFunction for ModeSumWaveFunction {
    fn particles(&self) -> &[ParticleParams] {
        &self.particles
    }

    fn constants(&self) -> Constants {
        self.constants
    }

    fn spatial_dim(&self) -> usize {
        self.dim
    }

    fn node_epsilon(&self) -> f64 {
        self.node_epsilon
    }

    fn evaluate(&self, x: &[FourVector]) -> Result<Complex64> {
        self.check_configuration(x)?;
        Ok(self.term_values(x).sum())
    }

    fn polar_data(&self, x: &[FourVector]) -> Result<PolarData> {
        let d = self.derivatives(x)?;
        polar_from_derivatives(&d, self.dim, self.constants.hbar, self.node_epsilon)
    }
}

/// `psi * prod_i exp(i e_i chi(x^(i)) / (hbar c))`: the partner of a
/// pure-gauge potential `A_mu = d_mu chi`.
#[derive(Debug, Clone)]
pub struct GaugeTransformed<W> {
    base: W,
    chi: GaugeFunction,
}

pub fn gauge_transform<W: WaveFunction>(psi: W, chi: GaugeFunction) -> Result<GaugeTransformed<W>> {
    chi.validate(psi.spatial_dim())?;
    Ok(GaugeTransformed { base: psi, chi })
}

impl<W: WaveFunction> GaugeTransformed<W> {
    pub fn base(&self) -> &W {
        &self.base
    }

    pub fn chi(&self) -> &GaugeFunction {
        &self.chi
    }
}

impl<W: WaveFunction> WaveFunction for GaugeTransformed<W> {
    fn particles(&self) -> &[ParticleParams] {
        self.base.particles()
    }

    fn constants(&self) -> Constants {
        self.base.constants()
    }

    fn spatial_dim(&self) -> usize {
        self.base.spatial_dim()
    }

    fn node_epsilon(&self) -> f64 {
        self.base.node_epsilon()
    }

    fn evaluate(&self, x: &[FourVector]) -> Result<Complex64> {
        let psi = self.base.evaluate(x)?;
        let k = self.constants();
        let phase: f64 = self
            .particles()
            .iter()
            .zip(x)
            .map(|(p, e)| p.charge * self.chi.value(e) / (k.hbar * k.c))
            .sum();
        Ok(psi * Complex64::cis(phase))
    }

    fn polar_data(&self, x: &[FourVector]) -> Result<PolarData> {
        let mut pd = self.base.polar_data(x)?;
        let c = self.constants().c;
        for ((g, p), e) in pd.grad_s.iter_mut().zip(self.particles()).zip(x) {
            *g = g.add_scaled(&self.chi.gradient(e), p.charge / c);
        }
        Ok(pd)
    }
}

/// Single-particle Gaussian packet on a symmetric `n_modes`-point grid per
/// axis, positive branch, coefficients `exp(-(k - k0)^2 width^2 / 2)`
/// normalized to `sum |c|^2 = 1`.
///
/// The grid spans `k0 +- PACKET_GRID_HALF_SPAN / width` on each axis;
/// `n_modes = 1` degenerates to a single plane wave at `k0`.
pub fn gaussian_packet(
    center_k: &[f64],
    width: f64,
    n_modes: usize,
    particle: ParticleParams,
    constants: Constants,
) -> Result<ModeSumWaveFunction> {
    if n_modes != 1 && n_modes < 3 {
        return Err(Error::config(format!(
            "gaussian packet needs n_modes >= 3 (or 1 for a single plane wave), got {n_modes}"
        )));
    }
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::config(format!("packet width must be > 0, got {width}")));
    }
    let dim = center_k.len();
    if !(1..=MAX_SPATIAL_DIM).contains(&dim) {
        return Err(Error::config("packet center needs 1..=3 components"));
    }
    let offsets: Vec<f64> = if n_modes == 1 {
        vec![0.0]
    } else {
        let dk = 2.0 * PACKET_GRID_HALF_SPAN / (width * (n_modes - 1) as f64);
        let mid = (n_modes - 1) as f64 / 2.0;
        (0..n_modes).map(|j| (j as f64 - mid) * dk).collect()
    };
    let total = offsets.len().pow(dim as u32);
    let mut raw = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut k = Vec::with_capacity(dim);
        let mut weight_exp = 0.0;
        for axis in 0..dim {
            let off = offsets[rem % offsets.len()];
            rem /= offsets.len();
            k.push(center_k[axis] + off);
            weight_exp += off * off * width * width / 2.0;
        }
        raw.push(((-weight_exp).exp(), k));
    }
    let norm = raw.iter().map(|(w, _)| w * w).sum::<f64>().sqrt();
    let terms = raw
        .into_iter()
        .map(|(w, k)| {
            Ok(ProductTerm {
                coefficient: Complex64::new(w / norm, 0.0),
                modes: vec![PlaneWaveMode::on_shell(&k, Branch::Positive, &particle, &constants)?],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ModeSumWaveFunction::new(terms, vec![particle], constants)
}

/// Half-width of the packet k-grid in units of `1 / width`.
pub const PACKET_GRID_HALF_SPAN: f64 = 5.0;

/// Boosts every event of a configuration.
pub fn boost_configuration(x: &[FourVector], beta: f64, axis: usize) -> Result<Vec<FourVector>> {
    x.iter().map(|e| lorentz_boost(e, beta, axis)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> (ParticleParams, Constants) {
        (ParticleParams::new(1.0, 1.0).unwrap(), Constants::natural())
    }

    fn ev(x: f64, ct: f64) -> FourVector {
        FourVector::new(&[x], ct)
    }

    fn two_mode(k1: f64, k2: f64) -> ModeSumWaveFunction {
        let (p, k) = unit();
        ModeSumWaveFunction::superposition(
            &[
                (Complex64::new(1.0, 0.0), vec![k1], Branch::Positive),
                (Complex64::new(1.0, 0.0), vec![k2], Branch::Positive),
            ],
            p,
            k,
        )
        .unwrap()
    }

    fn three_mode() -> ModeSumWaveFunction {
        let (p, k) = unit();
        ModeSumWaveFunction::superposition(
            &[
                (Complex64::new(1.0, 0.0), vec![0.75], Branch::Positive),
                (Complex64::new(0.8, 0.3), vec![-0.4], Branch::Positive),
                (Complex64::new(0.5, -0.2), vec![0.1], Branch::Positive),
            ],
            p,
            k,
        )
        .unwrap()
    }

    #[test]
    fn rest_mode_has_phase_zero_at_origin() {
        let (p, k) = unit();
        let psi = ModeSumWaveFunction::plane_wave(&[0.0], Branch::Positive, p, k).unwrap();
        let v = psi.evaluate(&[ev(0.0, 0.0)]).unwrap();
        assert_eq!(v, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn plane_wave_phase() {
        let (p, k) = unit();
        let psi = ModeSumWaveFunction::plane_wave(&[0.3], Branch::Positive, p, k).unwrap();
        let v = psi.evaluate(&[ev(1.0, 0.0)]).unwrap();
        assert!((v - Complex64::cis(0.3)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_superposition_at_origin() {
        let psi = two_mode(0.4, -0.4);
        let omega = (1.0f64 + 0.16).sqrt();
        for t in [0.0, 0.7, 3.1] {
            let v = psi.evaluate(&[ev(0.0, t)]).unwrap();
            assert!((v - 2.0 * Complex64::cis(-omega * t)).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_polar_data() {
        let (p, k) = unit();
        let psi = ModeSumWaveFunction::plane_wave(&[0.3], Branch::Positive, p, k).unwrap();
        let pd = psi.polar_data(&[ev(0.4, 1.2)]).unwrap();
        let omega = 1.09f64.sqrt();
        assert!((pd.grad_s[0].spatial()[0] - 0.3).abs() < 1e-14);
        // dS/dt = c dS/d(ct) = -hbar omega
        assert!((pd.grad_s[0].temporal() + omega).abs() < 1e-14);
        assert!(pd.quantum_term[0].abs() < 1e-13);
        assert!((pd.rho - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_mode_density_closed_form() {
        let (k1, k2) = (0.3, -0.8);
        let psi = two_mode(k1, k2);
        let (w1, w2) = ((1.0 + k1 * k1).sqrt(), (1.0f64 + k2 * k2).sqrt());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (x, t) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let rho = psi.evaluate(&[ev(x, t)]).unwrap().norm_sqr();
            let expect = 2.0 + 2.0 * ((k1 - k2) * x - (w1 - w2) * t).cos();
            assert!((rho - expect).abs() < 1e-12);
        }
    }

    /// Central-difference `hbar^2 box R / R` with `R = |psi|`.
    fn fd_quantum_term(psi: &ModeSumWaveFunction, x: &[FourVector], particle: usize) -> f64 {
        let h = 1e-3;
        let r = |y: &[FourVector]| psi.evaluate(y).unwrap().norm();
        let r0 = r(x);
        let ev = psi.spatial_dim() + 1;
        let mut boxed = 0.0;
        for mu in 0..ev {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[particle].set_component(mu, x[particle].component(mu) + h);
            xm[particle].set_component(mu, x[particle].component(mu) - h);
            let d2 = (r(&xp) - 2.0 * r0 + r(&xm)) / (h * h);
            boxed += if mu == psi.spatial_dim() { -d2 } else { d2 };
        }
        psi.constants().hbar.powi(2) * boxed / r0
    }

    #[test]
    fn quantum_term_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for psi in [two_mode(0.3, -0.9), three_mode()] {
            let mut checked = 0;
            while checked < 30 {
                let x = [ev(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0))];
                let pd = psi.polar_data(&x).unwrap();
                if pd.rho < 0.2 {
                    continue;
                }
                let fd = fd_quantum_term(&psi, &x, 0);
                let q = pd.quantum_term[0];
                assert!((q - fd).abs() <= 1e-4 * q.abs().max(1e-3), "q = {q}, fd = {fd}");
                checked += 1;
            }
        }
    }

    #[test]
    fn phase_gradient_matches_finite_differences() {
        let psi = three_mode();
        let x = [ev(0.37, -1.2)];
        let pd = psi.polar_data(&x).unwrap();
        let h = 1e-6;
        for mu in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[0].set_component(mu, x[0].component(mu) + h);
            xm[0].set_component(mu, x[0].component(mu) - h);
            let sp = psi.evaluate(&xp).unwrap().arg();
            let sm = psi.evaluate(&xm).unwrap().arg();
            let fd = (sp - sm) / (2.0 * h);
            let g = pd.grad_s[0].component(mu);
            assert!((g - fd).abs() < 1e-4 * g.abs().max(1.0));
        }
    }

    #[test]
    fn klein_gordon_and_continuity_residuals_vanish() {
        let (p, k) = unit();
        let heavy = ParticleParams::new(2.5, -1.0).unwrap();
        let mode = |kk: &[f64], part: &ParticleParams| {
            PlaneWaveMode::on_shell(kk, Branch::Positive, part, &k).unwrap()
        };
        let entangled = ModeSumWaveFunction::new(
            vec![
                ProductTerm {
                    coefficient: Complex64::new(1.0, 0.0),
                    modes: vec![mode(&[0.3], &p), mode(&[-0.5], &heavy)],
                },
                ProductTerm {
                    coefficient: Complex64::new(0.4, 0.7),
                    modes: vec![mode(&[-0.2], &p), mode(&[0.9], &heavy)],
                },
                ProductTerm {
                    coefficient: Complex64::new(-0.3, 0.2),
                    modes: vec![mode(&[1.1], &p), mode(&[0.1], &heavy)],
                },
            ],
            vec![p, heavy],
            k,
        )
        .unwrap();
        let packet = gaussian_packet(&[0.5], 3.0, 15, p, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [
                ev(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)),
                ev(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)),
            ];
            for r in entangled.klein_gordon_residual(&x).unwrap() {
                assert!(r < 1e-9);
            }
            let y = [x[0]];
            for r in packet.klein_gordon_residual(&y).unwrap() {
                assert!(r < 1e-9);
            }
            if entangled.evaluate(&x).unwrap().norm_sqr() > 1e-3 {
                for r in entangled.continuity_residual(&x).unwrap() {
                    assert!(r < 1e-6, "continuity residual {r}");
                }
            }
        }
    }

    #[test]
    fn node_is_reported() {
        let psi = two_mode(0.5, -0.5);
        // standing wave 2 cos(k x) e^{-i w t}: node at k x = pi / 2
        let x = [ev(std::f64::consts::PI, 0.3)];
        assert!(matches!(
            psi.polar_data(&x),
            Err(Error::NodeProximity { particle: 0, .. })
        ));
    }

    #[test]
    fn off_shell_and_malformed_inputs_are_rejected() {
        let (p, k) = unit();
        let mut mode = PlaneWaveMode::on_shell(&[0.3], Branch::Positive, &p, &k).unwrap();
        mode.omega *= 1.01;
        let r = ModeSumWaveFunction::new(
            vec![ProductTerm {
                coefficient: Complex64::new(1.0, 0.0),
                modes: vec![mode],
            }],
            vec![p],
            k,
        );
        assert!(r.is_err());
        let psi = two_mode(0.1, 0.2);
        assert!(psi.evaluate(&[]).is_err());
        assert!(psi.evaluate(&[FourVector::new(&[0.0, 0.0], 0.0)]).is_err());
        assert!(ModeSumWaveFunction::new(vec![], vec![p], k).is_err());
    }

    #[test]
    fn null_gauge_is_identity() {
        let psi = three_mode();
        let g = gauge_transform(&psi, GaugeFunction::zero(1)).unwrap();
        let x = [ev(0.2, 0.9)];
        assert_eq!(g.evaluate(&x).unwrap(), psi.evaluate(&x).unwrap());
        assert_eq!(g.polar_data(&x).unwrap(), psi.polar_data(&x).unwrap());
    }

    #[test]
    fn linear_gauge_shifts_gradient_only() {
        let psi = three_mode();
        let alpha = 0.35;
        let g = gauge_transform(
            &psi,
            GaugeFunction::Linear {
                gradient: vec![alpha, 0.0],
            },
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let x = [ev(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0))];
            let a = psi.polar_data(&x).unwrap();
            let b = g.polar_data(&x).unwrap();
            // e = c = 1
            assert!((b.grad_s[0].spatial()[0] - a.grad_s[0].spatial()[0] - alpha).abs() < 1e-14);
            assert_eq!(b.grad_s[0].temporal(), a.grad_s[0].temporal());
            assert_eq!(b.rho, a.rho);
            let (ra, rb) = (psi.evaluate(&x).unwrap().norm_sqr(), g.evaluate(&x).unwrap().norm_sqr());
            assert!((ra - rb).abs() <= 1e-14 * ra);
        }
    }

    #[test]
    fn wrapper_phase_agrees_with_shifted_gradient() {
        let psi = three_mode();
        let g = gauge_transform(
            &psi,
            GaugeFunction::Wave {
                amplitude: 0.6,
                wavevector: vec![0.8, -0.5],
            },
        )
        .unwrap();
        let x = [ev(0.9, 0.4)];
        let pd = g.polar_data(&x).unwrap();
        let h = 1e-6;
        for mu in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[0].set_component(mu, x[0].component(mu) + h);
            xm[0].set_component(mu, x[0].component(mu) - h);
            let ratio = g.evaluate(&xp).unwrap() / g.evaluate(&xm).unwrap();
            let fd = ratio.arg() / (2.0 * h);
            assert!((pd.grad_s[0].component(mu) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn packet_degenerates_to_plane_wave() {
        let (p, k) = unit();
        let psi = gaussian_packet(&[0.3], 2.0, 1, p, k).unwrap();
        assert_eq!(psi.terms().len(), 1);
        assert_eq!(psi.terms()[0].modes[0].wavevector(), &[0.3]);
        assert!((psi.terms()[0].coefficient.re - 1.0).abs() < 1e-15);
        assert!(gaussian_packet(&[0.3], 2.0, 2, p, k).is_err());
        assert!(gaussian_packet(&[0.3], 2.0, 0, p, k).is_err());
        assert!(gaussian_packet(&[0.3], 0.0, 5, p, k).is_err());
    }

    #[test]
    fn packet_coefficients_are_symmetric_and_normalized() {
        let (p, k) = unit();
        let psi = gaussian_packet(&[0.7], 1.5, 21, p, k).unwrap();
        let t = psi.terms();
        let sum: f64 = t.iter().map(|x| x.coefficient.norm_sqr()).sum();
        assert!((sum - 1.0).abs() < 1e-14);
        for j in 0..t.len() {
            let mirror = &t[t.len() - 1 - j];
            assert!((t[j].coefficient - mirror.coefficient).norm() < 1e-15);
            let dk = t[j].modes[0].wavevector()[0] - 0.7;
            let dm = mirror.modes[0].wavevector()[0] - 0.7;
            assert!((dk + dm).abs() < 1e-12);
        }
    }

    #[test]
    fn boosted_state_is_the_same_scalar() {
        let (p, k) = unit();
        let heavy = ParticleParams::new(1.7, 0.0).unwrap();
        let mode = |kk: f64, part: &ParticleParams| {
            PlaneWaveMode::on_shell(&[kk], Branch::Positive, part, &k).unwrap()
        };
        let psi = ModeSumWaveFunction::new(
            vec![
                ProductTerm {
                    coefficient: Complex64::new(1.0, 0.0),
                    modes: vec![mode(0.3, &p), mode(-0.5, &heavy)],
                },
                ProductTerm {
                    coefficient: Complex64::new(0.2, -0.6),
                    modes: vec![mode(-0.2, &p), mode(0.9, &heavy)],
                },
            ],
            vec![p, heavy],
            k,
        )
        .unwrap();
        let beta = 0.5;
        let boosted = psi.boosted(beta, 0).unwrap();
        let x = [ev(1.3, -0.4), ev(-2.0, 0.8)];
        let xb = boost_configuration(&x, beta, 0).unwrap();
        let a = psi.evaluate(&x).unwrap();
        let b = boosted.evaluate(&xb).unwrap();
        assert!((a - b).norm() < 1e-12);
        let qa = psi.polar_data(&x).unwrap().quantum_term;
        let qb = boosted.polar_data(&xb).unwrap().quantum_term;
        for (u, v) in qa.iter().zip(&qb) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
