//! Sampling configuration spacetime from `rho = |psi|^2` and the statistical
//! checks built on it: equivariance of the sigma-flow and frame independence
//! of box probabilities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{integrate_endpoint, IntegratorConfig};
use crate::error::{Error, Result};
use crate::fields::EMPotential;
use crate::spacetime::{lorentz_boost, FourVector};
use crate::wavefunction::{ModeSumWaveFunction, WaveFunction};

/// Asymptotic one-sample Kolmogorov-Smirnov constant at alpha = 0.01.
pub const KS_ALPHA_001: f64 = 1.6276;
pub const ALPHA: f64 = 0.01;
/// Pushed samples leaving the box beyond this fraction void the test.
pub const MAX_EDGE_LOSS: f64 = 0.05;

/// Axis-aligned region of configuration spacetime. Coordinates are flattened
/// particle by particle as `(x^1 .. x^D, ct)`. A periodic coordinate is
/// treated as a circle; use it only when `psi` is periodic with that length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub periodic: Vec<bool>,
}

impl SamplingBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let b = Self {
            periodic: vec![false; lower.len()],
            lower,
            upper,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Result<Self> {
        self.periodic = periodic;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() || self.lower.len() != self.upper.len() {
            return Err(Error::config("sampling box needs matching, non-empty lower and upper bounds"));
        }
        if !self.periodic.is_empty() && self.periodic.len() != self.lower.len() {
            return Err(Error::config("periodic flags must match the box dimension"));
        }
        for (k, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(format!("box coordinate {k}: bounds must be finite and ordered")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn extent(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).product()
    }

    pub fn is_periodic(&self, k: usize) -> bool {
        self.periodic.get(k).copied().unwrap_or(false)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| v >= lo && v <= hi)
    }

    /// Folds periodic coordinates back into the box.
    pub fn wrap(&self, p: &mut [f64]) {
        for (k, v) in p.iter_mut().enumerate() {
            if self.is_periodic(k) {
                let l = self.extent(k);
                *v = self.lower[k] + (*v - self.lower[k]).rem_euclid(l);
            }
        }
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(lo, hi)| rng.random_range(*lo..*hi)).collect()
    }

    fn check_shape<W: WaveFunction>(&self, psi: &W) -> Result<()> {
        let expect = psi.n_particles() * (psi.spatial_dim() + 1);
        if self.dim() != expect {
            return Err(Error::DimensionMismatch {
                expected: expect,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

pub fn flatten(x: &[FourVector]) -> Vec<f64> {
    x.iter().flat_map(|e| e.components()).collect()
}

pub fn unflatten(p: &[f64], spatial_dim: usize) -> Vec<FourVector> {
    p.chunks(spatial_dim + 1).map(FourVector::from_components).collect()
}

fn density<W: WaveFunction>(psi: &W, p: &[f64]) -> Result<f64> {
    Ok(psi.evaluate(&unflatten(p, psi.spatial_dim()))?.norm_sqr())
}

/// Checks that `rho` and the phase gradient repeat across every periodic
/// coordinate at a few random points.
pub fn check_periodicity<W: WaveFunction>(psi: &W, region: &SamplingBox, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let d = psi.spatial_dim();
    for k in (0..region.dim()).filter(|k| region.is_periodic(*k)) {
        for _ in 0..8 {
            let p = region.uniform(&mut rng);
            let mut q = p.clone();
            q[k] += region.extent(k);
            let (a, b) = (psi.polar_data(&unflatten(&p, d)), psi.polar_data(&unflatten(&q, d)));
            let (Ok(a), Ok(b)) = (a, b) else { continue };
            let scale = a.rho.max(psi.node_epsilon());
            let mut bad = (a.rho - b.rho).abs() > 1e-8 * scale;
            for (ga, gb) in a.grad_s.iter().zip(&b.grad_s) {
                bad |= ga.sub(gb).euclidean_norm() > 1e-8 * ga.euclidean_norm().max(1.0);
            }
            if bad {
                return Err(Error::config(format!(
                    "box coordinate {k} is marked periodic but psi does not repeat with length {}",
                    region.extent(k)
                )));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerMethod {
    Rejection,
    Metropolis,
}

/// Tuning of the samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerTuning {
    /// Envelope is `safety * max rho` over a coarse grid.
    pub envelope_safety: f64,
    /// Points of the envelope grid in total (spread evenly over coordinates).
    pub envelope_grid_points: usize,
    /// Gaussian proposal scale as a fraction of each box extent.
    pub proposal_fraction: f64,
    pub burn_in: usize,
    pub thinning: usize,
}

impl Default for SamplerTuning {
    fn default() -> Self {
        Self {
            envelope_safety: 1.5,
            envelope_grid_points: 40_000,
            // extent/50 cannot cross the nodal lines of a two-mode density
            // in a 5000 sample run, extent/5 mixes.
            proposal_fraction: 1.0 / 5.0,
            burn_in: 1000,
            thinning: 10,
        }
    }
}

/// `n` configurations drawn from `rho` restricted to `region`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub samples: Vec<Vec<FourVector>>,
    pub seed: u64,
    pub method: SamplerMethod,
    pub region: SamplingBox,
    /// Rejection: accepted / proposed; metropolis: accepted moves / proposals.
    pub acceptance_rate: f64,
}

/// Grid with `g` points per coordinate whose total is about `budget`.
fn points_per_axis(budget: usize, dim: usize) -> usize {
    ((budget as f64).powf(1.0 / dim as f64).floor() as usize).max(3)
}

/// Visits the midpoints of a `g^dim` grid over `region`.
fn for_each_grid_point(region: &SamplingBox, g: usize, mut f: impl FnMut(&[usize], &[f64])) {
    let dim = region.dim();
    let mut idx = vec![0usize; dim];
    let mut p = vec![0.0; dim];
    loop {
        for k in 0..dim {
            p[k] = region.lower[k] + (idx[k] as f64 + 0.5) * region.extent(k) / g as f64;
        }
        f(&idx, &p);
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            idx[k] += 1;
            if idx[k] < g {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn grid_max<W: WaveFunction>(psi: &W, region: &SamplingBox, budget: usize) -> Result<(f64, Vec<f64>)> {
    let g = points_per_axis(budget, region.dim());
    let mut best = (f64::NEG_INFINITY, region.lower.clone());
    let mut err = None;
    for_each_grid_point(region, g, |_, p| {
        if err.is_some() {
            return;
        }
        match density(psi, p) {
            Ok(r) if r > best.0 => best = (r, p.to_vec()),
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

/// Draws an [`Ensemble`]. The stream comes from one seeded generator, so
/// equal `(seed, method, box, n)` give identical samples.
pub fn sample_equilibrium<W: WaveFunction>(
    psi: &W,
    region: &SamplingBox,
    n: usize,
    seed: u64,
    method: SamplerMethod,
    tuning: &SamplerTuning,
) -> Result<Ensemble> {
    region.validate()?;
    region.check_shape(psi)?;
    let d = psi.spatial_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    if n == 0 {
        return Ok(Ensemble {
            samples,
            seed,
            method,
            region: region.clone(),
            acceptance_rate: 0.0,
        });
    }
    let (peak, peak_at) = grid_max(psi, region, tuning.envelope_grid_points)?;
    let acceptance_rate = match method {
        SamplerMethod::Rejection => {
            let envelope = tuning.envelope_safety * peak;
            if !(envelope > 0.0) {
                return Err(Error::EnvelopeTooLoose { rate: 0.0 });
            }
            let mut proposed: u64 = 0;
            while samples.len() < n {
                let p = region.uniform(&mut rng);
                let u: f64 = rng.random();
                proposed += 1;
                let r = density(psi, &p)?;
                if r > envelope {
                    return Err(Error::EnvelopeExceeded { envelope, rho: r });
                }
                if u * envelope < r {
                    samples.push(unflatten(&p, d));
                }
                if proposed >= 100_000 && (samples.len() as f64) < 1e-4 * proposed as f64 {
                    return Err(Error::EnvelopeTooLoose {
                        rate: samples.len() as f64 / proposed as f64,
                    });
                }
            }
            n as f64 / proposed as f64
        }
        SamplerMethod::Metropolis => {
            let normals: Vec<Normal<f64>> = (0..region.dim())
                .map(|k| Normal::new(0.0, tuning.proposal_fraction * region.extent(k)).expect("positive scale"))
                .collect();
            let mut cur = peak_at;
            let mut cur_rho = peak;
            let mut accepted: u64 = 0;
            let mut proposed: u64 = 0;
            let total = tuning.burn_in + n * tuning.thinning.max(1);
            for it in 0..total {
                let mut q: Vec<f64> = cur.iter().zip(&normals).map(|(v, nd)| v + nd.sample(&mut rng)).collect();
                region.wrap(&mut q);
                let u: f64 = rng.random();
                proposed += 1;
                if region.contains(&q) {
                    let r = density(psi, &q)?;
                    if u * cur_rho < r {
                        cur = q;
                        cur_rho = r;
                        accepted += 1;
                    }
                }
                if it >= tuning.burn_in && (it - tuning.burn_in + 1) % tuning.thinning.max(1) == 0 {
                    samples.push(unflatten(&cur, d));
                }
            }
            accepted as f64 / proposed as f64
        }
    };
    Ok(Ensemble {
        samples,
        seed,
        method,
        region: region.clone(),
        acceptance_rate,
    })
}

/// Reference marginals and coarse-bin masses of `rho` over a box, by
/// midpoint quadrature.
#[derive(Debug, Clone)]
pub struct BoxQuadrature {
    region: SamplingBox,
    /// Per-coordinate CDF at the `g + 1` cell edges.
    cdf: Vec<Vec<f64>>,
    g: usize,
    coarse: usize,
    coarse_mass: Vec<f64>,
}

impl BoxQuadrature {
    pub fn new<W: WaveFunction>(psi: &W, region: &SamplingBox, budget: usize, coarse: usize) -> Result<Self> {
        let dim = region.dim();
        let mut g = points_per_axis(budget, dim);
        // coarse bins must be unions of grid cells
        g = (g / coarse).max(1) * coarse;
        let mut marg = vec![vec![0.0; g]; dim];
        let mut coarse_mass = vec![0.0; coarse.pow(dim as u32)];
        let mut err = None;
        for_each_grid_point(region, g, |idx, p| {
            if err.is_some() {
                return;
            }
            match density(psi, p) {
                Ok(r) => {
                    let mut flat = 0;
                    for k in (0..dim).rev() {
                        marg[k][idx[k]] += r;
                        flat = flat * coarse + idx[k] * coarse / g;
                    }
                    coarse_mass[flat] += r;
                }
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        let total: f64 = coarse_mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("rho vanishes on the quadrature grid".into()));
        }
        let cdf = marg
            .iter()
            .map(|m| {
                let mut c = Vec::with_capacity(g + 1);
                let mut acc = 0.0;
                c.push(0.0);
                for v in m {
                    acc += v;
                    c.push(acc / total);
                }
                c
            })
            .collect();
        for m in &mut coarse_mass {
            *m /= total;
        }
        Ok(Self {
            region: region.clone(),
            cdf,
            g,
            coarse,
            coarse_mass,
        })
    }

    /// Reference CDF of coordinate `k`, linear inside grid cells.
    pub fn marginal_cdf(&self, k: usize, v: f64) -> f64 {
        let u = (v - self.region.lower[k]) / self.region.extent(k) * self.g as f64;
        if u <= 0.0 {
            return 0.0;
        }
        if u >= self.g as f64 {
            return 1.0;
        }
        let j = u.floor() as usize;
        let f = u - j as f64;
        self.cdf[k][j] * (1.0 - f) + self.cdf[k][j + 1] * f
    }

    fn coarse_index(&self, p: &[f64]) -> usize {
        let mut flat = 0;
        for k in (0..p.len()).rev() {
            let u = ((p[k] - self.region.lower[k]) / self.region.extent(k) * self.coarse as f64).floor();
            let j = (u.max(0.0) as usize).min(self.coarse - 1);
            flat = flat * self.coarse + j;
        }
        flat
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub coordinate: usize,
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
}

/// One-sample KS statistic of `values` against `cdf`.
pub fn ks_statistic(values: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    values.iter().enumerate().fold(0.0, |d, (i, v)| {
        let f = cdf(*v);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Two-sample KS statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn ks_critical(n: usize) -> f64 {
    KS_ALPHA_001 / (n as f64).sqrt()
}

pub fn ks_critical_two_sample(n: usize, m: usize) -> f64 {
    KS_ALPHA_001 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub passed: bool,
}

/// Pearson chi-square of observed counts against expected probabilities;
/// bins with expected count below 5 are pooled into one.
pub fn chi_square(counts: &[usize], probs: &[f64]) -> ChiSquareResult {
    let n: usize = counts.iter().sum();
    let mut stat = 0.0;
    let mut bins: usize = 0;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (o, p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e < 5.0 {
            pool_o += *o as f64;
            pool_e += e;
            continue;
        }
        stat += (*o as f64 - e).powi(2) / e;
        bins += 1;
    }
    if pool_e >= 5.0 {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        bins += 1;
    }
    let dof = bins.saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64).map(|d| d.sf(stat)).unwrap_or(f64::NAN);
    ChiSquareResult {
        statistic: stat,
        dof,
        p_value,
        passed: p_value > ALPHA,
    }
}

/// Per-coordinate KS of an ensemble against the box marginals of `rho`.
pub fn marginal_ks(points: &[Vec<f64>], quad: &BoxQuadrature) -> Vec<KsResult> {
    let dim = quad.region.dim();
    let crit = ks_critical(points.len());
    (0..dim)
        .map(|k| {
            let mut v: Vec<f64> = points.iter().map(|p| p[k]).collect();
            let s = ks_statistic(&mut v, |x| quad.marginal_cdf(k, x));
            KsResult {
                coordinate: k,
                statistic: s,
                critical: crit,
                passed: s < crit,
            }
        })
        .collect()
}

pub fn coarse_chi_square(points: &[Vec<f64>], quad: &BoxQuadrature) -> ChiSquareResult {
    let mut counts = vec![0usize; quad.coarse_mass.len()];
    for p in points {
        counts[quad.coarse_index(p)] += 1;
    }
    chi_square(&counts, &quad.coarse_mass)
}

/// Options of an equivariance run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceOptions {
    pub n: usize,
    pub seed: u64,
    pub method: SamplerMethod,
    /// Multiplies the spatial velocity components; 1 is the true flow.
    pub spatial_velocity_scale: f64,
    /// Total midpoints of the reference quadrature.
    pub quadrature_points: usize,
    /// Coarse chi-square bins per coordinate.
    pub coarse_bins: usize,
}

impl Default for EquivarianceOptions {
    fn default() -> Self {
        Self {
            n: 5000,
            seed: 1,
            method: SamplerMethod::Rejection,
            spatial_velocity_scale: 1.0,
            quadrature_points: 4_000_000,
            coarse_bins: 8,
        }
    }
}

/// Report layout shared by the statistical tests. `statistic` and `critical`
/// are those of the worst per-coordinate KS test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub test: String,
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
    pub n: usize,
    pub seed: u64,
    pub edge_loss: f64,
    pub node_halts: usize,
    /// Mean over samples of the RMS over coordinates of displacement / extent.
    pub mean_displacement: f64,
    pub spatial_velocity_scale: f64,
    pub initial_ks: Vec<KsResult>,
    pub ks: Vec<KsResult>,
    pub chi_square: ChiSquareResult,
}

/// Samples `rho`, pushes every configuration through the flow for `config`,
/// and tests the pushed ensemble against the same `rho`.
pub fn equivariance_test<W: WaveFunction>(
    psi: &W,
    fields: &[EMPotential],
    region: &SamplingBox,
    config: &IntegratorConfig,
    opts: &EquivarianceOptions,
) -> Result<EquivarianceReport> {
    check_periodicity(psi, region, opts.seed)?;
    let ens = sample_equilibrium(psi, region, opts.n, opts.seed, opts.method, &SamplerTuning::default())?;
    let quad = BoxQuadrature::new(psi, region, opts.quadrature_points, opts.coarse_bins)?;
    let start: Vec<Vec<f64>> = ens.samples.iter().map(|s| flatten(s)).collect();
    let initial_ks = marginal_ks(&start, &quad);
    let pushed: Vec<Option<Vec<FourVector>>> = ens
        .samples
        .par_iter()
        .map(|x0| integrate_endpoint(psi, fields, x0, config, opts.spatial_velocity_scale))
        .collect::<Result<Vec<_>>>()?;
    let dim = region.dim();
    let mut kept = Vec::with_capacity(pushed.len());
    let (mut lost, mut halts) = (0usize, 0usize);
    let mut disp_sum = 0.0;
    for (p0, end) in start.iter().zip(&pushed) {
        let Some(end) = end else {
            halts += 1;
            continue;
        };
        let mut p = flatten(end);
        let rms = (p.iter().zip(p0).enumerate().map(|(k, (a, b))| ((a - b) / region.extent(k)).powi(2)).sum::<f64>()
            / dim as f64)
            .sqrt();
        disp_sum += rms;
        region.wrap(&mut p);
        if region.contains(&p) {
            kept.push(p);
        } else {
            lost += 1;
        }
    }
    let n = opts.n;
    let edge_loss = if n == 0 { 0.0 } else { lost as f64 / n as f64 };
    if edge_loss >= MAX_EDGE_LOSS {
        return Err(Error::InconclusiveDomain { edge_loss });
    }
    let ks = marginal_ks(&kept, &quad);
    let chi = coarse_chi_square(&kept, &quad);
    let worst = ks
        .iter()
        .max_by(|a, b| (a.statistic / a.critical).total_cmp(&(b.statistic / b.critical)))
        .cloned()
        .ok_or_else(|| Error::config("empty ensemble"))?;
    let passed = ks.iter().all(|r| r.passed);
    Ok(EquivarianceReport {
        test: "equivariance".into(),
        statistic: worst.statistic,
        critical: worst.critical,
        passed,
        n,
        seed: opts.seed,
        edge_loss,
        node_halts: halts,
        mean_displacement: if n > halts { disp_sum / (n - halts) as f64 } else { 0.0 },
        spatial_velocity_scale: opts.spatial_velocity_scale,
        initial_ks,
        ks,
        chi_square: chi,
    })
}

/// Report of the frame-independence test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub test: String,
    /// `|P - P'|`.
    pub statistic: f64,
    /// Three combined standard errors.
    pub critical: f64,
    pub passed: bool,
    pub n: usize,
    pub seed: u64,
    pub edge_loss: f64,
    pub beta: f64,
    pub probability: f64,
    pub probability_boosted: f64,
    pub standard_error: f64,
    pub standard_error_boosted: f64,
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}

/// `P(V) = int_V rho` in the original frame against `P(V') = int_{V'} rho'`
/// with `V' = L V` and `psi'` the boosted mode sum, both by plain Monte Carlo
/// from the same seed. Boost along the first spatial axis.
pub fn frame_independence_test(
    psi: &ModeSumWaveFunction,
    region: &SamplingBox,
    beta: f64,
    n: usize,
    seed: u64,
) -> Result<FrameReport> {
    if psi.n_particles() != 1 {
        return Err(Error::config("frame independence test takes a single free particle"));
    }
    if beta.abs() > 0.6 {
        return Err(Error::Domain(format!("|beta| must be <= 0.6, got {beta}")));
    }
    if n < 2 {
        return Err(Error::config("frame independence test needs n >= 2"));
    }
    region.validate()?;
    region.check_shape(psi)?;
    let d = psi.spatial_dim();
    let boosted = psi.boosted(beta, 0)?;
    // bounding box of the boosted corners
    let dim = region.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for corner in 0..(1usize << dim) {
        let p: Vec<f64> = (0..dim)
            .map(|k| if corner >> k & 1 == 1 { region.upper[k] } else { region.lower[k] })
            .collect();
        let b = flatten(&[lorentz_boost(&FourVector::from_components(&p), beta, 0)?]);
        for k in 0..dim {
            lo[k] = lo[k].min(b[k]);
            hi[k] = hi[k].max(b[k]);
        }
    }
    let outer = SamplingBox::new(lo, hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let original: Vec<f64> = (0..n)
        .map(|_| density(psi, &region.uniform(&mut rng)).map(|r| r * region.volume()))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut primed = Vec::with_capacity(n);
    for _ in 0..n {
        let q = outer.uniform(&mut rng);
        let back = flatten(&[lorentz_boost(&FourVector::from_components(&q), -beta, 0)?]);
        let inside = if beta == 0.0 { true } else { region.contains(&back) };
        primed.push(if inside { density(&boosted, &q)? * outer.volume() } else { 0.0 });
    }
    let (p, se) = mean_and_se(&original);
    let (pb, seb) = mean_and_se(&primed);
    let stat = (p - pb).abs();
    let crit = 3.0 * (se * se + seb * seb).sqrt();
    let _ = d;
    Ok(FrameReport {
        test: "frame_independence".into(),
        statistic: stat,
        critical: crit,
        passed: stat <= crit,
        n,
        seed,
        edge_loss: 0.0,
        beta,
        probability: p,
        probability_boosted: pb,
        standard_error: se,
        standard_error_boosted: seb,
    })
}

/// Per-coordinate two-sample KS between two ensembles.
pub fn compare_ensembles(a: &Ensemble, b: &Ensemble) -> Vec<KsResult> {
    let fa: Vec<Vec<f64>> = a.samples.iter().map(|s| flatten(s)).collect();
    let fb: Vec<Vec<f64>> = b.samples.iter().map(|s| flatten(s)).collect();
    let dim = fa.first().map(Vec::len).unwrap_or(0);
    let crit = ks_critical_two_sample(fa.len(), fb.len());
    (0..dim)
        .map(|k| {
            let mut x: Vec<f64> = fa.iter().map(|p| p[k]).collect();
            let mut y: Vec<f64> = fb.iter().map(|p| p[k]).collect();
            let s = ks_two_sample(&mut x, &mut y);
            KsResult {
                coordinate: k,
                statistic: s,
                critical: crit,
                passed: s < crit,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spacetime::{Constants, ParticleParams};
    use crate::wavefunction::Branch;
    use num_complex::Complex64;

    fn unit() -> (ParticleParams, Constants) {
        (ParticleParams::new(1.0, 0.0).unwrap(), Constants::natural())
    }

    fn two_mode() -> ModeSumWaveFunction {
        let (p, c) = unit();
        ModeSumWaveFunction::superposition(
            &[
                (Complex64::new(1.0, 0.0), vec![0.75], Branch::Positive),
                (Complex64::new(1.0, 0.0), vec![-0.75], Branch::Positive),
            ],
            p,
            c,
        )
        .unwrap()
    }

    fn square(l: f64) -> SamplingBox {
        SamplingBox::new(vec![0.0, 0.0], vec![l, l]).unwrap()
    }

    #[test]
    fn box_validation() {
        assert!(SamplingBox::new(vec![0.0], vec![0.0]).is_err());
        assert!(SamplingBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(square(1.0).with_periodic(vec![true]).is_err());
        let mut p = vec![2.5, -0.5];
        square(1.0).with_periodic(vec![true, true]).unwrap().wrap(&mut p);
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_ensemble() {
        let (p, c) = unit();
        let psi = ModeSumWaveFunction::plane_wave(&[0.3], Branch::Positive, p, c).unwrap();
        let e = sample_equilibrium(&psi, &square(1.0), 0, 3, SamplerMethod::Rejection, &SamplerTuning::default()).unwrap();
        assert!(e.samples.is_empty());
    }

    #[test]
    fn plane_wave_samples_are_uniform() {
        let (p, c) = unit();
        let psi = ModeSumWaveFunction::plane_wave(&[0.3], Branch::Positive, p, c).unwrap();
        let n = 4000;
        let e = sample_equilibrium(&psi, &square(2.0), n, 7, SamplerMethod::Rejection, &SamplerTuning::default()).unwrap();
        for k in 0..2 {
            let mut v: Vec<f64> = e.samples.iter().map(|s| s[0].component(k)).collect();
            assert!(ks_statistic(&mut v, |x| x / 2.0) < 1.63 / (n as f64).sqrt());
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let psi = two_mode();
        let b = square(4.0);
        for m in [SamplerMethod::Rejection, SamplerMethod::Metropolis] {
            let a = sample_equilibrium(&psi, &b, 200, 11, m, &SamplerTuning::default()).unwrap();
            let c = sample_equilibrium(&psi, &b, 200, 11, m, &SamplerTuning::default()).unwrap();
            assert_eq!(a.samples, c.samples);
            assert!(a.samples.iter().all(|s| b.contains(&flatten(s))));
        }
    }

    #[test]
    fn two_mode_marginal_chi_square() {
        // rho = 2 + 2 cos(1.5 x): marginal over t is proportional to 1 + cos(1.5 x)
        let psi = two_mode();
        let l = 4.0;
        let n = 5000;
        let e = sample_equilibrium(&psi, &square(l), n, 5, SamplerMethod::Rejection, &SamplerTuning::default()).unwrap();
        let bins = 20;
        let cdf = |x: f64| (x + (1.5 * x).sin() / 1.5) / (l + (1.5 * l).sin() / 1.5);
        let probs: Vec<f64> = (0..bins)
            .map(|j| cdf((j + 1) as f64 * l / bins as f64) - cdf(j as f64 * l / bins as f64))
            .collect();
        let mut counts = vec![0; bins];
        for s in &e.samples {
            counts[((s[0].spatial()[0] / l * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let r = chi_square(&counts, &probs);
        assert!(r.p_value > 0.01, "p = {}", r.p_value);
    }

    #[test]
    fn quadrature_marginal_matches_closed_form() {
        let psi = two_mode();
        let l = 4.0;
        let q = BoxQuadrature::new(&psi, &square(l), 1_000_000, 4).unwrap();
        let cdf = |x: f64| (x + (1.5 * x).sin() / 1.5) / (l + (1.5 * l).sin() / 1.5);
        for x in [0.3, 1.1, 2.9, 3.7] {
            assert!((q.marginal_cdf(0, x) - cdf(x)).abs() < 1e-5);
            assert!((q.marginal_cdf(1, x) - x / l).abs() < 1e-9);
        }
        assert!((q.coarse_mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_is_zero() {
        let mut a = vec![0.1, 0.5, 0.3];
        let mut b = a.clone();
        assert_eq!(ks_two_sample(&mut a, &mut b), 0.0);
        let mut c = vec![10.0, 11.0, 12.0];
        assert_eq!(ks_two_sample(&mut a, &mut c), 1.0);
    }

    #[test]
    fn frame_test_beta_zero_is_exact() {
        let psi = two_mode();
        let r = frame_independence_test(&psi, &square(3.0), 0.0, 2000, 9).unwrap();
        assert_eq!(r.probability, r.probability_boosted);
        assert!(r.passed);
    }

    #[test]
    fn frame_test_plane_wave_gives_volume() {
        let (p, c) = unit();
        let psi = ModeSumWaveFunction::plane_wave(&[0.3], Branch::Positive, p, c).unwrap();
        let r = frame_independence_test(&psi, &square(3.0), 0.4, 20_000, 9).unwrap();
        assert!((r.probability - 9.0).abs() < 1e-12);
        assert!(r.passed);
        assert!((r.probability_boosted - 9.0).abs() < 3.0 * r.standard_error_boosted);
        assert!(frame_independence_test(&psi, &square(3.0), 0.7, 100, 9).is_err());
    }

    #[test]
    fn periodicity_is_verified() {
        let psi = two_mode();
        // spatial period 2 pi / 1.5, no time dependence in rho
        let ok = SamplingBox::new(vec![0.0, 0.0], vec![2.0 * std::f64::consts::PI / 1.5, 3.0])
            .unwrap()
            .with_periodic(vec![true, false])
            .unwrap();
        // the phase gradient is also periodic for equal-|k| partners
        assert!(check_periodicity(&psi, &ok, 1).is_ok());
        let bad = square(3.0).with_periodic(vec![true, false]).unwrap();
        assert!(check_periodicity(&psi, &bad, 1).is_err());
    }
}
