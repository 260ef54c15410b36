//! JSON scenario files: strict schema, dotted-path overrides and the
//! builders that turn a parsed file into library objects.
//!
//! Unknown keys are rejected. `hbar` and `c` have no defaults. Mode
//! frequencies are never stored; they are re-derived from the mass shell on
//! load, so a file cannot carry an off-shell mode.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{IntegratorConfig, IntervalClass, Method, NodePolicy, PacketFamily};
use crate::error::{Error, Result};
use crate::fields::{EMPotential, GaugeFunction};
use crate::nonrel::{NRTerm, NRWaveFunction, NrScan, TemporalOffsets};
use crate::spacetime::{Constants, FourVector, ParticleParams, MAX_SPATIAL_DIM};
use crate::stats::{SamplerMethod, SamplingBox};
use crate::wavefunction::{gaussian_packet, Branch, ModeSumWaveFunction, PlaneWaveMode, ProductTerm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub constants: ConstantsSpec,
    pub particles: Vec<ParticleSpec>,
    pub wavefunction: WaveFunctionSpec,
    /// One external potential per particle; empty means free particles.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<EMPotential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<OffsetsSpec>,
    pub initial: Vec<EventSpec>,
    pub integrator: IntegratorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<FramesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    pub hbar: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub mass: f64,
    pub charge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WaveFunctionSpec {
    /// Klein-Gordon mode sum, given term by term or as a Gaussian packet.
    Relativistic {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        terms: Vec<TermSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        packet: Option<PacketSpec>,
        /// Phase transform `psi -> exp(i e chi / hbar c) psi` for every particle.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gauge: Option<GaugeFunction>,
    },
    /// Multi-time Schrodinger mode sum.
    Nonrelativistic {
        terms: Vec<NrTermSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        potentials: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// `[re, im]`.
    pub coefficient: [f64; 2],
    pub modes: Vec<ModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub particle: usize,
    pub k: Vec<f64>,
    #[serde(default = "positive")]
    pub branch: Branch,
}

fn positive() -> Branch {
    Branch::Positive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center_k: Vec<f64>,
    pub width: f64,
    pub n_modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NrTermSpec {
    pub coefficient: [f64; 2],
    pub modes: Vec<NrModeSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NrModeSpec {
    pub particle: usize,
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetsSpec {
    pub deltas: Vec<f64>,
    pub epsilon_clock: f64,
}

/// Initial event of one particle. `t` is ignored by non-relativistic runs,
/// which start at `t = delta_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    #[serde(default)]
    pub t: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub d_sigma: f64,
    pub sigma_span: f64,
    #[serde(default = "rk4")]
    pub method: Method,
    #[serde(default = "halt")]
    pub node_policy: NodePolicy,
}

fn rk4() -> Method {
    Method::Rk4
}

fn halt() -> NodePolicy {
    NodePolicy::Halt
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub seed: u64,
    #[serde(default = "rejection")]
    pub method: SamplerMethod,
    #[serde(default = "default_n")]
    pub n: usize,
    /// Coordinates per particle are `(x^1 .. x^D, ct)`.
    #[serde(rename = "box")]
    pub region: SamplingBox,
    /// Flow used by the equivariance test; defaults to the scenario integrator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_span: Option<f64>,
}

fn rejection() -> SamplerMethod {
    SamplerMethod::Rejection
}

fn default_n() -> usize {
    5000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesSpec {
    pub seed: u64,
    pub beta: f64,
    pub n: usize,
    #[serde(rename = "box")]
    pub region: SamplingBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalLimitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonrelativistic: Option<NrLimitSpec>,
}

/// Free packet of physical center momentum `p0` scanned over `hbar`; the
/// scenario's first particle and `c` are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalLimitSpec {
    pub center_momentum: Vec<f64>,
    pub width: f64,
    pub n_modes: usize,
    pub hbar_values: Vec<f64>,
    pub d_sigma: f64,
    pub n_steps: usize,
}

/// Dimensionless single-particle template, see [`NrScan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NrLimitSpec {
    pub terms: Vec<NrScanTerm>,
    pub x0: Vec<f64>,
    pub steps: usize,
    pub unit_span: f64,
    pub v_over_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NrScanTerm {
    pub coefficient: [f64; 2],
    pub k: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSpec {
    /// File stem of everything written; defaults to the scenario name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

/// Assertions checked by the smoke suite (`verify`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Final event of each particle after the integrator span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_events: Option<Vec<EventSpec>>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Interval class of each particle at the initial configuration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_interval: Option<Vec<IntervalClass>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equivariance_passes: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames_pass: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits_pass: Option<bool>,
}

fn default_tolerance() -> f64 {
    1e-9
}

/// Scenario files shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("plane_wave", include_str!("../scenarios/plane_wave.json")),
    ("two_mode", include_str!("../scenarios/two_mode.json")),
    ("three_mode_torus", include_str!("../scenarios/three_mode_torus.json")),
    ("entangled_pair", include_str!("../scenarios/entangled_pair.json")),
    ("spacelike", include_str!("../scenarios/spacelike.json")),
    ("gauge_pair", include_str!("../scenarios/gauge_pair.json")),
    ("classical_limit", include_str!("../scenarios/classical_limit.json")),
    ("nr_limit", include_str!("../scenarios/nr_limit.json")),
    ("conditional", include_str!("../scenarios/conditional.json")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

fn parse_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Applies `a.b.0.c=value` to a JSON tree. Numeric segments index arrays;
/// missing object keys are created. `value` is read as JSON when it parses,
/// as a plain string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{assignment}` is not key=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::config(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::config(format!("override `{path}`: `{seg}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| Error::config(format!("override `{path}`: index {idx} out of range ({len})")))?
            }
            Value::Object(map) => {
                if last {
                    map.insert(seg.to_string(), value);
                    return Ok(());
                }
                map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()))
            }
            _ => return Err(Error::config(format!("override `{path}`: `{seg}` is not inside an object or array"))),
        };
        if last {
            *node = value;
            return Ok(());
        }
    }
    unreachable!("path has at least one segment")
}

impl Scenario {
    /// Parses and validates. `path` only labels diagnostics.
    pub fn parse(text: &str, path: &Path, overrides: &[String]) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| parse_error(path, e))?;
        let scenario = if overrides.is_empty() {
            scenario
        } else {
            let mut tree = serde_json::to_value(&scenario)?;
            for o in overrides {
                apply_override(&mut tree, o)?;
            }
            serde_json::from_value(tree).map_err(|e| Error::Scenario {
                path: path.to_path_buf(),
                field: format!("--override {}", overrides.join(" ")),
                message: e.to_string(),
            })?
        };
        scenario.validate(path)?;
        Ok(scenario)
    }

    /// Reads a file, or a bundled scenario when `spec` is not an existing
    /// path but names one (with or without `.json`).
    pub fn load(spec: &str, overrides: &[String]) -> Result<Self> {
        let path = PathBuf::from(spec);
        if path.exists() {
            let text = std::fs::read_to_string(&path)?;
            return Self::parse(&text, &path, overrides);
        }
        let name = spec.strip_suffix(".json").unwrap_or(spec);
        match bundled(name) {
            Some(text) => Self::parse(text, Path::new(&format!("<bundled>/{name}.json")), overrides),
            None => Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("{spec}: no such file or bundled scenario"),
            ))),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn stem(&self) -> &str {
        self.outputs.as_ref().and_then(|o| o.stem.as_deref()).unwrap_or(&self.name)
    }

    /// Replaces every seed in the file.
    pub fn set_seed(&mut self, seed: u64) {
        if let Some(s) = &mut self.sampler {
            s.seed = seed;
        }
        if let Some(f) = &mut self.frames {
            f.seed = seed;
        }
    }

    pub fn seed(&self) -> Option<u64> {
        self.sampler.as_ref().map(|s| s.seed).or(self.frames.as_ref().map(|f| f.seed))
    }

    fn field_error(path: &Path, field: impl Into<String>, e: impl std::fmt::Display) -> Error {
        Error::Scenario {
            path: path.to_path_buf(),
            field: field.into(),
            message: e.to_string(),
        }
    }

    pub fn validate(&self, path: &Path) -> Result<()> {
        let fe = |f: &str, e: Error| Self::field_error(path, f, e);
        self.constants().map_err(|e| fe("constants", e))?;
        if self.particles.is_empty() {
            return Err(Self::field_error(path, "particles", "at least one particle is required"));
        }
        for (i, p) in self.particles.iter().enumerate() {
            ParticleParams::new(p.mass, p.charge).map_err(|e| fe(&format!("particles[{i}].mass"), e))?;
        }
        let n = self.particles.len();
        let dim = self.spatial_dim().map_err(|e| fe("wavefunction", e))?;
        match &self.wavefunction {
            WaveFunctionSpec::Relativistic { .. } => {
                self.relativistic().map_err(|e| fe("wavefunction", e))?;
            }
            WaveFunctionSpec::Nonrelativistic { .. } => {
                self.nonrelativistic().map_err(|e| fe("wavefunction", e))?;
                if !self.fields.is_empty() {
                    return Err(Self::field_error(
                        path,
                        "fields",
                        "non-relativistic scenarios take constant potentials in wavefunction.potentials",
                    ));
                }
            }
        }
        if !self.fields.is_empty() && self.fields.len() != n {
            return Err(Self::field_error(path, "fields", format!("expected {n} entries, found {}", self.fields.len())));
        }
        for (i, f) in self.fields.iter().enumerate() {
            f.validate(dim).map_err(|e| fe(&format!("fields[{i}]"), e))?;
        }
        if self.initial.len() != n {
            return Err(Self::field_error(path, "initial", format!("expected {n} events, found {}", self.initial.len())));
        }
        for (i, ev) in self.initial.iter().enumerate() {
            if ev.x.len() != dim || !ev.x.iter().chain([&ev.t]).all(|v| v.is_finite()) {
                return Err(Self::field_error(
                    path,
                    format!("initial[{i}]"),
                    format!("needs {dim} finite spatial components and a finite t"),
                ));
            }
        }
        self.offsets().map_err(|e| fe("offsets", e))?;
        self.integrator_config().map_err(|e| fe("integrator", e))?;
        if let Some(s) = &self.sampler {
            s.region.validate().map_err(|e| fe("sampler.box", e))?;
            if s.region.dim() != n * (dim + 1) {
                return Err(Self::field_error(
                    path,
                    "sampler.box",
                    format!("expected {} coordinates, found {}", n * (dim + 1), s.region.dim()),
                ));
            }
            if s.n == 0 {
                return Err(Self::field_error(path, "sampler.n", "must be > 0"));
            }
            self.equivariance_config().map_err(|e| fe("sampler.sigma_span", e))?;
        }
        if let Some(f) = &self.frames {
            f.region.validate().map_err(|e| fe("frames.box", e))?;
            if f.region.dim() != dim + 1 || n != 1 {
                return Err(Self::field_error(path, "frames", "frame test takes one particle and a single-event box"));
            }
        }
        if let Some(l) = &self.limits {
            if let Some(c) = &l.classical {
                if c.hbar_values.is_empty() {
                    return Err(Self::field_error(path, "limits.classical.hbar_values", "scan list is empty"));
                }
                self.packet_family().map_err(|e| fe("limits.classical", e))?;
            }
            if let Some(nr) = &l.nonrelativistic {
                if nr.v_over_c.is_empty() {
                    return Err(Self::field_error(path, "limits.nonrelativistic.v_over_c", "scan list is empty"));
                }
                self.nr_scan().map_err(|e| fe("limits.nonrelativistic", e))?;
            }
        }
        if let Some(x) = &self.expect {
            if let Some(ev) = &x.final_events {
                if ev.len() != n {
                    return Err(Self::field_error(path, "expect.final_events", format!("expected {n} events")));
                }
            }
            if let Some(c) = &x.initial_interval {
                if c.len() != n {
                    return Err(Self::field_error(path, "expect.initial_interval", format!("expected {n} entries")));
                }
            }
        }
        Ok(())
    }

    pub fn constants(&self) -> Result<Constants> {
        Constants::new(self.constants.c, self.constants.hbar)
    }

    pub fn particles(&self) -> Result<Vec<ParticleParams>> {
        self.particles.iter().map(|p| ParticleParams::new(p.mass, p.charge)).collect()
    }

    pub fn spatial_dim(&self) -> Result<usize> {
        let dim = match &self.wavefunction {
            WaveFunctionSpec::Relativistic { terms, packet, .. } => match (terms.first(), packet) {
                (Some(t), None) => t.modes.first().map(|m| m.k.len()),
                (None, Some(p)) => Some(p.center_k.len()),
                _ => return Err(Error::config("give exactly one of `terms` and `packet`")),
            },
            WaveFunctionSpec::Nonrelativistic { terms, .. } => {
                terms.first().and_then(|t| t.modes.first()).map(|m| m.k.len())
            }
        };
        match dim {
            Some(d) if (1..=MAX_SPATIAL_DIM).contains(&d) => Ok(d),
            Some(d) => Err(Error::config(format!("wavevectors need 1..=3 components, got {d}"))),
            None => Err(Error::config("wave function has no terms")),
        }
    }

    /// Slots modes by particle index; every particle exactly once per term.
    fn by_particle<'a, T>(&self, t: usize, modes: &'a [T], index: impl Fn(&T) -> usize) -> Result<Vec<&'a T>> {
        let n = self.particles.len();
        let mut slots: Vec<Option<&T>> = vec![None; n];
        for m in modes {
            let i = index(m);
            if i >= n {
                return Err(Error::config(format!("term {t} references particle {i}, only {n} exist")));
            }
            if slots[i].replace(m).is_some() {
                return Err(Error::config(format!("term {t} gives particle {i} twice")));
            }
        }
        slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| Error::config(format!("term {t} has no mode for particle {i}"))))
            .collect()
    }

    /// The mode sum without the optional gauge phase.
    pub fn relativistic(&self) -> Result<ModeSumWaveFunction> {
        let constants = self.constants()?;
        let particles = self.particles()?;
        match &self.wavefunction {
            WaveFunctionSpec::Relativistic { terms, packet: None, .. } => {
                let terms = terms
                    .iter()
                    .enumerate()
                    .map(|(t, term)| {
                        let modes = self
                            .by_particle(t, &term.modes, |m| m.particle)?
                            .into_iter()
                            .enumerate()
                            .map(|(i, m)| PlaneWaveMode::on_shell(&m.k, m.branch, &particles[i], &constants))
                            .collect::<Result<Vec<_>>>()?;
                        Ok(ProductTerm {
                            coefficient: Complex64::new(term.coefficient[0], term.coefficient[1]),
                            modes,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                ModeSumWaveFunction::new(terms, particles, constants)
            }
            WaveFunctionSpec::Relativistic { packet: Some(p), terms, .. } => {
                if !terms.is_empty() || particles.len() != 1 {
                    return Err(Error::config("a packet takes one particle and no explicit terms"));
                }
                gaussian_packet(&p.center_k, p.width, p.n_modes, particles[0], constants)
            }
            WaveFunctionSpec::Nonrelativistic { .. } => Err(Error::config("scenario is non-relativistic")),
        }
    }

    pub fn gauge(&self) -> Option<&GaugeFunction> {
        match &self.wavefunction {
            WaveFunctionSpec::Relativistic { gauge, .. } => gauge.as_ref(),
            _ => None,
        }
    }

    pub fn is_relativistic(&self) -> bool {
        matches!(self.wavefunction, WaveFunctionSpec::Relativistic { .. })
    }

    pub fn nonrelativistic(&self) -> Result<NRWaveFunction> {
        let WaveFunctionSpec::Nonrelativistic { terms, potentials } = &self.wavefunction else {
            return Err(Error::config("scenario is relativistic"));
        };
        let terms = terms
            .iter()
            .enumerate()
            .map(|(t, term)| {
                Ok(NRTerm {
                    coefficient: Complex64::new(term.coefficient[0], term.coefficient[1]),
                    wavevectors: self
                        .by_particle(t, &term.modes, |m| m.particle)?
                        .into_iter()
                        .map(|m| m.k.clone())
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let psi = NRWaveFunction::new(terms, self.particles()?, self.constants()?)?;
        match potentials {
            Some(p) => psi.with_potentials(p.clone()),
            None => Ok(psi),
        }
    }

    /// One potential per particle, all zero when the file gives none.
    pub fn fields(&self) -> Vec<EMPotential> {
        if self.fields.is_empty() {
            vec![EMPotential::Zero; self.particles.len()]
        } else {
            self.fields.clone()
        }
    }

    pub fn offsets(&self) -> Result<TemporalOffsets> {
        match &self.offsets {
            Some(o) => {
                if o.deltas.len() != self.particles.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.particles.len(),
                        found: o.deltas.len(),
                    });
                }
                TemporalOffsets::new(o.deltas.clone(), o.epsilon_clock)
            }
            None => Ok(TemporalOffsets::zero(self.particles.len())),
        }
    }

    pub fn initial_events(&self) -> Result<Vec<FourVector>> {
        let c = self.constants()?.c;
        Ok(self.initial.iter().map(|e| FourVector::event(&e.x, e.t, c)).collect())
    }

    pub fn initial_positions(&self) -> Vec<Vec<f64>> {
        self.initial.iter().map(|e| e.x.clone()).collect()
    }

    pub fn integrator_config(&self) -> Result<IntegratorConfig> {
        let s = &self.integrator;
        IntegratorConfig::from_span(s.d_sigma, s.sigma_span, s.method, s.node_policy)
    }

    /// Flow span of the equivariance test.
    pub fn equivariance_config(&self) -> Result<IntegratorConfig> {
        let base = &self.integrator;
        let s = self.sampler.as_ref().ok_or_else(|| Error::config("scenario has no sampler section"))?;
        IntegratorConfig::from_span(
            s.d_sigma.unwrap_or(base.d_sigma),
            s.sigma_span.unwrap_or(base.sigma_span),
            base.method,
            base.node_policy,
        )
    }

    pub fn packet_family(&self) -> Result<PacketFamily> {
        let spec = self
            .limits
            .as_ref()
            .and_then(|l| l.classical.as_ref())
            .ok_or_else(|| Error::config("scenario has no limits.classical section"))?;
        Ok(PacketFamily {
            center_momentum: spec.center_momentum.clone(),
            width: spec.width,
            n_modes: spec.n_modes,
            particle: self.particles()?[0],
            c: self.constants()?.c,
        })
    }

    pub fn nr_scan(&self) -> Result<NrScan> {
        let spec = self
            .limits
            .as_ref()
            .and_then(|l| l.nonrelativistic.as_ref())
            .ok_or_else(|| Error::config("scenario has no limits.nonrelativistic section"))?;
        if spec.terms.is_empty() || spec.steps == 0 || !(spec.unit_span > 0.0) {
            return Err(Error::config("scan needs terms, steps > 0 and unit_span > 0"));
        }
        Ok(NrScan {
            terms: spec.terms.iter().map(|t| (t.coefficient, t.k.clone())).collect(),
            particle: self.particles()?[0],
            constants: self.constants()?,
            x0: spec.x0.clone(),
            steps: spec.steps,
            unit_span: spec.unit_span,
        })
    }
}
