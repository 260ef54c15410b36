//! External electromagnetic four-potentials and their field tensors.
//!
//! A potential value is `(A, phi)` in Gaussian units. In the real-metric
//! layout its covariant form is `A_mu = (A^1, .., A^D, -phi)`, and the field
//! tensor is `F_{mu nu} = d_mu A_nu - d_nu A_mu` over the flat component
//! index `(x^1, .., x^D, ct)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spacetime::FourVector;

/// Central-difference step for field tensors of gauge families.
pub const FIELD_FD_STEP: f64 = 1e-5;

/// A scalar gauge function `chi(x)` of one particle's event, with its
/// analytic covariant gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeFunction {
    /// `chi = g_mu x^mu`, with `gradient` in flat covariant layout
    /// (`d chi/dx^k`, then `d chi/d(ct)`).
    Linear { gradient: Vec<f64> },
    /// `chi = amplitude * sin(q_mu x^mu)`.
    Wave { amplitude: f64, wavevector: Vec<f64> },
}

impl GaugeFunction {
    pub fn zero(dim: usize) -> Self {
        GaugeFunction::Linear {
            gradient: vec![0.0; dim + 1],
        }
    }

    fn coefficients(&self) -> &[f64] {
        match self {
            GaugeFunction::Linear { gradient } => gradient,
            GaugeFunction::Wave { wavevector, .. } => wavevector,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = self.coefficients().len();
        if n != dim + 1 {
            return Err(Error::DimensionMismatch {
                expected: dim + 1,
                found: n,
            });
        }
        if !self.coefficients().iter().all(|v| v.is_finite()) {
            return Err(Error::config("gauge function coefficients must be finite"));
        }
        Ok(())
    }

    fn phase(coeffs: &[f64], x: &FourVector) -> f64 {
        coeffs
            .iter()
            .enumerate()
            .map(|(mu, q)| q * x.component(mu))
            .sum()
    }

    pub fn value(&self, x: &FourVector) -> f64 {
        match self {
            GaugeFunction::Linear { gradient } => Self::phase(gradient, x),
            GaugeFunction::Wave {
                amplitude,
                wavevector,
            } => amplitude * Self::phase(wavevector, x).sin(),
        }
    }

    /// Covariant gradient `d chi / dx^mu`.
    pub fn gradient(&self, x: &FourVector) -> FourVector {
        match self {
            GaugeFunction::Linear { gradient } => FourVector::from_components(gradient),
            GaugeFunction::Wave {
                amplitude,
                wavevector,
            } => {
                let f = amplitude * Self::phase(wavevector, x).cos();
                FourVector::from_components(wavevector).scale(f)
            }
        }
    }
}

/// A potential value `(A, phi)` at one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourPotential {
    pub vector: FourVector,
}

impl FourPotential {
    pub fn new(vector_part: &[f64], phi: f64) -> Self {
        Self {
            vector: FourVector::new(vector_part, phi),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            vector: FourVector::zero(dim),
        }
    }

    pub fn vector_part(&self) -> &[f64] {
        self.vector.spatial()
    }

    pub fn phi(&self) -> f64 {
        self.vector.temporal()
    }

    /// Covariant components `(A, -phi)`.
    pub fn covariant(&self) -> FourVector {
        self.vector.index_flipped()
    }
}

/// Antisymmetric `(D+1) x (D+1)` field tensor at one event.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTensor {
    n: usize,
    entries: Vec<f64>,
}

impl FieldTensor {
    pub fn zero(dim: usize) -> Self {
        let n = dim + 1;
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.entries[mu * self.n + nu]
    }

    /// Sets `F[mu][nu] = value` and `F[nu][mu] = -value`.
    fn set_antisymmetric(&mut self, mu: usize, nu: usize, value: f64) {
        self.entries[mu * self.n + nu] = value;
        self.entries[nu * self.n + mu] = -value;
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `F_{nu mu} u^mu`: the covariant Lorentz-force direction for a
    /// contravariant four-velocity `u`.
    pub fn contract(&self, u: &FourVector) -> FourVector {
        let mut out = FourVector::zero(u.dim());
        for nu in 0..self.n {
            let v = (0..self.n).map(|mu| self.get(nu, mu) * u.component(mu)).sum();
            out.set_component(nu, v);
        }
        out
    }
}

/// Spatial axis label in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// Coordinate plane of a constant magnetic field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Plane {
    Xy,
    Yz,
    Zx,
}

impl Plane {
    pub fn axes(self) -> (usize, usize) {
        match self {
            Plane::Xy => (0, 1),
            Plane::Yz => (1, 2),
            Plane::Zx => (2, 0),
        }
    }
}

/// Parametric external potential families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EMPotential {
    Zero,
    /// Static gauge: `phi = -E x_axis`, `A = 0`.
    ConstantElectric {
        #[serde(rename = "E")]
        e_field: f64,
        axis: Axis,
    },
    /// Symmetric gauge in `plane = (a, b)`: `A_a = -B x_b / 2`, `A_b = B x_a / 2`,
    /// so that `F_ab = B`.
    ConstantMagnetic {
        #[serde(rename = "B")]
        b_field: f64,
        plane: Plane,
    },
    /// `A_mu = d_mu chi`: zero field strength.
    PureGauge { chi: GaugeFunction },
}

impl EMPotential {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            EMPotential::Zero => Ok(()),
            EMPotential::ConstantElectric { e_field, axis } => {
                if axis.index() >= dim || !e_field.is_finite() {
                    return Err(Error::config(format!(
                        "constant electric field needs a finite E and axis within D = {dim}"
                    )));
                }
                Ok(())
            }
            EMPotential::ConstantMagnetic { b_field, plane } => {
                let (a, b) = plane.axes();
                if a.max(b) >= dim || !b_field.is_finite() {
                    return Err(Error::config(format!(
                        "constant magnetic field needs a finite B and a plane within D = {dim}"
                    )));
                }
                Ok(())
            }
            EMPotential::PureGauge { chi } => chi.validate(dim),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, EMPotential::Zero)
    }

    pub fn potential_at(&self, x: &FourVector) -> FourPotential {
        let dim = x.dim();
        match self {
            EMPotential::Zero => FourPotential::zero(dim),
            EMPotential::ConstantElectric { e_field, axis } => {
                let mut p = FourPotential::zero(dim);
                p.vector.set_component(dim, -e_field * x.component(axis.index()));
                p
            }
            EMPotential::ConstantMagnetic { b_field, plane } => {
                let (a, b) = plane.axes();
                let mut p = FourPotential::zero(dim);
                p.vector.set_component(a, -0.5 * b_field * x.component(b));
                p.vector.set_component(b, 0.5 * b_field * x.component(a));
                p
            }
            EMPotential::PureGauge { chi } => {
                // covariant A_mu = d_mu chi, so phi = -d chi / d(ct)
                FourPotential {
                    vector: chi.gradient(x).index_flipped(),
                }
            }
        }
    }

    /// Field tensor: analytic for the constant families, central
    /// differences (step [`FIELD_FD_STEP`]) for gauge families.
    pub fn field_tensor_at(&self, x: &FourVector) -> FieldTensor {
        let dim = x.dim();
        let mut f = FieldTensor::zero(dim);
        match self {
            EMPotential::Zero => {}
            EMPotential::ConstantElectric { e_field, axis } => {
                // A_t = E x_axis
                f.set_antisymmetric(axis.index(), dim, *e_field);
            }
            EMPotential::ConstantMagnetic { b_field, plane } => {
                let (a, b) = plane.axes();
                f.set_antisymmetric(a, b, *b_field);
            }
            EMPotential::PureGauge { .. } => {
                f = self.field_tensor_fd(x, FIELD_FD_STEP);
            }
        }
        f
    }

    /// Central-difference field tensor with explicit antisymmetrization.
    pub fn field_tensor_fd(&self, x: &FourVector, h: f64) -> FieldTensor {
        let n = x.dim() + 1;
        // d_mu A_nu for all mu, nu
        let mut grad = vec![0.0; n * n];
        for mu in 0..n {
            let mut xp = *x;
            let mut xm = *x;
            xp.set_component(mu, x.component(mu) + h);
            xm.set_component(mu, x.component(mu) - h);
            let ap = self.potential_at(&xp).covariant();
            let am = self.potential_at(&xm).covariant();
            for nu in 0..n {
                grad[mu * n + nu] = (ap.component(nu) - am.component(nu)) / (2.0 * h);
            }
        }
        let mut f = FieldTensor::zero(x.dim());
        for mu in 0..n {
            for nu in mu + 1..n {
                f.set_antisymmetric(mu, nu, grad[mu * n + nu] - grad[nu * n + mu]);
            }
        }
        f
    }
}
