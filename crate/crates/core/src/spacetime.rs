//! Real-valued Minkowski algebra.
//!
//! Events are stored as `(x^1, .., x^D, ct)` with signature `diag(+, .., +, -)`.
//! A contraction that would be written with an imaginary fourth coordinate
//! `x_4 = ict` becomes an ordinary [`minkowski_dot`] here, so no complex
//! number ever enters an ODE state.
//!
//! Gradients (`dS/dx^mu`) and wave four-vectors are kept as covariant
//! components `(d/dx^1, .., d/dx^D, d/d(ct))`. [`FourVector::index_flipped`]
//! converts between the two placements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported number of spatial dimensions.
pub const MAX_SPATIAL_DIM: usize = 3;

/// Minkowski metric with `D` spatial dimensions and signature `(+, .., +, -)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metric {
    spatial_dim: usize,
}

impl Metric {
    pub fn new(spatial_dim: usize) -> Result<Self> {
        if !(1..=MAX_SPATIAL_DIM).contains(&spatial_dim) {
            return Err(Error::config(format!(
                "spatial dimension must be 1, 2 or 3, got {spatial_dim}"
            )));
        }
        Ok(Self { spatial_dim })
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    /// Number of spacetime coordinates per particle, `D + 1`.
    pub fn event_dim(&self) -> usize {
        self.spatial_dim + 1
    }
}

impl Default for Metric {
    fn default() -> Self {
        Self { spatial_dim: 1 }
    }
}

/// A four-vector in `(1+D)`-dimensional Minkowski space.
///
/// Unused spatial slots (beyond `dim`) are always zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourVector {
    spatial: [f64; MAX_SPATIAL_DIM],
    temporal: f64,
    dim: usize,
}

impl FourVector {
    /// Builds a vector from its spatial components and its temporal component.
    ///
    /// Panics if more than three spatial components are given or if any
    /// component is not finite.
    pub fn new(spatial: &[f64], temporal: f64) -> Self {
        assert!(
            (1..=MAX_SPATIAL_DIM).contains(&spatial.len()),
            "four-vector needs 1..=3 spatial components"
        );
        let mut s = [0.0; MAX_SPATIAL_DIM];
        s[..spatial.len()].copy_from_slice(spatial);
        let v = Self {
            spatial: s,
            temporal,
            dim: spatial.len(),
        };
        assert!(v.is_finite(), "four-vector components must be finite");
        v
    }

    /// Fallible constructor used at I/O boundaries.
    pub fn try_new(spatial: &[f64], temporal: f64) -> Result<Self> {
        if !(1..=MAX_SPATIAL_DIM).contains(&spatial.len()) {
            return Err(Error::config(format!(
                "four-vector needs 1..=3 spatial components, got {}",
                spatial.len()
            )));
        }
        if !spatial.iter().all(|v| v.is_finite()) || !temporal.is_finite() {
            return Err(Error::Domain("four-vector component is not finite".into()));
        }
        Ok(Self::new(spatial, temporal))
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(&[0.0; MAX_SPATIAL_DIM][..dim], 0.0)
    }

    /// An event `(x, ct)` built from coordinate time `t`.
    pub fn event(spatial: &[f64], t: f64, c: f64) -> Self {
        Self::new(spatial, c * t)
    }

    /// Builds from the flat `(x^1, .., x^D, ct)` layout.
    pub fn from_components(components: &[f64]) -> Self {
        let (t, s) = components.split_last().expect("empty component slice");
        Self::new(s, *t)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spatial(&self) -> &[f64] {
        &self.spatial[..self.dim]
    }

    pub fn temporal(&self) -> f64 {
        self.temporal
    }

    /// Component `mu` in the flat layout: `0..D` spatial, `D` temporal.
    pub fn component(&self, mu: usize) -> f64 {
        if mu == self.dim {
            self.temporal
        } else {
            assert!(mu < self.dim, "component index out of range");
            self.spatial[mu]
        }
    }

    pub fn set_component(&mut self, mu: usize, value: f64) {
        if mu == self.dim {
            self.temporal = value;
        } else {
            assert!(mu < self.dim, "component index out of range");
            self.spatial[mu] = value;
        }
    }

    /// Flat `(x^1, .., x^D, ct)` components.
    pub fn components(&self) -> Vec<f64> {
        let mut out = self.spatial().to_vec();
        out.push(self.temporal);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.spatial.iter().all(|v| v.is_finite()) && self.temporal.is_finite()
    }

    /// Minkowski contraction `sum_k a_k b_k - a_t b_t`. Dimensions must agree.
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let s: f64 = self
            .spatial()
            .iter()
            .zip(other.spatial())
            .map(|(a, b)| a * b)
            .sum();
        s - self.temporal * other.temporal
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Same vector with the temporal sign flipped: raises or lowers the index.
    pub fn index_flipped(&self) -> Self {
        Self {
            temporal: -self.temporal,
            ..*self
        }
    }

    /// Euclidean length of all components; used for error measures only.
    pub fn euclidean_norm(&self) -> f64 {
        (self.spatial().iter().map(|v| v * v).sum::<f64>() + self.temporal * self.temporal).sqrt()
    }

    pub fn scale(&self, f: f64) -> Self {
        self.map(|v| v * f)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + f * other`.
    pub fn add_scaled(&self, other: &Self, f: f64) -> Self {
        self.zip_with(other, |a, b| a + f * b)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = *self;
        for v in out.spatial[..self.dim].iter_mut() {
            *v = f(*v);
        }
        out.temporal = f(self.temporal);
        out
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "four-vector dimension mismatch");
        let mut out = *self;
        for k in 0..self.dim {
            out.spatial[k] = f(self.spatial[k], other.spatial[k]);
        }
        out.temporal = f(self.temporal, other.temporal);
        out
    }
}

/// Checked Minkowski contraction.
pub fn minkowski_dot(a: &FourVector, b: &FourVector, metric: &Metric) -> Result<f64> {
    for v in [a, b] {
        if v.dim() != metric.spatial_dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.spatial_dim(),
                found: v.dim(),
            });
        }
    }
    Ok(a.dot(b))
}

/// Lorentz factor for `|beta| < 1`.
pub fn gamma(beta: f64) -> Result<f64> {
    if !beta.is_finite() || beta.abs() >= 1.0 {
        return Err(Error::Domain(format!("boost requires |beta| < 1, got {beta}")));
    }
    Ok(1.0 / (1.0 - beta * beta).sqrt())
}

/// Boost of a contravariant vector along spatial `axis`:
/// `x' = gamma (x - beta ct)`, `ct' = gamma (ct - beta x)`.
pub fn lorentz_boost(v: &FourVector, beta: f64, axis: usize) -> Result<FourVector> {
    if axis >= v.dim() {
        return Err(Error::config(format!(
            "boost axis {axis} out of range for D = {}",
            v.dim()
        )));
    }
    let g = gamma(beta)?;
    let x = v.spatial[axis];
    let ct = v.temporal;
    let mut out = *v;
    out.spatial[axis] = g * (x - beta * ct);
    out.temporal = g * (ct - beta * x);
    Ok(out)
}

/// Boost of a covariant vector (gradient, wave vector) matching [`lorentz_boost`].
pub fn lorentz_boost_covariant(v: &FourVector, beta: f64, axis: usize) -> Result<FourVector> {
    Ok(lorentz_boost(&v.index_flipped(), beta, axis)?.index_flipped())
}

/// Mass and charge of one particle (Gaussian units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleParams {
    pub mass: f64,
    pub charge: f64,
}

impl ParticleParams {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::config(format!("particle mass must be > 0, got {mass}")));
        }
        if !charge.is_finite() {
            return Err(Error::config("particle charge must be finite"));
        }
        Ok(Self { mass, charge })
    }

    pub fn neutral(mass: f64) -> Result<Self> {
        Self::new(mass, 0.0)
    }
}

/// `c` and `hbar`, both runtime values so limit studies can rescale them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c: f64,
    pub hbar: f64,
}

impl Constants {
    pub fn new(c: f64, hbar: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) || !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::config(format!(
                "c and hbar must be strictly positive, got c = {c}, hbar = {hbar}"
            )));
        }
        Ok(Self { c, hbar })
    }

    /// `hbar = c = 1`.
    pub fn natural() -> Self {
        Self { c: 1.0, hbar: 1.0 }
    }

    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(self.c, hbar)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pure_time_unit_vector_has_negative_norm() {
        let m = Metric::new(1).unwrap();
        let a = FourVector::new(&[0.0], 1.0);
        assert_eq!(minkowski_dot(&a, &a, &m).unwrap(), -1.0);
    }

    #[test]
    fn space_and_time_axes_are_orthogonal() {
        let m = Metric::new(1).unwrap();
        let a = FourVector::new(&[1.0], 0.0);
        let b = FourVector::new(&[0.0], 1.0);
        assert_eq!(minkowski_dot(&a, &b, &m).unwrap(), 0.0);
    }

    #[test]
    fn on_shell_velocity_has_unit_norm() {
        // omega from the mass shell with m = c = hbar = 1 and k = 0.3
        let omega = (1.0f64 + 0.09).sqrt();
        let v = FourVector::new(&[0.3], omega);
        let m = Metric::new(1).unwrap();
        let n = minkowski_dot(&v, &v, &m).unwrap();
        assert!((n + 1.0).abs() < 1e-12);
        assert!((omega - 1.04403).abs() < 1e-5);
    }

    #[test]
    fn dot_rejects_mismatched_dimensions() {
        let m = Metric::new(2).unwrap();
        let a = FourVector::new(&[1.0], 0.0);
        let b = FourVector::new(&[1.0, 0.0], 0.0);
        assert!(matches!(
            minkowski_dot(&a, &b, &m),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn metric_rejects_unsupported_dimension() {
        assert!(Metric::new(0).is_err());
        assert!(Metric::new(4).is_err());
    }

    #[test]
    fn identity_boost() {
        let v = FourVector::new(&[0.0], 1.0);
        assert_eq!(lorentz_boost(&v, 0.0, 0).unwrap(), v);
    }

    #[test]
    fn boost_of_spatial_unit_vector() {
        let v = FourVector::new(&[1.0], 0.0);
        let b = lorentz_boost(&v, 0.6, 0).unwrap();
        assert!((b.spatial()[0] - 1.25).abs() < 1e-15);
        assert!((b.temporal() + 0.75).abs() < 1e-15);
    }

    #[test]
    fn superluminal_boost_is_a_domain_error() {
        let v = FourVector::new(&[1.0], 0.0);
        assert!(matches!(lorentz_boost(&v, 1.0, 0), Err(Error::Domain(_))));
        assert!(matches!(lorentz_boost(&v, -1.5, 0), Err(Error::Domain(_))));
        assert!(lorentz_boost(&v, 0.5, 1).is_err());
    }

    #[test]
    fn covariant_boost_preserves_phase() {
        let k = FourVector::new(&[0.3, -0.2], -1.2);
        let x = FourVector::new(&[1.5, 0.7], 2.0);
        let kb = lorentz_boost_covariant(&k, 0.4, 0).unwrap();
        let xb = lorentz_boost(&x, 0.4, 0).unwrap();
        let phase = k.spatial().iter().zip(x.spatial()).map(|(a, b)| a * b).sum::<f64>()
            + k.temporal() * x.temporal();
        let phase_b = kb.spatial().iter().zip(xb.spatial()).map(|(a, b)| a * b).sum::<f64>()
            + kb.temporal() * xb.temporal();
        assert!((phase - phase_b).abs() < 1e-12);
    }

    #[test]
    fn constants_and_particles_validate() {
        assert!(Constants::new(0.0, 1.0).is_err());
        assert!(Constants::new(1.0, -1.0).is_err());
        assert!(ParticleParams::new(0.0, 1.0).is_err());
        assert!(ParticleParams::new(1.0, f64::NAN).is_err());
        assert!(FourVector::try_new(&[f64::INFINITY], 0.0).is_err());
    }

    fn boost_jacobian(event: &FourVector, beta: f64, axis: usize) -> f64 {
        // central differences (exact for a linear map up to roundoff), then
        // determinant by Gaussian elimination
        let n = event.dim() + 1;
        let h = 1e-3;
        let mut jac = vec![vec![0.0; n]; n];
        for col in 0..n {
            let mut plus = *event;
            let mut minus = *event;
            plus.set_component(col, event.component(col) + h);
            minus.set_component(col, event.component(col) - h);
            let fp = lorentz_boost(&plus, beta, axis).unwrap();
            let fm = lorentz_boost(&minus, beta, axis).unwrap();
            for (row, jrow) in jac.iter_mut().enumerate() {
                jrow[col] = (fp.component(row) - fm.component(row)) / (2.0 * h);
            }
        }
        let mut det = 1.0;
        for i in 0..n {
            let p = (i..n)
                .max_by(|&a, &b| jac[a][i].abs().total_cmp(&jac[b][i].abs()))
                .unwrap();
            if p != i {
                jac.swap(p, i);
                det = -det;
            }
            det *= jac[i][i];
            for r in i + 1..n {
                let f = jac[r][i] / jac[i][i];
                for c in i..n {
                    jac[r][c] -= f * jac[i][c];
                }
            }
        }
        det
    }

    fn arb_vector() -> impl Strategy<Value = FourVector> {
        (1usize..=3, prop::collection::vec(-10.0f64..10.0, 4))
            .prop_map(|(d, c)| FourVector::new(&c[..d], c[3]))
    }

    proptest! {
        #[test]
        fn boost_preserves_interval(
            d in 1usize..=3,
            a in prop::collection::vec(-10.0f64..10.0, 4),
            b in prop::collection::vec(-10.0f64..10.0, 4),
            beta in -0.99f64..0.99,
            axis in 0usize..3,
        ) {
            let axis = axis % d;
            let v = FourVector::new(&a[..d], a[3]);
            let w = FourVector::new(&b[..d], b[3]);
            let before = v.dot(&w);
            let bv = lorentz_boost(&v, beta, axis).unwrap();
            let bw = lorentz_boost(&w, beta, axis).unwrap();
            let after = bv.dot(&bw);
            let scale = v.euclidean_norm() * w.euclidean_norm() * gamma(beta).unwrap().powi(2);
            prop_assert!((before - after).abs() <= 1e-10 * scale.max(1e-300));
        }

        #[test]
        fn boost_round_trip(v in arb_vector(), beta in -0.99f64..0.99) {
            let back = lorentz_boost(&lorentz_boost(&v, beta, 0).unwrap(), -beta, 0).unwrap();
            let g2 = gamma(beta).unwrap().powi(2);
            prop_assert!(back.sub(&v).euclidean_norm() <= 1e-12 * g2 * v.euclidean_norm().max(1.0));
        }

        #[test]
        fn boost_has_unit_jacobian(v in arb_vector(), beta in -0.99f64..0.99, axis in 0usize..3) {
            prop_assume!(axis < v.dim());
            let det = boost_jacobian(&v, beta, axis);
            prop_assert!((det - 1.0).abs() < 1e-8, "det = {}", det);
        }
    }
}
