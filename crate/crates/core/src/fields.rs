//! Compactly supported C^1 test vector fields with closed-form Jacobians.
//!
//! Every field evaluates to exact zero outside its support ball, and the
//! Jacobian convention is `DX[(i, j)] = dX^i / dx^j`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{operator_norm, ProjectionPair};
use crate::varifold::VarifoldSample;

/// Radial profile `phi: [0, inf) -> [0, 1]`, nonincreasing, zero on `[1, inf)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CutoffProfile {
    /// `(1 - t^2)^2`.
    #[default]
    Bump,
    /// Identically 1 on `[0, inner]`, then a cubic smoothstep down to 0 at 1.
    /// With `inner = 1/2` the spatial cutoff satisfies `|D zeta| <= 3 / rho`.
    Plateau { inner: f64 },
    /// `exp(-c t^2 / (1 - t^2))`: C-infinity, so lattice quadrature of its
    /// derivatives converges spectrally.
    Smooth { sharpness: f64 },
}

impl CutoffProfile {
    /// The standard zeta cutoff: 1 on `B_{rho/2}`, gradient bounded by `3/rho`.
    pub const ZETA: CutoffProfile = CutoffProfile::Plateau { inner: 0.5 };

    pub fn value(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= 1.0 {
            return 0.0;
        }
        match *self {
            CutoffProfile::Bump => {
                let s = 1.0 - t * t;
                s * s
            }
            CutoffProfile::Plateau { inner } => {
                if t <= inner {
                    1.0
                } else {
                    let tau = (t - inner) / (1.0 - inner);
                    1.0 - tau * tau * (3.0 - 2.0 * tau)
                }
            }
            CutoffProfile::Smooth { sharpness } => (-sharpness * t * t / (1.0 - t * t)).exp(),
        }
    }

    /// `phi'(t)` for `t >= 0`.
    pub fn derivative(&self, t: f64) -> f64 {
        let t = t.abs();
        if t >= 1.0 {
            return 0.0;
        }
        match *self {
            CutoffProfile::Bump => -4.0 * t * (1.0 - t * t),
            CutoffProfile::Plateau { inner } => {
                if t <= inner {
                    0.0
                } else {
                    let tau = (t - inner) / (1.0 - inner);
                    -6.0 * tau * (1.0 - tau) / (1.0 - inner)
                }
            }
            CutoffProfile::Smooth { sharpness } => {
                let s = 1.0 - t * t;
                -self.value(t) * 2.0 * sharpness * t / (s * s)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CutoffProfile::Plateau { inner } if !(0.0..1.0).contains(&inner) => {
                Err(Error::InvalidInput(format!("plateau inner fraction {inner} outside [0, 1)")))
            }
            CutoffProfile::Smooth { sharpness } if !(sharpness > 0.0) => {
                Err(Error::InvalidInput(format!("sharpness {sharpness} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// Scalar weight `h` with closed-form gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `gradient . x + offset`.
    Affine {
        gradient: Vec<f64>,
        offset: f64,
    },
}

impl ScalarField {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Affine { gradient, offset } => gradient.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() + offset,
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ScalarField::Constant { .. } => DVector::zeros(x.len()),
            ScalarField::Affine { gradient, .. } => DVector::from_column_slice(gradient),
        }
    }

    /// `s * h`.
    pub fn scaled(&self, s: f64) -> ScalarField {
        match self {
            ScalarField::Constant { value } => ScalarField::Constant { value: s * value },
            ScalarField::Affine { gradient, offset } => {
                ScalarField::Affine { gradient: gradient.iter().map(|g| s * g).collect(), offset: s * offset }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BumpTerm {
    center: DVector<f64>,
    radius: f64,
    direction: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
enum FieldKind {
    Radial { profile: CutoffProfile },
    WeightedRadial { profile: CutoffProfile, h: ScalarField },
    VerticalCutoff { profile: CutoffProfile, normal: DMatrix<f64> },
    Coordinate { profile: CutoffProfile, axis: usize },
    Bumps { profile: CutoffProfile, terms: Vec<BumpTerm> },
    Combination(Vec<(f64, VectorField)>),
}

/// A C^1 vector field supported in a closed ball.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    center: DVector<f64>,
    radius: f64,
    scale: f64,
    kind: FieldKind,
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("support radius must be positive, got {radius}")))
    }
}

impl VectorField {
    /// `X(x) = phi(|x - x0| / rho) (x - x0)`.
    pub fn radial(center: DVector<f64>, radius: f64, profile: CutoffProfile) -> Result<Self> {
        check_radius(radius)?;
        profile.validate()?;
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::Radial { profile } })
    }

    /// `X(x) = h(x) phi(|x - x0| / rho) (x - x0)`.
    pub fn weighted_radial(center: DVector<f64>, radius: f64, profile: CutoffProfile, h: ScalarField) -> Result<Self> {
        check_radius(radius)?;
        profile.validate()?;
        if let ScalarField::Affine { gradient, .. } = &h {
            if gradient.len() != center.len() {
                return Err(Error::DimensionMismatch { expected: center.len(), got: gradient.len() });
            }
        }
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::WeightedRadial { profile, h } })
    }

    /// `X(x) = zeta(x)^2 P_{T^perp}(x - xi)` with `zeta = phi(|x - xi| / rho)`.
    pub fn vertical_cutoff(center: DVector<f64>, radius: f64, profile: CutoffProfile, plane: &ProjectionPair) -> Result<Self> {
        check_radius(radius)?;
        profile.validate()?;
        if plane.ambient_dim() != center.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), got: plane.ambient_dim() });
        }
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::VerticalCutoff { profile, normal: plane.complement.clone() } })
    }

    /// `X = zeta e_{n+j}` for `1 <= j <= k`.
    pub fn coordinate(n: usize, k: usize, j: usize, center: DVector<f64>, radius: f64, profile: CutoffProfile) -> Result<Self> {
        check_radius(radius)?;
        profile.validate()?;
        if j == 0 || j > k {
            return Err(Error::InvalidInput(format!("coordinate index {j} outside 1..={k}")));
        }
        if center.len() != n + k {
            return Err(Error::DimensionMismatch { expected: n + k, got: center.len() });
        }
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::Coordinate { profile, axis: n + j - 1 } })
    }

    /// Seeded superposition of `terms` vector-valued bumps, each supported in
    /// a sub-ball of radius at least `3/4 radius`.
    pub fn random_bumps(center: DVector<f64>, radius: f64, profile: CutoffProfile, seed: u64, terms: usize) -> Result<Self> {
        check_radius(radius)?;
        profile.validate()?;
        let d = center.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = dir.norm();
            if norm > 0.0 {
                dir /= norm;
            }
            let offset = 0.25 * radius * rng.random::<f64>();
            let direction = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)) / (d as f64).sqrt();
            out.push(BumpTerm { center: &center + dir * offset, radius: radius - offset, direction });
        }
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::Bumps { profile, terms: out } })
    }

    /// `zeta e_{n+j}` with `zeta` a seeded signed superposition of `terms`
    /// scalar bumps in sub-balls of radius at least `3/4 radius`.
    #[allow(clippy::too_many_arguments)]
    pub fn vertical_bumps(
        n: usize,
        k: usize,
        j: usize,
        center: DVector<f64>,
        radius: f64,
        profile: CutoffProfile,
        seed: u64,
        terms: usize,
    ) -> Result<Self> {
        let d = n + k;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut parts = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = dir.norm();
            if norm > 0.0 {
                dir /= norm;
            }
            let offset = 0.25 * radius * rng.random::<f64>();
            let coef: f64 = rng.sample(StandardNormal);
            let sub = VectorField::coordinate(n, k, j, &center + dir * offset, radius - offset, profile)?;
            parts.push((coef, sub));
        }
        if parts.is_empty() {
            return Err(Error::InvalidInput("vertical bumps need at least one term".into()));
        }
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::Combination(parts) })
    }

    /// `sum_i c_i X_i`, supported in a ball enclosing every term's support.
    pub fn combination(terms: Vec<(f64, VectorField)>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidInput("empty field combination".into()))?;
        let center = first.1.center.clone();
        let radius = terms.iter().map(|(_, f)| (&f.center - &center).norm() + f.radius).fold(0.0, f64::max);
        Ok(Self { center, radius, scale: 1.0, kind: FieldKind::Combination(terms) })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { scale: self.scale * s, ..self.clone() }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn support_center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    #[inline]
    fn outside(&self, x: &DVector<f64>) -> bool {
        (x - &self.center).norm() >= self.radius
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        if self.outside(x) {
            return DVector::zeros(d);
        }
        let v = x - &self.center;
        let r = v.norm();
        let t = r / self.radius;
        let out = match &self.kind {
            FieldKind::Radial { profile } => v * profile.value(t),
            FieldKind::WeightedRadial { profile, h } => v * (h.value(x) * profile.value(t)),
            FieldKind::VerticalCutoff { profile, normal } => {
                let z = profile.value(t);
                (normal * v) * (z * z)
            }
            FieldKind::Coordinate { profile, axis } => {
                let mut e = DVector::zeros(d);
                e[*axis] = profile.value(t);
                e
            }
            FieldKind::Bumps { profile, terms } => {
                let mut acc = DVector::zeros(d);
                for term in terms {
                    let tl = (x - &term.center).norm() / term.radius;
                    acc.axpy(profile.value(tl), &term.direction, 1.0);
                }
                acc
            }
            FieldKind::Combination(terms) => {
                let mut acc = DVector::zeros(d);
                for (c, f) in terms {
                    acc.axpy(*c, &f.eval(x), 1.0);
                }
                acc
            }
        };
        out * self.scale
    }

    /// `DX(x)`, entry `(i, j) = dX^i / dx^j`.
    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim();
        if self.outside(x) {
            return DMatrix::zeros(d, d);
        }
        let v = x - &self.center;
        let r = v.norm();
        let t = r / self.radius;
        // d/dx of phi(|x - c| / rho) is phi'(t) / (rho r) (x - c)
        let grad_of = |profile: &CutoffProfile, v: &DVector<f64>, r: f64, rho: f64| -> DVector<f64> {
            if r > 0.0 {
                v * (profile.derivative(r / rho) / (rho * r))
            } else {
                DVector::zeros(v.len())
            }
        };
        let out = match &self.kind {
            FieldKind::Radial { profile } => {
                let g = grad_of(profile, &v, r, self.radius);
                DMatrix::identity(d, d) * profile.value(t) + &v * g.transpose()
            }
            FieldKind::WeightedRadial { profile, h } => {
                let g = grad_of(profile, &v, r, self.radius);
                let phi = profile.value(t);
                let radial = DMatrix::identity(d, d) * phi + &v * g.transpose();
                radial * h.value(x) + (&v * phi) * h.gradient(x).transpose()
            }
            FieldKind::VerticalCutoff { profile, normal } => {
                let z = profile.value(t);
                let g = grad_of(profile, &v, r, self.radius);
                normal * (z * z) + (normal * &v) * (2.0 * z) * g.transpose()
            }
            FieldKind::Coordinate { profile, axis } => {
                let g = grad_of(profile, &v, r, self.radius);
                let mut m = DMatrix::zeros(d, d);
                m.row_mut(*axis).copy_from(&g.transpose());
                m
            }
            FieldKind::Bumps { profile, terms } => {
                let mut m = DMatrix::zeros(d, d);
                for term in terms {
                    let w = x - &term.center;
                    let rl = w.norm();
                    let g = grad_of(profile, &w, rl, term.radius);
                    m += &term.direction * g.transpose();
                }
                m
            }
            FieldKind::Combination(terms) => {
                let mut m = DMatrix::zeros(d, d);
                for (c, f) in terms {
                    m += f.jacobian(x) * *c;
                }
                m
            }
        };
        out * self.scale
    }
}

/// `d^M X`, its operator norm, and the tangential divergence at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialQuantities {
    pub d_m_x: DMatrix<f64>,
    pub opnorm: f64,
    pub div_m: f64,
}

/// Tangential quantities from a Jacobian and a tangent projection.
pub fn tangential_from_jacobian(dx: &DMatrix<f64>, tangent: &DMatrix<f64>) -> TangentialQuantities {
    let d_m_x = dx * tangent;
    let opnorm = operator_norm(&d_m_x);
    let div_m = d_m_x.trace();
    TangentialQuantities { d_m_x, opnorm, div_m }
}

/// Tangential quantities of `field` at `sample`; zeros outside the support.
pub fn tangential_quantities(sample: &VarifoldSample, field: &VectorField) -> TangentialQuantities {
    let d = sample.position.len();
    if field.outside(&sample.position) {
        return TangentialQuantities { d_m_x: DMatrix::zeros(d, d), opnorm: 0.0, div_m: 0.0 };
    }
    let p = &sample.frame * sample.frame.transpose();
    tangential_from_jacobian(&field.jacobian(&sample.position), &p)
}

/// `(||d^M X||, div_M X)` from an orthonormal frame `F`, using `DX P = (DX F) F^T`
/// so only the `d x n` product is formed.
pub fn tangential_norm_and_div(dx: &DMatrix<f64>, frame: &DMatrix<f64>) -> (f64, f64) {
    let g = dx * frame;
    let div = g.iter().zip(frame.iter()).map(|(a, b)| a * b).sum();
    let opnorm = match g.ncols() {
        1 => g.norm(),
        2 => {
            let (a, b) = (g.column(0), g.column(1));
            let (p, q, r) = (a.norm_squared(), b.norm_squared(), a.dot(&b));
            let mean = 0.5 * (p + q);
            let gap = (0.25 * (p - q) * (p - q) + r * r).sqrt();
            (mean + gap).sqrt()
        }
        _ => operator_norm(&g),
    };
    (opnorm, div)
}

/// JSON description of a field, as consumed by the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Radial {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        profile: CutoffProfile,
        #[serde(default = "one")]
        scale: f64,
    },
    WeightedRadial {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        profile: CutoffProfile,
        h: ScalarField,
        #[serde(default = "one")]
        scale: f64,
    },
    VerticalCutoff {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "zeta")]
        profile: CutoffProfile,
        /// Vectors spanning the reference plane T.
        plane: Vec<Vec<f64>>,
        #[serde(default = "one")]
        scale: f64,
    },
    Coordinate {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "zeta")]
        profile: CutoffProfile,
        j: usize,
        #[serde(default = "one")]
        scale: f64,
    },
    RandomBump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        profile: CutoffProfile,
        seed: u64,
        #[serde(default = "three")]
        terms: usize,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}
fn three() -> usize {
    3
}
fn zeta() -> CutoffProfile {
    CutoffProfile::ZETA
}

impl FieldSpec {
    pub fn build(&self, n: usize, k: usize) -> Result<VectorField> {
        let d = n + k;
        let vec_of = |c: &Vec<f64>| -> Result<DVector<f64>> {
            if c.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.len() });
            }
            Ok(DVector::from_column_slice(c))
        };
        let (field, scale) = match self {
            FieldSpec::Radial { center, radius, profile, scale } => (VectorField::radial(vec_of(center)?, *radius, *profile)?, *scale),
            FieldSpec::WeightedRadial { center, radius, profile, h, scale } => {
                (VectorField::weighted_radial(vec_of(center)?, *radius, *profile, h.clone())?, *scale)
            }
            FieldSpec::VerticalCutoff { center, radius, profile, plane, scale } => {
                if plane.len() != n || plane.iter().any(|v| v.len() != d) {
                    return Err(Error::InvalidInput(format!("plane needs {n} vectors of length {d}")));
                }
                let cols = DMatrix::from_fn(d, n, |i, j| plane[j][i]);
                let pp = ProjectionPair::from_spanning(&cols)?;
                (VectorField::vertical_cutoff(vec_of(center)?, *radius, *profile, &pp)?, *scale)
            }
            FieldSpec::Coordinate { center, radius, profile, j, scale } => {
                (VectorField::coordinate(n, k, *j, vec_of(center)?, *radius, *profile)?, *scale)
            }
            FieldSpec::RandomBump { center, radius, profile, seed, terms, scale } => {
                (VectorField::random_bumps(vec_of(center)?, *radius, *profile, *seed, *terms)?, *scale)
            }
        };
        Ok(field.scaled(scale))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn central_difference(field: &VectorField, x: &DVector<f64>, step: f64) -> DMatrix<f64> {
        let d = x.len();
        let mut m = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += step;
            xm[j] -= step;
            let mut xpp = x.clone();
            let mut xmm = x.clone();
            xpp[j] += 2.0 * step;
            xmm[j] -= 2.0 * step;
            // fourth-order stencil
            let col = (field.eval(&xmm) - field.eval(&xpp) + (field.eval(&xp) - field.eval(&xm)) * 8.0) / (12.0 * step);
            m.set_column(j, &col);
        }
        m
    }

    fn assert_jacobian_matches(field: &VectorField, points: usize, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = field.dim();
        let rho = field.support_radius();
        let step = 1e-5 * rho;
        let mut checked = 0;
        while checked < points {
            let x = field.support_center() + DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0) * rho);
            let r = (&x - field.support_center()).norm();
            // stay a few steps away from the support boundary
            if r > rho - 10.0 * step {
                continue;
            }
            let analytic = field.jacobian(&x);
            let numeric = central_difference(field, &x, step);
            let scale = analytic.amax().max(numeric.amax()).max(1e-3);
            let err = (&analytic - &numeric).amax() / scale;
            assert!(err < 1e-6, "relative jacobian error {err} at {x:?}");
            checked += 1;
        }
    }

    fn profiles() -> Vec<CutoffProfile> {
        vec![CutoffProfile::Bump, CutoffProfile::ZETA, CutoffProfile::Smooth { sharpness: 4.0 }]
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        for p in profiles() {
            for i in 0..200 {
                // off-grid so no stencil straddles the plateau kink
                let t = (i as f64 + 0.37) / 200.0;
                let h = 1e-6;
                let fd = (p.value(t - 2.0 * h) - p.value(t + 2.0 * h) + 8.0 * (p.value(t + h) - p.value(t - h))) / (12.0 * h);
                assert!((fd - p.derivative(t)).abs() < 1e-8 * p.derivative(t).abs().max(1.0), "{p:?} at {t}");
                assert!((0.0..=1.0).contains(&p.value(t)));
                assert!(p.derivative(t) <= 0.0);
            }
            assert_eq!(p.value(1.0), 0.0);
            assert_eq!(p.value(3.0), 0.0);
        }
    }

    #[test]
    fn zeta_gradient_bound() {
        let max = (0..=1000).map(|i| -CutoffProfile::ZETA.derivative(i as f64 / 1000.0)).fold(0.0, f64::max);
        assert!(max <= 3.0 + 1e-12 && max > 2.99);
    }

    #[test]
    fn radial_field_is_identity_on_plateau() {
        let x0 = DVector::from_vec(vec![0.3, -0.2, 1.0]);
        let f = VectorField::radial(x0.clone(), 2.0, CutoffProfile::ZETA).unwrap();
        let v = DVector::from_vec(vec![0.4, 0.1, -0.5]);
        assert_eq!(f.eval(&(&x0 + &v)), (&x0 + &v) - &x0);
        let dx = f.jacobian(&x0);
        assert_eq!(dx, DMatrix::identity(3, 3));
    }

    #[test]
    fn radial_bump_jacobian_at_center_and_half_radius() {
        let x0 = DVector::from_vec(vec![0.0, 0.0]);
        let f = VectorField::radial(x0.clone(), 1.0, CutoffProfile::Bump).unwrap();
        assert_eq!(f.jacobian(&x0), DMatrix::identity(2, 2));
        let x = DVector::from_vec(vec![0.3, 0.4]); // |v| = rho / 2
        let numeric = central_difference(&f, &x, 1e-5);
        assert!((f.jacobian(&x) - numeric).amax() < 1e-6);
    }

    #[test]
    fn fields_vanish_exactly_outside_support() {
        let c = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        let fields = vec![
            VectorField::radial(c.clone(), 1.0, CutoffProfile::Bump).unwrap(),
            VectorField::coordinate(2, 1, 1, c.clone(), 1.0, CutoffProfile::ZETA).unwrap(),
            VectorField::vertical_cutoff(c.clone(), 1.0, CutoffProfile::ZETA, &ProjectionPair::coordinate(2, 1)).unwrap(),
            VectorField::random_bumps(c.clone(), 1.0, CutoffProfile::Smooth { sharpness: 4.0 }, 7, 3).unwrap(),
        ];
        for f in &fields {
            for i in 0..64 {
                let a = i as f64 * std::f64::consts::TAU / 64.0;
                let u = DVector::from_vec(vec![a.cos(), a.sin() * 0.6, a.sin() * 0.8]);
                let x = &u / u.norm() * (1.0 + 1e-15);
                assert!(f.eval(&x).iter().all(|v| *v == 0.0));
                assert!(f.jacobian(&x).iter().all(|v| *v == 0.0));
                // just inside the ring the field is already tiny
                let y = &u / u.norm() * (1.0 - 1e-6);
                assert!(f.eval(&y).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let c = DVector::from_vec(vec![0.1, -0.3, 0.2]);
        let tilted = ProjectionPair::from_spanning(&DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.3, 0.0, 1.0, -0.2])).unwrap();
        let mut fields = vec![];
        for p in profiles() {
            fields.push(VectorField::radial(c.clone(), 0.7, p).unwrap());
            fields.push(
                VectorField::weighted_radial(c.clone(), 0.7, p, ScalarField::Affine { gradient: vec![0.5, -1.0, 2.0], offset: 3.0 })
                    .unwrap(),
            );
            fields.push(VectorField::vertical_cutoff(c.clone(), 0.7, p, &tilted).unwrap());
            fields.push(VectorField::coordinate(2, 1, 1, c.clone(), 0.7, p).unwrap());
            fields.push(VectorField::random_bumps(c.clone(), 0.7, p, 11, 4).unwrap());
        }
        for (i, f) in fields.iter().enumerate() {
            assert_jacobian_matches(f, 100, i as u64);
        }
    }

    #[test]
    fn weighted_radial_with_unit_weight_is_radial() {
        let c = DVector::from_vec(vec![0.0, 1.0]);
        let r = VectorField::radial(c.clone(), 1.5, CutoffProfile::Bump).unwrap();
        let w = VectorField::weighted_radial(c.clone(), 1.5, CutoffProfile::Bump, ScalarField::Constant { value: 1.0 }).unwrap();
        let zero = VectorField::weighted_radial(c.clone(), 1.5, CutoffProfile::Bump, ScalarField::Constant { value: 0.0 }).unwrap();
        for i in 0..50 {
            let a = i as f64 * 0.37;
            let x = &c + DVector::from_vec(vec![a.cos(), a.sin()]) * (i as f64 / 40.0);
            assert_eq!(r.eval(&x), w.eval(&x));
            assert_eq!(r.jacobian(&x), w.jacobian(&x));
            assert!(zero.eval(&x).iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn vertical_cutoff_basics() {
        let xi = DVector::from_vec(vec![0.0, 0.0, 0.0]);
        let t = ProjectionPair::coordinate(2, 1);
        let f = VectorField::vertical_cutoff(xi.clone(), 1.0, CutoffProfile::ZETA, &t).unwrap();
        // tangent offsets map to zero
        assert!(f.eval(&DVector::from_vec(vec![0.3, -0.4, 0.0])).iter().all(|v| *v == 0.0));
        let dx = f.jacobian(&DVector::from_vec(vec![0.1, 0.1, 0.0]));
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 1.0]));
        assert!((dx - expected).amax() < 1e-15);
    }

    #[test]
    fn coordinate_field_basics() {
        let c = DVector::from_vec(vec![0.0, 0.0]);
        assert!(VectorField::coordinate(1, 1, 2, c.clone(), 1.0, CutoffProfile::ZETA).is_err());
        assert!(VectorField::coordinate(1, 1, 0, c.clone(), 1.0, CutoffProfile::ZETA).is_err());
        let f = VectorField::coordinate(1, 1, 1, c.clone(), 1.0, CutoffProfile::ZETA).unwrap();
        assert_eq!(f.jacobian(&DVector::from_vec(vec![0.2, 0.1])), DMatrix::zeros(2, 2));
        for i in 0..100 {
            let x = DVector::from_vec(vec![i as f64 / 60.0 - 0.8, 0.1]);
            assert!(f.eval(&x).norm() <= 1.0);
        }
    }

    fn sample_with_frame(frame: DMatrix<f64>, pos: DVector<f64>) -> VarifoldSample {
        VarifoldSample::new(pos, frame, 1.0, 1.0)
    }

    #[test]
    fn identity_field_tangential_quantities() {
        let frame = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.6, 0.8]);
        let s = sample_with_frame(frame.clone(), DVector::from_vec(vec![0.1, 0.0, 0.0]));
        let f = VectorField::radial(DVector::zeros(3), 4.0, CutoffProfile::ZETA).unwrap();
        let tq = tangential_quantities(&s, &f);
        assert!((tq.div_m - 2.0).abs() < 1e-14);
        assert!((tq.opnorm - 1.0).abs() < 1e-14);
        assert!((tq.d_m_x - &frame * frame.transpose()).amax() < 1e-15);
    }

    #[test]
    fn constant_field_has_no_tangential_derivative() {
        let s = sample_with_frame(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), DVector::from_vec(vec![0.1, 0.0]));
        let f = VectorField::coordinate(1, 1, 1, DVector::zeros(2), 1.0, CutoffProfile::ZETA).unwrap();
        let tq = tangential_quantities(&s, &f);
        assert_eq!((tq.div_m, tq.opnorm), (0.0, 0.0));
    }

    #[test]
    fn graph_field_matches_closed_forms() {
        // X = v(x) e_2 over the graph of u, n = k = 1
        for i in 0..50 {
            let x = -1.0 + 2.0 * i as f64 / 49.0;
            let du = 0.7 * x + 0.2 * x * x;
            let dv = (3.0 * x).cos();
            let frame = DMatrix::from_column_slice(2, 1, &[1.0, du]) / (1.0 + du * du).sqrt();
            let p = &frame * frame.transpose();
            let dx = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, dv, 0.0]);
            let tq = tangential_from_jacobian(&dx, &p);
            let div_oracle = dv * du / (1.0 + du * du);
            let norm_oracle = ((1.0 + du * du) * dv * dv - (du * dv).powi(2)).sqrt() / (1.0 + du * du).sqrt();
            assert!((tq.div_m - div_oracle).abs() < 1e-8);
            assert!((tq.opnorm - norm_oracle).abs() < 1e-8);
            assert!((tq.opnorm - dv.abs() / (1.0 + du * du).sqrt()).abs() < 1e-8);
        }
    }

    #[test]
    fn spec_round_trip_builds_equal_fields() {
        let spec =
            FieldSpec::RandomBump { center: vec![0.0, 0.0], radius: 1.0, profile: CutoffProfile::Bump, seed: 5, terms: 3, scale: -1.0 };
        let json = serde_json::to_string(&spec).unwrap();
        let back: FieldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.build(1, 1).unwrap(), spec.build(1, 1).unwrap());
        let minimal: FieldSpec = serde_json::from_str(r#"{"kind":"coordinate","center":[0,0],"radius":0.5,"j":1}"#).unwrap();
        assert!(minimal.build(1, 1).is_ok());
    }
    #[test]
    fn fast_tangential_path_agrees_with_the_full_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, n) in [(2, 1), (3, 2), (4, 2), (5, 3)] {
            for _ in 0..50 {
                let dx = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
                let raw = DMatrix::from_fn(d, n, |_, _| rng.random_range(-1.0..1.0));
                let frame = crate::geometry::orthonormalize_columns(&raw).unwrap();
                let full = tangential_from_jacobian(&dx, &(&frame * frame.transpose()));
                let (op, div) = tangential_norm_and_div(&dx, &frame);
                assert!((op - full.opnorm).abs() < 1e-12 && (div - full.div_m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vertical_bumps_stay_vertical_and_inside() {
        let c = DVector::from_vec(vec![0.2, 0.1, 0.0]);
        let f = VectorField::vertical_bumps(2, 1, 1, c.clone(), 0.5, CutoffProfile::Bump, 3, 4).unwrap();
        assert_eq!(f.support_radius(), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x = &c + DVector::from_fn(3, |_, _| rng.random_range(-0.6..0.6));
            let v = f.eval(&x);
            assert_eq!((v[0], v[1]), (0.0, 0.0));
            if (&x - &c).norm() >= 0.5 {
                assert_eq!(v[2], 0.0);
            }
        }
        assert_jacobian_matches(&f, 50, 5);
    }
}
