//! Discrete rectifiable varifolds: weighted point/tangent atoms and the
//! measure queries on them.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, ProjectionPair};

/// Orthonormality tolerance for frames (max-abs deviation of the Gram matrix).
pub const FRAME_TOL: f64 = 1e-10;

/// Grid cell side as a multiple of the sample resolution.
const CELL_FACTOR: f64 = 4.0;

/// One quadrature atom: a point, its approximate tangent plane, a weight
/// carrying the area element, and the multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct VarifoldSample {
    pub position: DVector<f64>,
    /// Columns span the tangent plane; `(n + k) x n`.
    pub frame: DMatrix<f64>,
    pub weight: f64,
    pub multiplicity: f64,
}

impl VarifoldSample {
    pub fn new(position: DVector<f64>, frame: DMatrix<f64>, weight: f64, multiplicity: f64) -> Self {
        Self { position, frame, weight, multiplicity }
    }

    /// `weight * multiplicity`, the atom's share of the measure.
    #[inline]
    pub fn mass(&self) -> f64 {
        self.weight * self.multiplicity
    }

    pub fn gram_defect(&self) -> f64 {
        let n = self.frame.ncols();
        (self.frame.transpose() * &self.frame - DMatrix::identity(n, n)).amax()
    }
}

/// Open set the varifold lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn contains_ball(&self, center: &DVector<f64>, radius: f64) -> bool {
        match self {
            Domain::Ball { center: c, radius: r } => {
                let dist: f64 = c.iter().zip(center.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                dist + radius <= *r
            }
            Domain::Box { lo, hi } => center.iter().zip(lo.iter().zip(hi.iter())).all(|(x, (l, h))| x - radius >= *l && x + radius <= *h),
        }
    }

    pub fn contains_point(&self, x: &DVector<f64>) -> bool {
        self.contains_ball(x, 0.0)
    }

    /// Inradius of the domain (half the smallest box side).
    pub fn radius(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Box { lo, hi } => lo.iter().zip(hi.iter()).map(|(l, h)| 0.5 * (h - l)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn center(&self) -> DVector<f64> {
        match self {
            Domain::Ball { center, .. } => DVector::from_column_slice(center),
            Domain::Box { lo, hi } => DVector::from_iterator(lo.len(), lo.iter().zip(hi.iter()).map(|(l, h)| 0.5 * (l + h))),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    /// Image under `y -> (y - x) / lambda`.
    pub fn rescaled(&self, x: &DVector<f64>, lambda: f64) -> Domain {
        match self {
            Domain::Ball { center, radius } => {
                Domain::Ball { center: center.iter().zip(x.iter()).map(|(c, x)| (c - x) / lambda).collect(), radius: radius / lambda }
            }
            Domain::Box { lo, hi } => Domain::Box {
                lo: lo.iter().zip(x.iter()).map(|(l, x)| (l - x) / lambda).collect(),
                hi: hi.iter().zip(x.iter()).map(|(h, x)| (h - x) / lambda).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// Declares `theta >= 1` everywhere.
    pub theta_ge_one: bool,
}

/// Uniform hash grid over sample positions.
#[derive(Debug, Clone)]
struct GridIndex {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<u32>>,
}

impl GridIndex {
    fn build(positions: &[DVector<f64>], cell: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<u32>> = HashMap::new();
        for (i, p) in positions.iter().enumerate() {
            cells.entry(Self::key(p, cell)).or_default().push(i as u32);
        }
        Self { cell, cells }
    }

    fn key(p: &DVector<f64>, cell: f64) -> Vec<i64> {
        p.iter().map(|x| (x / cell).floor() as i64).collect()
    }

    /// Indices with `|p - x| < radius`, ascending.
    fn query(&self, positions: &[DVector<f64>], x: &DVector<f64>, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if radius <= 0.0 || self.cells.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let lo: Vec<i64> = x.iter().map(|c| ((c - radius) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = x.iter().map(|c| ((c + radius) / self.cell).floor() as i64).collect();
        let box_cells = lo.iter().zip(hi.iter()).map(|(l, h)| (h - l + 1) as f64).product::<f64>();
        let mut visit = |bucket: &Vec<u32>| {
            for &i in bucket {
                let d2 = (&positions[i as usize] - x).norm_squared();
                if d2 < r2 {
                    out.push(i as usize);
                }
            }
        };
        if box_cells <= self.cells.len() as f64 {
            let mut key = lo.clone();
            loop {
                if let Some(bucket) = self.cells.get(&key) {
                    visit(bucket);
                }
                // odometer increment over the box
                let mut axis = 0;
                loop {
                    if axis == key.len() {
                        out.sort_unstable();
                        return out;
                    }
                    key[axis] += 1;
                    if key[axis] <= hi[axis] {
                        break;
                    }
                    key[axis] = lo[axis];
                    axis += 1;
                }
            }
        } else {
            for (key, bucket) in &self.cells {
                let near = key.iter().zip(x.iter()).map(|(&kc, &c)| {
                    let a = kc as f64 * self.cell;
                    let b = a + self.cell;
                    let d = if c < a {
                        a - c
                    } else if c > b {
                        c - b
                    } else {
                        0.0
                    };
                    d * d
                });
                if near.sum::<f64>() < r2 {
                    visit(bucket);
                }
            }
            out.sort_unstable();
            out
        }
    }
}

/// Sample-based rectifiable n-varifold in R^(n+k).
///
/// Immutable after construction; all queries take `&self`.
#[derive(Debug, Clone)]
pub struct DiscreteVarifold {
    n: usize,
    k: usize,
    resolution: f64,
    domain: Domain,
    flags: Flags,
    samples: Vec<VarifoldSample>,
    positions: Vec<DVector<f64>>,
    projections: Vec<ProjectionPair>,
    index: GridIndex,
}

impl DiscreteVarifold {
    pub fn new(n: usize, k: usize, resolution: f64, domain: Domain, flags: Flags, samples: Vec<VarifoldSample>) -> Result<Self> {
        let d = n + k;
        if n == 0 {
            return Err(Error::InvalidInput("intrinsic dimension must be positive".into()));
        }
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {resolution}")));
        }
        if domain.ambient_dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: domain.ambient_dim() });
        }
        for s in &samples {
            if s.position.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.position.len() });
            }
            if s.frame.nrows() != d || s.frame.ncols() != n {
                return Err(Error::InvalidInput(format!("frame must be {d}x{n}, got {}x{}", s.frame.nrows(), s.frame.ncols())));
            }
        }
        let total: f64 = samples.iter().map(VarifoldSample::mass).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidInput(format!("total mass must be finite and positive, got {total}")));
        }
        let positions: Vec<DVector<f64>> = samples.iter().map(|s| s.position.clone()).collect();
        let projections = samples.iter().map(|s| ProjectionPair::from_frame(&s.frame)).collect();
        let index = GridIndex::build(&positions, CELL_FACTOR * resolution);
        Ok(Self { n, k, resolution, domain, flags, samples, positions, projections, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn ambient_dim(&self) -> usize {
        self.n + self.k
    }
    pub fn resolution(&self) -> f64 {
        self.resolution
    }
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn flags(&self) -> Flags {
        self.flags
    }
    pub fn samples(&self) -> &[VarifoldSample] {
        &self.samples
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn projection(&self, i: usize) -> &ProjectionPair {
        &self.projections[i]
    }

    pub fn with_flags(mut self, flags: Flags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.ambient_dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: domain.ambient_dim() });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn total_mass(&self) -> f64 {
        self.samples.iter().map(VarifoldSample::mass).sum()
    }

    /// Sample indices strictly inside the open ball `B_radius(x)`, ascending.
    pub fn ball_indices(&self, x: &DVector<f64>, radius: f64) -> Vec<usize> {
        self.index.query(&self.positions, x, radius)
    }

    /// `mu_V(B_radius(x))`: sum of `weight * multiplicity` over the open ball.
    pub fn mass_in_ball(&self, x: &DVector<f64>, radius: f64) -> f64 {
        self.ball_indices(x, radius).into_iter().map(|i| self.samples[i].mass()).sum()
    }

    /// `mu_V(B_radius(x)) / (omega_n radius^n)`.
    pub fn density_ratio(&self, x: &DVector<f64>, radius: f64) -> f64 {
        self.mass_in_ball(x, radius) / (unit_ball_volume(self.n) * radius.powi(self.n as i32))
    }

    /// Reports every invariant violation; empty means valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (i, s) in self.samples.iter().enumerate() {
            let finite =
                s.position.iter().chain(s.frame.iter()).all(|x| x.is_finite()) && s.weight.is_finite() && s.multiplicity.is_finite();
            if !finite {
                out.push(Diagnostic { index: i, kind: DiagnosticKind::NonFinite, value: f64::NAN });
                continue;
            }
            let gram = s.gram_defect();
            if gram > FRAME_TOL {
                out.push(Diagnostic { index: i, kind: DiagnosticKind::FrameNotOrthonormal, value: gram });
            }
            if s.weight <= 0.0 {
                out.push(Diagnostic { index: i, kind: DiagnosticKind::NonPositiveWeight, value: s.weight });
            }
            if self.flags.theta_ge_one && s.multiplicity < 1.0 {
                out.push(Diagnostic { index: i, kind: DiagnosticKind::MultiplicityBelowOne, value: s.multiplicity });
            }
            if !self.flags.theta_ge_one && s.multiplicity <= 0.0 {
                out.push(Diagnostic { index: i, kind: DiagnosticKind::NonPositiveMultiplicity, value: s.multiplicity });
            }
        }
        out
    }

    /// Union of two varifolds of the same dimensions; the domain is `self`'s.
    pub fn union(&self, other: &DiscreteVarifold) -> Result<DiscreteVarifold> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: other.ambient_dim() });
        }
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().cloned());
        DiscreteVarifold::new(
            self.n,
            self.k,
            self.resolution.min(other.resolution),
            self.domain.clone(),
            Flags { theta_ge_one: self.flags.theta_ge_one && other.flags.theta_ge_one },
            samples,
        )
    }

    /// Same atoms with every multiplicity multiplied by `factor`.
    pub fn scale_multiplicity(&self, factor: f64) -> Result<DiscreteVarifold> {
        let samples = self.samples.iter().map(|s| VarifoldSample { multiplicity: s.multiplicity * factor, ..s.clone() }).collect();
        DiscreteVarifold::new(self.n, self.k, self.resolution, self.domain.clone(), self.flags, samples)
    }

    /// Applies the rigid motion `y -> rot y + shift` to positions, frames and
    /// the domain. Box domains become their inscribed ball.
    pub fn transformed(&self, rot: &DMatrix<f64>, shift: &DVector<f64>) -> Result<DiscreteVarifold> {
        let samples = self
            .samples
            .iter()
            .map(|s| VarifoldSample { position: rot * &s.position + shift, frame: rot * &s.frame, ..s.clone() })
            .collect();
        let domain = match &self.domain {
            Domain::Ball { center, radius } => {
                let c = rot * DVector::from_column_slice(center) + shift;
                Domain::Ball { center: c.iter().cloned().collect(), radius: *radius }
            }
            Domain::Box { .. } => {
                let c = rot * self.domain.center() + shift;
                Domain::Ball { center: c.iter().cloned().collect(), radius: self.domain.radius() }
            }
        };
        DiscreteVarifold::new(self.n, self.k, self.resolution, domain, self.flags, samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    FrameNotOrthonormal,
    NonPositiveWeight,
    MultiplicityBelowOne,
    NonPositiveMultiplicity,
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub index: usize,
    pub kind: DiagnosticKind,
    /// Offending value (Gram defect, weight or multiplicity).
    pub value: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_samples(count: usize, h: f64) -> Vec<VarifoldSample> {
        (0..count)
            .map(|i| {
                let x = -(count as f64) * h / 2.0 + (i as f64 + 0.5) * h;
                VarifoldSample::new(DVector::from_vec(vec![x, 0.0]), DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), h, 1.0)
            })
            .collect()
    }

    fn line(count: usize, h: f64) -> DiscreteVarifold {
        let half = count as f64 * h / 2.0;
        DiscreteVarifold::new(
            1,
            1,
            h,
            Domain::Box { lo: vec![-half, -1e6], hi: vec![half, 1e6] },
            Flags { theta_ge_one: true },
            line_samples(count, h),
        )
        .unwrap()
    }

    #[test]
    fn diameter_chord_of_a_line() {
        let v = line(400, 0.01);
        let m = v.mass_in_ball(&DVector::zeros(2), 1.0);
        assert!((m - 2.0).abs() < 1e-12, "{m}");
        assert!((v.density_ratio(&DVector::zeros(2), 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_ball_has_no_mass() {
        let v = line(40, 0.01);
        assert_eq!(v.mass_in_ball(&DVector::from_vec(vec![0.0, 5.0]), 0.5), 0.0);
    }

    #[test]
    fn grid_query_matches_brute_force_for_large_radii() {
        let v = line(400, 0.01);
        let x = DVector::from_vec(vec![0.123, 0.05]);
        for r in [0.01, 0.2, 1.7, 50.0] {
            let brute: Vec<usize> = (0..v.len()).filter(|&i| (&v.samples()[i].position - &x).norm() < r).collect();
            assert_eq!(v.ball_indices(&x, r), brute);
        }
    }

    #[test]
    fn valid_line_has_no_diagnostics() {
        assert!(line(50, 0.01).validate().is_empty());
    }

    #[test]
    fn scaled_frame_vector_is_reported() {
        let mut samples = line_samples(10, 0.1);
        samples[3].frame *= 1.1;
        let v = DiscreteVarifold::new(1, 1, 0.1, Domain::Ball { center: vec![0.0, 0.0], radius: 2.0 }, Flags::default(), samples).unwrap();
        let d = v.validate();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].index, 3);
        assert_eq!(d[0].kind, DiagnosticKind::FrameNotOrthonormal);
    }

    #[test]
    fn low_multiplicity_with_flag_is_reported() {
        let mut samples = line_samples(10, 0.1);
        samples[7].multiplicity = 0.5;
        let dom = Domain::Ball { center: vec![0.0, 0.0], radius: 2.0 };
        let flagged = DiscreteVarifold::new(1, 1, 0.1, dom.clone(), Flags { theta_ge_one: true }, samples.clone()).unwrap();
        let d = flagged.validate();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].index, d[0].kind), (7, DiagnosticKind::MultiplicityBelowOne));
        let unflagged = DiscreteVarifold::new(1, 1, 0.1, dom, Flags::default(), samples).unwrap();
        assert!(unflagged.validate().is_empty());
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let mut samples = line_samples(3, 0.1);
        samples[1].position = DVector::zeros(3);
        let r = DiscreteVarifold::new(1, 1, 0.1, Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 }, Flags::default(), samples);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn domain_ball_containment() {
        let b = Domain::Box { lo: vec![-1.0, -1e6], hi: vec![1.0, 1e6] };
        assert!(b.contains_ball(&DVector::from_vec(vec![0.5, 3.0]), 0.5));
        assert!(!b.contains_ball(&DVector::from_vec(vec![0.6, 3.0]), 0.5));
        assert_eq!(b.radius(), 1.0);
        let ball = Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        assert!(ball.contains_ball(&DVector::from_vec(vec![0.5, 0.0]), 0.5));
        assert!(!ball.contains_ball(&DVector::from_vec(vec![0.5, 0.1]), 0.5));
    }
}
