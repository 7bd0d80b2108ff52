//! First variation, the Hölder-constant estimator and related functionals.
//!
//! `estimate_K` only ever sees a finite family of balls and fields, so the
//! reported constant is a lower bound for the smallest admissible K.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::FamilyConfig;
use crate::error::{Error, Result};
use crate::excess::best_plane;
use crate::fields::{tangential_norm_and_div, CutoffProfile, VectorField};
use crate::varifold::DiscreteVarifold;

fn check_support(v: &DiscreteVarifold, x: &VectorField) -> Result<()> {
    if x.dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: x.dim() });
    }
    if !v.domain().contains_ball(x.support_center(), x.support_radius()) {
        return Err(Error::SupportOutsideDomain { center: x.support_center().iter().cloned().collect(), radius: x.support_radius() });
    }
    Ok(())
}

/// Fields whose tangential gradient mass is below this fraction of their full
/// gradient mass do not see the varifold; their ratios are pure rounding.
pub const DEGENERATE_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
struct VariationSums {
    /// `sum w theta div_M X`
    first_variation: f64,
    /// `sum w theta ||d^M X||`
    gradient_mass: f64,
    /// `sum w theta |DX|_F`, the scale against which the others are judged.
    jacobian_mass: f64,
}

impl VariationSums {
    fn degenerate(&self) -> bool {
        self.gradient_mass <= DEGENERATE_FRACTION * self.jacobian_mass
    }
}

fn variation_sums(v: &DiscreteVarifold, indices: &[usize], x: &VectorField) -> VariationSums {
    let mut out = VariationSums { first_variation: 0.0, gradient_mass: 0.0, jacobian_mass: 0.0 };
    let samples = v.samples();
    let c = x.support_center();
    let r = x.support_radius();
    for &i in indices {
        let s = &samples[i];
        if (&s.position - c).norm() >= r {
            continue;
        }
        let dx = x.jacobian(&s.position);
        let (op, div) = tangential_norm_and_div(&dx, &s.frame);
        let m = s.mass();
        out.first_variation += m * div;
        out.gradient_mass += m * op;
        out.jacobian_mass += m * dx.norm();
    }
    out
}

fn variation_pair(v: &DiscreteVarifold, indices: &[usize], x: &VectorField) -> (f64, f64) {
    let s = variation_sums(v, indices, x);
    (s.first_variation, s.gradient_mass)
}

/// `delta V(X) = sum w theta div_M X`.
pub fn first_variation(v: &DiscreteVarifold, x: &VectorField) -> Result<f64> {
    check_support(v, x)?;
    let idx = v.ball_indices(x.support_center(), x.support_radius());
    Ok(variation_pair(v, &idx, x).0)
}

/// `sum w theta ||d^M X||`.
pub fn gradient_mass(v: &DiscreteVarifold, x: &VectorField) -> Result<f64> {
    check_support(v, x)?;
    let idx = v.ball_indices(x.support_center(), x.support_radius());
    Ok(variation_pair(v, &idx, x).1)
}

/// `-sum w theta X . H` with `H` given per sample.
pub fn mean_curvature_variation(v: &DiscreteVarifold, h: &[Vec<f64>], x: &VectorField) -> Result<f64> {
    if h.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), got: h.len() });
    }
    let d = v.ambient_dim();
    let mut acc = 0.0;
    for (s, hv) in v.samples().iter().zip(h) {
        if hv.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: hv.len() });
        }
        let xv = x.eval(&s.position);
        acc -= s.mass() * xv.iter().zip(hv).map(|(a, b)| a * b).sum::<f64>();
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn center_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.center)
    }
}

/// Balls over which the estimators take their suprema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub balls: Vec<Ball>,
}

impl BallFamily {
    pub fn new(balls: Vec<Ball>) -> Self {
        Self { balls }
    }

    /// Dyadic radii from `min_radius_factor * resolution` up to
    /// `max_radius_fraction * domain radius`; for each radius, centers at the
    /// samples nearest to the points of a lattice of spacing
    /// `center_spacing * radius`, kept if the ball lies in the domain.
    pub fn standard(v: &DiscreteVarifold, cfg: &FamilyConfig) -> Self {
        let radii = dyadic_radii(cfg.min_radius_factor * v.resolution(), cfg.max_radius_fraction * v.domain().radius());
        let mut balls = Vec::new();
        for rho in radii {
            for c in lattice_centers(v, cfg.center_spacing * rho) {
                if v.domain().contains_ball(&c, rho) {
                    balls.push(Ball { center: c.iter().cloned().collect(), radius: rho });
                }
            }
        }
        Self { balls }
    }

    /// Dyadic radii about a single point.
    pub fn at_point(x: &DVector<f64>, radii: &[f64]) -> Self {
        Self { balls: radii.iter().map(|&r| Ball { center: x.iter().cloned().collect(), radius: r }).collect() }
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn radii(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.balls.iter().map(|b| b.radius).collect();
        r.sort_by(f64::total_cmp);
        r.dedup();
        r
    }
}

/// `lo, 2 lo, 4 lo, ...` up to and including `hi`.
pub fn dyadic_radii(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = lo;
    while r <= hi * (1.0 + 1e-12) && lo > 0.0 {
        out.push(r);
        r *= 2.0;
    }
    out
}

/// One sample per occupied lattice node: the sample closest to the node,
/// ties broken by index. Output ordered by lattice key.
fn lattice_centers(v: &DiscreteVarifold, spacing: f64) -> Vec<DVector<f64>> {
    use std::collections::BTreeMap;
    let mut best: BTreeMap<Vec<i64>, (f64, usize)> = BTreeMap::new();
    for (i, s) in v.samples().iter().enumerate() {
        let key: Vec<i64> = s.position.iter().map(|x| (x / spacing).round() as i64).collect();
        let dist: f64 = s.position.iter().zip(&key).map(|(x, k)| (x - *k as f64 * spacing).powi(2)).sum();
        let entry = best.entry(key).or_insert((f64::INFINITY, usize::MAX));
        if dist < entry.0 {
            *entry = (dist, i);
        }
    }
    best.values().map(|&(_, i)| v.samples()[i].position.clone()).collect()
}

/// Which test fields are tried in every ball. Every field is used with both
/// signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFamily {
    pub radial: bool,
    pub coordinate: bool,
    pub vertical_cutoff: bool,
    pub random_bumps: usize,
    pub vertical_bumps: usize,
    pub bump_terms: usize,
    pub profile: CutoffProfile,
    pub seed: u64,
}

impl FieldFamily {
    /// Radial, coordinate, vertical cutoff and random bump fields.
    pub fn standard(cfg: &FamilyConfig) -> Self {
        Self {
            radial: true,
            coordinate: true,
            vertical_cutoff: true,
            random_bumps: cfg.random_bumps,
            vertical_bumps: 0,
            bump_terms: cfg.bump_terms,
            profile: cfg.profile,
            seed: cfg.seed,
        }
    }

    /// Fields of the form `v e_{n+j}` only: coordinate fields and signed
    /// superpositions of scalar bumps times a normal coordinate vector.
    pub fn vertical(cfg: &FamilyConfig) -> Self {
        Self {
            radial: false,
            coordinate: true,
            vertical_cutoff: false,
            random_bumps: 0,
            vertical_bumps: cfg.random_bumps,
            bump_terms: cfg.bump_terms,
            profile: cfg.profile,
            seed: cfg.seed,
        }
    }

    pub fn per_ball(&self, k: usize) -> usize {
        2 * (self.radial as usize
            + if self.coordinate { k } else { 0 }
            + self.vertical_cutoff as usize
            + self.random_bumps
            + k * self.vertical_bumps)
    }

    /// Fields for one ball, each with a stable id.
    pub fn fields_for(&self, v: &DiscreteVarifold, ball: &Ball, ball_id: usize) -> Result<Vec<(String, VectorField)>> {
        let (n, k) = (v.n(), v.k());
        let c = ball.center_vector();
        let rho = ball.radius;
        let mut base: Vec<(String, VectorField)> = Vec::new();
        if self.radial {
            base.push(("radial".into(), VectorField::radial(c.clone(), rho, self.profile)?));
        }
        if self.coordinate {
            for j in 1..=k {
                base.push((format!("coordinate{j}"), VectorField::coordinate(n, k, j, c.clone(), rho, self.profile)?));
            }
        }
        if self.vertical_cutoff {
            if let Ok(plane) = best_plane(v, &c, rho) {
                base.push(("vertical_cutoff".into(), VectorField::vertical_cutoff(c.clone(), rho, self.profile, &plane)?));
            }
        }
        for b in 0..self.random_bumps {
            let seed = mix_seed(self.seed, ball_id, b, 0);
            base.push((format!("bump{b}"), VectorField::random_bumps(c.clone(), rho, self.profile, seed, self.bump_terms)?));
        }
        for j in 1..=k {
            for b in 0..self.vertical_bumps {
                let seed = mix_seed(self.seed, ball_id, b, j);
                let f = VectorField::vertical_bumps(n, k, j, c.clone(), rho, self.profile, seed, self.bump_terms)?;
                base.push((format!("vertical_bump{j}_{b}"), f));
            }
        }
        Ok(base.into_iter().flat_map(|(id, f)| [(format!("{id}+"), f.clone()), (format!("{id}-"), f.negated())]).collect())
    }
}

/// SplitMix64 finalizer over the tuple, so each (ball, bump) has its own stream.
fn mix_seed(seed: u64, ball: usize, bump: usize, axis: usize) -> u64 {
    let mut z = seed
        ^ (ball as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (bump as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (axis as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRatio {
    pub center: Vec<f64>,
    pub radius: f64,
    /// Field attaining the largest ratio in this ball.
    pub field: String,
    pub first_variation: f64,
    pub gradient_mass: f64,
    /// `delta V(X) / (rho^alpha * gradient_mass)`, not clamped.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardViolation {
    pub center: Vec<f64>,
    pub radius: f64,
    pub field: String,
    pub first_variation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderEstimate {
    pub alpha: f64,
    /// Largest ratio over the family, clamped below at 0. A lower bound for
    /// the smallest K satisfying the variational inequality.
    pub k_hat: f64,
    pub maximizer: Option<BallRatio>,
    pub per_ball: Vec<BallRatio>,
    pub fields_used: usize,
    /// Fields with (numerically) zero gradient mass but positive first
    /// variation: no finite K admits them.
    pub hard_violations: Vec<HardViolation>,
}

struct BallOutcome {
    best: Option<BallRatio>,
    fields: usize,
    hard: Vec<HardViolation>,
}

fn scan_ball(v: &DiscreteVarifold, ball: &Ball, id: usize, family: &FieldFamily, scale: f64) -> Result<BallOutcome> {
    let c = ball.center_vector();
    if !v.domain().contains_ball(&c, ball.radius) {
        return Err(Error::SupportOutsideDomain { center: ball.center.clone(), radius: ball.radius });
    }
    let idx = v.ball_indices(&c, ball.radius);
    let fields = family.fields_for(v, ball, id)?;
    let mut best: Option<BallRatio> = None;
    let mut hard = Vec::new();
    for (name, f) in &fields {
        let sums = variation_sums(v, &idx, f);
        let (fv, gm) = (sums.first_variation, sums.gradient_mass);
        if gm == 0.0 || sums.degenerate() {
            if fv > DEGENERATE_FRACTION * sums.jacobian_mass {
                hard.push(HardViolation { center: ball.center.clone(), radius: ball.radius, field: name.clone(), first_variation: fv });
            }
            continue;
        }
        let ratio = fv / (scale * gm);
        if best.as_ref().is_none_or(|b| ratio > b.ratio) {
            best = Some(BallRatio {
                center: ball.center.clone(),
                radius: ball.radius,
                field: name.clone(),
                first_variation: fv,
                gradient_mass: gm,
                ratio,
            });
        }
    }
    Ok(BallOutcome { best, fields: fields.len(), hard })
}

fn scan_family(
    v: &DiscreteVarifold,
    balls: &BallFamily,
    fields: &FieldFamily,
    scale: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<BallOutcome>> {
    balls.balls.par_iter().enumerate().map(|(id, b)| scan_ball(v, b, id, fields, scale(b.radius))).collect()
}

/// Estimate the constant K in `delta V(X) <= K rho^alpha int ||d^M X||` from
/// below, as the largest ratio over the given balls and fields.
#[allow(non_snake_case)]
pub fn estimate_K(v: &DiscreteVarifold, alpha: f64, balls: &BallFamily, fields: &FieldFamily) -> Result<HoelderEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let outcomes = scan_family(v, balls, fields, |r| r.powf(alpha))?;
    let mut per_ball = Vec::with_capacity(outcomes.len());
    let mut hard_violations = Vec::new();
    let mut fields_used = 0;
    for o in outcomes {
        fields_used += o.fields;
        hard_violations.extend(o.hard);
        per_ball.extend(o.best);
    }
    let maximizer = per_ball
        .iter()
        .fold(None::<&BallRatio>, |acc, b| match acc {
            Some(a) if a.ratio >= b.ratio => Some(a),
            _ => Some(b),
        })
        .cloned();
    let k_hat = maximizer.as_ref().map_or(0.0, |m| m.ratio.max(0.0));
    Ok(HoelderEstimate { alpha, k_hat, maximizer, per_ball, fields_used, hard_violations })
}

/// Per-radius supremum of `delta V(X) / int ||d^M X||`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusProfile {
    pub radii: Vec<f64>,
    pub omega_hat: Vec<f64>,
}

impl ModulusProfile {
    /// Least-squares slope of `log omega_hat` against `log rho` over entries
    /// with positive `omega_hat`.
    pub fn loglog_slope(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> =
            self.radii.iter().zip(&self.omega_hat).filter(|(_, w)| **w > 0.0).map(|(r, w)| (r.ln(), w.ln())).collect();
        least_squares_slope(&pts)
    }
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn modulus_profile(v: &DiscreteVarifold, balls: &BallFamily, fields: &FieldFamily) -> Result<ModulusProfile> {
    let outcomes = scan_family(v, balls, fields, |_| 1.0)?;
    let radii = balls.radii();
    let mut omega_hat = vec![0.0_f64; radii.len()];
    for (ball, o) in balls.balls.iter().zip(outcomes) {
        let slot = radii.iter().position(|r| *r == ball.radius).expect("radius listed");
        if let Some(b) = o.best {
            omega_hat[slot] = omega_hat[slot].max(b.ratio);
        }
    }
    Ok(ModulusProfile { radii, omega_hat })
}
