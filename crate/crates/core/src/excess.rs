//! Tilt, height and coarse excess, the tilt-excess decay measurement, the
//! good set of the Lipschitz approximation and the two-point density bound.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{frobenius_sq, symmetric_operator_norm, unit_ball_volume, ProjectionPair};
use crate::monotonicity::{density, k0, MonotonicityOptions};
use crate::variation::{dyadic_radii, least_squares_slope};
use crate::varifold::DiscreteVarifold;

fn check_plane(v: &DiscreteVarifold, t: &ProjectionPair) -> Result<()> {
    if t.ambient_dim() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: t.ambient_dim() });
    }
    Ok(())
}

/// `E(xi, rho, T) = 1/2 rho^-n sum w theta |P_x - P_T|^2` (Frobenius).
pub fn tilt_excess(v: &DiscreteVarifold, xi: &DVector<f64>, rho: f64, t: &ProjectionPair) -> Result<f64> {
    check_plane(v, t)?;
    let sum: f64 =
        v.ball_indices(xi, rho).into_iter().map(|i| v.samples()[i].mass() * frobenius_sq(&(&v.projection(i).tangent - &t.tangent))).sum();
    Ok(0.5 * sum * rho.powi(-(v.n() as i32)))
}

/// `rho^{-n-2} sum w theta |P_{T^perp}(x - xi)|^2`.
pub fn height_excess(v: &DiscreteVarifold, xi: &DVector<f64>, rho: f64, t: &ProjectionPair) -> Result<f64> {
    check_plane(v, t)?;
    let sum: f64 = v
        .ball_indices(xi, rho)
        .into_iter()
        .map(|i| {
            let s = &v.samples()[i];
            s.mass() * (&t.complement * (&s.position - xi)).norm_squared()
        })
        .sum();
    Ok(sum * rho.powi(-(v.n() as i32) - 2))
}

/// `||P_x - p||` against the coordinate plane `R^n`, per sample.
fn coordinate_tilts(v: &DiscreteVarifold, idx: &[usize]) -> Vec<f64> {
    let p = ProjectionPair::coordinate(v.n(), v.k()).tangent;
    idx.iter().map(|&i| symmetric_operator_norm(&(&v.projection(i).tangent - &p))).collect()
}

/// `E = R^-n sum_{B_R(0)} w theta ||P_x - p||^2 + (K R^alpha)^2`, with `p`
/// the projection onto the first n coordinates and the operator norm.
pub fn coarse_excess(v: &DiscreteVarifold, r: f64, k_const: f64, alpha: f64) -> f64 {
    let idx = v.ball_indices(&DVector::zeros(v.ambient_dim()), r);
    let tilts = coordinate_tilts(v, &idx);
    let sum: f64 = idx.iter().zip(&tilts).map(|(&i, t)| v.samples()[i].mass() * t * t).sum();
    sum * r.powi(-(v.n() as i32)) + (k_const * r.powf(alpha)).powi(2)
}

/// `max(E(xi, rho, T), (K rho^alpha)^2 / eps)`.
#[allow(clippy::too_many_arguments)]
pub fn e_star(v: &DiscreteVarifold, xi: &DVector<f64>, rho: f64, t: &ProjectionPair, eps: f64, k_const: f64, alpha: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    Ok(tilt_excess(v, xi, rho, t)?.max(floor_term(rho, eps, k_const, alpha)))
}

fn floor_term(rho: f64, eps: f64, k_const: f64, alpha: f64) -> f64 {
    (k_const * rho.powf(alpha)).powi(2) / eps
}

/// Plane spanned by the top `n` eigenvectors of the mass-weighted mean
/// tangent projection over `B_rho(xi)`.
pub fn best_plane(v: &DiscreteVarifold, xi: &DVector<f64>, rho: f64) -> Result<ProjectionPair> {
    let idx = v.ball_indices(xi, rho);
    let d = v.ambient_dim();
    let mut acc = DMatrix::zeros(d, d);
    let mut mass = 0.0;
    for &i in &idx {
        let m = v.samples()[i].mass();
        acc += &v.projection(i).tangent * m;
        mass += m;
    }
    if mass <= 0.0 {
        return Err(Error::EmptyBall { center: xi.iter().cloned().collect(), radius: rho });
    }
    ProjectionPair::top_eigenspace(&(acc / mass), v.n())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltHeightRow {
    pub rho: f64,
    /// `E(xi, rho/2, T)`.
    pub lhs: f64,
    pub height: f64,
    /// `c_abs (1 + K rho^a) height + c_nk (K rho^a)^2 rho^-n mu(B_rho)`.
    pub rhs: f64,
    pub margin: f64,
}

/// Both sides of the tilt-excess and height inequality.
#[allow(clippy::too_many_arguments)]
pub fn check_tilt_height(
    v: &DiscreteVarifold,
    xi: &DVector<f64>,
    rho: f64,
    t: &ProjectionPair,
    k_const: f64,
    alpha: f64,
    c_abs: f64,
    c_nk: f64,
) -> Result<TiltHeightRow> {
    let lhs = tilt_excess(v, xi, rho / 2.0, t)?;
    let height = height_excess(v, xi, rho, t)?;
    let s = k_const * rho.powf(alpha);
    let rhs = c_abs * (1.0 + s) * height + c_nk * s * s * rho.powi(-(v.n() as i32)) * v.mass_in_ball(xi, rho);
    Ok(TiltHeightRow { rho, lhs, height, rhs, margin: rhs - lhs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayLevel {
    pub level: usize,
    pub rho: f64,
    pub tilt: f64,
    pub height: f64,
    pub e_star: f64,
    /// Plane used at this level (best plane of the ball).
    pub plane: ProjectionPair,
    /// `E_*` at this level over `E_*` at the previous level.
    pub ratio_to_previous: Option<f64>,
    /// Hypotheses of the decay theorem that fail at this level.
    pub failed_hypotheses: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub xi: Vec<f64>,
    pub eta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k_const: f64,
    pub levels: Vec<DecayLevel>,
    /// Least-squares slope of `log E_*` against `log rho`.
    pub exponent: Option<f64>,
    /// Root mean square residual of that fit.
    pub residual: Option<f64>,
    /// The rate the decay theorem predicts, `2 alpha`.
    pub target: f64,
    /// Per-step `eta^{2 alpha}` against which `ratio_to_previous` is compared.
    pub step_bound: f64,
}

/// Parameters of `decay_exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    pub rho0: f64,
    pub eta: f64,
    pub levels: usize,
    pub epsilon: f64,
    pub k_const: f64,
    pub alpha: f64,
    pub a: f64,
    pub reliable_radius: f64,
}

/// Measure the decay rate of `E_*` along `rho_j = eta^j rho0`, `j = 0..levels`,
/// with the plane at each level fitted by `best_plane`.
pub fn decay_exponent(v: &DiscreteVarifold, xi: &DVector<f64>, p: &DecayParams) -> Result<DecayReport> {
    if !(p.eta > 0.0 && p.eta <= 0.5) {
        return Err(Error::InvalidInput(format!("eta must lie in (0, 1/2], got {}", p.eta)));
    }
    if !(p.epsilon > 0.0 && p.epsilon < 1.0) {
        return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {}", p.epsilon)));
    }
    let smallest = p.rho0 * p.eta.powi(p.levels as i32);
    if smallest < p.reliable_radius * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("smallest radius {smallest} is below the reliable radius {}", p.reliable_radius)));
    }
    let wn = unit_ball_volume(v.n());
    let n = v.n() as i32;
    let mut levels: Vec<DecayLevel> = Vec::with_capacity(p.levels + 1);
    for j in 0..=p.levels {
        let rho = p.rho0 * p.eta.powi(j as i32);
        let plane = best_plane(v, xi, rho)?;
        let tilt = tilt_excess(v, xi, rho, &plane)?;
        let height = height_excess(v, xi, rho, &plane)?;
        let es = tilt.max(floor_term(rho, p.epsilon, p.k_const, p.alpha));
        let mut failed = Vec::new();
        let idx = v.ball_indices(xi, rho);
        if idx.iter().any(|&i| {
            let th = v.samples()[i].multiplicity;
            !(1.0..=1.0 + p.epsilon).contains(&th)
        }) {
            failed.push("multiplicity outside [1, 1 + epsilon]".to_string());
        }
        if v.mass_in_ball(xi, 2.0 * v.resolution()) <= 0.0 {
            failed.push("center not in the support".into());
        }
        if !v.domain().contains_ball(xi, rho) {
            failed.push("ball leaves the domain".into());
        }
        let ratio = v.mass_in_ball(xi, rho) / (wn * rho.powi(n));
        if ratio > 2.0 * (1.0 - p.a) {
            failed.push(format!("mass ratio {ratio} exceeds 2(1 - a)"));
        }
        if es > p.epsilon {
            failed.push(format!("E_* = {es} exceeds epsilon"));
        }
        let ratio_to_previous = levels.last().map(|prev| es / prev.e_star);
        levels.push(DecayLevel { level: j, rho, tilt, height, e_star: es, plane, ratio_to_previous, failed_hypotheses: failed });
    }
    let pts: Vec<(f64, f64)> = levels.iter().filter(|l| l.e_star > 0.0).map(|l| (l.rho.ln(), l.e_star.ln())).collect();
    let exponent = least_squares_slope(&pts);
    let residual = exponent.map(|s| {
        let m = pts.len() as f64;
        let mx = pts.iter().map(|q| q.0).sum::<f64>() / m;
        let my = pts.iter().map(|q| q.1).sum::<f64>() / m;
        (pts.iter().map(|q| (q.1 - my - s * (q.0 - mx)).powi(2)).sum::<f64>() / m).sqrt()
    });
    Ok(DecayReport {
        xi: xi.iter().cloned().collect(),
        eta: p.eta,
        epsilon: p.epsilon,
        alpha: p.alpha,
        k_const: p.k_const,
        levels,
        exponent,
        residual,
        target: 2.0 * p.alpha,
        step_bound: p.eta.powf(2.0 * p.alpha),
    })
}

/// Parameters of `good_set`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodSetParams {
    pub r: f64,
    pub delta_thresh: f64,
    pub ell: f64,
    pub gamma: f64,
    pub k_const: f64,
    pub alpha: f64,
    pub seed: u64,
}

/// Exhaustive pair checking up to this many good points.
pub const ALL_PAIRS_LIMIT: usize = 4000;
/// Sampled pairs above that limit.
pub const SAMPLED_PAIRS: usize = 1_000_000;
const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair {
    pub y: usize,
    pub z: usize,
    /// `|q(y - z)| / |y - z|`.
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzApproxReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub ell: f64,
    pub delta_thresh: f64,
    pub gamma: f64,
    /// Dyadic scales on which the tilt condition is tested.
    pub scales: Vec<f64>,
    pub good: Vec<usize>,
    pub coarse_excess: f64,
    pub lip_ok: bool,
    pub pairs_tested: usize,
    pub pairs_sampled: bool,
    pub violations: usize,
    pub witnesses: Vec<WitnessPair>,
    /// `mu(B_{gamma R}) - mu(G)`.
    pub bad_mass: f64,
    pub ball_mass: f64,
    /// `max |q(xi)|` over the good set.
    pub sup_height: f64,
    /// `sup_height / (E^{1/(2n+2)} R)`.
    pub height_constant: Option<f64>,
    /// `bad_mass / (ell^{-2n-2} E R^n)`.
    pub mass_constant: Option<f64>,
}

/// Points of `B_{gamma R}` whose coarse tilt stays below `delta ell^{2n+2}`
/// on every dyadic scale between the reliable radius and `R/10`, and the
/// pairwise graph test `|q(y - z)| <= ell |y - z|` over them.
pub fn good_set(v: &DiscreteVarifold, p: &GoodSetParams, reliable_radius: f64) -> Result<LipschitzApproxReport> {
    let d = v.ambient_dim();
    let n = v.n();
    let scales = dyadic_radii(reliable_radius, p.r / 10.0);
    if scales.is_empty() {
        return Err(Error::InvalidInput(format!("R/10 = {} is below the reliable radius {reliable_radius}", p.r / 10.0)));
    }
    let origin = DVector::zeros(d);
    let candidates = v.ball_indices(&origin, p.gamma * p.r);
    let all: Vec<usize> = (0..v.len()).collect();
    let tilt_sq: Vec<f64> = coordinate_tilts(v, &all).into_iter().map(|t| t * t).collect();
    let threshold = p.delta_thresh * p.ell.powi(2 * n as i32 + 2);
    let good: Vec<usize> = candidates
        .par_iter()
        .filter(|&&i| {
            let xi = &v.samples()[i].position;
            scales.iter().all(|&rho| {
                let sum: f64 = v.ball_indices(xi, rho).into_iter().map(|j| v.samples()[j].mass() * tilt_sq[j]).sum();
                sum * rho.powi(-(n as i32)) <= threshold
            })
        })
        .cloned()
        .collect();

    let pos = |i: usize| &v.samples()[i].position;
    let slope = |a: usize, b: usize| -> Option<f64> {
        let diff = pos(a) - pos(b);
        let len = diff.norm();
        (len > 0.0).then(|| diff.rows(n, d - n).norm() / len)
    };
    let g = good.len();
    let sampled = g > ALL_PAIRS_LIMIT;
    let (pairs_tested, violations, witnesses) = if !sampled {
        let per_row: Vec<(usize, Vec<WitnessPair>)> = (0..g)
            .into_par_iter()
            .map(|a| {
                let mut count = 0;
                let mut wit = Vec::new();
                for b in a + 1..g {
                    if let Some(s) = slope(good[a], good[b]) {
                        if s > p.ell {
                            count += 1;
                            if wit.len() < MAX_WITNESSES {
                                wit.push(WitnessPair { y: good[a], z: good[b], slope: s });
                            }
                        }
                    }
                }
                (count, wit)
            })
            .collect();
        let count = per_row.iter().map(|r| r.0).sum();
        let wit = per_row.into_iter().flat_map(|r| r.1).take(MAX_WITNESSES).collect();
        (g * g.saturating_sub(1) / 2, count, wit)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
        let pairs: Vec<(usize, usize)> =
            (0..SAMPLED_PAIRS).map(|_| (rng.random_range(0..g), rng.random_range(0..g))).filter(|(a, b)| a != b).collect();
        let hits: Vec<Option<WitnessPair>> = pairs
            .par_iter()
            .map(|&(a, b)| slope(good[a], good[b]).filter(|s| *s > p.ell).map(|s| WitnessPair { y: good[a], z: good[b], slope: s }))
            .collect();
        let count = hits.iter().flatten().count();
        (pairs.len(), count, hits.into_iter().flatten().take(MAX_WITNESSES).collect())
    };

    let ball_mass = v.mass_in_ball(&origin, p.gamma * p.r);
    let good_mass: f64 = good.iter().map(|&i| v.samples()[i].mass()).sum();
    let bad_mass = (ball_mass - good_mass).max(0.0);
    let sup_height = good.iter().map(|&i| pos(i).rows(n, d - n).norm()).fold(0.0, f64::max);
    let e = coarse_excess(v, p.r, p.k_const, p.alpha);
    let height_constant = (e > 0.0).then(|| sup_height / (e.powf(1.0 / (2.0 * n as f64 + 2.0)) * p.r));
    let mass_constant = (e > 0.0).then(|| bad_mass / (p.ell.powi(-(2 * n as i32) - 2) * e * p.r.powi(n as i32)));
    Ok(LipschitzApproxReport {
        r: p.r,
        ell: p.ell,
        delta_thresh: p.delta_thresh,
        gamma: p.gamma,
        scales,
        good,
        coarse_excess: e,
        lip_ok: violations == 0,
        pairs_tested,
        pairs_sampled: sampled,
        violations,
        witnesses,
        bad_mass,
        ball_mass,
        sup_height,
        height_constant,
        mass_constant,
    })
}

/// Parameters of `claim_bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClaimParams {
    pub ell: f64,
    pub beta: f64,
    pub r: f64,
    pub k_const: f64,
    pub alpha: f64,
    /// Absolute constant `c`.
    pub c: f64,
    /// Dimension constant `c(n, k)`.
    pub c_nk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRow {
    pub theta_y: f64,
    pub theta_z: f64,
    /// `Theta(y) + Theta(z)`.
    pub lhs: f64,
    pub mass_term: f64,
    pub tilt_term: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Two-point density bound for points separated in the normal direction.
pub fn claim_bound(
    v: &DiscreteVarifold,
    y: &DVector<f64>,
    z: &DVector<f64>,
    p: &ClaimParams,
    opts: &MonotonicityOptions,
) -> Result<ClaimRow> {
    let d = v.ambient_dim();
    let n = v.n();
    if y.len() != d || z.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: y.len().min(z.len()) });
    }
    if !(p.beta > 0.0 && p.beta < 1.0) || !(p.ell > 0.0) {
        return Err(Error::InvalidInput("need beta in (0, 1) and ell > 0".into()));
    }
    let br = p.beta * p.r;
    if y.norm() >= br || z.norm() >= br {
        return Err(Error::HypothesesUnmet(format!("y and z must lie in B_(beta R), beta R = {br}")));
    }
    let diff = y - z;
    if diff.norm() < br / 4.0 {
        return Err(Error::HypothesesUnmet(format!("|y - z| = {} is below beta R / 4", diff.norm())));
    }
    let qn = diff.rows(n, d - n).norm();
    if qn < p.ell * diff.norm() {
        return Err(Error::HypothesesUnmet(format!("|q(y - z)| = {qn} is below ell |y - z|")));
    }
    let dy = density(v, y, p.alpha, p.k_const, opts);
    let dz = density(v, z, p.alpha, p.k_const, opts);
    for (name, dens) in [("y", &dy), ("z", &dz)] {
        if dens.theta_hat < 1.0 - dens.tol {
            return Err(Error::HypothesesUnmet(format!("density at {name} is {} < 1", dens.theta_hat)));
        }
    }
    let origin = DVector::zeros(d);
    let idx = v.ball_indices(&origin, p.r);
    let first_moment: f64 = idx.iter().zip(coordinate_tilts(v, &idx)).map(|(&i, t)| v.samples()[i].mass() * t).sum();
    let k0 = k0(n, p.k_const, p.alpha);
    let lead = 1.0 + 5.0 * k0 * p.r.powf(p.alpha);
    let rn = p.r.powi(-(n as i32));
    let lb = p.ell * p.beta;
    let mass_term = lead / ((1.0 - p.beta).powi(n as i32) * unit_ball_volume(n))
        * (1.0 + p.c * lb.powi(-(n as i32)) * p.k_const * p.r.powf(1.0 + p.alpha))
        * rn
        * v.mass_in_ball(&origin, p.r);
    let tilt_term = lead * p.c_nk * lb.powi(-(n as i32) - 1) * rn * first_moment;
    let lhs = dy.theta_hat + dz.theta_hat;
    let rhs = mass_term + tilt_term;
    Ok(ClaimRow { theta_y: dy.theta_hat, theta_z: dz.theta_hat, lhs, mass_term, tilt_term, rhs, margin: rhs - lhs })
}

/// Rotation taking the first `n` coordinate axes onto `plane`, for moving
/// data into plane-adapted coordinates.
pub fn adapted_rotation(plane: &ProjectionPair, n: usize, k: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n + k, n + k);
    m.columns_mut(0, n).copy_from(&plane.basis(n));
    m.columns_mut(n, k).copy_from(&plane.normal_basis(k));
    m
}
