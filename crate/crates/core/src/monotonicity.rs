//! Density ratios, the two monotonicity inequalities, perpendicular
//! deviation, density, rescaling and cone invariance.
//!
//! Every check uses the boundary-layer tolerance
//! `tol(sigma, rho) = tol_c * (resolution / sigma) * ratio(rho)`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::geometry::unit_ball_volume;
use crate::varifold::{DiscreteVarifold, VarifoldSample};

/// `K_0 = 2 K (n + 1) / alpha`.
pub fn k0(n: usize, k_const: f64, alpha: f64) -> f64 {
    2.0 * k_const * (n as f64 + 1.0) / alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

/// `e^{+-K0 rho^alpha} rho^{-n} mu(B_rho(x))`.
pub fn weighted_ratio(v: &DiscreteVarifold, x: &DVector<f64>, rho: f64, k0: f64, alpha: f64, sign: Sign) -> f64 {
    let s = match sign {
        Sign::Plus => 1.0,
        Sign::Minus => -1.0,
    };
    (s * k0 * rho.powf(alpha)).exp() * rho.powi(-(v.n() as i32)) * v.mass_in_ball(x, rho)
}

fn perp_term(v: &DiscreteVarifold, i: usize, x: &DVector<f64>) -> Option<(f64, f64)> {
    let s: &VarifoldSample = &v.samples()[i];
    let y = &s.position - x;
    let r = y.norm();
    if r == 0.0 {
        return None;
    }
    let perp = &v.projection(i).complement * &y;
    Some((r, perp.norm_squared() / r.powi(v.n() as i32 + 2)))
}

/// `Q_{sigma,rho}(x) = sum over sigma <= |y - x| < rho of
/// w theta |P_{T_y^perp}(y - x)|^2 / |y - x|^{n+2}`.
pub fn perp_deviation(v: &DiscreteVarifold, x: &DVector<f64>, sigma: f64, rho: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < rho) {
        return Err(Error::InvalidInput(format!("need 0 < sigma < rho, got sigma = {sigma}, rho = {rho}")));
    }
    Ok(weighted_perp(v, x, sigma, rho, |_| 1.0))
}

fn weighted_perp(v: &DiscreteVarifold, x: &DVector<f64>, sigma: f64, rho: f64, h: impl Fn(usize) -> f64) -> f64 {
    v.ball_indices(x, rho)
        .into_iter()
        .filter_map(|i| perp_term(v, i, x).map(|(r, q)| (i, r, q)))
        .filter(|(_, r, _)| *r >= sigma)
        .map(|(i, _, q)| v.samples()[i].mass() * h(i) * q)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityRow {
    pub sigma: f64,
    pub rho: f64,
    /// `e^{K0 rho^a} rho^{-n} mu_rho`, required to be at least `rhs_i`.
    pub lhs_i: f64,
    /// `e^{K0 sigma^a} sigma^{-n} mu_sigma + Q / 2`.
    pub rhs_i: f64,
    /// `e^{-K0 rho^a} rho^{-n} mu_rho`, required to be at most `rhs_ii`.
    pub lhs_ii: f64,
    /// `e^{-K0 sigma^a} sigma^{-n} mu_sigma + 2 Q`.
    pub rhs_ii: f64,
    pub q: f64,
    /// `lhs_i - rhs_i`.
    pub margin_i: f64,
    /// `rhs_ii - lhs_ii`.
    pub margin_ii: f64,
    pub tol: f64,
}

impl MonotonicityRow {
    pub fn passes(&self) -> bool {
        self.margin_i >= -self.tol && self.margin_ii >= -self.tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub sigma: f64,
    pub rho: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub center: Vec<f64>,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k_const: f64,
    #[serde(rename = "K0")]
    pub k0: f64,
    pub tol_c: f64,
    pub reliable_radius: f64,
    pub rows: Vec<MonotonicityRow>,
    pub skipped: Vec<SkippedPair>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(MonotonicityRow::passes)
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| !r.passes()).count()
    }

    pub fn worst_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin_i.min(r.margin_ii)).fold(f64::INFINITY, f64::min)
    }
}

/// Options shared by the monotonicity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityOptions {
    pub tol_c: f64,
    /// Radii below this are excluded.
    pub reliable_radius: f64,
}

impl MonotonicityOptions {
    pub fn for_varifold(v: &DiscreteVarifold, tol_c: f64, reliable_factor: f64) -> Self {
        Self { tol_c, reliable_radius: reliable_factor * v.resolution() }
    }
}

#[allow(clippy::too_many_arguments)]
fn pair_gate(
    v: &DiscreteVarifold,
    x: &DVector<f64>,
    sigma: f64,
    rho: f64,
    opts: &MonotonicityOptions,
    smallness: f64,
    bound: f64,
    bound_label: &str,
) -> Option<String> {
    if sigma < opts.reliable_radius * (1.0 - 1e-12) {
        return Some(format!("sigma below reliable radius {}", opts.reliable_radius));
    }
    if smallness > bound {
        return Some(format!("K rho^alpha = {smallness} exceeds {bound_label}"));
    }
    if !v.domain().contains_ball(x, rho) {
        return Some("closed ball leaves the domain".into());
    }
    None
}

/// Both monotonicity inequalities for every pair `sigma < rho` of `radii`.
pub fn check_monotonicity(
    v: &DiscreteVarifold,
    x: &DVector<f64>,
    alpha: f64,
    k_const: f64,
    radii: &[f64],
    opts: &MonotonicityOptions,
) -> Result<MonotonicityReport> {
    if x.len() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: x.len() });
    }
    if !(alpha > 0.0 && alpha <= 1.0) || !(k_const >= 0.0) {
        return Err(Error::InvalidInput(format!("need alpha in (0, 1] and K >= 0, got alpha = {alpha}, K = {k_const}")));
    }
    let mut radii: Vec<f64> = radii.to_vec();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    let k0 = k0(v.n(), k_const, alpha);
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for (a, &sigma) in radii.iter().enumerate() {
        for &rho in &radii[a + 1..] {
            let small = k_const * rho.powf(alpha);
            match pair_gate(v, x, sigma, rho, opts, small, 0.5, "1/2") {
                Some(reason) => skipped.push(SkippedPair { sigma, rho, reason }),
                None => pairs.push((sigma, rho)),
            }
        }
    }
    let rows = pairs
        .par_iter()
        .map(|&(sigma, rho)| {
            let q = weighted_perp(v, x, sigma, rho, |_| 1.0);
            let lhs_i = weighted_ratio(v, x, rho, k0, alpha, Sign::Plus);
            let rhs_i = weighted_ratio(v, x, sigma, k0, alpha, Sign::Plus) + 0.5 * q;
            let lhs_ii = weighted_ratio(v, x, rho, k0, alpha, Sign::Minus);
            let rhs_ii = weighted_ratio(v, x, sigma, k0, alpha, Sign::Minus) + 2.0 * q;
            let tol = opts.tol_c * (v.resolution() / sigma) * lhs_i;
            MonotonicityRow { sigma, rho, lhs_i, rhs_i, lhs_ii, rhs_ii, q, margin_i: lhs_i - rhs_i, margin_ii: rhs_ii - lhs_ii, tol }
        })
        .collect();
    Ok(MonotonicityReport {
        center: x.iter().cloned().collect(),
        alpha,
        k_const,
        k0,
        tol_c: opts.tol_c,
        reliable_radius: opts.reliable_radius,
        rows,
        skipped,
    })
}

/// One row of the weighted inequality
/// `sigma^-n int_{B_sigma} h <= e^{K0 rho^a} rho^-n int_{B_rho} h
///   - e^{K0 rho^a}/2 Q_h + e^{K0 rho^a}/n int_{B_rho} |grad^M h| / r^{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedRow {
    pub sigma: f64,
    pub rho: f64,
    /// `sigma^-n int_{B_sigma} h`.
    pub lhs: f64,
    pub rhs: f64,
    /// `e^{K0 rho^a} rho^-n int_{B_rho} h`.
    pub ratio_term: f64,
    /// `Q` weighted by `h`, without the exponential factor.
    pub q_h: f64,
    /// `int_{B_rho} |grad^M h| / r^{n-1}`, without the factor.
    pub gradient_term: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    pub tol: f64,
    /// Set when `K rho^alpha > 1` or a radius is unreliable; margins are then
    /// informational.
    pub skipped: Option<String>,
}

impl WeightedRow {
    pub fn passes(&self) -> bool {
        self.skipped.is_some() || self.margin >= -self.tol
    }
}

#[allow(clippy::too_many_arguments)]
pub fn weighted_monotonicity_h(
    v: &DiscreteVarifold,
    x: &DVector<f64>,
    sigma: f64,
    rho: f64,
    alpha: f64,
    k_const: f64,
    h: &ScalarField,
    opts: &MonotonicityOptions,
) -> Result<WeightedRow> {
    if !(sigma > 0.0 && sigma < rho) {
        return Err(Error::InvalidInput(format!("need 0 < sigma < rho, got sigma = {sigma}, rho = {rho}")));
    }
    let n = v.n();
    let idx = v.ball_indices(x, rho);
    let mut hv = vec![0.0; v.len()];
    for &i in &idx {
        let val = h.value(&v.samples()[i].position);
        if val < 0.0 {
            return Err(Error::NegativeWeight { index: i, value: val });
        }
        hv[i] = val;
    }
    let k0 = k0(n, k_const, alpha);
    let e = (k0 * rho.powf(alpha)).exp();
    let mut inner = 0.0;
    let mut outer = 0.0;
    let mut gradient_term = 0.0;
    for &i in &idx {
        let s = &v.samples()[i];
        let r = (&s.position - x).norm();
        let m = s.mass();
        outer += m * hv[i];
        if r < sigma {
            inner += m * hv[i];
        }
        // r = 0 carries no mass in the continuum; skip the singular sample
        if r > 0.0 {
            let g = &v.projection(i).tangent * h.gradient(&s.position);
            gradient_term += m * g.norm() / r.powi(n as i32 - 1);
        }
    }
    let q_h = weighted_perp(v, x, sigma, rho, |i| hv[i]);
    let lhs = inner * sigma.powi(-(n as i32));
    let ratio_term = e * outer * rho.powi(-(n as i32));
    let rhs = ratio_term - 0.5 * e * q_h + e / n as f64 * gradient_term;
    let tol = opts.tol_c * (v.resolution() / sigma) * ratio_term;
    let skipped = pair_gate(v, x, sigma, rho, opts, k_const * rho.powf(alpha), 1.0, "1");
    Ok(WeightedRow { sigma, rho, lhs, rhs, ratio_term, q_h, gradient_term, margin: rhs - lhs, tol, skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub center: Vec<f64>,
    pub theta_hat: f64,
    pub radii: Vec<f64>,
    /// `e^{K0 rho^a} omega_n^-1 rho^-n mu(B_rho)` at each radius.
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
}

/// Density estimated at the three smallest reliable dyadic radii; the value
/// at the smallest is reported, and convergence means the three agree within
/// the tolerance at that radius.
pub fn density(v: &DiscreteVarifold, x: &DVector<f64>, alpha: f64, k_const: f64, opts: &MonotonicityOptions) -> DensityEstimate {
    let k0 = k0(v.n(), k_const, alpha);
    let wn = unit_ball_volume(v.n());
    let radii: Vec<f64> = (0..3).map(|j| opts.reliable_radius * 2f64.powi(j)).collect();
    let ratios: Vec<f64> = radii.iter().map(|&r| weighted_ratio(v, x, r, k0, alpha, Sign::Plus) / wn).collect();
    let theta_hat = ratios[0];
    let tol = opts.tol_c * (v.resolution() / radii[0]) * theta_hat.max(f64::MIN_POSITIVE);
    let spread = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    DensityEstimate { center: x.iter().cloned().collect(), theta_hat, radii, ratios, converged: theta_hat > 0.0 && spread <= tol, tol }
}

/// Push-forward under `y -> (y - x) / lambda`, with weights scaled by
/// `lambda^-n` so that `mu'(B_rho(0)) = lambda^-n mu(B_{lambda rho}(x))`.
pub fn rescale(v: &DiscreteVarifold, x: &DVector<f64>, lambda: f64) -> Result<DiscreteVarifold> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    if x.len() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: x.len() });
    }
    let factor = lambda.powi(-(v.n() as i32));
    let samples = v
        .samples()
        .iter()
        .map(|s| VarifoldSample {
            position: (&s.position - x) / lambda,
            frame: s.frame.clone(),
            weight: s.weight * factor,
            multiplicity: s.multiplicity,
        })
        .collect();
    DiscreteVarifold::new(v.n(), v.k(), v.resolution() / lambda, v.domain().rescaled(x, lambda), v.flags(), samples)
}

pub const CONE_SCALES: [f64; 2] = [0.5, 0.25];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeProbe {
    pub lambda: f64,
    pub radius: f64,
    pub defect: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeDefect {
    /// Largest relative defect over all probes.
    pub defect: f64,
    pub probes: Vec<ConeProbe>,
}

impl ConeDefect {
    pub fn within_tolerance(&self) -> bool {
        self.probes.iter().all(|p| p.defect <= p.tol)
    }
}

/// Default probe radii: dyadic from `reliable / min(lambda)` up to the domain
/// radius.
pub fn cone_probe_radii(v: &DiscreteVarifold, opts: &MonotonicityOptions) -> Vec<f64> {
    let lo = opts.reliable_radius / CONE_SCALES[1];
    let hi = v.domain().radius() - v.domain().center().norm();
    crate::variation::dyadic_radii(lo, hi)
}

/// `max |lambda^-n mu(B_{lambda rho}(0)) - mu(B_rho(0))| / mu(B_rho(0))` over
/// `lambda` in {1/2, 1/4} and the probe radii.
pub fn cone_defect(v: &DiscreteVarifold, radii: &[f64], opts: &MonotonicityOptions) -> Result<ConeDefect> {
    let origin = DVector::zeros(v.ambient_dim());
    if !v.domain().contains_point(&origin) {
        return Err(Error::InvalidInput("origin lies outside the domain".into()));
    }
    let n = v.n() as i32;
    let mut probes = Vec::new();
    for &rho in radii {
        let outer = v.mass_in_ball(&origin, rho);
        if outer <= 0.0 {
            return Err(Error::EmptyBall { center: vec![0.0; v.ambient_dim()], radius: rho });
        }
        for &lambda in &CONE_SCALES {
            let inner = lambda.powi(-n) * v.mass_in_ball(&origin, lambda * rho);
            let tol = opts.tol_c * v.resolution() / (CONE_SCALES[1] * rho);
            probes.push(ConeProbe { lambda, radius: rho, defect: (inner - outer).abs() / outer, tol });
        }
    }
    let defect = probes.iter().map(|p| p.defect).fold(0.0, f64::max);
    Ok(ConeDefect { defect, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec, Shape};

    fn opts(v: &DiscreteVarifold) -> MonotonicityOptions {
        MonotonicityOptions::for_varifold(v, 4.0, 8.0)
    }

    #[test]
    fn k0_value() {
        assert!((k0(2, 0.1, 0.5) - 1.2).abs() < 1e-15);
    }

    #[test]
    fn plane_ratio_is_omega_n() {
        let v = generate(&GeneratorSpec::new(Shape::Plane { n: 2, k: 1 }, 0.01, 2.0)).unwrap().varifold;
        let x = DVector::zeros(3);
        for rho in [0.1, 0.2, 0.4, 0.8] {
            let r = weighted_ratio(&v, &x, rho, 0.0, 1.0, Sign::Plus);
            assert!((r - std::f64::consts::PI).abs() <= 4.0 * 0.01 / rho * r);
            assert!(weighted_ratio(&v, &x, rho, 0.7, 0.5, Sign::Minus) <= weighted_ratio(&v, &x, rho, 0.7, 0.5, Sign::Plus));
        }
    }

    #[test]
    fn plane_has_no_perpendicular_deviation() {
        let v = generate(&GeneratorSpec::new(Shape::Plane { n: 2, k: 1 }, 0.02, 2.0)).unwrap().varifold;
        let x = v.samples()[1234].position.clone();
        assert!(perp_deviation(&v, &x, 0.1, 0.5).unwrap() < 1e-12);
        assert!(perp_deviation(&v, &x, 0.5, 0.5).is_err());
    }

    #[test]
    fn circle_perp_deviation_matches_arc_quadrature() {
        let radius = 1.0;
        let g = generate(&GeneratorSpec::new(Shape::Circle { radius, center: None }, 1e-4, 0.0)).unwrap();
        let x = DVector::from_vec(vec![radius, 0.0]);
        let (sigma, rho) = (0.1, 0.6);
        let q = perp_deviation(&g.varifold, &x, sigma, rho).unwrap();
        // on the arc at angle t from x: r = 2R sin(t/2) and the distance of x
        // to the tangent line at y is r^2 / (2R); integrate by Simpson's rule
        let t_of = |r: f64| 2.0 * (r / (2.0 * radius)).asin();
        let (a, b) = (t_of(sigma), t_of(rho));
        let m = 2000;
        let f = |t: f64| {
            let r = 2.0 * radius * (t / 2.0).sin();
            (r * r / (2.0 * radius)).powi(2) / r.powi(3) * radius
        };
        let hstep = (b - a) / m as f64;
        let simpson: f64 = (0..=m)
            .map(|i| {
                let w = if i == 0 || i == m {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * f(a + i as f64 * hstep)
            })
            .sum::<f64>()
            * hstep
            / 3.0;
        let oracle = 2.0 * simpson;
        assert!((q - oracle).abs() <= 0.01 * oracle, "{q} vs {oracle}");
    }

    #[test]
    fn doubling_multiplicity_doubles_q() {
        let v = generate(&GeneratorSpec::new(Shape::Circle { radius: 1.0, center: None }, 1e-3, 0.0)).unwrap().varifold;
        let v2 = v.scale_multiplicity(2.0).unwrap();
        let x = v.samples()[0].position.clone();
        assert_eq!(perp_deviation(&v2, &x, 0.1, 0.5).unwrap(), 2.0 * perp_deviation(&v, &x, 0.1, 0.5).unwrap());
    }

    #[test]
    fn plane_with_zero_k_has_near_equality() {
        let v = generate(&GeneratorSpec::new(Shape::Plane { n: 1, k: 1 }, 1e-3, 2.0)).unwrap().varifold;
        let x = DVector::zeros(2);
        let radii: Vec<f64> = (0..6).map(|j| 0.008 * 2f64.powi(j)).collect();
        let rep = check_monotonicity(&v, &x, 1.0, 0.0, &radii, &opts(&v)).unwrap();
        assert!(rep.passed());
        for row in &rep.rows {
            assert!(row.q < 1e-12);
            assert!(row.margin_i.abs() <= row.tol && row.margin_ii.abs() <= row.tol);
        }
    }

    #[test]
    fn pairs_beyond_the_smallness_bound_are_skipped() {
        let v = generate(&GeneratorSpec::new(Shape::Plane { n: 1, k: 1 }, 1e-2, 2.0)).unwrap().varifold;
        let rep = check_monotonicity(&v, &DVector::zeros(2), 1.0, 2.0, &[0.1, 0.2, 0.4], &opts(&v)).unwrap();
        // K rho <= 1/2 only for rho <= 0.25
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.skipped.len(), 2);
    }

    #[test]
    fn unit_weight_reduces_to_the_unweighted_inequality() {
        let v = generate(&GeneratorSpec::new(Shape::Circle { radius: 1.0, center: None }, 1e-3, 0.0)).unwrap().varifold;
        let x = v.samples()[10].position.clone();
        let o = opts(&v);
        let one = ScalarField::Constant { value: 1.0 };
        let w = weighted_monotonicity_h(&v, &x, 0.1, 0.4, 1.0, 0.0, &one, &o).unwrap();
        let m = check_monotonicity(&v, &x, 1.0, 0.0, &[0.1, 0.4], &o).unwrap();
        let row = &m.rows[0];
        assert_eq!(w.gradient_term, 0.0);
        assert!((w.q_h - row.q).abs() <= 1e-12 * row.q);
        assert!((w.ratio_term - row.lhs_i).abs() <= 1e-12 * row.lhs_i);
        assert!((w.margin - row.margin_i).abs() <= 1e-12);
    }

    #[test]
    fn weighted_terms_scale_linearly() {
        let v = generate(&GeneratorSpec::new(Shape::Plane { n: 2, k: 1 }, 0.02, 2.0)).unwrap().varifold;
        let x = DVector::zeros(3);
        let h = ScalarField::Affine { gradient: vec![0.5, 0.2, 0.0], offset: 1.0 };
        let o = opts(&v);
        let a = weighted_monotonicity_h(&v, &x, 0.2, 0.6, 1.0, 0.1, &h, &o).unwrap();
        let b = weighted_monotonicity_h(&v, &x, 0.2, 0.6, 1.0, 0.1, &h.scaled(4.0), &o).unwrap();
        for (p, q) in [(a.lhs, b.lhs), (a.rhs, b.rhs), (a.gradient_term, b.gradient_term), (a.q_h, b.q_h)] {
            assert_eq!(4.0 * p, q);
        }
        let neg = ScalarField::Affine { gradient: vec![5.0, 0.0, 0.0], offset: 0.0 };
        assert!(matches!(weighted_monotonicity_h(&v, &x, 0.2, 0.6, 1.0, 0.1, &neg, &o), Err(Error::NegativeWeight { .. })));
    }

    #[test]
    fn rescaling_by_powers_of_two_is_exact() {
        let v = generate(&GeneratorSpec::new(Shape::Sphere { n: 2, radius: 1.0, center: None }, 0.05, 0.0)).unwrap().varifold;
        let x = v.samples()[7].position.clone();
        let w = rescale(&v, &x, 0.125).unwrap();
        for rho in [0.5, 1.0, 3.0] {
            assert_eq!(w.mass_in_ball(&DVector::zeros(3), rho), 64.0 * v.mass_in_ball(&x, 0.125 * rho));
        }
        let id = rescale(&v, &DVector::zeros(3), 1.0).unwrap();
        assert_eq!(id.samples(), v.samples());
    }

    #[test]
    fn plane_density_is_one_and_crossing_is_two() {
        let p = generate(&GeneratorSpec::new(Shape::Plane { n: 2, k: 1 }, 0.01, 2.0)).unwrap().varifold;
        let d = density(&p, &DVector::zeros(3), 1.0, 0.0, &opts(&p));
        assert!(d.converged && (d.theta_hat - 1.0).abs() <= d.tol);
        let u = generate(&GeneratorSpec::new(Shape::PlaneUnion { n: 1, angle: 1.0 }, 1e-3, 2.0)).unwrap().varifold;
        let d = density(&u, &DVector::zeros(2), 1.0, 0.0, &opts(&u));
        assert!(d.converged && (d.theta_hat - 2.0).abs() <= d.tol);
    }

    #[test]
    fn cone_defect_of_plane_union_is_within_tolerance() {
        let u = generate(&GeneratorSpec::new(Shape::PlaneUnion { n: 1, angle: 0.8 }, 1e-3, 2.0)).unwrap().varifold;
        let o = opts(&u);
        let c = cone_defect(&u, &cone_probe_radii(&u, &o), &o).unwrap();
        assert!(!c.probes.is_empty() && c.within_tolerance(), "{c:?}");
    }
}
