//! Hypotheses of the regularity theorem, the graph test of its conclusion
//! and the end-to-end verification pipeline.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::excess::{best_plane, check_tilt_height, decay_exponent, DecayParams, DecayReport, TiltHeightRow};
use crate::geometry::{unit_ball_volume, ProjectionPair};
use crate::monotonicity::{check_monotonicity, MonotonicityOptions, MonotonicityReport};
use crate::variation::{dyadic_radii, estimate_K, BallFamily, FieldFamily, HoelderEstimate};
use crate::varifold::{Diagnostic, DiscreteVarifold};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesesVerdict {
    pub center: Vec<f64>,
    pub rho: f64,
    pub theta_ok: bool,
    pub min_multiplicity: f64,
    pub origin_in_support: bool,
    pub ball_in_domain: bool,
    /// `omega_n^-1 rho^-n mu(B_rho(x))`.
    pub ratio: f64,
    pub ratio_ok: bool,
    #[serde(rename = "K_rho_alpha")]
    pub k_rho_alpha: f64,
    pub smallness_ok: bool,
    pub delta: f64,
    pub gamma: f64,
}

impl HypothesesVerdict {
    pub fn all_ok(&self) -> bool {
        self.theta_ok && self.origin_in_support && self.ball_in_domain && self.ratio_ok && self.smallness_ok
    }
}

/// The five hypotheses at `x` and radius `rho`. The centre is `x` rather than
/// the origin so that points of curved fixtures can be tested in place.
#[allow(clippy::too_many_arguments)]
pub fn check_hypotheses(
    v: &DiscreteVarifold,
    x: &DVector<f64>,
    rho: f64,
    delta: f64,
    gamma: f64,
    alpha: f64,
    k_const: f64,
) -> HypothesesVerdict {
    let idx = v.ball_indices(x, rho);
    let min_multiplicity = idx.iter().map(|&i| v.samples()[i].multiplicity).fold(f64::INFINITY, f64::min);
    // a point is in the support when mass sits within two grid spacings of it
    let origin_in_support = v.mass_in_ball(x, 2.0 * v.resolution()) > 0.0;
    let ratio = v.mass_in_ball(x, rho) / (unit_ball_volume(v.n()) * rho.powi(v.n() as i32));
    let k_rho_alpha = k_const * rho.powf(alpha);
    HypothesesVerdict {
        center: x.iter().cloned().collect(),
        rho,
        theta_ok: min_multiplicity >= 1.0,
        min_multiplicity: if idx.is_empty() { 0.0 } else { min_multiplicity },
        origin_in_support,
        ball_in_domain: v.domain().contains_ball(x, rho),
        ratio,
        ratio_ok: ratio <= 1.0 + delta,
        k_rho_alpha,
        smallness_ok: k_rho_alpha <= delta,
        delta,
        gamma,
    }
}

/// Base cells whose height spread exceeds this many resolutions are multivalued.
pub const SPREAD_FACTOR: f64 = 3.0;
const PAIR_LIMIT: usize = 4000;
const SAMPLED_PAIRS: usize = 400_000;
const MAX_WITNESSES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellWitness {
    pub cell: Vec<i64>,
    pub spread: f64,
    /// Sample indices attaining the lowest and highest height in the cell.
    pub low: usize,
    pub high: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderBin {
    pub min_distance: f64,
    pub max_distance: f64,
    /// Largest `|D psi(y) - D psi(z)| / |y' - z'|^alpha` in the bin.
    pub quotient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphVerdict {
    pub center: Vec<f64>,
    pub radius: f64,
    pub alpha: f64,
    pub is_graph: bool,
    pub plane: ProjectionPair,
    pub samples: usize,
    pub single_valued_ok: bool,
    pub spread_threshold: f64,
    pub max_spread: f64,
    pub cell_witnesses: Vec<CellWitness>,
    /// Largest height difference over base distance.
    pub lip_norm: f64,
    /// Samples whose tangent plane is vertical over the base plane.
    pub vertical_tangents: usize,
    /// `r^alpha [D psi]_alpha` proxy: largest binned Hölder quotient times `r^alpha`.
    pub hoelder_norm_scaled: f64,
    pub hoelder_bins: Vec<HoelderBin>,
    pub pairs_sampled: bool,
}

/// Test whether `spt V ∩ B_r(x)` is a graph over its best plane, and report
/// scale-invariant norms of the graph function.
pub fn graph_conclusion(v: &DiscreteVarifold, x: &DVector<f64>, r: f64, alpha: f64, seed: u64) -> Result<GraphVerdict> {
    let h = v.resolution();
    if r < 16.0 * h * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("radius {r} is below 16 resolutions")));
    }
    let (n, k) = (v.n(), v.k());
    let plane = best_plane(v, x, r)?;
    let idx = v.ball_indices(x, r);
    let base = plane.basis(n).transpose();
    let normal = plane.normal_basis(k).transpose();

    struct Local {
        index: usize,
        base: DVector<f64>,
        height: DVector<f64>,
        slope: Option<DMatrix<f64>>,
    }
    let locals: Vec<Local> = idx
        .iter()
        .map(|&i| {
            let s = &v.samples()[i];
            let rel = &s.position - x;
            let a = &base * &s.frame;
            let b = &normal * &s.frame;
            let slope = a.try_inverse().map(|inv| b * inv).filter(|m| m.iter().all(|e| e.is_finite()) && m.norm() < 1e8);
            Local { index: i, base: &base * &rel, height: &normal * &rel, slope }
        })
        .collect();

    // single-valuedness over base cells of side h
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (j, l) in locals.iter().enumerate() {
        let key: Vec<i64> = l.base.iter().map(|c| (c / h).floor() as i64).collect();
        cells.entry(key).or_default().push(j);
    }
    let threshold = SPREAD_FACTOR * h;
    let mut spreads: Vec<CellWitness> = cells
        .into_iter()
        .filter(|(_, m)| m.len() > 1)
        .map(|(cell, members)| {
            let mut spread = 0.0;
            let mut pair = (members[0], members[0]);
            for (p, &a) in members.iter().enumerate() {
                for &b in &members[p + 1..] {
                    let d = (&locals[a].height - &locals[b].height).norm();
                    if d > spread {
                        spread = d;
                        pair = (a, b);
                    }
                }
            }
            CellWitness { cell, spread, low: locals[pair.0].index, high: locals[pair.1].index }
        })
        .collect();
    spreads.sort_by(|a, b| b.spread.total_cmp(&a.spread).then_with(|| a.cell.cmp(&b.cell)));
    let max_spread = spreads.first().map_or(0.0, |w| w.spread);
    let cell_witnesses: Vec<CellWitness> = spreads.into_iter().filter(|w| w.spread > threshold).take(MAX_WITNESSES).collect();
    let single_valued_ok = cell_witnesses.is_empty();

    // pairs: all of them when few, a seeded sample otherwise
    let m = locals.len();
    let sampled = m > PAIR_LIMIT;
    let pairs: Vec<(usize, usize)> = if sampled {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..SAMPLED_PAIRS).map(|_| (rng.random_range(0..m), rng.random_range(0..m))).filter(|(a, b)| a != b).collect()
    } else {
        (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect()
    };
    let bin_lo = 2.0 * h;
    let bin_of = |d: f64| ((d / bin_lo).log2().floor().max(0.0)) as usize;
    let nbins = bin_of(2.0 * r) + 1;
    let (lip_norm, quotients) = pairs
        .par_iter()
        .fold(
            || (0.0f64, vec![0.0f64; nbins]),
            |(mut lip, mut q), &(a, b)| {
                let (la, lb) = (&locals[a], &locals[b]);
                let d = (&la.base - &lb.base).norm();
                if d >= h {
                    lip = lip.max((&la.height - &lb.height).norm() / d);
                }
                if d >= bin_lo {
                    if let (Some(sa), Some(sb)) = (&la.slope, &lb.slope) {
                        let bin = bin_of(d).min(nbins - 1);
                        q[bin] = q[bin].max((sa - sb).norm() / d.powf(alpha));
                    }
                }
                (lip, q)
            },
        )
        .reduce(|| (0.0, vec![0.0; nbins]), |(l1, q1), (l2, q2)| (l1.max(l2), q1.iter().zip(&q2).map(|(a, b)| a.max(*b)).collect()));
    let hoelder_bins: Vec<HoelderBin> = quotients
        .iter()
        .enumerate()
        .map(|(j, &q)| HoelderBin {
            min_distance: bin_lo * 2f64.powi(j as i32),
            max_distance: bin_lo * 2f64.powi(j as i32 + 1),
            quotient: q,
        })
        .collect();
    let hoelder = quotients.iter().cloned().fold(0.0, f64::max) * r.powf(alpha);
    let vertical_tangents = locals.iter().filter(|l| l.slope.is_none()).count();
    Ok(GraphVerdict {
        center: x.iter().cloned().collect(),
        radius: r,
        alpha,
        is_graph: single_valued_ok && vertical_tangents == 0 && lip_norm.is_finite(),
        plane,
        samples: m,
        single_valued_ok,
        spread_threshold: threshold,
        max_spread,
        cell_witnesses,
        lip_norm,
        vertical_tangents,
        hoelder_norm_scaled: hoelder,
        hoelder_bins,
        pairs_sampled: sampled,
    })
}

/// What the pipeline checks, and where.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInput {
    pub center: DVector<f64>,
    pub rho: f64,
    pub alpha: f64,
    /// Fixed K; `None` uses the estimate.
    pub k_const: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateStage {
    pub passed: bool,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateStage {
    pub passed: bool,
    /// K used downstream.
    #[serde(rename = "K")]
    pub k_const: f64,
    #[serde(rename = "K_supplied")]
    pub k_supplied: bool,
    pub estimate: HoelderEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityStage {
    pub passed: bool,
    pub violations: usize,
    pub report: MonotonicityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcessStage {
    pub passed: bool,
    pub tilt_height: TiltHeightRow,
    /// Informational; its hypotheses flags are not part of the verdict.
    pub decay: Option<DecayReport>,
    pub decay_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesesStage {
    pub passed: bool,
    pub verdict: HypothesesVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStage {
    pub passed: bool,
    pub verdict: GraphVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub passed: bool,
    pub failed_stages: Vec<String>,
    pub center: Vec<f64>,
    pub rho: f64,
    pub alpha: f64,
    pub n: usize,
    pub k: usize,
    pub resolution: f64,
    pub samples: usize,
    pub config: Config,
    /// `c(n, k)` after resolving the configuration default.
    pub c_nk_effective: f64,
    pub validate: ValidateStage,
    pub estimate_k: EstimateStage,
    pub monotonicity: MonotonicityStage,
    pub excess: ExcessStage,
    pub hypotheses: HypothesesStage,
    pub graph: GraphStage,
    /// The graph norms are a chosen scale-invariant proxy.
    pub norm_note: String,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("{name}: {m}")),
        Error::HypothesesUnmet(m) => Error::HypothesesUnmet(format!("{name}: {m}")),
        other => other,
    })
}

/// Validate, estimate K on balls centred at the point, check monotonicity,
/// the excess inequality, the hypotheses and the graph conclusion, in order.
pub fn pipeline_verify(v: &DiscreteVarifold, input: &PipelineInput, cfg: &Config) -> Result<VerificationReport> {
    let h = v.resolution();
    let x = &input.center;
    if x.len() != v.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: x.len() });
    }
    let diagnostics = v.validate();
    let validate = ValidateStage { passed: diagnostics.is_empty(), diagnostics };

    let radii = dyadic_radii((cfg.family.min_radius_factor * h).min(input.rho), input.rho);
    if radii.is_empty() {
        return Err(Error::InvalidInput(format!("rho = {} is below the smallest family radius", input.rho)));
    }
    let balls = BallFamily::at_point(x, &radii);
    let fields = FieldFamily::standard(&cfg.family);
    let estimate = stage("estimate_k", estimate_K(v, input.alpha, &balls, &fields))?;
    let k_const = input.k_const.unwrap_or(estimate.k_hat);
    let estimate_k = EstimateStage { passed: estimate.hard_violations.is_empty(), k_const, k_supplied: input.k_const.is_some(), estimate };

    let opts = MonotonicityOptions::for_varifold(v, cfg.tol_c, cfg.reliable_radius_factor);
    let ladder = dyadic_radii(opts.reliable_radius, input.rho);
    let report = stage("monotonicity", check_monotonicity(v, x, input.alpha, k_const, &ladder, &opts))?;
    let monotonicity = MonotonicityStage { passed: report.passed(), violations: report.violations(), report };

    let plane = stage("excess", best_plane(v, x, input.rho))?;
    let tilt_height = check_tilt_height(v, x, input.rho, &plane, k_const, input.alpha, cfg.c_abs, cfg.c_nk(v.n(), v.k()))?;
    let levels = ((opts.reliable_radius / input.rho).ln() / cfg.eta.ln()).floor().clamp(0.0, 3.0) as usize;
    let decay_params = DecayParams {
        rho0: input.rho,
        eta: cfg.eta,
        levels,
        epsilon: cfg.epsilon,
        k_const,
        alpha: input.alpha,
        a: cfg.a,
        reliable_radius: opts.reliable_radius,
    };
    let (decay, decay_error) = match decay_exponent(v, x, &decay_params) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let excess = ExcessStage { passed: tilt_height.margin >= 0.0, tilt_height, decay, decay_error };

    let verdict = check_hypotheses(v, x, input.rho, cfg.delta, cfg.gamma, input.alpha, k_const);
    let hypotheses = HypothesesStage { passed: verdict.all_ok(), verdict };

    let gr = (cfg.gamma * input.rho).max(16.0 * h);
    let gv = stage("graph_conclusion", graph_conclusion(v, x, gr, input.alpha, cfg.seed))?;
    let graph = GraphStage { passed: gv.is_graph, verdict: gv };

    let mut failed_stages = Vec::new();
    for (name, ok) in [
        ("validate", validate.passed),
        ("estimate_k", estimate_k.passed),
        ("monotonicity", monotonicity.passed),
        ("excess", excess.passed),
        ("hypotheses", hypotheses.passed),
        ("graph", graph.passed),
    ] {
        if !ok {
            failed_stages.push(name.to_string());
        }
    }
    Ok(VerificationReport {
        passed: failed_stages.is_empty(),
        failed_stages,
        center: x.iter().cloned().collect(),
        rho: input.rho,
        alpha: input.alpha,
        n: v.n(),
        k: v.k(),
        resolution: h,
        samples: v.len(),
        config: cfg.clone(),
        c_nk_effective: cfg.c_nk(v.n(), v.k()),
        validate,
        estimate_k,
        monotonicity,
        excess,
        hypotheses,
        graph,
        norm_note: "lip_norm and hoelder_norm_scaled are a chosen scale-invariant proxy for the C^{1,alpha} estimate".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, GeneratorSpec, GraphForm, Shape};

    fn plane2() -> DiscreteVarifold {
        generate(&GeneratorSpec::new(Shape::Plane { n: 2, k: 1 }, 0.02, 4.0)).unwrap().varifold
    }

    #[test]
    fn hypotheses_on_plane_and_union() {
        let v = plane2();
        let x = DVector::zeros(3);
        let ok = check_hypotheses(&v, &x, 1.0, 0.05, 0.25, 0.5, 0.0);
        assert!(ok.all_ok(), "{ok:?}");
        assert!((ok.ratio - 1.0).abs() < 0.02);
        let small = check_hypotheses(&v, &x, 1.0, 0.05, 0.25, 0.5, 0.1);
        assert!(!small.smallness_ok && small.ratio_ok);

        let u = generate(&GeneratorSpec::new(Shape::PlaneUnion { n: 1, angle: 1.0 }, 1e-3, 4.0)).unwrap().varifold;
        let bad = check_hypotheses(&u, &DVector::zeros(2), 1.0, 0.05, 0.25, 0.5, 0.0);
        assert!((bad.ratio - 2.0).abs() < 0.01);
        assert!(!bad.ratio_ok && bad.theta_ok && bad.origin_in_support && bad.ball_in_domain);
    }

    #[test]
    fn graph_verdicts() {
        let v = plane2();
        let g = graph_conclusion(&v, &DVector::zeros(3), 0.4, 0.5, 0).unwrap();
        assert!(g.is_graph && g.lip_norm < 1e-12 && g.hoelder_norm_scaled < 1e-12, "{g:?}");

        let u = generate(&GeneratorSpec::new(Shape::PlaneUnion { n: 1, angle: 1.0 }, 1e-3, 4.0)).unwrap().varifold;
        let g = graph_conclusion(&u, &DVector::zeros(2), 0.25, 0.5, 0).unwrap();
        assert!(!g.is_graph && !g.cell_witnesses.is_empty());

        let (a, alpha) = (0.05, 0.5);
        let spec = GeneratorSpec::new(Shape::HoelderGraph { n: 1, amplitude: a, alpha }, 1.0 / 200.0, 2.0);
        let v = generate(&spec).unwrap().varifold;
        let g = graph_conclusion(&v, &DVector::zeros(2), 0.4, alpha, 0).unwrap();
        assert!(g.is_graph);
        assert!(g.hoelder_norm_scaled <= (1.0 + alpha) * a * 1.1, "{}", g.hoelder_norm_scaled);
        assert!(graph_conclusion(&v, &DVector::zeros(2), 0.05, alpha, 0).is_err());
    }

    #[test]
    fn pipeline_patterns() {
        let cfg = Config::default();
        let x = DVector::zeros(2);
        let input = PipelineInput { center: x.clone(), rho: 1.0, alpha: 0.5, k_const: None };

        let line = generate(&GeneratorSpec::new(Shape::Plane { n: 1, k: 1 }, 1.0 / 200.0, 4.0)).unwrap().varifold;
        let rep = pipeline_verify(&line, &input, &cfg).unwrap();
        assert!(rep.passed, "{:?}", rep.failed_stages);

        let quad = GraphForm::Quadratic { c: 0.05 };
        let q = generate(&GeneratorSpec::new(Shape::Graph { n: 1, form: quad }, 1.0 / 200.0, 4.0)).unwrap().varifold;
        let rep = pipeline_verify(&q, &input, &cfg).unwrap();
        println!(
            "quadratic K = {} ratio = {} krho = {}",
            rep.estimate_k.k_const, rep.hypotheses.verdict.ratio, rep.hypotheses.verdict.k_rho_alpha
        );
        assert!(rep.passed, "{:?}", rep.failed_stages);

        let u = generate(&GeneratorSpec::new(Shape::PlaneUnion { n: 1, angle: 1.0 }, 1.0 / 200.0, 4.0)).unwrap().varifold;
        let rep = pipeline_verify(&u, &input, &cfg).unwrap();
        assert_eq!(rep.failed_stages, vec!["hypotheses".to_string(), "graph".to_string()]);
        let hv = &rep.hypotheses.verdict;
        assert!(!hv.ratio_ok && hv.theta_ok && hv.origin_in_support && hv.ball_in_domain && hv.smallness_ok);
    }
}
