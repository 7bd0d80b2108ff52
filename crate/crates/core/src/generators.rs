//! Synthetic varifolds with analytically known geometry.
//!
//! Graph kinds are sampled on a regular base lattice with midpoint weights
//! `h^n sqrt(det(I + Du^T Du))`; spheres and catenoids use equal-area bands.
//!
//! The Hölder graph `u(x) = A |x|^(1+alpha)` is blended inside the ball of
//! radius `r0 = 2 h` by the even quartic `a + b r^2 + c r^4` matching value,
//! first and second derivative at `r0`, which makes the samples C^2 while
//! leaving `[Du]_alpha` within a percent of the unblended value.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{orthonormalize_columns, plane_rotation};
use crate::varifold::{DiscreteVarifold, Domain, Flags, VarifoldSample};

/// Stand-in for an unbounded side of a box domain.
pub const FAR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Plane {
        n: usize,
        #[serde(default = "one_usize")]
        k: usize,
    },
    /// Two n-planes in R^(n+1) through the origin at `+-angle/2` from R^n.
    PlaneUnion {
        n: usize,
        angle: f64,
    },
    /// Round n-sphere in R^(n+1), `n` in {1, 2}.
    Sphere {
        n: usize,
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Circle {
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Graph {
        n: usize,
        form: GraphForm,
    },
    HoelderGraph {
        n: usize,
        amplitude: f64,
        alpha: f64,
    },
    /// Minimal catenoid with the given neck radius, axis along the last coordinate.
    Catenoid {
        neck: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum GraphForm {
    /// `u(x) = S x` with `slopes` given as k rows of length n.
    Linear { slopes: Vec<Vec<f64>> },
    /// `u(x) = c |x|^2 / 2`.
    Quadratic { c: f64 },
}

fn one_usize() -> usize {
    1
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub shape: Shape,
    pub resolution: f64,
    /// Side length of the sampled base square (graphs, planes), or the axial
    /// length of a catenoid. Ignored for closed curves and spheres.
    pub extent: f64,
    #[serde(default = "one")]
    pub multiplicity: f64,
    /// Lattice jitter as a fraction of the cell size; needs `seed`.
    #[serde(default)]
    pub jitter: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl GeneratorSpec {
    pub fn new(shape: Shape, resolution: f64, extent: f64) -> Self {
        Self { shape, resolution, extent, multiplicity: 1.0, jitter: 0.0, seed: None }
    }

    pub fn with_multiplicity(mut self, m: f64) -> Self {
        self.multiplicity = m;
        self
    }

    pub fn with_jitter(mut self, jitter: f64, seed: u64) -> Self {
        self.jitter = jitter;
        self.seed = Some(seed);
        self
    }

    fn check(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidInput(format!("resolution must be positive, got {}", self.resolution)));
        }
        let closed = matches!(self.shape, Shape::Sphere { .. } | Shape::Circle { .. });
        if !closed && self.extent < 16.0 * self.resolution {
            return Err(Error::InvalidInput(format!("extent {} must be at least 16 x resolution {}", self.extent, self.resolution)));
        }
        if !(self.multiplicity > 0.0) {
            return Err(Error::InvalidInput("multiplicity must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(Error::InvalidInput("jitter must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Graph function for graph-like kinds.
    pub fn graph_function(&self) -> Option<GraphFunction> {
        match &self.shape {
            Shape::Plane { n, k } => Some(GraphFunction::Linear { slopes: DMatrix::zeros(*k, *n) }),
            Shape::Graph { n, form: GraphForm::Linear { slopes } } => {
                let k = slopes.len();
                Some(GraphFunction::Linear { slopes: DMatrix::from_fn(k, *n, |i, j| slopes[i].get(j).copied().unwrap_or(0.0)) })
            }
            Shape::Graph { form: GraphForm::Quadratic { c }, .. } => Some(GraphFunction::Quadratic { c: *c }),
            Shape::HoelderGraph { amplitude, alpha, .. } => Some(GraphFunction::hoelder(*amplitude, *alpha, 2.0 * self.resolution)),
            _ => None,
        }
    }
}

/// Height function of a graph over R^n with values in R^k.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFunction {
    Linear { slopes: DMatrix<f64> },
    Quadratic { c: f64 },
    Hoelder { amplitude: f64, alpha: f64, blend: HoelderBlend },
}

/// Quartic replacement `a + b r^2 + c r^4` of `r^(1+alpha)` on `r < r0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoelderBlend {
    pub r0: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl HoelderBlend {
    fn new(alpha: f64, r0: f64) -> Self {
        let f0 = r0.powf(1.0 + alpha);
        let f1 = (1.0 + alpha) * r0.powf(alpha);
        let f2 = (1.0 + alpha) * alpha * r0.powf(alpha - 1.0);
        let c = (f2 - f1 / r0) / (8.0 * r0 * r0);
        let b = f2 / 2.0 - 6.0 * c * r0 * r0;
        let a = f0 - b * r0 * r0 - c * r0.powi(4);
        Self { r0, a, b, c }
    }

    fn profile(&self, alpha: f64, r: f64) -> f64 {
        if r >= self.r0 {
            r.powf(1.0 + alpha)
        } else {
            let r2 = r * r;
            self.a + self.b * r2 + self.c * r2 * r2
        }
    }

    /// `g'(r) / r`, finite at the origin.
    fn slope_over_r(&self, alpha: f64, r: f64) -> f64 {
        if r >= self.r0 {
            (1.0 + alpha) * r.powf(alpha - 1.0)
        } else {
            2.0 * self.b + 4.0 * self.c * r * r
        }
    }
}

impl GraphFunction {
    pub fn hoelder(amplitude: f64, alpha: f64, r0: f64) -> Self {
        GraphFunction::Hoelder { amplitude, alpha, blend: HoelderBlend::new(alpha, r0) }
    }

    pub fn codim(&self) -> usize {
        match self {
            GraphFunction::Linear { slopes } => slopes.nrows(),
            _ => 1,
        }
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        match self {
            GraphFunction::Linear { slopes } => (slopes * DVector::from_column_slice(x)).iter().cloned().collect(),
            GraphFunction::Quadratic { c } => vec![0.5 * c * x.iter().map(|v| v * v).sum::<f64>()],
            GraphFunction::Hoelder { amplitude, alpha, blend } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                vec![amplitude * blend.profile(*alpha, r)]
            }
        }
    }

    /// `Du`, a `k x n` matrix.
    pub fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        match self {
            GraphFunction::Linear { slopes } => slopes.clone(),
            GraphFunction::Quadratic { c } => DMatrix::from_fn(1, n, |_, j| c * x[j]),
            GraphFunction::Hoelder { amplitude, alpha, blend } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let s = amplitude * blend.slope_over_r(*alpha, r);
                DMatrix::from_fn(1, n, |_, j| s * x[j])
            }
        }
    }
}

/// Exact per-sample data kept alongside a generated varifold.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Oracle {
    /// `Du` at each sample, row-major `k x n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub du: Option<Vec<Vec<f64>>>,
    /// Mean curvature vector at each sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_curvature: Option<Vec<Vec<f64>>>,
}

impl Oracle {
    pub fn is_empty(&self) -> bool {
        self.du.is_none() && self.mean_curvature.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub varifold: DiscreteVarifold,
    pub oracle: Oracle,
}

/// Midpoints of an `n`-dimensional lattice over `[-extent/2, extent/2]^n`.
fn base_lattice(n: usize, extent: f64, resolution: f64) -> (Vec<Vec<f64>>, f64) {
    let cells = (extent / resolution).round().max(1.0) as usize;
    let h = extent / cells as f64;
    let total = cells.pow(n as u32);
    let mut pts = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut p = vec![0.0; n];
        for coord in p.iter_mut() {
            let i = rem % cells;
            rem /= cells;
            *coord = -extent / 2.0 + (i as f64 + 0.5) * h;
        }
        pts.push(p);
    }
    (pts, h)
}

fn jitter_rng(spec: &GeneratorSpec) -> Option<ChaCha8Rng> {
    (spec.jitter > 0.0).then(|| ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0)))
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    spec.check()?;
    let m = spec.multiplicity;
    let flags = Flags { theta_ge_one: m >= 1.0 };
    match &spec.shape {
        Shape::Plane { .. } | Shape::Graph { .. } | Shape::HoelderGraph { .. } => {
            let n = match &spec.shape {
                Shape::Plane { n, .. } | Shape::Graph { n, .. } | Shape::HoelderGraph { n, .. } => *n,
                _ => unreachable!(),
            };
            let f = spec.graph_function().expect("graph kind");
            graph(spec, n, &f, flags)
        }
        Shape::PlaneUnion { n, angle } => plane_union(spec, *n, *angle, flags),
        Shape::Sphere { n: 1, radius, center } | Shape::Circle { radius, center } => circle(spec, *radius, center.as_deref(), flags),
        Shape::Sphere { n: 2, radius, center } => sphere2(spec, *radius, center.as_deref(), flags),
        Shape::Sphere { n, .. } => Err(Error::InvalidInput(format!("sphere dimension {n} not supported (1 or 2)"))),
        Shape::Catenoid { neck } => catenoid(spec, *neck, flags),
    }
}

fn graph(spec: &GeneratorSpec, n: usize, f: &GraphFunction, flags: Flags) -> Result<Generated> {
    if n == 0 {
        return Err(Error::InvalidInput("graph dimension must be positive".into()));
    }
    let k = f.codim();
    let (base, h) = base_lattice(n, spec.extent, spec.resolution);
    let mut rng = jitter_rng(spec);
    let cell_volume = h.powi(n as i32);
    let mut samples = Vec::with_capacity(base.len());
    let mut dus = Vec::with_capacity(base.len());
    for mut x in base {
        if let Some(rng) = rng.as_mut() {
            for c in x.iter_mut() {
                *c += spec.jitter * h * (rng.random::<f64>() - 0.5);
            }
        }
        let u = f.value(&x);
        let du = f.gradient(&x);
        let position = DVector::from_iterator(n + k, x.iter().cloned().chain(u.iter().cloned()));
        let differential = DMatrix::from_fn(n + k, n, |i, j| if i < n { (i == j) as u8 as f64 } else { du[(i - n, j)] });
        let metric = DMatrix::identity(n, n) + du.transpose() * &du;
        let jacobian = metric.determinant().sqrt();
        let frame = orthonormalize_columns(&differential).expect("graph differential has full rank");
        samples.push(VarifoldSample::new(position, frame, cell_volume * jacobian, spec.multiplicity));
        dus.push(du.transpose().iter().cloned().collect());
    }
    let half = spec.extent / 2.0;
    let domain = Domain::Box {
        lo: (0..n + k).map(|i| if i < n { -half } else { -FAR }).collect(),
        hi: (0..n + k).map(|i| if i < n { half } else { FAR }).collect(),
    };
    let mean_curvature = match f {
        GraphFunction::Linear { .. } => Some(vec![vec![0.0; n + k]; samples.len()]),
        _ => None,
    };
    let varifold = DiscreteVarifold::new(n, k, h, domain, flags, samples)?;
    Ok(Generated { varifold, oracle: Oracle { du: Some(dus), mean_curvature } })
}

fn plane_union(spec: &GeneratorSpec, n: usize, angle: f64, flags: Flags) -> Result<Generated> {
    let d = n + 1;
    let (base, h) = base_lattice(n, spec.extent, spec.resolution);
    let mut rng = jitter_rng(spec);
    let mut samples = Vec::with_capacity(2 * base.len());
    for sign in [1.0, -1.0] {
        let rot = plane_rotation(d, 0, n, sign * angle / 2.0);
        let frame = rot.columns(0, n).into_owned();
        for x in &base {
            let mut x = x.clone();
            if let Some(rng) = rng.as_mut() {
                for c in x.iter_mut() {
                    *c += spec.jitter * h * (rng.random::<f64>() - 0.5);
                }
            }
            let position = &frame * DVector::from_column_slice(&x);
            samples.push(VarifoldSample::new(position, frame.clone(), h.powi(n as i32), spec.multiplicity));
        }
    }
    let domain = Domain::Ball { center: vec![0.0; d], radius: spec.extent / 2.0 };
    let count = samples.len();
    let varifold = DiscreteVarifold::new(n, 1, h, domain, flags, samples)?;
    Ok(Generated { varifold, oracle: Oracle { du: None, mean_curvature: Some(vec![vec![0.0; d]; count]) } })
}

fn center_or_origin(center: Option<&[f64]>, d: usize) -> Result<DVector<f64>> {
    match center {
        None => Ok(DVector::zeros(d)),
        Some(c) if c.len() == d => Ok(DVector::from_column_slice(c)),
        Some(c) => Err(Error::DimensionMismatch { expected: d, got: c.len() }),
    }
}

fn circle(spec: &GeneratorSpec, radius: f64, center: Option<&[f64]>, flags: Flags) -> Result<Generated> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let c = center_or_origin(center, 2)?;
    let count = ((std::f64::consts::TAU * radius / spec.resolution).round() as usize).max(16);
    let dt = std::f64::consts::TAU / count as f64;
    let mut rng = jitter_rng(spec);
    let mut samples = Vec::with_capacity(count);
    let mut curv = Vec::with_capacity(count);
    for j in 0..count {
        let mut t = (j as f64 + 0.5) * dt;
        if let Some(rng) = rng.as_mut() {
            t += spec.jitter * dt * (rng.random::<f64>() - 0.5);
        }
        let (s, co) = t.sin_cos();
        let position = &c + DVector::from_vec(vec![radius * co, radius * s]);
        let frame = DMatrix::from_column_slice(2, 1, &[-s, co]);
        samples.push(VarifoldSample::new(position, frame, radius * dt, spec.multiplicity));
        curv.push(vec![-co / radius, -s / radius]);
    }
    let domain = Domain::Ball { center: c.iter().cloned().collect(), radius: 4.0 * radius };
    let varifold = DiscreteVarifold::new(1, 1, radius * dt, domain, flags, samples)?;
    Ok(Generated { varifold, oracle: Oracle { du: None, mean_curvature: Some(curv) } })
}

fn sphere2(spec: &GeneratorSpec, radius: f64, center: Option<&[f64]>, flags: Flags) -> Result<Generated> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let c = center_or_origin(center, 3)?;
    let h = spec.resolution;
    let bands = ((2.0 * radius / h).round() as usize).max(4);
    let dz = 2.0 / bands as f64;
    let mut rng = jitter_rng(spec);
    let mut samples = Vec::new();
    let mut curv = Vec::new();
    for i in 0..bands {
        let z = -1.0 + (i as f64 + 0.5) * dz;
        let rho = (1.0 - z * z).sqrt();
        let count = ((std::f64::consts::TAU * radius * rho / h).round() as usize).max(3);
        let dphi = std::f64::consts::TAU / count as f64;
        // Archimedes: each band has area 2 pi R^2 dz regardless of latitude
        let weight = radius * radius * dz * dphi;
        let offset = if i % 2 == 0 { 0.0 } else { 0.5 };
        for j in 0..count {
            let mut phi = (j as f64 + 0.5 + offset) * dphi;
            let mut zz = z;
            if let Some(rng) = rng.as_mut() {
                phi += spec.jitter * dphi * (rng.random::<f64>() - 0.5);
                zz += spec.jitter * dz * (rng.random::<f64>() - 0.5);
            }
            let rr = (1.0 - zz * zz).sqrt();
            let (s, co) = phi.sin_cos();
            let p = DVector::from_vec(vec![rr * co, rr * s, zz]);
            let e_phi = [-s, co, 0.0];
            let e_theta = [zz * co, zz * s, -rr];
            let frame = DMatrix::from_column_slice(3, 2, &[e_phi[0], e_phi[1], e_phi[2], e_theta[0], e_theta[1], e_theta[2]]);
            curv.push((&p * (-2.0 / radius)).iter().cloned().collect());
            samples.push(VarifoldSample::new(&c + &p * radius, frame, weight, spec.multiplicity));
        }
    }
    let domain = Domain::Ball { center: c.iter().cloned().collect(), radius: 4.0 * radius };
    let varifold = DiscreteVarifold::new(2, 1, h, domain, flags, samples)?;
    Ok(Generated { varifold, oracle: Oracle { du: None, mean_curvature: Some(curv) } })
}

fn catenoid(spec: &GeneratorSpec, neck: f64, flags: Flags) -> Result<Generated> {
    if !(neck > 0.0) {
        return Err(Error::InvalidInput("neck radius must be positive".into()));
    }
    let h = spec.resolution;
    let bands = (spec.extent / h).round() as usize;
    let ds = spec.extent / bands as f64;
    let mut samples = Vec::new();
    for i in 0..bands {
        let s = -spec.extent / 2.0 + (i as f64 + 0.5) * ds;
        let ch = (s / neck).cosh();
        let sh = (s / neck).sinh();
        let count = ((std::f64::consts::TAU * neck * ch / h).round() as usize).max(3);
        let dt = std::f64::consts::TAU / count as f64;
        let weight = ds * dt * neck * ch * ch;
        for j in 0..count {
            let t = (j as f64 + 0.5) * dt;
            let (st, ct) = t.sin_cos();
            let position = DVector::from_vec(vec![neck * ch * ct, neck * ch * st, s]);
            let frame = DMatrix::from_column_slice(3, 2, &[-st, ct, 0.0, sh * ct / ch, sh * st / ch, 1.0 / ch]);
            samples.push(VarifoldSample::new(position, frame, weight, spec.multiplicity));
        }
    }
    let half = spec.extent / 2.0;
    let domain = Domain::Box { lo: vec![-FAR, -FAR, -half], hi: vec![FAR, FAR, half] };
    let count = samples.len();
    let varifold = DiscreteVarifold::new(2, 1, h, domain, flags, samples)?;
    Ok(Generated { varifold, oracle: Oracle { du: None, mean_curvature: Some(vec![vec![0.0; 3]; count]) } })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeminormMethod {
    ClosedForm,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormEstimate {
    pub value: f64,
    pub method: SeminormMethod,
    /// For sampled values: distance to the unblended closed form.
    pub gap: Option<f64>,
}

/// Points used by the dense two-point search.
const SEMINORM_SEARCH_POINTS: usize = 2001;

/// `[Du]_alpha` over the generated base square.
///
/// Closed form for linear and quadratic graphs. Hölder graphs are radial, so
/// the supremum is attained on a line through the origin; it is found by a
/// dense pair search along the first axis of the blended function actually
/// sampled.
pub fn exact_hoelder_seminorm(spec: &GeneratorSpec, alpha: f64) -> Result<SeminormEstimate> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let n = match &spec.shape {
        Shape::Plane { n, .. } | Shape::Graph { n, .. } | Shape::HoelderGraph { n, .. } => *n,
        other => return Err(Error::InvalidInput(format!("{other:?} is not a graph"))),
    };
    let f = spec.graph_function().expect("graph kind");
    match &f {
        GraphFunction::Linear { .. } => Ok(SeminormEstimate { value: 0.0, method: SeminormMethod::ClosedForm, gap: None }),
        GraphFunction::Quadratic { c } => {
            let diam = spec.extent * (n as f64).sqrt();
            Ok(SeminormEstimate { value: c.abs() * diam.powf(1.0 - alpha), method: SeminormMethod::ClosedForm, gap: None })
        }
        GraphFunction::Hoelder { amplitude, alpha: beta, .. } => {
            let half = spec.extent / 2.0;
            let m = SEMINORM_SEARCH_POINTS;
            let xs: Vec<f64> = (0..m).map(|i| -half + spec.extent * i as f64 / (m - 1) as f64).collect();
            let grads: Vec<f64> = xs
                .iter()
                .map(|&x| {
                    let mut p = vec![0.0; n];
                    p[0] = x;
                    f.gradient(&p)[(0, 0)]
                })
                .collect();
            let mut best = 0.0_f64;
            for i in 0..m {
                for j in i + 1..m {
                    let q = (grads[i] - grads[j]).abs() / (xs[j] - xs[i]).powf(alpha);
                    best = best.max(q);
                }
            }
            let gap = ((alpha - beta).abs() < 1e-15).then(|| (best - 2f64.powf(1.0 - beta) * (1.0 + beta) * amplitude).abs());
            Ok(SeminormEstimate { value: best, method: SeminormMethod::Sampled, gap })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbKind {
    /// Positions moved along a random normal direction by `magnitude * N(0, 1)`.
    NormalNoise,
    /// Multiplicities shifted by `magnitude * U(-1, 1)`.
    MultiplicityBump,
}

/// Seeded adversarial perturbation; `magnitude = 0` returns an identical copy.
pub fn perturb(v: &DiscreteVarifold, kind: PerturbKind, magnitude: f64, seed: u64) -> Result<DiscreteVarifold> {
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidInput(format!("magnitude must be nonnegative, got {magnitude}")));
    }
    if magnitude == 0.0 {
        return Ok(v.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = v.ambient_dim();
    let samples = v
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| match kind {
            PerturbKind::NormalNoise => {
                let g = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let mut nu = &v.projection(i).complement * g;
                let norm = nu.norm();
                if norm > 0.0 {
                    nu /= norm;
                }
                let amp: f64 = rng.sample(StandardNormal);
                VarifoldSample { position: &s.position + nu * (magnitude * amp), ..s.clone() }
            }
            PerturbKind::MultiplicityBump => {
                let shift = magnitude * (2.0 * rng.random::<f64>() - 1.0);
                VarifoldSample { multiplicity: (s.multiplicity + shift).max(f64::MIN_POSITIVE), ..s.clone() }
            }
        })
        .collect();
    DiscreteVarifold::new(v.n(), v.k(), v.resolution(), v.domain().clone(), v.flags(), samples)
}
