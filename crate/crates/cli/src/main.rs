//! `varifold`: generate discrete varifolds and run the regularity checks on
//! them. Reports go to stdout or `--out` as canonical JSON, or CSV for the
//! tabular part. Exit status 0 on pass, 2 on a failed hypothesis or
//! inequality, 3 on bad input.

mod output;

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use varifold::excess::{decay_exponent, good_set, DecayParams, GoodSetParams};
use varifold::generators::{generate, GeneratorSpec};
use varifold::io::{read_varifold, write_varifold};
use varifold::monotonicity::{check_monotonicity, MonotonicityOptions};
use varifold::regularity::{check_hypotheses, graph_conclusion, pipeline_verify, PipelineInput};
use varifold::variation::{dyadic_radii, estimate_K, BallFamily, FieldFamily};
use varifold::{Config, DiscreteVarifold, Error};

use output::{emit, Format, Table};

#[derive(Parser)]
#[command(name = "varifold", version, about = "Regularity checks for discrete varifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// Hölder exponent.
    #[arg(long, global = true, default_value_t = 0.5)]
    alpha: f64,
    /// Fixed Hölder constant K (estimated when omitted, where applicable).
    #[arg(long = "k", global = true)]
    k_const: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long = "tol-c", global = true)]
    tol_c: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON file with configuration overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Build a synthetic varifold from a JSON generator spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Check frames, weights and multiplicities.
    Validate(Input),
    /// Estimate the Hölder constant K of the first variation.
    EstimateK {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = FamilyKind::Standard)]
        family: FamilyKind,
        /// Centre the balls at this point instead of a lattice over the data.
        #[arg(long, value_delimiter = ',')]
        at: Option<Vec<f64>>,
    },
    /// Both monotonicity inequalities on a dyadic ladder of radii.
    Monotonicity {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        point: Point,
        /// Largest radius of the ladder (default: a quarter of the domain radius).
        #[arg(long)]
        rho_max: Option<f64>,
    },
    /// Tilt-excess decay along `rho0, eta rho0, ...`.
    ExcessDecay {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1.0)]
        rho0: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Good set and pairwise graph test of the Lipschitz approximation.
    Lipschitz {
        #[command(flatten)]
        input: Input,
        #[arg(long = "radius", default_value_t = 1.0)]
        r: f64,
        /// Lipschitz constant ell (default from the configuration).
        #[arg(long)]
        ell: Option<f64>,
        /// Good-set threshold (default from the configuration).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Hypotheses at a point and the graph conclusion on the smaller ball.
    CheckRegularity {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
    /// Every stage in order, with a single report.
    Pipeline {
        /// Varifold file, or a generator spec with `--spec`.
        #[arg(long, required_unless_present = "spec")]
        input: Option<PathBuf>,
        #[arg(long, conflicts_with = "input")]
        spec: Option<PathBuf>,
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
    },
}

#[derive(Args, Clone)]
struct Input {
    /// Varifold file (`.json` or binary).
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Clone)]
struct Point {
    /// Centre, comma separated (default: origin).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
}

#[derive(Copy, Clone, ValueEnum)]
enum FamilyKind {
    Standard,
    Vertical,
}

/// Process outcome: the report is written either way.
enum Verdict {
    Pass,
    Fail,
}

fn input_error(e: &anyhow::Error) -> bool {
    match e.downcast_ref::<Error>() {
        Some(Error::HypothesesUnmet(_)) => false,
        Some(_) => true,
        None => true,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(3);
    }
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if input_error(&e) { 3 } else { 2 })
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(s) = std::env::var("VARIFOLD_THREADS") {
        let n: usize = s.trim().parse().with_context(|| format!("VARIFOLD_THREADS = {s:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn load_config(c: &Common) -> anyhow::Result<Config> {
    let mut cfg: Config = match &c.config {
        Some(p) => serde_json::from_reader(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))
            .map_err(Error::from)
            .with_context(|| format!("parsing {}", p.display()))?,
        None => Config::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = c.$f { cfg.$f = v; })* };
    }
    set!(delta, gamma, eta, epsilon, tol_c, seed);
    if let Some(s) = c.seed {
        cfg.family.seed = s;
    }
    Ok(cfg)
}

fn load(path: &Path) -> anyhow::Result<DiscreteVarifold> {
    Ok(read_varifold(path).with_context(|| format!("reading {}", path.display()))?.0)
}

fn load_spec(path: &Path) -> anyhow::Result<GeneratorSpec> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f)).map_err(Error::from).with_context(|| format!("parsing {}", path.display()))
}

fn center(v: &DiscreteVarifold, p: &Point) -> anyhow::Result<DVector<f64>> {
    match &p.x {
        None => Ok(DVector::zeros(v.ambient_dim())),
        Some(x) if x.len() == v.ambient_dim() => Ok(DVector::from_column_slice(x)),
        Some(x) => Err(Error::DimensionMismatch { expected: v.ambient_dim(), got: x.len() }.into()),
    }
}

fn verdict(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn finish<T: Serialize + Table>(c: &Common, report: &T, ok: bool) -> anyhow::Result<Verdict> {
    emit(report, c.format, c.out.as_deref())?;
    Ok(verdict(ok))
}

#[derive(Serialize)]
struct GenerateSummary<'a> {
    out: String,
    spec: &'a GeneratorSpec,
    samples: usize,
    total_mass: f64,
    n: usize,
    k: usize,
}

#[derive(Serialize)]
struct ValidateReport {
    passed: bool,
    samples: usize,
    total_mass: f64,
    theta_ge_one: bool,
    diagnostics: Vec<varifold::Diagnostic>,
}

#[derive(Serialize)]
struct RegularityReport {
    passed: bool,
    hypotheses: varifold::regularity::HypothesesVerdict,
    graph: varifold::regularity::GraphVerdict,
}

fn run(cli: &Cli) -> anyhow::Result<Verdict> {
    let c = &cli.common;
    let cfg = load_config(c)?;
    let alpha = c.alpha;
    match &cli.command {
        Command::Generate { spec } => {
            let spec = load_spec(spec)?;
            let Some(out) = &c.out else { bail!(Error::InvalidInput("generate needs --out".into())) };
            let g = generate(&spec)?;
            write_varifold(out, &g.varifold, (!g.oracle.is_empty()).then_some(&g.oracle))?;
            let summary = GenerateSummary {
                out: out.display().to_string(),
                spec: &spec,
                samples: g.varifold.len(),
                total_mass: g.varifold.total_mass(),
                n: g.varifold.n(),
                k: g.varifold.k(),
            };
            emit(&summary, Format::Json, None)?;
            Ok(Verdict::Pass)
        }
        Command::Validate(i) => {
            let v = load(&i.input)?;
            let diagnostics = v.validate();
            let r = ValidateReport {
                passed: diagnostics.is_empty(),
                samples: v.len(),
                total_mass: v.total_mass(),
                theta_ge_one: v.flags().theta_ge_one,
                diagnostics,
            };
            let ok = r.passed;
            finish(c, &r, ok)
        }
        Command::EstimateK { input, family, at } => {
            let v = load(&input.input)?;
            let balls = match at {
                Some(x) => {
                    let x = center(&v, &Point { x: Some(x.clone()) })?;
                    let hi = cfg.family.max_radius_fraction * v.domain().radius();
                    BallFamily::at_point(&x, &dyadic_radii(cfg.family.min_radius_factor * v.resolution(), hi))
                }
                None => BallFamily::standard(&v, &cfg.family),
            };
            if balls.is_empty() {
                bail!(Error::InvalidInput("no test ball fits the domain at this resolution".into()));
            }
            let fields = match family {
                FamilyKind::Standard => FieldFamily::standard(&cfg.family),
                FamilyKind::Vertical => FieldFamily::vertical(&cfg.family),
            };
            let est = estimate_K(&v, alpha, &balls, &fields)?;
            let ok = est.hard_violations.is_empty();
            finish(c, &est, ok)
        }
        Command::Monotonicity { input, point, rho_max } => {
            let v = load(&input.input)?;
            let x = center(&v, point)?;
            let opts = MonotonicityOptions::for_varifold(&v, cfg.tol_c, cfg.reliable_radius_factor);
            let hi = rho_max.unwrap_or(v.domain().radius() / 4.0);
            let k = c.k_const.unwrap_or(0.0);
            let rep = check_monotonicity(&v, &x, alpha, k, &dyadic_radii(opts.reliable_radius, hi), &opts)?;
            let ok = rep.passed();
            finish(c, &rep, ok)
        }
        Command::ExcessDecay { input, point, rho0, levels } => {
            let v = load(&input.input)?;
            let x = center(&v, point)?;
            let p = DecayParams {
                rho0: *rho0,
                eta: cfg.eta,
                levels: *levels,
                epsilon: cfg.epsilon,
                k_const: c.k_const.unwrap_or(0.0),
                alpha,
                a: cfg.a,
                reliable_radius: cfg.reliable_radius_factor * v.resolution(),
            };
            let rep = decay_exponent(&v, &x, &p)?;
            finish(c, &rep, true)
        }
        Command::Lipschitz { input, r, ell, threshold } => {
            let v = load(&input.input)?;
            let p = GoodSetParams {
                r: *r,
                delta_thresh: threshold.unwrap_or(cfg.good_set_delta),
                ell: ell.unwrap_or(cfg.ell),
                gamma: cfg.gamma,
                k_const: c.k_const.unwrap_or(0.0),
                alpha,
                seed: cfg.seed,
            };
            let rep = good_set(&v, &p, cfg.reliable_radius_factor * v.resolution())?;
            let ok = rep.lip_ok;
            finish(c, &rep, ok)
        }
        Command::CheckRegularity { input, point, rho } => {
            let v = load(&input.input)?;
            let x = center(&v, point)?;
            let hypotheses = check_hypotheses(&v, &x, *rho, cfg.delta, cfg.gamma, alpha, c.k_const.unwrap_or(0.0));
            let r = (cfg.gamma * rho).max(16.0 * v.resolution());
            let graph = graph_conclusion(&v, &x, r, alpha, cfg.seed)?;
            let rep = RegularityReport { passed: hypotheses.all_ok() && graph.is_graph, hypotheses, graph };
            let ok = rep.passed;
            finish(c, &rep, ok)
        }
        Command::Pipeline { input, spec, point, rho } => {
            let v = match (input, spec) {
                (Some(p), _) => load(p)?,
                (None, Some(s)) => generate(&load_spec(s)?)?.varifold,
                (None, None) => bail!(Error::InvalidInput("pipeline needs --input or --spec".into())),
            };
            let x = center(&v, point)?;
            let input = PipelineInput { center: x, rho: *rho, alpha, k_const: c.k_const };
            let rep = pipeline_verify(&v, &input, &cfg)?;
            let ok = rep.passed;
            finish(c, &rep, ok)
        }
    }
}
