//! Report emission: canonical JSON for everything, CSV for the main table.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use varifold::excess::{DecayReport, LipschitzApproxReport};
use varifold::monotonicity::MonotonicityReport;
use varifold::regularity::VerificationReport;
use varifold::report::{format_f64, write_canonical};
use varifold::variation::HoelderEstimate;

use crate::{GenerateSummary, RegularityReport, ValidateReport};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// The plot-ready table of a report.
pub trait Table {
    fn headers(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
}

fn f(x: f64) -> String {
    format_f64(x)
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

fn coords(x: &[f64]) -> String {
    x.iter().map(|c| format_f64(*c)).collect::<Vec<_>>().join(" ")
}

pub fn emit<T: Serialize + Table>(report: &T, format: Format, out: Option<&Path>) -> anyhow::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match format {
        Format::Json => {
            let mut sink = sink;
            write_canonical(report, &mut sink)?;
            sink.write_all(b"\n")?;
            sink.flush()?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            w.write_record(report.headers())?;
            for row in report.rows() {
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

impl Table for GenerateSummary<'_> {
    fn headers(&self) -> Vec<&'static str> {
        vec!["samples", "total_mass"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        vec![vec![self.samples.to_string(), f(self.total_mass)]]
    }
}

impl Table for ValidateReport {
    fn headers(&self) -> Vec<&'static str> {
        vec!["index", "kind", "value"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.diagnostics.iter().map(|d| vec![d.index.to_string(), format!("{:?}", d.kind), f(d.value)]).collect()
    }
}

impl Table for HoelderEstimate {
    fn headers(&self) -> Vec<&'static str> {
        vec!["center", "radius", "field", "first_variation", "gradient_mass", "ratio"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.per_ball
            .iter()
            .map(|b| vec![coords(&b.center), f(b.radius), b.field.clone(), f(b.first_variation), f(b.gradient_mass), f(b.ratio)])
            .collect()
    }
}

impl Table for MonotonicityReport {
    fn headers(&self) -> Vec<&'static str> {
        vec!["sigma", "rho", "lhs_i", "rhs_i", "lhs_ii", "rhs_ii", "q", "margin_i", "margin_ii", "tol", "passes"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row: Vec<String> = [r.sigma, r.rho, r.lhs_i, r.rhs_i, r.lhs_ii, r.rhs_ii, r.q, r.margin_i, r.margin_ii, r.tol]
                    .into_iter()
                    .map(f)
                    .collect();
                row.push(r.passes().to_string());
                row
            })
            .collect()
    }
}

impl Table for DecayReport {
    fn headers(&self) -> Vec<&'static str> {
        vec!["level", "rho", "tilt", "height", "e_star", "ratio_to_previous", "failed_hypotheses"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.levels
            .iter()
            .map(|l| {
                vec![
                    l.level.to_string(),
                    f(l.rho),
                    f(l.tilt),
                    f(l.height),
                    f(l.e_star),
                    opt(l.ratio_to_previous),
                    l.failed_hypotheses.join("; "),
                ]
            })
            .collect()
    }
}

impl Table for LipschitzApproxReport {
    fn headers(&self) -> Vec<&'static str> {
        vec!["y", "z", "slope"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        self.witnesses.iter().map(|w| vec![w.y.to_string(), w.z.to_string(), f(w.slope)]).collect()
    }
}

impl Table for RegularityReport {
    fn headers(&self) -> Vec<&'static str> {
        vec!["check", "passed", "value"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        let h = &self.hypotheses;
        let g = &self.graph;
        vec![
            vec!["theta".into(), h.theta_ok.to_string(), f(h.min_multiplicity)],
            vec!["in_support".into(), h.origin_in_support.to_string(), String::new()],
            vec!["ball_in_domain".into(), h.ball_in_domain.to_string(), String::new()],
            vec!["ratio".into(), h.ratio_ok.to_string(), f(h.ratio)],
            vec!["smallness".into(), h.smallness_ok.to_string(), f(h.k_rho_alpha)],
            vec!["single_valued".into(), g.single_valued_ok.to_string(), f(g.max_spread)],
            vec!["lip_norm".into(), g.is_graph.to_string(), f(g.lip_norm)],
            vec!["hoelder_norm_scaled".into(), g.is_graph.to_string(), f(g.hoelder_norm_scaled)],
        ]
    }
}

impl Table for VerificationReport {
    fn headers(&self) -> Vec<&'static str> {
        vec!["stage", "passed"]
    }
    fn rows(&self) -> Vec<Vec<String>> {
        [
            ("validate", self.validate.passed),
            ("estimate_k", self.estimate_k.passed),
            ("monotonicity", self.monotonicity.passed),
            ("excess", self.excess.passed),
            ("hypotheses", self.hypotheses.passed),
            ("graph", self.graph.passed),
        ]
        .into_iter()
        .map(|(s, p)| vec![s.to_string(), p.to_string()])
        .collect()
    }
}
