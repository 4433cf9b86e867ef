//! Output files: `report.json` at full precision and tables with four
//! significant digits.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{GreRow, SolveRow, SpaceTimeRow, StabilityRow, TimeRow};

/// Scientific notation with four significant digits and a two-digit
/// exponent, e.g. `6.157E-03`.
pub fn sci4(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.3E}");
    let (mantissa, exp) = s.split_once('E').expect("E format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}E{sign}{:02}", exp.abs())
}

fn opt(x: Option<f64>, f: impl Fn(f64) -> String) -> String {
    x.map(f).unwrap_or_else(|| "-".into())
}

fn order4(x: f64) -> String {
    format!("{x:.4}")
}

fn secs(x: f64) -> String {
    format!("{x:.4}")
}

/// Problem description echoed into the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemInfo {
    pub id: u8,
    pub domain: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
    pub scheme: crate::compact_fd::BoundaryScheme,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "rows", rename_all = "kebab-case")]
pub enum Rows {
    Solve(Vec<SolveRow>),
    ConvergeSpaceTime(Vec<SpaceTimeRow>),
    ConvergeTime(Vec<TimeRow>),
    GreTable(Vec<GreRow>),
    Stability(Vec<StabilityRow>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub status: &'static str,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub problem: Option<ProblemInfo>,
    pub results: Rows,
    pub files: Vec<String>,
}

pub fn table_csv(rows: &Rows) -> String {
    let mut out = String::new();
    let mut line = |cells: Vec<String>| {
        out.push_str(&cells.join(","));
        out.push('\n');
    };
    let f = |x: f64| format!("{x}");
    match rows {
        Rows::ConvergeSpaceTime(rows) => {
            line(["h", "k", "N", "T", "max_error", "order", "gre", "cpu_loop_s"].map(String::from).to_vec());
            for r in rows {
                line(vec![
                    f(r.h),
                    f(r.k),
                    r.n.to_string(),
                    f(r.t_final),
                    sci4(r.max_norm),
                    opt(r.order, order4),
                    sci4(r.gre),
                    opt(r.timing.map(|t| t.loop_seconds), secs),
                ]);
            }
        }
        Rows::ConvergeTime(rows) => {
            line(["k", "h", "N", "T", "E_k", "order", "cpu_loop_s"].map(String::from).to_vec());
            for r in rows {
                line(vec![
                    f(r.k),
                    f(r.h),
                    r.n.to_string(),
                    f(r.t_final),
                    opt(r.e_k, sci4),
                    opt(r.order, order4),
                    opt(r.timing.map(|t| t.loop_seconds), secs),
                ]);
            }
        }
        Rows::GreTable(rows) => {
            line(
                ["t", "h", "k", "N", "T", "gre", "max_error", "sbsc_gre_lit", "qbsc_gre_lit", "lbm_gre_lit"]
                    .map(String::from)
                    .to_vec(),
            );
            for r in rows {
                line(vec![
                    f(r.t),
                    f(r.h),
                    f(r.k),
                    r.n.to_string(),
                    f(r.t_final),
                    sci4(r.gre),
                    sci4(r.max_norm),
                    opt(r.literature.map(|l| l.sbsc), sci4),
                    opt(r.literature.map(|l| l.qbsc), sci4),
                    opt(r.literature.map(|l| l.lbm), sci4),
                ]);
            }
        }
        Rows::Solve(rows) => {
            line(["t", "h", "k", "N", "T", "max_abs_u", "mean_u", "max_error", "gre"].map(String::from).to_vec());
            for r in rows {
                line(vec![
                    f(r.t),
                    f(r.h),
                    f(r.k),
                    r.n.to_string(),
                    f(r.t_final),
                    sci4(r.max_abs),
                    sci4(r.mean),
                    opt(r.max_norm, sci4),
                    opt(r.gre, sci4),
                ]);
            }
        }
        Rows::Stability(rows) => {
            line(["y", "nx", "ny", "area", "inside_samples", "curves"].map(String::from).to_vec());
            for r in rows {
                line(vec![
                    r.label.clone(),
                    r.nx.to_string(),
                    r.ny.to_string(),
                    sci4(r.area),
                    r.inside_samples.to_string(),
                    r.curves.to_string(),
                ]);
            }
        }
    }
    out
}

/// `x,u` pairs at full precision.
pub fn write_field_csv(path: &Path, x: &[f64], u: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,u")?;
    for (a, b) in x.iter().zip(u) {
        writeln!(w, "{a},{b}")?;
    }
    w.flush()
}

/// Filename-safe rendering of a time or parameter label.
pub fn label(text: &str) -> String {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') { c } else { '_' })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    fs::write(path, text)
}

pub fn write_json(path: &Path, report: &Report) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
