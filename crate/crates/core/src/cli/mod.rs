//! Command-line front end: `kse <solve|converge|stability|table>`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical instability,
//! 4 I/O error.

pub mod config;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::linalg::LinalgError;
use crate::problems::{make_problem, ProblemOverrides, ProblemSpec};
use config::{load, ExperimentConfig, Mode};
use report::{label, table_csv, write_field_csv, write_json, write_text, ProblemInfo, Report, Rows};
use run::{converge_space_time, converge_time, gre_table, run_problem, stability_fields, summarize};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Unstable { .. } | Error::PoleProximity(_) | Error::Linalg(LinalgError::Singular { .. }) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "kse", version, about = "Kuramoto–Sivashinsky solver and experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one problem and write field snapshots.
    Solve(Common),
    /// Step-refinement study (converge-time or converge-space-time).
    Converge(Common),
    /// Stability regions of the amplification factor.
    Stability(Common),
    /// Error tables against the exact traveling wave or convergence tables.
    Table(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set k=0.005` or `--set preset=table3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Command {
    fn parts(&self) -> (&'static str, &Common, Mode, &'static [Mode]) {
        match self {
            Command::Solve(c) => ("solve", c, Mode::Solve, &[Mode::Solve]),
            Command::Converge(c) => ("converge", c, Mode::ConvergeTime, &[Mode::ConvergeTime, Mode::ConvergeSpaceTime]),
            Command::Stability(c) => ("stability", c, Mode::Stability, &[Mode::Stability]),
            Command::Table(c) => (
                "table",
                c,
                Mode::GreTable,
                &[Mode::GreTable, Mode::ConvergeTime, Mode::ConvergeSpaceTime],
            ),
        }
    }
}

/// Parses arguments, runs, prints errors and returns the exit code.
pub fn main_entry<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            println!("wrote {}", out.display());
            0
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> Result<PathBuf, CliError> {
    let (name, common, default_mode, allowed) = command.parts();
    let text = match &common.config {
        Some(p) => Some(fs::read_to_string(p).map_err(io_err(p))?),
        None => None,
    };
    let cfg = load(text.as_deref(), &common.set, default_mode)?;
    if !allowed.contains(&cfg.mode) {
        return Err(CliError::Config(format!("mode {} cannot run under `{name}`", cfg.mode)));
    }
    let spec = match cfg.problem {
        Some(id) => Some(make_problem::<f64>(id, ProblemOverrides { beta: cfg.beta })?),
        None => None,
    };
    fs::create_dir_all(&common.out).map_err(io_err(&common.out))?;
    let mut out = Output { dir: common.out.clone(), files: Vec::new() };
    let (results, failure) = match cfg.mode {
        Mode::Solve => solve(&cfg, spec.as_ref().expect("validated"), &mut out)?,
        Mode::ConvergeSpaceTime => {
            let spec = spec.as_ref().expect("validated");
            let mut p = converge_space_time(spec, &cfg.h, &cfg.k, cfg.final_time()?);
            if !cfg.timings {
                p.rows.iter_mut().for_each(|r| r.timing = None);
            }
            (Rows::ConvergeSpaceTime(p.rows), p.failure)
        }
        Mode::ConvergeTime => {
            let spec = spec.as_ref().expect("validated");
            let mut p = converge_time(spec, grid(&cfg, spec)?, &cfg.k, cfg.final_time()?);
            if !cfg.timings {
                p.rows.iter_mut().for_each(|r| r.timing = None);
            }
            (Rows::ConvergeTime(p.rows), p.failure)
        }
        Mode::GreTable => {
            let spec = spec.as_ref().expect("validated");
            match gre_table(spec, grid(&cfg, spec)?, cfg.k[0], cfg.final_time()?, &cfg.times) {
                Ok((rows, _)) => (Rows::GreTable(rows), None),
                Err(e) => (Rows::GreTable(Vec::new()), Some(e)),
            }
        }
        Mode::Stability => stability(&cfg, &mut out)?,
    };
    let failure = failure.map(CliError::from);
    if let Some(CliError::Config(m)) = &failure {
        return Err(CliError::Config(m.clone()));
    }
    out.text("table.csv", &table_csv(&results))?;
    let report_path = out.dir.join("report.json");
    let mut files = out.files.clone();
    files.push("report.json".into());
    let report = Report {
        command: name.to_string(),
        status: if failure.is_some() { "unstable" } else { "ok" },
        error: failure.as_ref().map(|e| e.message().to_string()),
        config: cfg.clone(),
        problem: spec.as_ref().map(info),
        results,
        files,
    };
    write_json(&report_path, &report).map_err(io_err(&report_path))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out.dir),
    }
}

struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(name);
        write_text(&p, text).map_err(io_err(&p))
    }
}

fn info(spec: &ProblemSpec<f64>) -> ProblemInfo {
    ProblemInfo {
        id: spec.id,
        domain: [spec.a, spec.b],
        alpha: spec.params.alpha,
        beta: spec.params.beta,
        scheme: spec.scheme,
    }
}

fn grid(cfg: &ExperimentConfig, spec: &ProblemSpec<f64>) -> Result<crate::Grid<f64>, CliError> {
    Ok(match (cfg.n.first(), cfg.h.first()) {
        (Some(&n), _) => spec.grid_with_points(n)?,
        (None, Some(&h)) => spec.grid_with_spacing(h)?,
        (None, None) => unreachable!("validated"),
    })
}

type Outcome = (Rows, Option<Error>);

fn solve(cfg: &ExperimentConfig, spec: &ProblemSpec<f64>, out: &mut Output) -> Result<Outcome, CliError> {
    let t_final = cfg.final_time()?;
    let k = cfg.k[0];
    let mut times = cfg.times.clone();
    if let Some(every) = cfg.snapshot_every {
        let count = crate::imexrk4::step_count(t_final, every).unwrap_or((t_final / every).floor() as usize);
        times.extend((0..=count).map(|i| i as f64 * every).filter(|&t| t <= t_final));
    }
    times.push(t_final);
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    let grid = grid(cfg, spec)?;
    let start = Instant::now();
    let run = match run_problem(spec, grid, k, t_final, &times) {
        Ok(r) => r,
        Err(e) => return Ok((Rows::Solve(Vec::new()), Some(e))),
    };
    let x = grid.nodes();
    for (t, u) in &run.snapshots {
        let p = out.path(&format!("field_t{}.csv", label(&t.to_string())));
        write_field_csv(&p, &x, u).map_err(io_err(&p))?;
    }
    let rows = summarize(spec, &run, t_final)?;
    if cfg.timings {
        eprintln!(
            "loop {:.4} s, total {:.4} s, with output {:.4} s",
            run.timing.loop_seconds,
            run.timing.total_seconds,
            start.elapsed().as_secs_f64()
        );
    }
    Ok((Rows::Solve(rows), None))
}

fn stability(cfg: &ExperimentConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let ys = cfg.y_values()?;
    let jobs: Vec<_> = cfg.y.iter().zip(ys).map(|(s, y)| (s.clone(), y, cfg.window_for(y))).collect();
    let [nx, ny] = cfg.resolution();
    let fields = match stability_fields(&jobs, nx, ny) {
        Ok(f) => f,
        Err(e) => return Ok((Rows::Stability(Vec::new()), Some(e))),
    };
    let mut rows = Vec::new();
    for (row, field) in fields {
        let tag = label(&row.label);
        let p = out.path(&format!("stability_y{tag}.csv"));
        let mut w = BufWriter::new(fs::File::create(&p).map_err(io_err(&p))?);
        field.write_samples_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&p))?;
        let p = out.path(&format!("boundary_y{tag}.csv"));
        let mut w = BufWriter::new(fs::File::create(&p).map_err(io_err(&p))?);
        field.write_boundary_csv(&mut w).and_then(|_| w.flush()).map_err(io_err(&p))?;
        rows.push(row);
    }
    Ok((Rows::Stability(rows), None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_exit_codes() {
        let unstable = Error::Unstable { step: 3, time: 0.3, max_abs: 1e300 };
        assert_eq!(CliError::from(unstable).exit_code(), 3);
        assert_eq!(CliError::from(Error::Linalg(LinalgError::Singular { pivot: 0 })).exit_code(), 3);
        assert_eq!(CliError::from(Error::InvalidParameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::Io("x".into()).exit_code(), 4);
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(main_entry(["kse", "--help"]), 0);
        assert_eq!(main_entry(["kse", "--version"]), 0);
        assert_eq!(main_entry(["kse", "frobnicate"]), 2);
        assert_eq!(main_entry(["kse"]), 2);
    }

    #[test]
    fn mode_must_fit_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let code = main_entry(["kse", "solve", "--set", "preset=fig1", "--out", out]);
        assert_eq!(code, 2);
    }
}
