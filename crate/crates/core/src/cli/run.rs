//! Experiment drivers. Each refinement level owns its system and workspace,
//! so levels run in parallel; results are always returned in input order.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{gre, max_norm_error, observed_order, self_difference_error, stability_scan, StabilityField, Window};
use crate::compact_fd::Grid;
use crate::error::{Error, Result};
use crate::imexrk4::{prepare, step_count};
use crate::problems::ProblemSpec;
use crate::scalar::max_abs;

/// Wall-clock seconds around the time loop alone and around the whole run
/// (assembly, factorization and loop).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub loop_seconds: f64,
    pub total_seconds: f64,
}

/// Rows that finished plus the first failure, if any.
#[derive(Debug)]
pub struct Partial<R> {
    pub rows: Vec<R>,
    pub failure: Option<Error>,
}

impl<R> Partial<R> {
    pub fn complete(self) -> Result<Vec<R>> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.rows),
        }
    }
}

/// States captured at selected step indices.
pub struct Run {
    pub grid: Grid<f64>,
    pub k: f64,
    pub final_state: Vec<f64>,
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub timing: Timing,
}

/// Integrates `spec` on `grid` to `t_final`, keeping the states at `times`.
pub fn run_problem(spec: &ProblemSpec<f64>, grid: Grid<f64>, k: f64, t_final: f64, times: &[f64]) -> Result<Run> {
    let start = Instant::now();
    let sys = spec.system(grid)?;
    let u0 = spec.initial_vector(&sys)?;
    step_count(t_final, k)?;
    let wanted: Vec<usize> = times.iter().map(|&t| step_count(t, k)).collect::<Result<_>>()?;
    let mut ws = prepare(&sys, k)?;
    let loop_start = Instant::now();
    let mut snapshots = Vec::new();
    let mut index = 0usize;
    let final_state = ws.integrate(&u0, t_final, |t, u| {
        if wanted.contains(&index) {
            snapshots.push((t, u.to_vec()));
        }
        index += 1;
    })?;
    let timing = Timing {
        loop_seconds: loop_start.elapsed().as_secs_f64(),
        total_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Run { grid, k, final_state, snapshots, timing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceTimeRow {
    pub h: f64,
    pub k: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub max_norm: f64,
    pub gre: f64,
    pub order: Option<f64>,
    pub timing: Option<Timing>,
}

/// Refines `h` and `k` together against the exact solution.
pub fn converge_space_time(spec: &ProblemSpec<f64>, hs: &[f64], ks: &[f64], t_final: f64) -> Partial<SpaceTimeRow> {
    let outcomes: Vec<Result<SpaceTimeRow>> = hs
        .par_iter()
        .zip(ks.par_iter())
        .map(|(&h, &k)| {
            let grid = spec.grid_with_spacing(h)?;
            let run = run_problem(spec, grid, k, t_final, &[])?;
            let exact = spec
                .exact_vector(&grid, t_final)
                .ok_or_else(|| Error::InvalidParameter(format!("problem {} has no exact solution", spec.id)))?;
            Ok(SpaceTimeRow {
                h,
                k,
                n: grid.n_points(),
                t_final,
                max_norm: max_norm_error(&exact, &run.final_state)?,
                gre: gre(&exact, &run.final_state)?,
                order: None,
                timing: Some(run.timing),
            })
        })
        .collect();
    let mut partial = split(outcomes);
    for i in 1..partial.rows.len() {
        let (a, b) = (partial.rows[i - 1].max_norm, partial.rows[i].max_norm);
        partial.rows[i].order = observed_order(a, b).ok();
    }
    partial
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeRow {
    pub k: f64,
    pub h: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// `‖U_k − U_{2k}‖∞`; absent for the coarsest step.
    pub e_k: Option<f64>,
    pub order: Option<f64>,
    pub timing: Option<Timing>,
}

/// Halves `k` on a fixed grid and measures self-differences.
pub fn converge_time(spec: &ProblemSpec<f64>, grid: Grid<f64>, ks: &[f64], t_final: f64) -> Partial<TimeRow> {
    let runs: Vec<Result<Run>> = ks.par_iter().map(|&k| run_problem(spec, grid, k, t_final, &[])).collect();
    let mut rows = Vec::new();
    let mut failure = None;
    let mut previous: Option<&Run> = None;
    for (i, run) in runs.iter().enumerate() {
        let run = match run {
            Ok(r) => r,
            Err(e) => {
                failure = Some(e.clone());
                break;
            }
        };
        let e_k = previous.map(|p| self_difference_error(&run.final_state, &p.final_state).unwrap_or(f64::NAN));
        let order = match (i >= 2, e_k, rows.last().and_then(|r: &TimeRow| r.e_k)) {
            (true, Some(fine), Some(coarse)) => observed_order(coarse, fine).ok(),
            _ => None,
        };
        rows.push(TimeRow {
            k: ks[i],
            h: grid.h(),
            n: grid.n_points(),
            t_final,
            e_k,
            order,
            timing: Some(run.timing),
        });
        previous = Some(run);
    }
    Partial { rows, failure }
}

/// Literature GRE values of three other schemes on the traveling wave with
/// `N = 200`, `k = 0.01`, at `t = 6, 8, 10, 12`.
pub const LITERATURE_TIMES: [f64; 4] = [6.0, 8.0, 10.0, 12.0];
pub const LITERATURE_SBSC: [f64; 4] = [1.625e-7, 1.940e-7, 2.229e-7, 5.314e-7];
pub const LITERATURE_QBSC: [f64; 4] = [6.509e-6, 7.132e-6, 7.310e-6, 8.776e-6];
pub const LITERATURE_LBM: [f64; 4] = [7.881e-6, 9.532e-6, 1.089e-5, 1.179e-5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiteratureGre {
    pub sbsc: f64,
    pub qbsc: f64,
    pub lbm: f64,
}

pub fn literature_gre(t: f64) -> Option<LiteratureGre> {
    LITERATURE_TIMES.iter().position(|&s| s == t).map(|i| LiteratureGre {
        sbsc: LITERATURE_SBSC[i],
        qbsc: LITERATURE_QBSC[i],
        lbm: LITERATURE_LBM[i],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreRow {
    pub t: f64,
    pub h: f64,
    pub k: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub gre: f64,
    pub max_norm: f64,
    pub literature: Option<LiteratureGre>,
}

/// GRE and max-norm error at each of `times` along one run.
pub fn gre_table(spec: &ProblemSpec<f64>, grid: Grid<f64>, k: f64, t_final: f64, times: &[f64]) -> Result<(Vec<GreRow>, Timing)> {
    let run = run_problem(spec, grid, k, t_final, times)?;
    let mut rows = Vec::new();
    for &t in times {
        let (_, u) = run
            .snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.max(1.0))
            .expect("every requested time is captured");
        let exact = spec
            .exact_vector(&grid, t)
            .ok_or_else(|| Error::InvalidParameter(format!("problem {} has no exact solution", spec.id)))?;
        rows.push(GreRow {
            t,
            h: grid.h(),
            k,
            n: grid.n_points(),
            t_final,
            gre: gre(&exact, u)?,
            max_norm: max_norm_error(&exact, u)?,
            literature: literature_gre(t),
        });
    }
    Ok((rows, run.timing))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRow {
    pub t: f64,
    pub h: f64,
    pub k: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub max_abs: f64,
    pub mean: f64,
    pub max_norm: Option<f64>,
    pub gre: Option<f64>,
}

pub fn summarize(spec: &ProblemSpec<f64>, run: &Run, t_final: f64) -> Result<Vec<SolveRow>> {
    run.snapshots
        .iter()
        .map(|(t, u)| {
            let exact = spec.exact_vector(&run.grid, *t);
            Ok(SolveRow {
                t: *t,
                h: run.grid.h(),
                k: run.k,
                n: run.grid.n_points(),
                t_final,
                max_abs: max_abs(u),
                mean: u.iter().sum::<f64>() / u.len() as f64,
                max_norm: exact.as_ref().map(|e| max_norm_error(e, u)).transpose()?,
                gre: exact.as_ref().map(|e| gre(e, u)).transpose()?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub label: String,
    pub y_re: f64,
    pub y_im: f64,
    pub window: Window,
    pub nx: usize,
    pub ny: usize,
    pub area: f64,
    pub inside_samples: usize,
    pub empty: bool,
    pub curves: usize,
    pub boundary_points: usize,
}

pub fn stability_fields(ys: &[(String, Complex64, Window)], nx: usize, ny: usize) -> Result<Vec<(StabilityRow, StabilityField)>> {
    ys.iter()
        .map(|(label, y, window)| {
            let field = stability_scan(*y, *window, nx, ny)?;
            let row = StabilityRow {
                label: label.clone(),
                y_re: y.re,
                y_im: y.im,
                window: *window,
                nx,
                ny,
                area: field.area(),
                inside_samples: field.inside_count(),
                empty: field.is_empty(),
                curves: field.boundary.len(),
                boundary_points: field.boundary.iter().map(Vec::len).sum(),
            };
            Ok((row, field))
        })
        .collect()
}

fn split<R>(outcomes: Vec<Result<R>>) -> Partial<R> {
    let mut rows = Vec::new();
    let mut failure = None;
    for o in outcomes {
        match o {
            Ok(r) if failure.is_none() => rows.push(r),
            Ok(_) => {}
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    }
    Partial { rows, failure }
}
