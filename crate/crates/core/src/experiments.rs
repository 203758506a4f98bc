//! Sweeps behind the `lradi` subcommands and their CSV rows.
//!
//! Rows are plain serde structs; `None` fields become empty cells, which is
//! how non-converged runs show up in the tables.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::adi::{ConvergenceTrace, LyapunovProblem, Timings};
use crate::error::{Error, Result};
use crate::lowrank::LowRankFactor;
use crate::newton::{newton_solve_from, ForcingMode, NewtonConfig, NewtonOutcome, RiccatiProblem};
use crate::oracle::{generalized_eigenvalues, rho_hat_from_spectrum};
use crate::pencil::Pencil;
use crate::rosenbrock::{integrate, DreConfig, DreOutcome};
use crate::shifts::{penzl_select, sort_conjugate_adjacent, ShiftOrder, ShiftStrategy};

/// Bumped whenever a column is added, removed or renamed.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Largest order accepted by the dense shift analysis.
pub const SHIFT_ANALYSIS_MAX_ORDER: usize = 1024;

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidArgument(format!("csv: {other:?}")),
    }
}

/// Controllability equation `A X E^T + E X A^T + B B^T = 0`.
pub fn controllability_problem(p: &RiccatiProblem) -> Result<LyapunovProblem> {
    let pencil = Pencil::new(p.a().clone(), p.e().clone())?;
    LyapunovProblem::with_identity_weight(pencil, p.b().clone())
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapRow {
    /// Iteration index, or `summary` on the last row.
    pub k: String,
    pub lyap_residual_norm: f64,
    pub residual_columns: usize,
    pub cumulative_solves: usize,
    pub t_compress: f64,
    pub t_shifts: f64,
    pub t_solve: f64,
    pub t_total: f64,
}

/// One row per trace entry plus a summary row with the final state.
pub fn lyap_rows(trace: &ConvergenceTrace) -> Vec<LyapRow> {
    let row = |k: String, e: &crate::adi::TraceEntry| LyapRow {
        k,
        lyap_residual_norm: e.residual_norm,
        residual_columns: e.residual_columns,
        cumulative_solves: e.cumulative_solves,
        t_compress: e.timings.compress,
        t_shifts: e.timings.shifts,
        t_solve: e.timings.solve,
        t_total: e.timings.total,
    };
    let mut rows: Vec<LyapRow> = trace.entries.iter().map(|e| row(e.k.to_string(), e)).collect();
    if let Some(last) = trace.entries.last() {
        rows.push(row("summary".into(), last));
    }
    rows
}

#[derive(Debug, Clone)]
pub struct NewtonCell {
    pub mode: ForcingMode,
    pub line_search: bool,
    pub shifts: ShiftStrategy,
}

impl NewtonCell {
    pub fn label(&self) -> String {
        format!("{}{}", self.mode.label(), if self.line_search { "+ls" } else { "" })
    }
}

/// Every combination of the given modes, line-search switches and strategies.
pub fn newton_grid(modes: &[ForcingMode], line_search: &[bool], shifts: &[ShiftStrategy]) -> Vec<NewtonCell> {
    let mut cells = Vec::new();
    for &mode in modes {
        for &ls in line_search {
            for s in shifts {
                cells.push(NewtonCell { mode, line_search: ls, shifts: s.clone() });
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonRow {
    pub mode: String,
    pub shifts: String,
    pub adi_steps_old: Option<usize>,
    pub adi_steps_new: Option<usize>,
    pub newton_steps_old: Option<usize>,
    pub newton_steps_new: Option<usize>,
    pub rank_old: Option<usize>,
    pub rank_new: Option<usize>,
    pub t_compress_old: f64,
    pub t_compress_new: f64,
    pub t_shifts_old: f64,
    pub t_shifts_new: f64,
    pub t_solve_old: f64,
    pub t_solve_new: f64,
    pub t_total_old: f64,
    pub t_total_new: f64,
    /// `t_total_old / t_total_new`, empty unless both converged.
    pub speedup: Option<f64>,
    /// `||X_old - X_new||_F / ||X_new||_F`, empty unless both converged.
    pub solution_rel_diff: Option<f64>,
    pub status: String,
}

fn status_of(old: Option<&str>, new: Option<&str>) -> String {
    match (old, new) {
        (None, None) => "ok".into(),
        (Some(a), None) => format!("old:{a}"),
        (None, Some(b)) => format!("new:{b}"),
        (Some(a), Some(b)) => format!("old:{a};new:{b}"),
    }
}

fn factored_rel_diff(a: &LowRankFactor, b: &LowRankFactor) -> Option<f64> {
    let d = a.add(b, -1.0).ok()?.frobenius_norm();
    let nb = b.frobenius_norm();
    Some(if nb > 0.0 { d / nb } else { d })
}

type Run<T> = std::result::Result<T, String>;

/// Which inner-solve initializations a sweep runs: `old` starts every inner
/// solve at zero, `new` at the previous outer iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Columns {
    pub old: bool,
    pub new: bool,
}

impl Columns {
    pub const BOTH: Columns = Columns { old: true, new: true };
}

fn skipped<T>() -> Run<T> {
    Err("skipped".into())
}

fn run_newton(p: &RiccatiProblem, cfg: &NewtonConfig, start: &LowRankFactor) -> Run<NewtonOutcome> {
    match newton_solve_from(p, cfg, start.clone()) {
        Ok(out) if out.converged => Ok(out),
        Ok(_) => Err("no-conv".into()),
        Err(e) => Err(format!("error({e})")),
    }
}

fn newton_row(cell: &NewtonCell, old: &Run<NewtonOutcome>, new: &Run<NewtonOutcome>, timings: [Timings; 2]) -> NewtonRow {
    let steps = |r: &Run<NewtonOutcome>| r.as_ref().ok().map(|o| o.trace.total_adi_iterations());
    let newton = |r: &Run<NewtonOutcome>| r.as_ref().ok().map(|o| o.trace.newton_iterations());
    let rank = |r: &Run<NewtonOutcome>| r.as_ref().ok().map(|o| o.solution.rank());
    let both = match (old, new) {
        (Ok(a), Ok(b)) => Some((a, b)),
        _ => None,
    };
    let [to, tn] = timings;
    NewtonRow {
        mode: cell.label(),
        shifts: cell.shifts.to_string(),
        adi_steps_old: steps(old),
        adi_steps_new: steps(new),
        newton_steps_old: newton(old),
        newton_steps_new: newton(new),
        rank_old: rank(old),
        rank_new: rank(new),
        t_compress_old: to.compress,
        t_compress_new: tn.compress,
        t_shifts_old: to.shifts,
        t_shifts_new: tn.shifts,
        t_solve_old: to.solve,
        t_solve_new: tn.solve,
        t_total_old: to.total,
        t_total_new: tn.total,
        speedup: both.map(|_| to.total / tn.total.max(f64::MIN_POSITIVE)),
        solution_rel_diff: both.and_then(|(a, b)| factored_rel_diff(&a.solution, &b.solution)),
        status: status_of(old.as_ref().err().map(String::as_str), new.as_ref().err().map(String::as_str)),
    }
}

fn run_timings<T>(r: &Run<T>, f: impl Fn(&T) -> Timings) -> Timings {
    r.as_ref().map(f).unwrap_or_default()
}

/// Runs each cell with cold and warm inner solves. Cells run on the current
/// rayon pool; row order follows `cells`.
pub fn newton_sweep(
    p: &RiccatiProblem,
    base: &NewtonConfig,
    start: &LowRankFactor,
    cells: &[NewtonCell],
    columns: Columns,
) -> Vec<NewtonRow> {
    cells
        .par_iter()
        .map(|cell| {
            let cfg = |warm_start| NewtonConfig {
                mode: cell.mode,
                line_search: cell.line_search,
                shifts: cell.shifts.clone(),
                warm_start,
                ..base.clone()
            };
            let old = if columns.old { run_newton(p, &cfg(false), start) } else { skipped() };
            let new = if columns.new { run_newton(p, &cfg(true), start) } else { skipped() };
            let t = [run_timings(&old, |o| o.trace.timings()), run_timings(&new, |o| o.trace.timings())];
            newton_row(cell, &old, &new, t)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DreCell {
    pub nsteps: usize,
    pub shifts: ShiftStrategy,
}

#[derive(Debug, Clone, Serialize)]
pub struct DreRow {
    pub nsteps: usize,
    pub shifts: String,
    pub adi_steps_old: Option<usize>,
    pub adi_steps_new: Option<usize>,
    pub rank_old: Option<usize>,
    pub rank_new: Option<usize>,
    pub t_compress_old: f64,
    pub t_compress_new: f64,
    pub t_shifts_old: f64,
    pub t_shifts_new: f64,
    pub t_solve_old: f64,
    pub t_solve_new: f64,
    pub t_total_old: f64,
    pub t_total_new: f64,
    pub speedup: Option<f64>,
    /// Largest relative distance between the two trajectories.
    pub trajectory_rel_diff: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct DreStepRow {
    pub step: usize,
    pub t: f64,
    pub adi_iterations: usize,
    pub adi_converged: bool,
    pub residual_columns: usize,
    pub rank: usize,
    pub t_total: f64,
}

pub fn dre_step_rows(out: &DreOutcome) -> Vec<DreStepRow> {
    out.trace
        .steps
        .iter()
        .map(|s| DreStepRow {
            step: s.index + 1,
            t: s.t,
            adi_iterations: s.adi_iterations,
            adi_converged: s.adi_converged,
            residual_columns: s.residual_columns,
            rank: s.rank,
            t_total: s.timings.total,
        })
        .collect()
}

/// Summary row plus the per-step rows of the cold and warm runs.
pub struct DreCellResult {
    pub cell: DreCell,
    pub row: DreRow,
    pub old_steps: Vec<DreStepRow>,
    pub new_steps: Vec<DreStepRow>,
}

fn run_dre(p: &RiccatiProblem, cfg: &DreConfig) -> (Run<DreOutcome>, Vec<DreStepRow>) {
    match integrate(p, cfg) {
        Ok(out) => {
            let steps = dre_step_rows(&out);
            if out.completed {
                (Ok(out), steps)
            } else {
                (Err(format!("no-conv@{}", out.trace.steps.len())), steps)
            }
        }
        Err(e) => (Err(format!("error({e})")), Vec::new()),
    }
}

pub fn dre_sweep(p: &RiccatiProblem, base: &DreConfig, cells: &[DreCell], columns: Columns) -> Vec<DreCellResult> {
    cells
        .par_iter()
        .map(|cell| {
            let cfg = |warm_start| DreConfig { nsteps: cell.nsteps, shifts: cell.shifts.clone(), warm_start, ..base.clone() };
            let (old, old_steps) = if columns.old { run_dre(p, &cfg(false)) } else { (skipped(), Vec::new()) };
            let (new, new_steps) = if columns.new { run_dre(p, &cfg(true)) } else { (skipped(), Vec::new()) };
            let total = |s: &[DreStepRow]| s.iter().map(|r| r.adi_iterations).sum::<usize>();
            let t_old = run_timings(&old, |o| o.trace.timings());
            let t_new = run_timings(&new, |o| o.trace.timings());
            let both = match (&old, &new) {
                (Ok(a), Ok(b)) => Some((a, b)),
                _ => None,
            };
            let rank = |r: &Run<DreOutcome>| r.as_ref().ok().map(|o| o.terminal().rank());
            let row = DreRow {
                nsteps: cell.nsteps,
                shifts: cell.shifts.to_string(),
                adi_steps_old: old.is_ok().then(|| total(&old_steps)),
                adi_steps_new: new.is_ok().then(|| total(&new_steps)),
                rank_old: rank(&old),
                rank_new: rank(&new),
                t_compress_old: t_old.compress,
                t_compress_new: t_new.compress,
                t_shifts_old: t_old.shifts,
                t_shifts_new: t_new.shifts,
                t_solve_old: t_old.solve,
                t_solve_new: t_new.solve,
                t_total_old: t_old.total,
                t_total_new: t_new.total,
                speedup: both.map(|_| t_old.total / t_new.total.max(f64::MIN_POSITIVE)),
                trajectory_rel_diff: both.and_then(|(a, b)| {
                    a.trajectory
                        .iter()
                        .zip(&b.trajectory)
                        .map(|(x, y)| factored_rel_diff(x, y))
                        .try_fold(0.0f64, |m, d| d.map(|d| m.max(d)))
                }),
                status: status_of(old.as_ref().err().map(String::as_str), new.as_ref().err().map(String::as_str)),
            };
            DreCellResult { cell: cell.clone(), row, old_steps, new_steps }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftCurveRow {
    pub ordering: String,
    pub k: usize,
    pub shift_re: f64,
    pub shift_im: f64,
    pub radius: f64,
    pub rho_hat: f64,
    pub penzl: f64,
}

/// Cayley radii and their running products for the full dense spectrum of
/// `(A, E)` taken as shifts in heuristic, decreasing and increasing order.
pub fn shift_analysis(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<ShiftCurveRow>> {
    if a.nrows() > SHIFT_ANALYSIS_MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "shift analysis is dense; order {} exceeds {SHIFT_ANALYSIS_MAX_ORDER}",
            a.nrows()
        )));
    }
    let spectrum = generalized_eigenvalues(a, e)?;
    let heur = penzl_select(&spectrum, spectrum.len())?.values().to_vec();
    let orders: [(&str, Vec<Complex64>); 3] = [
        ("heur", heur.clone()),
        ("decr", sort_conjugate_adjacent(&heur, ShiftOrder::Decreasing)?),
        ("incr", sort_conjugate_adjacent(&heur, ShiftOrder::Increasing)?),
    ];
    let mut rows = Vec::new();
    for (label, shifts) in orders {
        let report = rho_hat_from_spectrum(&spectrum, &shifts)?;
        for k in 0..shifts.len() {
            rows.push(ShiftCurveRow {
                ordering: label.into(),
                k,
                shift_re: shifts[k].re,
                shift_im: shifts[k].im,
                radius: report.radii[k],
                rho_hat: report.rho_hat[k],
                penzl: report.penzl[k],
            });
        }
    }
    Ok(rows)
}
