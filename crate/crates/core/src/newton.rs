//! Newton-Kleinman for `C^T C + A^T X E + E^T X A - E^T X B B^T X E = 0`.
//!
//! Each Newton step solves a Lyapunov equation on the transposed closed-loop
//! pencil `(A^T - E^T X B B^T, E^T)` with the low-rank ADI, started either from
//! zero or from the current Newton iterate.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::adi::{self, AdiOptions, LyapunovProblem, SolveStatus, Timings, Tolerance};
use crate::error::{dim_err, Result};
use crate::lowrank::{factored_norm, LowRankFactor};
use crate::pencil::Pencil;
use crate::shifts::ShiftStrategy;
use crate::sparse::SparseMatrix;

/// Sparse `A`, `E` with dense input and output matrices `B` (n x m) and `C` (q x n).
#[derive(Debug, Clone)]
pub struct RiccatiProblem {
    a: SparseMatrix,
    e: SparseMatrix,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    // (A^T, E^T) with its fill-reducing ordering computed once
    transposed: Pencil,
}

impl RiccatiProblem {
    pub fn new(a: SparseMatrix, e: SparseMatrix, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if b.nrows() != n || c.ncols() != n {
            return Err(dim_err(format!(
                "B is {}x{} and C is {}x{}, expected n = {n} rows in B and columns in C",
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols()
            )));
        }
        let transposed = Pencil::new(a.transpose(), e.transpose())?;
        Ok(Self { a, e, b, c, transposed })
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn e(&self) -> &SparseMatrix {
        &self.e
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// The pencil `(A^T, E^T)`.
    pub fn transposed_pencil(&self) -> &Pencil {
        &self.transposed
    }

    /// `||C^T C||_F`.
    pub fn ctc_norm(&self) -> f64 {
        let q = self.c.nrows();
        factored_norm(&self.c.transpose(), &DMatrix::identity(q, q))
    }

    /// `E^T Z Y Z^T B`.
    pub fn feedback_term(&self, x: &LowRankFactor) -> DMatrix<f64> {
        if x.is_empty() {
            return DMatrix::zeros(self.n(), self.inputs());
        }
        let ez = self.transposed.apply_e(x.z());
        ez * (x.y() * (x.z().transpose() * &self.b))
    }

    /// Dense Riccati residual, for small checks.
    pub fn dense_residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        crate::oracle::riccati_residual_dense(&self.a.to_dense(), &self.e.to_dense(), &self.b, &self.c, x)
    }
}

/// Lyapunov equation of one Newton step at `X_l`: coefficient
/// `A^T - (E^T X_l B) B^T`, mass `E^T`, right-hand side `[C^T, E^T X_l B]` with `S = I`.
pub fn newton_step_problem(p: &RiccatiProblem, x: &LowRankFactor) -> Result<LyapunovProblem> {
    if x.nrows() != p.n() {
        return Err(dim_err("iterate does not match the problem order"));
    }
    let (n, m, q) = (p.n(), p.inputs(), p.outputs());
    let k = p.feedback_term(x);
    let mut g = DMatrix::zeros(n, q + m);
    g.columns_mut(0, q).copy_from(&p.c.transpose());
    g.columns_mut(q, m).copy_from(&k);
    let pencil = if x.is_empty() {
        p.transposed.clone()
    } else {
        p.transposed.clone().with_update(-k, p.b.clone())?
    };
    LyapunovProblem::with_identity_weight(pencil, g)
}

/// `||Ricc(X)||_F` from the factored form
/// `R = [C^T, A^T Z, E^T Z]`, `T = [[I, 0, 0], [0, 0, Y], [0, Y, -Y Z^T B B^T Z Y]]`.
pub fn riccati_residual_naive(p: &RiccatiProblem, x: &LowRankFactor) -> f64 {
    let (n, q) = (p.n(), p.outputs());
    let z = x.rank();
    if z == 0 {
        return p.ctc_norm();
    }
    let mut r = DMatrix::zeros(n, q + 2 * z);
    r.columns_mut(0, q).copy_from(&p.c.transpose());
    r.columns_mut(q, z).copy_from(&p.a.transpose().mul_dense(x.z()));
    r.columns_mut(q + z, z).copy_from(&p.transposed.apply_e(x.z()));
    let bzy = p.b.transpose() * x.z() * x.y();
    let mut t = DMatrix::zeros(q + 2 * z, q + 2 * z);
    t.view_mut((0, 0), (q, q)).fill_with_identity();
    t.view_mut((q, q + z), (z, z)).copy_from(x.y());
    t.view_mut((q + z, q), (z, z)).copy_from(x.y());
    t.view_mut((q + z, q + z), (z, z)).copy_from(&-(bzy.transpose() * &bzy));
    factored_norm(&r, &t)
}

/// Choice of the inner ADI tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ForcingMode {
    /// Relative tolerance `reltol_newton / 10`.
    Classical,
    /// Absolute tolerance `eta * ||Ricc(X_l)||`.
    Inexact,
    /// The larger of the two.
    Hybrid,
}

impl ForcingMode {
    pub fn label(self) -> &'static str {
        match self {
            ForcingMode::Classical => "classical",
            ForcingMode::Inexact => "inexact",
            ForcingMode::Hybrid => "hybrid",
        }
    }
}

impl std::str::FromStr for ForcingMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classical" => Ok(ForcingMode::Classical),
            "inexact" => Ok(ForcingMode::Inexact),
            "hybrid" => Ok(ForcingMode::Hybrid),
            _ => Err(crate::Error::InvalidArgument(format!("unknown Newton mode '{s}'"))),
        }
    }
}

/// Forcing factor `eta = min(0.1, 0.9 ||Ricc(X_l)|| / ||C^T C||)`.
pub fn forcing_eta(residual: f64, ctc_norm: f64) -> f64 {
    let normalized = if ctc_norm > 0.0 { residual / ctc_norm } else { 0.0 };
    (0.9 * normalized).min(0.1)
}

/// Inner ADI tolerance for one Newton step.
pub fn inner_tolerance(mode: ForcingMode, reltol_newton: f64, residual: f64, ctc_norm: f64, rhs_norm: f64) -> Tolerance {
    let classical = reltol_newton / 10.0;
    let inexact = forcing_eta(residual, ctc_norm) * residual;
    match mode {
        ForcingMode::Classical => Tolerance::Relative(classical),
        ForcingMode::Inexact => Tolerance::Absolute(inexact),
        ForcingMode::Hybrid => Tolerance::Absolute(inexact.max(classical * rhs_norm)),
    }
}

/// Sufficient-decrease constant of the backtracking line search.
pub const ARMIJO_C: f64 = 1e-4;
/// Number of halvings tried by the line search.
pub const MAX_BACKTRACKS: u32 = 10;
/// The line search runs when a full step does not reduce the residual below this factor.
pub const LINE_SEARCH_TRIGGER: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub mode: ForcingMode,
    pub line_search: bool,
    pub reltol: f64,
    pub max_newton: usize,
    pub warm_start: bool,
    pub adi: AdiOptions,
    pub shifts: ShiftStrategy,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            mode: ForcingMode::Classical,
            line_search: false,
            reltol: 1e-10,
            max_newton: 30,
            warm_start: true,
            adi: AdiOptions::default().with_max_iters(300).with_initial_compression(true),
            shifts: ShiftStrategy::heuristic(10, 10, 10),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep {
    pub index: usize,
    pub adi_iterations: usize,
    pub adi_converged: bool,
    pub adi_threshold: f64,
    pub lyapunov_initial_residual: f64,
    pub step_length: f64,
    pub riccati_residual: f64,
    pub rank: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NewtonTrace {
    pub ctc_norm: f64,
    pub initial_residual: f64,
    pub steps: Vec<NewtonStep>,
}

impl NewtonTrace {
    pub fn newton_iterations(&self) -> usize {
        self.steps.len()
    }

    pub fn total_adi_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.adi_iterations).sum()
    }

    pub fn timings(&self) -> Timings {
        let mut t = Timings::default();
        for s in &self.steps {
            t += s.timings;
        }
        t
    }

    pub fn final_residual(&self) -> f64 {
        self.steps.last().map_or(self.initial_residual, |s| s.riccati_residual)
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub solution: LowRankFactor,
    pub trace: NewtonTrace,
    pub converged: bool,
}

// X + lambda (Xhat - X), formed in factored form and compressed.
fn blend(x: &LowRankFactor, xhat: &LowRankFactor, lambda: f64) -> Result<LowRankFactor> {
    if lambda == 1.0 {
        return Ok(xhat.clone());
    }
    Ok(x.scaled(1.0 - lambda).add(&xhat.scaled(lambda), 1.0)?.compress())
}

/// Backtracking on the naive residual norm. Returns the accepted step length,
/// the iterate and its residual; falls back to the smallest residual seen.
fn line_search(
    p: &RiccatiProblem,
    x: &LowRankFactor,
    xhat: &LowRankFactor,
    current: f64,
    full: f64,
) -> Result<(f64, LowRankFactor, f64)> {
    let mut best = (1.0, xhat.clone(), full);
    if full <= (1.0 - ARMIJO_C) * current {
        return Ok(best);
    }
    for j in 1..=MAX_BACKTRACKS {
        let lambda = 0.5f64.powi(j as i32);
        let cand = blend(x, xhat, lambda)?;
        let r = riccati_residual_naive(p, &cand);
        if r < best.2 {
            best = (lambda, cand, r);
        }
        if r <= (1.0 - ARMIJO_C * lambda) * current {
            return Ok(best);
        }
    }
    Ok(best)
}

/// Newton-Kleinman from `X_0 = 0`.
pub fn newton_solve(p: &RiccatiProblem, cfg: &NewtonConfig) -> Result<NewtonOutcome> {
    newton_solve_from(p, cfg, LowRankFactor::zeros(p.n()))
}

/// Newton-Kleinman from a given initial iterate.
pub fn newton_solve_from(p: &RiccatiProblem, cfg: &NewtonConfig, start: LowRankFactor) -> Result<NewtonOutcome> {
    if !(cfg.reltol > 0.0) {
        return Err(crate::Error::InvalidArgument("Newton tolerance must be positive".into()));
    }
    let ctc = p.ctc_norm();
    let target = cfg.reltol * ctc;
    let mut x = start;
    let mut res = riccati_residual_naive(p, &x);
    let mut trace = NewtonTrace { ctc_norm: ctc, initial_residual: res, steps: Vec::new() };
    if res < target || ctc == 0.0 {
        return Ok(NewtonOutcome { solution: x, trace, converged: true });
    }
    for index in 0..cfg.max_newton {
        let clock = Instant::now();
        let lp = newton_step_problem(p, &x)?;
        let tol = inner_tolerance(cfg.mode, cfg.reltol, res, ctc, lp.rhs_norm());
        let opts = cfg.adi.clone().with_tolerance(tol);
        let x0 = if cfg.warm_start { x.clone() } else { LowRankFactor::zeros(p.n()) };
        let out = adi::solve(&lp, &x0, &cfg.shifts, &opts)?;
        let xhat = out.solution;
        let full = riccati_residual_naive(p, &xhat);
        let t_ls = Instant::now();
        let (step_length, next, next_res) = if cfg.line_search && full > LINE_SEARCH_TRIGGER * res {
            line_search(p, &x, &xhat, res, full)?
        } else {
            (1.0, xhat, full)
        };
        let mut timings = out.trace.timings();
        timings.compress += t_ls.elapsed().as_secs_f64();
        timings.total = clock.elapsed().as_secs_f64();
        x = next;
        res = next_res;
        trace.steps.push(NewtonStep {
            index,
            adi_iterations: out.trace.iterations(),
            adi_converged: out.status == SolveStatus::Converged,
            adi_threshold: out.trace.threshold,
            lyapunov_initial_residual: out.trace.initial_residual(),
            step_length,
            riccati_residual: res,
            rank: x.rank(),
            timings,
        });
        if res < target {
            return Ok(NewtonOutcome { solution: x, trace, converged: true });
        }
        if !res.is_finite() {
            break;
        }
    }
    Ok(NewtonOutcome { solution: x, trace, converged: false })
}
