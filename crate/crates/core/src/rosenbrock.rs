//! Linearly implicit Euler for `E^T X' E = C^T C + A^T X E + E^T X A - E^T X B B^T X E`
//! with `E^T X(t_0) E = C^T C`.
//!
//! Every step solves one Lyapunov equation for `X_{l+1}` with the coefficient
//! `A - E / (2 tau) - B B^T X_l E` (transposed), right-hand side
//! `G = [C^T, E^T Z_l]` and `S = diag(I, Y_l Z_l^T B B^T Z_l Y_l + Y_l / tau)`.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::adi::{self, AdiOptions, LyapunovProblem, Timings};
use crate::error::{dim_err, Error, Result};
use crate::lowrank::LowRankFactor;
use crate::newton::RiccatiProblem;
use crate::pencil::{Pencil, ShiftedSolver};
use crate::shifts::ShiftStrategy;

#[derive(Debug, Clone, PartialEq)]
pub struct DreConfig {
    pub t0: f64,
    pub tf: f64,
    pub nsteps: usize,
    pub warm_start: bool,
    /// Compress `G S G^T` before each inner solve.
    pub compress_rhs: bool,
    pub adi: AdiOptions,
    pub shifts: ShiftStrategy,
}

impl Default for DreConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            tf: 1.0,
            nsteps: 10,
            warm_start: true,
            compress_rhs: true,
            adi: AdiOptions::default().with_max_iters(300).with_initial_compression(true),
            shifts: ShiftStrategy::heuristic(10, 10, 10),
        }
    }
}

impl DreConfig {
    pub fn step_size(&self) -> f64 {
        (self.tf - self.t0) / self.nsteps as f64
    }

    fn validate(&self) -> Result<()> {
        if self.nsteps == 0 || !(self.step_size() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time grid [{}, {}] with {} steps is empty",
                self.t0, self.tf, self.nsteps
            )));
        }
        Ok(())
    }
}

/// Pencil `(A^T - E^T / (2 tau), E^T)` shared by all steps of one integration.
pub fn shifted_base_pencil(p: &RiccatiProblem, tau: f64) -> Result<Pencil> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    let at = p.a().transpose();
    let et = p.e().transpose();
    let k = at.linear_combination(1.0, &et, -0.5 / tau)?;
    Pencil::new(k, et)
}

fn step_problem_on(p: &RiccatiProblem, base: &Pencil, x: &LowRankFactor, tau: f64, compress_rhs: bool) -> Result<LyapunovProblem> {
    if x.nrows() != p.n() {
        return Err(dim_err("iterate does not match the problem order"));
    }
    let (n, q, z) = (p.n(), p.outputs(), x.rank());
    let mut g = DMatrix::zeros(n, q + z);
    g.columns_mut(0, q).copy_from(&p.c().transpose());
    let mut s = DMatrix::zeros(q + z, q + z);
    s.view_mut((0, 0), (q, q)).fill_with_identity();
    let pencil = if z == 0 {
        base.clone()
    } else {
        g.columns_mut(q, z).copy_from(&base.apply_e(x.z()));
        let bzy = p.b().transpose() * x.z() * x.y();
        let block = bzy.transpose() * &bzy + x.y() / tau;
        s.view_mut((q, q), (z, z)).copy_from(&((&block + block.transpose()) * 0.5));
        base.clone().with_update(-p.feedback_term(x), p.b().clone())?
    };
    if compress_rhs {
        let (g, s) = LowRankFactor::new(g, s)?.compress().into_parts();
        LyapunovProblem::new(pencil, g, s)
    } else {
        LyapunovProblem::new(pencil, g, s)
    }
}

/// Lyapunov equation of one implicit Euler step from `X_l` with step `tau`.
pub fn rosenbrock_step_problem(p: &RiccatiProblem, x: &LowRankFactor, tau: f64, compress_rhs: bool) -> Result<LyapunovProblem> {
    let base = shifted_base_pencil(p, tau)?;
    step_problem_on(p, &base, x, tau, compress_rhs)
}

/// Factored initial value `Z_0 = E^{-T} C^T`, `Y_0 = I`.
pub fn initial_value(p: &RiccatiProblem) -> Result<LowRankFactor> {
    let mut solver = ShiftedSolver::new(p.transposed_pencil());
    let z = solver.solve_mass(&p.c().transpose())?;
    let q = p.outputs();
    LowRankFactor::new(z, DMatrix::identity(q, q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DreStep {
    pub index: usize,
    pub t: f64,
    pub adi_iterations: usize,
    pub adi_converged: bool,
    pub lyapunov_initial_residual: f64,
    pub lyapunov_final_residual: f64,
    pub residual_columns: usize,
    pub rank: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DreTrace {
    pub steps: Vec<DreStep>,
}

impl DreTrace {
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
}

#[derive(Debug, Clone)]
pub struct DreOutcome {
    /// `X_0, X_1, ...`; shorter than `nsteps + 1` when a step failed.
    pub trajectory: Vec<LowRankFactor>,
    pub trace: DreTrace,
    pub completed: bool,
}

impl DreOutcome {
    pub fn terminal(&self) -> &LowRankFactor {
        self.trajectory.last().expect("trajectory holds the initial value")
    }
}

/// Integrates on the uniform grid of `cfg`. Stops at the first inner solve
/// that misses its tolerance.
pub fn integrate(p: &RiccatiProblem, cfg: &DreConfig) -> Result<DreOutcome> {
    cfg.validate()?;
    let tau = cfg.step_size();
    let base = shifted_base_pencil(p, tau)?;
    let mut x = initial_value(p)?;
    let mut trajectory = vec![x.clone()];
    let mut trace = DreTrace::default();
    for index in 0..cfg.nsteps {
        let clock = Instant::now();
        let lp = step_problem_on(p, &base, &x, tau, cfg.compress_rhs)?;
        let rhs_time = clock.elapsed().as_secs_f64();
        let x0 = if cfg.warm_start { x.clone() } else { LowRankFactor::zeros(p.n()) };
        let out = adi::solve(&lp, &x0, &cfg.shifts, &cfg.adi)?;
        let mut timings = out.trace.timings();
        timings.compress += rhs_time;
        timings.total = clock.elapsed().as_secs_f64();
        trace.steps.push(DreStep {
            index,
            t: cfg.t0 + (index + 1) as f64 * tau,
            adi_iterations: out.trace.iterations(),
            adi_converged: out.converged(),
            lyapunov_initial_residual: out.trace.initial_residual(),
            lyapunov_final_residual: out.trace.final_residual(),
            residual_columns: out.trace.entries.first().map_or(0, |e| e.residual_columns),
            rank: out.solution.rank(),
            timings,
        });
        if !out.converged() {
            return Ok(DreOutcome { trajectory, trace, completed: false });
        }
        x = out.solution;
        trajectory.push(x.clone());
    }
    Ok(DreOutcome { trajectory, trace, completed: true })
}

/// Exact solution of the scalar Riccati ODE `x' = c^2 + 2 a x - b^2 x^2`.
pub fn scalar_riccati_exact(a: f64, b: f64, c: f64, x0: f64, t: f64) -> f64 {
    // roots of b^2 x^2 - 2 a x - c^2
    let d = (a * a + b * b * c * c).sqrt();
    let (xp, xm) = ((a + d) / (b * b), (a - d) / (b * b));
    let k = (x0 - xp) / (x0 - xm);
    let q = k * (-2.0 * d * t).exp();
    (xp - q * xm) / (1.0 - q)
}
