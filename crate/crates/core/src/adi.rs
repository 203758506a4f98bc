//! Low-rank ADI for `A X E^T + E X A^T = -G S G^T` with a low-rank initial value.
//!
//! The residual of every iterate stays in the form `R_k T R_k^T` with a fixed
//! inner factor `T`, so a warm start `X_0 = Z_0 Y_0 Z_0^T` only widens the
//! residual factor to `[G, E Z_0, A Z_0]`. Conjugate shift pairs are processed
//! with one complex solve and two real increment blocks.

use std::collections::VecDeque;
use std::f64::consts::SQRT_2;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::lowrank::{factored_norm, Accumulator, CompressionPolicy, LowRankFactor};
use crate::pencil::{Pencil, ShiftedSolver};
use crate::shifts::{heuristic_shifts, projection_shifts, ShiftSequence, ShiftStrategy};

/// Lyapunov equation `A X E^T + E X A^T + G S G^T = 0` on a sparse pencil.
#[derive(Debug, Clone)]
pub struct LyapunovProblem {
    pencil: Pencil,
    g: DMatrix<f64>,
    s: DMatrix<f64>,
}

impl LyapunovProblem {
    pub fn new(pencil: Pencil, g: DMatrix<f64>, s: DMatrix<f64>) -> Result<Self> {
        if g.nrows() != pencil.n() || s.nrows() != g.ncols() || s.ncols() != g.ncols() {
            return Err(dim_err(format!(
                "right-hand side factors {}x{} and {}x{} do not fit order {}",
                g.nrows(),
                g.ncols(),
                s.nrows(),
                s.ncols(),
                pencil.n()
            )));
        }
        if (&s - s.transpose()).norm() > 1e-12 * s.norm() {
            return Err(Error::InvalidArgument("right-hand side inner factor is not symmetric".into()));
        }
        Ok(Self { pencil, g, s })
    }

    /// Right-hand side `G G^T`.
    pub fn with_identity_weight(pencil: Pencil, g: DMatrix<f64>) -> Result<Self> {
        let r = g.ncols();
        Self::new(pencil, g, DMatrix::identity(r, r))
    }

    pub fn pencil(&self) -> &Pencil {
        &self.pencil
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn n(&self) -> usize {
        self.pencil.n()
    }

    /// `||G S G^T||_F`.
    pub fn rhs_norm(&self) -> f64 {
        factored_norm(&self.g, &self.s)
    }

    /// Dense `A X E^T + E X A^T + G S G^T`; for tests and small problems.
    pub fn dense_residual(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let a = self.pencil.dense_a();
        let e = self.pencil.dense_e();
        let axe = &a * x * e.transpose();
        &axe + axe.transpose() + &self.g * &self.s * self.g.transpose()
    }
}

/// Initial residual factors `R_0 = [G, E Z_0, A Z_0]` and
/// `T = [[S, 0, 0], [0, 0, Y_0], [0, Y_0, 0]]`.
pub fn init_residual(problem: &LyapunovProblem, x0: &LowRankFactor) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = problem.n();
    if x0.nrows() != n {
        return Err(dim_err(format!("initial value has {} rows, problem has order {n}", x0.nrows())));
    }
    let g = problem.g.ncols();
    let z = x0.rank();
    if z == 0 {
        return Ok((problem.g.clone(), problem.s.clone()));
    }
    let p = problem.pencil();
    let mut r = DMatrix::zeros(n, g + 2 * z);
    r.columns_mut(0, g).copy_from(&problem.g);
    r.columns_mut(g, z).copy_from(&p.apply_e(x0.z()));
    r.columns_mut(g + z, z).copy_from(&p.apply_a(x0.z()));
    let mut t = DMatrix::zeros(g + 2 * z, g + 2 * z);
    t.view_mut((0, 0), (g, g)).copy_from(&problem.s);
    t.view_mut((g, g + z), (z, z)).copy_from(x0.y());
    t.view_mut((g + z, g), (z, z)).copy_from(x0.y());
    Ok((r, t))
}

/// Stopping rule on `||R_k T R_k^T||_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Relative to `||G S G^T||_F`.
    Relative(f64),
}

impl Tolerance {
    pub fn threshold(&self, rhs_norm: f64) -> f64 {
        match *self {
            Tolerance::Absolute(t) => t,
            Tolerance::Relative(t) => t * rhs_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiOptions {
    pub tolerance: Tolerance,
    pub max_iters: usize,
    /// Compression of the accumulated solution during the iteration.
    pub compression: Option<CompressionPolicy>,
    /// Compress `(R_0, T)` before iterating; useful for wide warm starts.
    pub compress_initial_residual: bool,
    /// Compress the assembled solution once at the end.
    pub compress_solution: bool,
}

impl Default for AdiOptions {
    fn default() -> Self {
        Self {
            tolerance: Tolerance::Relative(1e-10),
            max_iters: 100,
            compression: Some(CompressionPolicy::default()),
            compress_initial_residual: false,
            compress_solution: true,
        }
    }
}

impl AdiOptions {
    pub fn with_tolerance(mut self, tolerance: Tolerance) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_initial_compression(mut self, on: bool) -> Self {
        self.compress_initial_residual = on;
        self
    }
}

/// Wall-clock seconds spent in the phases of a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub compress: f64,
    pub shifts: f64,
    pub solve: f64,
    pub total: f64,
}

impl std::ops::AddAssign for Timings {
    fn add_assign(&mut self, o: Self) {
        self.compress += o.compress;
        self.shifts += o.shifts;
        self.solve += o.solve;
        self.total += o.total;
    }
}

/// Running state of the low-rank ADI.
pub struct AdiState<'p> {
    problem: &'p LyapunovProblem,
    solver: ShiftedSolver<'p>,
    residual: DMatrix<f64>,
    inner: DMatrix<f64>,
    solution: Accumulator,
    recent: VecDeque<DMatrix<f64>>,
    keep_recent: usize,
    k: usize,
    block_solves: usize,
    timings: Timings,
}

impl<'p> AdiState<'p> {
    pub fn new(problem: &'p LyapunovProblem, x0: &LowRankFactor, opts: &AdiOptions) -> Result<Self> {
        let start = Instant::now();
        let (mut residual, mut inner) = init_residual(problem, x0)?;
        if opts.compress_initial_residual && residual.ncols() > 0 {
            let c = LowRankFactor::new(residual, inner)?.compress();
            (residual, inner) = c.into_parts();
        }
        let timings = Timings { compress: start.elapsed().as_secs_f64(), ..Timings::default() };
        Ok(Self {
            problem,
            solver: ShiftedSolver::new(problem.pencil()),
            residual,
            inner,
            solution: Accumulator::new(x0.clone(), opts.compression),
            recent: VecDeque::new(),
            keep_recent: 2,
            k: 0,
            block_solves: 0,
            timings,
        })
    }

    /// Number of increment blocks retained for projection shifts.
    pub fn set_recent_capacity(&mut self, u: usize) {
        self.keep_recent = u.max(1);
        while self.recent.len() > self.keep_recent {
            self.recent.pop_front();
        }
    }

    pub fn problem(&self) -> &'p LyapunovProblem {
        self.problem
    }

    pub fn residual_factor(&self) -> &DMatrix<f64> {
        &self.residual
    }

    pub fn inner_factor(&self) -> &DMatrix<f64> {
        &self.inner
    }

    /// `||R_k T R_k^T||_F`.
    pub fn residual_norm(&self) -> f64 {
        factored_norm(&self.residual, &self.inner)
    }

    pub fn iterations(&self) -> usize {
        self.k
    }

    /// Shifted block solves performed so far (a double-step counts once).
    pub fn block_solves(&self) -> usize {
        self.block_solves
    }

    pub fn timings(&self) -> Timings {
        self.timings
    }

    /// The current iterate `X_k`.
    pub fn solution(&self) -> &LowRankFactor {
        self.solution.factor()
    }

    pub fn recent_increments(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        self.recent.iter()
    }

    pub fn solver_mut(&mut self) -> &mut ShiftedSolver<'p> {
        &mut self.solver
    }

    fn record_increment(&mut self, v: DMatrix<f64>, scale: f64) -> Result<()> {
        let t0 = Instant::now();
        self.solution.push(v.clone(), &self.inner * scale)?;
        self.timings.compress += t0.elapsed().as_secs_f64();
        self.recent.push_back(v);
        while self.recent.len() > self.keep_recent {
            self.recent.pop_front();
        }
        Ok(())
    }

    /// One step with a real shift `alpha < 0`.
    pub fn step_real(&mut self, alpha: f64) -> Result<()> {
        if !(alpha < 0.0) {
            return Err(Error::InvalidArgument(format!("shift {alpha} does not have a negative real part")));
        }
        let t0 = Instant::now();
        let v = self.solver.solve_real(alpha, &self.residual)?;
        let ev = self.problem.pencil().apply_e(&v);
        self.residual -= ev * (2.0 * alpha);
        self.timings.solve += t0.elapsed().as_secs_f64();
        self.block_solves += 1;
        self.record_increment(v, -2.0 * alpha)?;
        self.k += 1;
        Ok(())
    }

    /// Two steps with the pair `alpha, conj(alpha)` in real arithmetic.
    pub fn step_double(&mut self, alpha: Complex64) -> Result<()> {
        if alpha.im == 0.0 {
            return Err(Error::InvalidArgument("real shift passed to the double-step; use step_real".into()));
        }
        if !(alpha.re < 0.0) {
            return Err(Error::InvalidArgument(format!("shift {alpha} does not have a negative real part")));
        }
        let t0 = Instant::now();
        let rhs = self.residual.map(|v| Complex64::new(v, 0.0));
        let vhat = self.solver.solve_complex(alpha, &rhs)?;
        let delta = alpha.re / alpha.im;
        let re = vhat.map(|z| z.re);
        let im = vhat.map(|z| z.im);
        let first = (re + &im * delta) * SQRT_2;
        let second = im * (2.0 * delta * delta + 2.0).sqrt();
        let ev = self.problem.pencil().apply_e(&first);
        self.residual -= ev * (2.0 * SQRT_2 * alpha.re);
        self.timings.solve += t0.elapsed().as_secs_f64();
        self.block_solves += 1;
        let scale = -2.0 * alpha.re;
        self.record_increment(first, scale)?;
        self.record_increment(second, scale)?;
        self.k += 2;
        Ok(())
    }

    /// Dispatches on the shift being real or not.
    pub fn step(&mut self, alpha: Complex64) -> Result<()> {
        if alpha.im == 0.0 {
            self.step_real(alpha.re)
        } else {
            self.step_double(alpha)
        }
    }

    /// Current iterate, optionally compressed.
    pub fn into_solution(self, compress: bool) -> LowRankFactor {
        let f = self.solution.into_factor();
        if compress {
            f.compress()
        } else {
            f
        }
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub k: usize,
    pub residual_norm: f64,
    pub residual_columns: usize,
    pub solution_columns: usize,
    pub cumulative_solves: usize,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConvergenceTrace {
    pub rhs_norm: f64,
    pub threshold: f64,
    pub entries: Vec<TraceEntry>,
    pub shift_computations: usize,
    pub arnoldi_seed: Option<u64>,
}

impl ConvergenceTrace {
    /// Iterations performed; a double-step counts as two.
    pub fn iterations(&self) -> usize {
        self.entries.last().map_or(0, |e| e.k)
    }

    pub fn initial_residual(&self) -> f64 {
        self.entries.first().map_or(f64::NAN, |e| e.residual_norm)
    }

    pub fn final_residual(&self) -> f64 {
        self.entries.last().map_or(f64::NAN, |e| e.residual_norm)
    }

    pub fn timings(&self) -> Timings {
        self.entries.last().map_or_else(Timings::default, |e| e.timings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct AdiOutcome {
    pub solution: LowRankFactor,
    pub trace: ConvergenceTrace,
    pub status: SolveStatus,
    pub shifts_used: Vec<Complex64>,
}

impl AdiOutcome {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

// Shift source with cycling and regeneration.
struct ShiftFeed {
    strategy: ShiftStrategy,
    current: ShiftSequence,
    pos: usize,
}

impl ShiftFeed {
    fn start(strategy: &ShiftStrategy, state: &mut AdiState<'_>, trace: &mut ConvergenceTrace) -> Result<Self> {
        let current = match strategy {
            ShiftStrategy::Fixed(seq) => {
                if seq.is_empty() {
                    return Err(Error::InvalidArgument("empty shift sequence".into()));
                }
                seq.clone()
            }
            ShiftStrategy::Heuristic { l0, k_plus, k_minus, seed } => {
                trace.arnoldi_seed = Some(*seed);
                trace.shift_computations += 1;
                heuristic_shifts(state.solver_mut(), *l0, *k_plus, *k_minus, *seed)?
            }
            ShiftStrategy::Projection { u, order } => {
                state.set_recent_capacity(*u);
                trace.shift_computations += 1;
                let r0 = state.residual.clone();
                match projection_shifts(state.solver_mut(), &[&r0], *u, *order) {
                    Ok(s) => s,
                    Err(Error::NoStableShifts) => {
                        let fallback = ShiftStrategy::heuristic(10, 10, 10);
                        trace.arnoldi_seed = Some(crate::shifts::DEFAULT_ARNOLDI_SEED);
                        return Self::start(&fallback, state, trace).map(|mut f| {
                            f.strategy = strategy.clone();
                            f
                        });
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        Ok(Self { strategy: strategy.clone(), current, pos: 0 })
    }

    fn next(&mut self, state: &mut AdiState<'_>, trace: &mut ConvergenceTrace) -> Result<Complex64> {
        if self.pos >= self.current.len() {
            self.pos = 0;
            if let ShiftStrategy::Projection { u, order } = self.strategy {
                let blocks: Vec<DMatrix<f64>> = state.recent_increments().cloned().collect();
                let refs: Vec<&DMatrix<f64>> = blocks.iter().collect();
                trace.shift_computations += 1;
                match projection_shifts(state.solver_mut(), &refs, u, order) {
                    Ok(s) => self.current = s,
                    Err(Error::NoStableShifts) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        let alpha = self.current.values()[self.pos];
        self.pos += if alpha.im == 0.0 { 1 } else { 2 };
        Ok(alpha)
    }
}

/// Runs the ADI from `x0` until the residual tolerance or the iteration cap.
pub fn solve(
    problem: &LyapunovProblem,
    x0: &LowRankFactor,
    strategy: &ShiftStrategy,
    opts: &AdiOptions,
) -> Result<AdiOutcome> {
    solve_observed(problem, x0, strategy, opts, |_| {})
}

/// Like [`solve`], calling `observer` on the state before the first step and after every step.
pub fn solve_observed<F>(
    problem: &LyapunovProblem,
    x0: &LowRankFactor,
    strategy: &ShiftStrategy,
    opts: &AdiOptions,
    mut observer: F,
) -> Result<AdiOutcome>
where
    F: FnMut(&AdiState<'_>),
{
    let clock = Instant::now();
    let mut state = AdiState::new(problem, x0, opts)?;
    let rhs_norm = problem.rhs_norm();
    let threshold = opts.tolerance.threshold(rhs_norm);
    let mut trace = ConvergenceTrace { rhs_norm, threshold, ..ConvergenceTrace::default() };
    let mut shifts_used = Vec::new();

    let record = |state: &AdiState<'_>, trace: &mut ConvergenceTrace, norm: f64| {
        let mut timings = state.timings();
        timings.total = clock.elapsed().as_secs_f64();
        trace.entries.push(TraceEntry {
            k: state.iterations(),
            residual_norm: norm,
            residual_columns: state.residual_factor().ncols(),
            solution_columns: state.solution().rank(),
            cumulative_solves: state.block_solves(),
            timings,
        });
    };

    let mut norm = state.residual_norm();
    observer(&state);
    record(&state, &mut trace, norm);
    let mut feed: Option<ShiftFeed> = None;
    while norm > threshold && state.iterations() < opts.max_iters {
        if feed.is_none() {
            let t0 = Instant::now();
            feed = Some(ShiftFeed::start(strategy, &mut state, &mut trace)?);
            state.timings.shifts += t0.elapsed().as_secs_f64();
        }
        let f = feed.as_mut().unwrap();
        let t0 = Instant::now();
        let alpha = f.next(&mut state, &mut trace)?;
        state.timings.shifts += t0.elapsed().as_secs_f64();
        state.step(alpha)?;
        shifts_used.push(alpha);
        if alpha.im != 0.0 {
            shifts_used.push(alpha.conj());
        }
        norm = state.residual_norm();
        observer(&state);
        record(&state, &mut trace, norm);
    }
    let status = if norm <= threshold { SolveStatus::Converged } else { SolveStatus::MaxIterations };
    let t0 = Instant::now();
    let solution = state.into_solution(opts.compress_solution);
    if let Some(last) = trace.entries.last_mut() {
        last.timings.compress += t0.elapsed().as_secs_f64();
        last.timings.total = clock.elapsed().as_secs_f64();
        last.solution_columns = solution.rank();
    }
    Ok(AdiOutcome { solution, trace, status, shifts_used })
}

/// Reference path in complex arithmetic: one single step per shift, no
/// double-steps and no compression. Returns the assembled iterate and the
/// final residual norm.
pub fn complex_reference(
    problem: &LyapunovProblem,
    x0: &LowRankFactor,
    shifts: &[Complex64],
) -> Result<(LowRankFactor<Complex64>, f64)> {
    let (r0, t) = init_residual(problem, x0)?;
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex64::new(v, 0.0));
    let mut r = to_c(&r0);
    let t = to_c(&t);
    let mut x = x0.to_complex();
    let mut solver = ShiftedSolver::new(problem.pencil());
    for &alpha in shifts {
        let v = solver.solve_complex(alpha, &r)?;
        let scale = Complex64::new(-2.0 * alpha.re, 0.0);
        r -= problem.pencil().apply_e(&v) * (-scale);
        let inc = LowRankFactor::new(v, &t * scale)?;
        x = x.add(&inc, 1.0)?;
    }
    let norm = factored_norm(&r, &t);
    Ok((x, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;

    fn scalar_problem() -> LyapunovProblem {
        let p = Pencil::new(SparseMatrix::from_diagonal(&[-2.0]), SparseMatrix::identity(1)).unwrap();
        LyapunovProblem::with_identity_weight(p, DMatrix::from_element(1, 1, 1.0)).unwrap()
    }

    #[test]
    fn init_residual_scalar_example() {
        let prob = scalar_problem();
        let x0 = LowRankFactor::new(DMatrix::from_element(1, 1, 0.25), DMatrix::from_element(1, 1, 1.0)).unwrap();
        let (r, t) = init_residual(&prob, &x0).unwrap();
        assert_eq!(r.as_slice(), &[1.0, 0.25, -0.5]);
        assert_eq!(t, DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]));
        assert!((factored_norm(&r, &t) - 0.75).abs() < 1e-15);
        let (r, t) = init_residual(&prob, &LowRankFactor::zeros(1)).unwrap();
        assert_eq!((r.ncols(), t[(0, 0)]), (1, 1.0));
        assert!(init_residual(&prob, &LowRankFactor::zeros(2)).is_err());
    }

    #[test]
    fn scalar_step_hits_exact_solution() {
        let prob = scalar_problem();
        let mut st = AdiState::new(&prob, &LowRankFactor::zeros(1), &AdiOptions::default()).unwrap();
        st.step_real(-2.0).unwrap();
        assert_eq!(st.residual_factor()[(0, 0)], 0.0);
        assert!((st.solution().to_dense()[(0, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spectral_shifts_annihilate_residual() {
        let p = Pencil::new(SparseMatrix::from_diagonal(&[-1.0, -3.0]), SparseMatrix::identity(2)).unwrap();
        let prob = LyapunovProblem::with_identity_weight(p, DMatrix::from_element(2, 1, 1.0)).unwrap();
        let mut st = AdiState::new(&prob, &LowRankFactor::zeros(2), &AdiOptions::default()).unwrap();
        st.step_real(-1.0).unwrap();
        st.step_real(-3.0).unwrap();
        assert!(st.residual_norm() < 1e-12);
    }

    #[test]
    fn rotation_block_double_step() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (0, 1, 2.0), (1, 0, -2.0), (1, 1, -1.0)]).unwrap();
        let p = Pencil::new(a, SparseMatrix::identity(2)).unwrap();
        let prob = LyapunovProblem::with_identity_weight(p, DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let mut st = AdiState::new(&prob, &LowRankFactor::zeros(2), &AdiOptions::default()).unwrap();
        st.step_double(Complex64::new(-1.0, 2.0)).unwrap();
        assert!(st.residual_norm() <= 1e-12);
        assert_eq!(st.iterations(), 2);
        let x = st.solution().to_dense();
        assert!(prob.dense_residual(&x).norm() <= 1e-12);
        assert!(matches!(st.step_double(Complex64::new(-1.0, 0.0)), Err(Error::InvalidArgument(_))));
    }
}
