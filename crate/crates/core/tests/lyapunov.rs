mod common;

use common::{heat_lyapunov, random_factor, rel_diff};
use lradi::adi::{self, solve_observed, AdiState, SolveStatus};
use lradi::oracle::dense_lyapunov;
use lradi::problems::MassKind;
use lradi::shifts::{heuristic_shifts, projection_shifts, DEFAULT_ARNOLDI_SEED};
use lradi::{AdiOptions, LowRankFactor, LyapunovProblem, ShiftOrder, ShiftStrategy, ShiftedSolver, Tolerance};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn mass(lumped: bool) -> MassKind {
    if lumped {
        MassKind::Lumped
    } else {
        MassKind::Identity
    }
}

#[test]
fn heuristic_solve_matches_dense_oracle() {
    let p = heat_lyapunov(100, 2, MassKind::Lumped, 1);
    let out = adi::solve(&p, &LowRankFactor::zeros(100), &ShiftStrategy::heuristic(10, 10, 10), &AdiOptions::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Converged);
    let rhs = p.g() * p.g().transpose();
    let oracle = dense_lyapunov(&p.pencil().dense_a(), &p.pencil().dense_e(), &rhs).unwrap();
    assert!(rel_diff(&out.solution.to_dense(), &oracle) < 1e-8);
    assert!(out.trace.final_residual() <= out.trace.threshold);
    assert_eq!(out.trace.arnoldi_seed, Some(DEFAULT_ARNOLDI_SEED));
}

#[test]
fn projection_shifts_converge_for_every_order() {
    let p = heat_lyapunov(50, 2, MassKind::Identity, 2);
    for order in [ShiftOrder::Heuristic, ShiftOrder::Decreasing, ShiftOrder::Increasing] {
        let out = adi::solve(&p, &LowRankFactor::zeros(50), &ShiftStrategy::projection(2, order), &AdiOptions::default().with_max_iters(300)).unwrap();
        assert!(out.converged(), "{order:?}");
        assert!(out.trace.shift_computations >= 2, "projection shifts regenerate");
    }
}

#[test]
fn iteration_cap_is_reported() {
    let p = heat_lyapunov(50, 1, MassKind::Identity, 1);
    let out = adi::solve(&p, &LowRankFactor::zeros(50), &ShiftStrategy::heuristic(10, 10, 10), &AdiOptions::default().with_max_iters(2)).unwrap();
    assert_eq!(out.status, SolveStatus::MaxIterations);
    assert_eq!(out.trace.iterations(), 2);
}

#[test]
fn every_strategy_emits_valid_sequences() {
    let p = heat_lyapunov(50, 2, MassKind::Lumped, 3);
    let mut solver = ShiftedSolver::new(p.pencil());
    let heur = heuristic_shifts(&mut solver, 10, 10, 10, 3).unwrap();
    let proj = projection_shifts(&mut solver, &[p.g()], 2, ShiftOrder::Heuristic).unwrap();
    for seq in [heur, proj] {
        assert!(seq.values().iter().all(|a| a.re < 0.0));
        assert!(seq.pair_adjacent());
    }
}

#[test]
fn solving_from_the_exact_solution_takes_no_iterations() {
    let p = heat_lyapunov(20, 1, MassKind::Lumped, 4);
    let rhs = p.g() * p.g().transpose();
    let exact = dense_lyapunov(&p.pencil().dense_a(), &p.pencil().dense_e(), &rhs).unwrap();
    let x0 = LowRankFactor::from_dense_symmetric(&exact).unwrap();
    let out = adi::solve(&p, &x0, &ShiftStrategy::heuristic(10, 10, 10), &AdiOptions::default()).unwrap();
    assert_eq!(out.trace.iterations(), 0);
    assert!(out.converged());
}

fn real_shift_problem(n: usize, g: usize, lumped: bool, seed: u64) -> (LyapunovProblem, Vec<Complex64>) {
    let p = heat_lyapunov(n, g, mass(lumped), seed);
    let mut solver = ShiftedSolver::new(p.pencil());
    let shifts = heuristic_shifts(&mut solver, 6, 10, 10, seed).unwrap().values().to_vec();
    (p, shifts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    // T is fixed for the whole solve, R keeps g + 2 z0 columns and every
    // increment block has that width.
    #[test]
    fn inner_factor_and_widths_are_invariant(seed in 0u64..500, z0 in 0usize..4, lumped: bool) {
        let (p, shifts) = real_shift_problem(20, 2, lumped, seed);
        let x0 = if z0 == 0 { LowRankFactor::zeros(20) } else { random_factor(20, z0, seed) };
        let opts = AdiOptions { compression: None, ..AdiOptions::default() };
        let mut state = AdiState::new(&p, &x0, &opts).unwrap();
        state.set_recent_capacity(100);
        let t0 = state.inner_factor().clone();
        let width = 2 + 2 * z0;
        prop_assert_eq!(state.residual_factor().ncols(), width);
        for &alpha in &shifts {
            state.step(alpha).unwrap();
            prop_assert_eq!(state.inner_factor(), &t0);
            prop_assert_eq!(state.residual_factor().ncols(), width);
        }
        prop_assert!(state.recent_increments().all(|v| v.ncols() == width));
    }

    // After a real step the residual factor equals (A - alpha E) V.
    #[test]
    fn efficient_residual_update(seed in 0u64..500, lumped: bool, alpha in -500.0f64..-1.0) {
        let p = heat_lyapunov(20, 2, mass(lumped), seed);
        let x0 = random_factor(20, 2, seed);
        let mut state = AdiState::new(&p, &x0, &AdiOptions::default()).unwrap();
        let r = state.residual_factor().clone();
        let v = state.solver_mut().solve_real(alpha, &r).unwrap();
        state.step_real(alpha).unwrap();
        let expected = p.pencil().apply_a(&v) - p.pencil().apply_e(&v) * alpha;
        prop_assert!(rel_diff(state.residual_factor(), &expected) < 1e-10);
    }

    #[test]
    fn projection_shifts_ignore_column_scaling(seed in 0u64..500, scale in prop::collection::vec(1e-3f64..1e3, 2)) {
        let p = heat_lyapunov(50, 2, MassKind::Lumped, seed);
        let mut solver = ShiftedSolver::new(p.pencil());
        let scaled = p.g() * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(scale));
        let a = projection_shifts(&mut solver, &[p.g()], 2, ShiftOrder::Increasing).unwrap();
        let b = projection_shifts(&mut solver, &[&scaled], 2, ShiftOrder::Increasing).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).norm() <= 1e-10 * x.norm());
        }
    }

    // The observer sees the same factored residual norm the trace records.
    #[test]
    fn trace_records_observed_norms(seed in 0u64..500) {
        let p = heat_lyapunov(20, 1, MassKind::Identity, seed);
        let mut seen = Vec::new();
        let out = solve_observed(&p, &LowRankFactor::zeros(20), &ShiftStrategy::heuristic(8, 8, 8), &AdiOptions::default().with_tolerance(Tolerance::Relative(1e-8)), |s| seen.push(s.residual_norm())).unwrap();
        let recorded: Vec<f64> = out.trace.entries.iter().map(|e| e.residual_norm).collect();
        prop_assert_eq!(seen, recorded);
    }
}
