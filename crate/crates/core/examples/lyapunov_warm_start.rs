//! Solve a Lyapunov equation from zero, then restart from a perturbed
//! solution and compare iteration counts.

use lradi::adi;
use lradi::experiments::controllability_problem;
use lradi::problems::{generate_heat_fd, HeatSpec, MassKind};
use lradi::{AdiOptions, LowRankFactor, ShiftStrategy};

fn main() -> lradi::Result<()> {
    let spec = HeatSpec::square(20).with_ports(2, 1).with_mass(MassKind::Lumped);
    let p = controllability_problem(&generate_heat_fd(&spec)?.problem)?;
    let shifts = ShiftStrategy::heuristic(10, 10, 10);
    let opts = AdiOptions::default();

    let cold = adi::solve(&p, &LowRankFactor::zeros(p.n()), &shifts, &opts)?;
    println!("cold: {} iterations, rank {}", cold.trace.iterations(), cold.solution.rank());

    // a nearby start, e.g. the solution of a slightly different problem
    let near = cold.solution.scaled(0.99);
    let warm = adi::solve(&p, &near, &shifts, &opts)?;
    println!("warm: {} iterations, rank {}", warm.trace.iterations(), warm.solution.rank());

    let diff = warm.solution.add(&cold.solution, -1.0)?.frobenius_norm();
    println!("||X_warm - X_cold||_F / ||X_cold||_F = {:.2e}", diff / cold.solution.frobenius_norm());
    Ok(())
}
