//! Compare heuristic and projection shifts, and print Cayley radius products
//! for different orderings of the same shift set.

use lradi::adi;
use lradi::experiments::{controllability_problem, shift_analysis};
use lradi::problems::{generate_heat_fd, HeatSpec, MassKind};
use lradi::{AdiOptions, LowRankFactor, ShiftOrder, ShiftStrategy};

fn main() -> lradi::Result<()> {
    let g = generate_heat_fd(&HeatSpec::square(15).with_ports(2, 1).with_mass(MassKind::Lumped))?;
    let p = controllability_problem(&g.problem)?;
    let strategies = [
        ("heur:10,10,10", ShiftStrategy::heuristic(10, 10, 10)),
        ("proj:heur:2", ShiftStrategy::projection(2, ShiftOrder::Heuristic)),
        ("proj:decr:2", ShiftStrategy::projection(2, ShiftOrder::Decreasing)),
        ("proj:incr:2", ShiftStrategy::projection(2, ShiftOrder::Increasing)),
    ];
    for (name, s) in &strategies {
        let out = adi::solve(&p, &LowRankFactor::zeros(p.n()), s, &AdiOptions::default())?;
        println!("{name:<14} {:>4} iterations, {} shift computations", out.trace.iterations(), out.trace.shift_computations);
    }

    let small = generate_heat_fd(&HeatSpec::square(6))?.problem;
    let rows = shift_analysis(&small.a().to_dense(), &small.e().to_dense())?;
    for k in [0, 5, 17, 35] {
        let at: Vec<String> = rows.iter().filter(|r| r.k == k).map(|r| format!("{}={:.3e}", r.ordering, r.rho_hat)).collect();
        println!("k={k:>2}: {}", at.join("  "));
    }
    Ok(())
}
