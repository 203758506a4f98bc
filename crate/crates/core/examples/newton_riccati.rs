//! Newton-Kleinman on a heat problem, with and without warm-started inner
//! solves, for each forcing mode.

use lradi::newton::{newton_solve, ForcingMode, NewtonConfig};
use lradi::problems::{generate_heat_fd, HeatSpec};

fn main() -> lradi::Result<()> {
    let p = generate_heat_fd(&HeatSpec::square(16).with_ports(2, 2).with_beta(100.0))?.problem;
    println!("{:<10} {:>5} {:>7} {:>7} {:>10}", "mode", "warm", "newton", "adi", "residual");
    for mode in [ForcingMode::Classical, ForcingMode::Inexact, ForcingMode::Hybrid] {
        for warm_start in [false, true] {
            let cfg = NewtonConfig { mode, warm_start, line_search: true, ..NewtonConfig::default() };
            let out = newton_solve(&p, &cfg)?;
            println!(
                "{:<10} {:>5} {:>7} {:>7} {:>10.2e}",
                mode.label(),
                warm_start,
                out.trace.newton_iterations(),
                out.trace.total_adi_iterations(),
                out.trace.final_residual() / out.trace.ctc_norm,
            );
        }
    }
    Ok(())
}
