//! Implicit Euler for the differential Riccati equation; each step is a
//! Lyapunov solve that can start from the previous iterate.

use lradi::problems::{generate_heat_fd, HeatSpec};
use lradi::rosenbrock::{integrate, DreConfig};

fn main() -> lradi::Result<()> {
    let p = generate_heat_fd(&HeatSpec::square(12).with_ports(2, 2))?.problem;
    for warm_start in [false, true] {
        let cfg = DreConfig { tf: 0.5, nsteps: 50, warm_start, ..DreConfig::default() };
        let out = integrate(&p, &cfg)?;
        let ranks: Vec<usize> = out.trajectory.iter().step_by(10).map(|x| x.rank()).collect();
        println!(
            "warm={warm_start}: {} ADI iterations, completed {}, ranks every 10 steps {ranks:?}, ||X(tf)||_F {:.6e}",
            out.trace.total_adi_iterations(),
            out.completed,
            out.terminal().frobenius_norm()
        );
    }
    Ok(())
}
