//! Generate a heat problem, write it as a Matrix Market bundle and load it back.

use lradi::io::{load_bundle, save_bundle};
use lradi::problems::{generate_heat_fd, HeatSpec};

fn main() -> lradi::Result<()> {
    let spec: HeatSpec = "heat:24x24,m=3,q=2,beta=10,mass=lumped,seed=11".parse()?;
    let generated = generate_heat_fd(&spec)?;
    let dir = std::env::temp_dir().join("lradi-bundle-example");
    let manifest = save_bundle(&dir, &generated)?;
    let (p, meta) = load_bundle(&manifest)?;
    println!("wrote {}", manifest.display());
    println!("n={} m={} q={} beta={} generator={:?}", meta.n, meta.m, meta.q, meta.beta, meta.generator);
    println!("identical A: {}", p.a() == generated.problem.a());
    Ok(())
}
