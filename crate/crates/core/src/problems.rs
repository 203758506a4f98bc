//! Finite-difference heat equation test problems.
//!
//! The Laplacian on the unit interval or square with homogeneous Dirichlet
//! boundary, `h = 1 / (N + 1)` per direction, scaled by `diffusion / h^2`.
//! Inputs and outputs act on single grid nodes chosen from a seeded generator.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::RiccatiProblem;
use crate::sparse::SparseMatrix;

/// Largest order the generator accepts.
pub const MAX_ORDER: usize = 4096;
/// Largest number of inputs or outputs.
pub const MAX_PORTS: usize = 8;
/// Up to this order the pencil is checked for stability at generation time.
pub const STABILITY_CHECK_ORDER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grid {
    Line(usize),
    Square(usize, usize),
}

impl Grid {
    pub fn order(&self) -> usize {
        match *self {
            Grid::Line(n) => n,
            Grid::Square(nx, ny) => nx * ny,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MassKind {
    Identity,
    /// Diagonal `1 + 0.5 sin(pi x) sin(pi y)` at the nodes.
    Lumped,
}

/// Parameters of a generated heat problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatSpec {
    pub grid: Grid,
    pub inputs: usize,
    pub outputs: usize,
    pub beta: f64,
    pub mass: MassKind,
    pub diffusion: f64,
    pub seed: u64,
}

impl HeatSpec {
    /// Square grid `side x side` with identity mass, one input and one output.
    pub fn square(side: usize) -> Self {
        Self {
            grid: Grid::Square(side, side),
            inputs: 1,
            outputs: 1,
            beta: 1.0,
            mass: MassKind::Identity,
            diffusion: 1.0,
            seed: 1,
        }
    }

    pub fn line(n: usize) -> Self {
        Self { grid: Grid::Line(n), ..Self::square(1) }
    }

    pub fn with_ports(mut self, inputs: usize, outputs: usize) -> Self {
        self.inputs = inputs;
        self.outputs = outputs;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_mass(mut self, mass: MassKind) -> Self {
        self.mass = mass;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl fmt::Display for HeatSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.grid {
            Grid::Line(n) => write!(f, "heat:{n}")?,
            Grid::Square(nx, ny) => write!(f, "heat:{nx}x{ny}")?,
        }
        let mass = match self.mass {
            MassKind::Identity => "identity",
            MassKind::Lumped => "lumped",
        };
        write!(
            f,
            ",m={},q={},beta={},mass={mass},diffusion={},seed={}",
            self.inputs, self.outputs, self.beta, self.diffusion, self.seed
        )
    }
}

impl FromStr for HeatSpec {
    type Err = Error;

    /// `heat:<n>` or `heat:<nx>x<ny>` followed by optional
    /// `,m=..,q=..,beta=..,mass=identity|lumped,diffusion=..,seed=..`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse { context: format!("problem spec '{s}'"), message: m.to_string() };
        let rest = s.strip_prefix("heat:").ok_or_else(|| bad("expected 'heat:' prefix"))?;
        let mut parts = rest.split(',');
        let size = parts.next().unwrap_or_default();
        let grid = match size.split_once('x') {
            Some((a, b)) => Grid::Square(
                a.parse().map_err(|_| bad("bad grid size"))?,
                b.parse().map_err(|_| bad("bad grid size"))?,
            ),
            None => Grid::Line(size.parse().map_err(|_| bad("bad grid size"))?),
        };
        let mut spec = HeatSpec { grid, ..HeatSpec::square(1) };
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let num = || bad(&format!("bad value for {k}"));
            match k.trim() {
                "m" => spec.inputs = v.parse().map_err(|_| num())?,
                "q" => spec.outputs = v.parse().map_err(|_| num())?,
                "beta" => spec.beta = v.parse().map_err(|_| num())?,
                "diffusion" => spec.diffusion = v.parse().map_err(|_| num())?,
                "seed" => spec.seed = v.parse().map_err(|_| num())?,
                "mass" => {
                    spec.mass = match v {
                        "identity" => MassKind::Identity,
                        "lumped" => MassKind::Lumped,
                        _ => return Err(num()),
                    }
                }
                other => return Err(bad(&format!("unknown key '{other}'"))),
            }
        }
        Ok(spec)
    }
}

/// A generated Riccati problem with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub problem: RiccatiProblem,
    pub spec: HeatSpec,
    /// Scale of the Laplacian, `diffusion / h^2` per direction.
    pub laplacian_scale: Vec<f64>,
}

fn second_difference(n: usize, scale: f64) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        t.push((i, i, -2.0 * scale));
        if i + 1 < n {
            t.push((i, i + 1, scale));
            t.push((i + 1, i, scale));
        }
    }
    t
}

/// Builds `A`, `E`, `B = beta * [e_i ...]` and `C = [e_j ...]^T`.
pub fn generate_heat_fd(spec: &HeatSpec) -> Result<GeneratedProblem> {
    let n = spec.grid.order();
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!("problem order {n} outside 1..={MAX_ORDER}")));
    }
    for (name, k) in [("inputs", spec.inputs), ("outputs", spec.outputs)] {
        if k == 0 || k > MAX_PORTS || k > n {
            return Err(Error::InvalidArgument(format!("{name} = {k} outside 1..={}", MAX_PORTS.min(n))));
        }
    }
    if !(spec.diffusion > 0.0) {
        return Err(Error::InvalidArgument("diffusion must be positive".into()));
    }
    let (a, scales, coords): (SparseMatrix, Vec<f64>, Vec<(f64, f64)>) = match spec.grid {
        Grid::Line(nx) => {
            let h = 1.0 / (nx as f64 + 1.0);
            let s = spec.diffusion / (h * h);
            let a = SparseMatrix::from_triplets(nx, nx, &second_difference(nx, s))?;
            let coords = (0..nx).map(|i| ((i + 1) as f64 * h, 0.5)).collect();
            (a, vec![s], coords)
        }
        Grid::Square(nx, ny) => {
            let hx = 1.0 / (nx as f64 + 1.0);
            let hy = 1.0 / (ny as f64 + 1.0);
            let (sx, sy) = (spec.diffusion / (hx * hx), spec.diffusion / (hy * hy));
            // node (i, j) -> i + nx * j
            let mut t = Vec::with_capacity(5 * n);
            for j in 0..ny {
                for (r, c, v) in second_difference(nx, sx) {
                    t.push((r + nx * j, c + nx * j, v));
                }
            }
            for i in 0..nx {
                for (r, c, v) in second_difference(ny, sy) {
                    t.push((i + nx * r, i + nx * c, v));
                }
            }
            let a = SparseMatrix::from_triplets(n, n, &t)?;
            let mut coords = Vec::with_capacity(n);
            for j in 0..ny {
                for i in 0..nx {
                    coords.push(((i + 1) as f64 * hx, (j + 1) as f64 * hy));
                }
            }
            (a, vec![sx, sy], coords)
        }
    };
    let e = match spec.mass {
        MassKind::Identity => SparseMatrix::identity(n),
        MassKind::Lumped => {
            use std::f64::consts::PI;
            let d: Vec<f64> = coords.iter().map(|&(x, y)| 1.0 + 0.5 * (PI * x).sin() * (PI * y).sin()).collect();
            SparseMatrix::from_diagonal(&d)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let in_nodes = sample(&mut rng, n, spec.inputs).into_vec();
    let out_nodes = sample(&mut rng, n, spec.outputs).into_vec();
    let mut b = DMatrix::zeros(n, spec.inputs);
    for (k, &i) in in_nodes.iter().enumerate() {
        b[(i, k)] = spec.beta;
    }
    let mut c = DMatrix::zeros(spec.outputs, n);
    for (k, &j) in out_nodes.iter().enumerate() {
        c[(k, j)] = 1.0;
    }
    if n <= STABILITY_CHECK_ORDER {
        let spectrum = crate::oracle::generalized_eigenvalues(&a.to_dense(), &e.to_dense())?;
        if let Some(l) = spectrum.iter().find(|l| !(l.re < 0.0)) {
            return Err(Error::InvalidArgument(format!("generated pencil has eigenvalue {l} outside the left half-plane")));
        }
    }
    let problem = RiccatiProblem::new(a, e, b, c)?;
    Ok(GeneratedProblem { problem, spec: spec.clone(), laplacian_scale: scales })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_grid_is_scaled_second_difference() {
        let g = generate_heat_fd(&HeatSpec::line(10)).unwrap();
        let a = g.problem.a().to_dense();
        assert_eq!(a[(0, 0)], -2.0 * 121.0);
        assert_eq!(a[(0, 1)], 121.0);
        assert_eq!(a, a.transpose());
        assert!(a.symmetric_eigen().eigenvalues.max() < 0.0);
        assert_eq!(g.laplacian_scale, vec![121.0]);
    }

    #[test]
    fn single_port_indicators_and_beta_scaling() {
        let spec = HeatSpec::square(5);
        let g = generate_heat_fd(&spec).unwrap();
        assert_eq!(g.problem.b().iter().filter(|&&v| v != 0.0).count(), 1);
        assert_eq!(g.problem.c().iter().filter(|&&v| v != 0.0).count(), 1);
        let g1000 = generate_heat_fd(&spec.clone().with_beta(1000.0)).unwrap();
        assert_eq!(g1000.problem.b().norm(), 1000.0 * g.problem.b().norm());
    }

    #[test]
    fn generation_is_deterministic_and_stable() {
        let spec = HeatSpec::square(8).with_ports(2, 3).with_mass(MassKind::Lumped).with_seed(9);
        let a = generate_heat_fd(&spec).unwrap();
        let b = generate_heat_fd(&spec).unwrap();
        assert_eq!(a.problem.b(), b.problem.b());
        assert_eq!(a.problem.c(), b.problem.c());
        assert_eq!(a.problem.a(), b.problem.a());
        assert!(!a.problem.e().is_identity());
    }

    #[test]
    fn spec_strings_round_trip() {
        let spec: HeatSpec = "heat:16x16,m=2,q=2,beta=1000,mass=lumped,seed=3".parse().unwrap();
        assert_eq!(spec.grid, Grid::Square(16, 16));
        assert_eq!((spec.inputs, spec.outputs, spec.beta, spec.seed), (2, 2, 1000.0, 3));
        assert_eq!(spec.to_string().parse::<HeatSpec>().unwrap(), spec);
        assert_eq!("heat:100".parse::<HeatSpec>().unwrap().grid, Grid::Line(100));
        for bad in ["heat", "heat:ax3", "heat:4,m", "heat:4,colour=red", "cool:4"] {
            assert!(bad.parse::<HeatSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn limits_are_enforced() {
        assert!(generate_heat_fd(&HeatSpec::square(65)).is_err());
        assert!(generate_heat_fd(&HeatSpec::square(4).with_ports(9, 1)).is_err());
        assert!(generate_heat_fd(&HeatSpec::square(4).with_ports(0, 1)).is_err());
    }
}
