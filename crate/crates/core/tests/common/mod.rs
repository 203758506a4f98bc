#![allow(dead_code)]

use lradi::problems::{generate_heat_fd, Grid, HeatSpec, MassKind};
use lradi::{LowRankFactor, LyapunovProblem, Pencil};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn grid_for(n: usize) -> Grid {
    match n {
        20 => Grid::Square(4, 5),
        50 => Grid::Square(5, 10),
        64 => Grid::Square(8, 8),
        100 => Grid::Square(10, 10),
        256 => Grid::Square(16, 16),
        _ => Grid::Line(n),
    }
}

pub fn heat(n: usize, inputs: usize, outputs: usize, mass: MassKind, seed: u64) -> HeatSpec {
    HeatSpec { grid: grid_for(n), ..HeatSpec::square(1) }
        .with_ports(inputs, outputs)
        .with_mass(mass)
        .with_seed(seed)
}

/// `A X E^T + E X A^T + B B^T = 0` for a generated heat problem.
pub fn heat_lyapunov(n: usize, g: usize, mass: MassKind, seed: u64) -> LyapunovProblem {
    let gen = generate_heat_fd(&heat(n, g, 1, mass, seed)).unwrap();
    let p = gen.problem;
    let pencil = Pencil::new(p.a().clone(), p.e().clone()).unwrap();
    LyapunovProblem::with_identity_weight(pencil, p.b().clone()).unwrap()
}

/// Seeded indefinite low-rank factor.
pub fn random_factor(n: usize, rank: usize, seed: u64) -> LowRankFactor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = DMatrix::from_fn(n, rank, |_, _| rng.random::<f64>() - 0.5);
    let mut y = DMatrix::from_fn(rank, rank, |_, _| rng.random::<f64>() - 0.5);
    y = (&y + y.transpose()) * 0.5;
    LowRankFactor::new(z, y).unwrap()
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
