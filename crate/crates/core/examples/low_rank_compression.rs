//! Indefinite factorizations Z Y Z^T: sums grow by concatenation and
//! compression removes the redundant columns again.

use lradi::LowRankFactor;
use nalgebra::DMatrix;

fn main() -> lradi::Result<()> {
    let n = 200;
    let z = DMatrix::from_fn(n, 4, |i, j| ((i + 1) as f64 * (j + 1) as f64 * 0.01).sin());
    let y = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, -1.0, 0.5, 1e-3]));
    let x = LowRankFactor::new(z, y)?;

    let mut sum = x.clone();
    for _ in 0..5 {
        sum = sum.add(&x.scaled(0.5), 1.0)?;
    }
    let compressed = sum.compress();
    let err = compressed.add(&sum, -1.0)?.frobenius_norm() / sum.frobenius_norm();
    println!("columns before {}, after {}, relative change {err:.1e}", sum.rank(), compressed.rank());
    println!("inner factor after compression: {:?}", compressed.y().diagonal().as_slice());
    Ok(())
}
