//! Dense splitting schemes: commuting ADI splits give the same iterate in any
//! order, a non-commuting family does not.

use lradi::splitting::{check_permutation_invariance, OperatorSplit};
use nalgebra::{DMatrix, DVector};

fn main() -> lradi::Result<()> {
    let n = 6;
    let a1 = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 });
    let a2 = DMatrix::from_fn(n, n, |i, j| if i == j { 3.0 - 0.4 * i as f64 } else { 0.0 });
    let shifts = [0.5, 1.5, 3.0, 5.0];
    let commuting: Vec<OperatorSplit> = shifts.iter().map(|&s| OperatorSplit::adi(&a1, &a2, s, s)).collect::<Result<_, _>>()?;

    let mut coupled = a2.clone();
    coupled[(0, n - 1)] = 0.7;
    coupled[(n - 1, 0)] = -0.3;
    let mixed: Vec<OperatorSplit> = shifts.iter().map(|&s| OperatorSplit::adi(&a1, &coupled, s, s)).collect::<Result<_, _>>()?;

    let x0 = DVector::zeros(n);
    let b = DVector::from_fn(n, |i, _| (i as f64).cos());
    println!("commutator norm {:.1e}, order deviation {:.2e}", commuting[0].commutator_norm(), check_permutation_invariance(&commuting, &x0, &b, 7)?);
    println!("commutator norm {:.1e}, order deviation {:.2e}", mixed[0].commutator_norm(), check_permutation_invariance(&mixed, &x0, &b, 7)?);
    Ok(())
}
