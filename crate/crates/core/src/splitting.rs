//! Dense nonstationary splitting schemes `A = M_k - N_k`.
//!
//! This is the small-scale scaffold behind the low-rank ADI: each step computes
//! the increment `v = -M^{-1} r` and updates the residual either from the
//! increment (`r <- -N v`) or from the previous residual (`r <- M^{-1} N r`).
//! The two agree whenever `M_k` and `N_k` commute.

use nalgebra::{DMatrix, DVector, LU};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_err, Error, Result};

/// One operator split `A = M - N` with a factored `M`.
pub struct OperatorSplit {
    m: DMatrix<f64>,
    n: DMatrix<f64>,
    m_lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl OperatorSplit {
    pub fn new(m: DMatrix<f64>, n: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.shape() != n.shape() {
            return Err(dim_err("split operators must be square and of equal size"));
        }
        let m_lu = m.clone().lu();
        if !m_lu.is_invertible() {
            return Err(Error::Singular("split operator M".into()));
        }
        Ok(Self { m, n, m_lu })
    }

    /// ADI split of `A = A1 + A2` with parameters `alpha`, `beta`:
    /// `M = (A1 + alpha I)(A2 + beta I) / (alpha + beta)` and
    /// `N = (A1 - beta I)(A2 - alpha I) / (alpha + beta)`.
    pub fn adi(a1: &DMatrix<f64>, a2: &DMatrix<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if a1.shape() != a2.shape() || !a1.is_square() {
            return Err(dim_err("ADI split needs two square operators of equal size"));
        }
        let s = alpha + beta;
        if s == 0.0 {
            return Err(Error::InvalidArgument("ADI parameters must not sum to zero".into()));
        }
        let id = DMatrix::<f64>::identity(a1.nrows(), a1.ncols());
        let m = (a1 + &id * alpha) * (a2 + &id * beta) / s;
        let n = (a1 - &id * beta) * (a2 - &id * alpha) / s;
        Self::new(m, n)
    }

    /// Jacobi split `M = diag(A)`.
    pub fn jacobi(a: &DMatrix<f64>) -> Result<Self> {
        let m = DMatrix::from_diagonal(&a.diagonal());
        let n = &m - a;
        Self::new(m, n)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// The split operator `M - N`.
    pub fn operator(&self) -> DMatrix<f64> {
        &self.m - &self.n
    }

    pub fn apply_m(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x
    }

    pub fn apply_n(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.n * x
    }

    pub fn solve_m(&self, x: &DVector<f64>) -> DVector<f64> {
        self.m_lu.solve(x).expect("M checked invertible")
    }

    /// `G = M^{-1} N`.
    pub fn iteration_matrix(&self) -> DMatrix<f64> {
        self.m_lu.solve(&self.n).expect("M checked invertible")
    }

    /// `||M N - N M||_F`, zero for a commuting split.
    pub fn commutator_norm(&self) -> f64 {
        (&self.m * &self.n - &self.n * &self.m).norm()
    }
}

/// Iterate of a splitting scheme with its residual `r = A x - b` and last increment.
#[derive(Debug, Clone, PartialEq)]
pub struct CssIterate {
    pub x: DVector<f64>,
    pub r: DVector<f64>,
    pub v: DVector<f64>,
    pub k: usize,
}

impl CssIterate {
    pub fn new(a: &DMatrix<f64>, b: &DVector<f64>, x0: DVector<f64>) -> Result<Self> {
        if a.ncols() != x0.len() || a.nrows() != b.len() {
            return Err(dim_err("operator, right-hand side and initial guess disagree"));
        }
        let r = a * &x0 - b;
        let v = DVector::zeros(x0.len());
        Ok(Self { x: x0, r, v, k: 0 })
    }
}

/// How the next residual is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualMode {
    /// `r <- -N v` from the increment.
    ViaIncrement,
    /// `r <- M^{-1} N r` from the previous residual.
    ViaIteration,
}

/// One step of the commuting splitting scheme.
pub fn css_step(split: &OperatorSplit, it: &CssIterate, mode: ResidualMode) -> Result<CssIterate> {
    if split.dim() != it.x.len() {
        return Err(dim_err("split and iterate have different sizes"));
    }
    let v = -split.solve_m(&it.r);
    let r = match mode {
        ResidualMode::ViaIncrement => -split.apply_n(&v),
        ResidualMode::ViaIteration => split.solve_m(&split.apply_n(&it.r)),
    };
    Ok(CssIterate { x: &it.x + &v, r, v, k: it.k + 1 })
}

/// Runs the splits in the given order.
pub fn run(splits: &[&OperatorSplit], start: CssIterate, mode: ResidualMode) -> Result<CssIterate> {
    splits.iter().try_fold(start, |it, s| css_step(s, &it, mode))
}

/// Number of random reorderings tried by [`check_permutation_invariance`].
pub const PERMUTATION_TRIALS: usize = 5;

/// Runs the family in its given order and in seeded random orders, returning
/// the largest distance between final iterates.
pub fn check_permutation_invariance(
    family: &[OperatorSplit],
    x0: &DVector<f64>,
    b: &DVector<f64>,
    seed: u64,
) -> Result<f64> {
    let Some(first) = family.first() else {
        return Ok(0.0);
    };
    let a = first.operator();
    let start = CssIterate::new(&a, b, x0.clone())?;
    let ordered: Vec<&OperatorSplit> = family.iter().collect();
    let reference = run(&ordered, start.clone(), ResidualMode::ViaIncrement)?.x;
    if family.len() == 1 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..PERMUTATION_TRIALS {
        let mut order = ordered.clone();
        order.shuffle(&mut rng);
        let x = run(&order, start.clone(), ResidualMode::ViaIncrement)?.x;
        worst = worst.max((&x - &reference).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        m.qr().q()
    }

    #[test]
    fn degenerate_split_is_a_direct_solve() {
        let s = OperatorSplit::new(diag(&[2.0]), diag(&[0.0])).unwrap();
        let a = s.operator();
        let it = CssIterate::new(&a, &DVector::from_element(1, 4.0), DVector::zeros(1)).unwrap();
        let next = css_step(&s, &it, ResidualMode::ViaIncrement).unwrap();
        assert_eq!(next.x[0], 2.0);
        assert_eq!(next.r[0], 0.0);
    }

    #[test]
    fn jacobi_on_diagonally_dominant_matrix_converges_monotonically() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = DMatrix::from_fn(5, 5, |_, _| rng.random::<f64>() - 0.5);
        for i in 0..5 {
            a[(i, i)] = 4.0 + rng.random::<f64>();
        }
        let b = DVector::from_fn(5, |i, _| i as f64 + 1.0);
        let s = OperatorSplit::jacobi(&a).unwrap();
        let mut it = CssIterate::new(&a, &b, DVector::zeros(5)).unwrap();
        let mut prev = it.r.norm();
        for _ in 0..50 {
            it = css_step(&s, &it, ResidualMode::ViaIncrement).unwrap();
            let now = it.r.norm();
            assert!(now < prev);
            prev = now;
        }
        assert!(prev < 1e-8);
        assert!((&a * &it.x - &b - &it.r).norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn residual_modes_agree_on_commuting_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 8;
        let q = random_orthogonal(&mut rng, n);
        let dm: Vec<f64> = (0..n).map(|_| 2.0 + rng.random::<f64>()).collect();
        let dn: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let m = &q * diag(&dm) * q.transpose();
        let nn = &q * diag(&dn) * q.transpose();
        let s = OperatorSplit::new(m, nn).unwrap();
        assert!(s.commutator_norm() < 1e-12);
        let a = s.operator();
        let b = DVector::from_fn(n, |i, _| (i as f64).sin());
        let mut p = CssIterate::new(&a, &b, DVector::zeros(n)).unwrap();
        let mut q2 = p.clone();
        for _ in 0..10 {
            p = css_step(&s, &p, ResidualMode::ViaIncrement).unwrap();
            q2 = css_step(&s, &q2, ResidualMode::ViaIteration).unwrap();
            assert!((&p.r - &q2.r).norm() <= 1e-10 * p.r.norm().max(1e-300));
            assert!((&a * &p.x - &b - &p.r).norm() <= 1e-10 * b.norm());
        }
    }

    fn adi_family(d1: &[f64], d2: &[f64], shifts: &[f64]) -> Vec<OperatorSplit> {
        shifts.iter().map(|&a| OperatorSplit::adi(&diag(d1), &diag(d2), a, a).unwrap()).collect()
    }

    #[test]
    fn adi_on_diagonal_operators_is_order_independent() {
        let d1 = [1.0, 2.0, 5.0, 7.0];
        let d2 = [0.5, 3.0, 4.0, 1.5];
        let fam = adi_family(&d1, &d2, &[1.0, 2.5, 4.0, 6.0]);
        let x0 = DVector::from_element(4, 0.3);
        let b = DVector::from_column_slice(&[1.0, -2.0, 3.0, 0.5]);
        let dev = check_permutation_invariance(&fam, &x0, &b, 42).unwrap();
        let a = fam[0].operator();
        let x = run(&fam.iter().collect::<Vec<_>>(), CssIterate::new(&a, &b, x0.clone()).unwrap(), ResidualMode::ViaIncrement)
            .unwrap()
            .x;
        assert!(dev <= 1e-10 * x.norm());
        assert_eq!(check_permutation_invariance(&fam[..1], &x0, &b, 1).unwrap(), 0.0);
    }

    #[test]
    fn non_commuting_family_is_order_dependent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 5;
        let mk = |rng: &mut ChaCha8Rng| {
            let r = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            &r * r.transpose() + DMatrix::identity(n, n) * 2.0
        };
        let a1 = mk(&mut rng);
        let a2 = mk(&mut rng);
        let fam: Vec<_> = [1.0, 3.0, 6.0].iter().map(|&s| OperatorSplit::adi(&a1, &a2, s, s).unwrap()).collect();
        let b = DVector::from_element(n, 1.0);
        let dev = check_permutation_invariance(&fam, &DVector::zeros(n), &b, 7).unwrap();
        assert!(dev > 1e-6);
    }

    #[test]
    fn error_residual_and_increment_recursions() {
        let d1 = [1.0, 2.0, 5.0, 7.0, 0.3];
        let d2 = [0.5, 3.0, 4.0, 1.5, 2.2];
        let fam = adi_family(&d1, &d2, &[0.7, 2.0, 3.3, 5.0]);
        let a = fam[0].operator();
        let b = DVector::from_fn(5, |i, _| 1.0 + i as f64);
        let xstar = a.clone().lu().solve(&b).unwrap();
        let mut it = CssIterate::new(&a, &b, DVector::zeros(5)).unwrap();
        for (k, s) in fam.iter().enumerate() {
            let g = s.iteration_matrix();
            let next = css_step(s, &it, ResidualMode::ViaIncrement).unwrap();
            let e_prev = &it.x - &xstar;
            let e_next = &next.x - &xstar;
            assert!((&e_next - &g * &e_prev).norm() <= 1e-10 * e_prev.norm());
            assert!((&next.r - &g * &it.r).norm() <= 1e-10 * it.r.norm());
            if k > 0 {
                let from_prev = s.solve_m(&fam[k - 1].apply_n(&it.v));
                assert!((&next.v - from_prev).norm() <= 1e-10 * next.v.norm());
            }
            it = next;
        }
    }

    #[test]
    fn residual_recursion_fails_without_commutation() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.5]);
        let s = OperatorSplit::new(m, n).unwrap();
        assert!(s.commutator_norm() > 0.1);
        let a = s.operator();
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let it = CssIterate::new(&a, &b, DVector::zeros(2)).unwrap();
        let p = css_step(&s, &it, ResidualMode::ViaIncrement).unwrap();
        let q = css_step(&s, &it, ResidualMode::ViaIteration).unwrap();
        assert!((&p.r - &q.r).norm() > 1e-3);
    }

    #[test]
    fn singular_m_is_reported() {
        assert!(matches!(OperatorSplit::new(diag(&[0.0, 1.0]), diag(&[1.0, 1.0])), Err(Error::Singular(_))));
    }
}
