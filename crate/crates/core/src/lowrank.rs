//! Symmetric indefinite low-rank factorizations `Z Y Z^H`.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};

use crate::error::{dim_err, Error, Result};

/// Unit roundoff of binary64, used by the compression truncation rule.
pub const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// `X = Z Y Z^H` with a tall outer factor `Z` and a small Hermitian inner factor `Y`.
///
/// A factor with zero columns represents the zero matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor<T = f64>
where
    T: ComplexField<RealField = f64> + Copy,
{
    z: DMatrix<T>,
    y: DMatrix<T>,
}

impl<T> LowRankFactor<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    /// Checks that `Y` is square, matches the column count of `Z`, and is Hermitian.
    pub fn new(z: DMatrix<T>, y: DMatrix<T>) -> Result<Self> {
        if y.nrows() != y.ncols() || y.nrows() != z.ncols() {
            return Err(dim_err(format!(
                "outer factor has {} columns but inner factor is {}x{}",
                z.ncols(),
                y.nrows(),
                y.ncols()
            )));
        }
        let asym = (&y - y.adjoint()).norm();
        if asym > 1e-10 * y.norm().max(f64::MIN_POSITIVE) && asym > 0.0 {
            return Err(Error::InvalidArgument(format!(
                "inner factor is not Hermitian (deviation {asym:e})"
            )));
        }
        Ok(Self { z, y })
    }

    /// The zero matrix of order `n`.
    pub fn zeros(n: usize) -> Self {
        Self { z: DMatrix::zeros(n, 0), y: DMatrix::zeros(0, 0) }
    }

    pub fn z(&self) -> &DMatrix<T> {
        &self.z
    }

    pub fn y(&self) -> &DMatrix<T> {
        &self.y
    }

    pub fn into_parts(self) -> (DMatrix<T>, DMatrix<T>) {
        (self.z, self.y)
    }

    pub fn nrows(&self) -> usize {
        self.z.nrows()
    }

    /// Number of columns of the outer factor.
    pub fn rank(&self) -> usize {
        self.z.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.z.ncols() == 0
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        if self.is_empty() {
            return DMatrix::zeros(self.nrows(), self.nrows());
        }
        &self.z * &self.y * self.z.adjoint()
    }

    /// Frobenius norm without forming the `n x n` matrix: the triangular
    /// factor of a Householder QR of `Z` replaces `Z`.
    pub fn frobenius_norm(&self) -> f64 {
        factored_norm(&self.z, &self.y)
    }

    /// `self + sign * other`, by concatenation. No truncation.
    pub fn add(&self, other: &Self, sign: f64) -> Result<Self> {
        if self.nrows() != other.nrows() {
            return Err(dim_err(format!(
                "cannot add factorizations with {} and {} rows",
                self.nrows(),
                other.nrows()
            )));
        }
        let (z1, z2) = (self.rank(), other.rank());
        let n = self.nrows();
        let mut z = DMatrix::zeros(n, z1 + z2);
        z.columns_mut(0, z1).copy_from(&self.z);
        z.columns_mut(z1, z2).copy_from(&other.z);
        let mut y = DMatrix::zeros(z1 + z2, z1 + z2);
        y.view_mut((0, 0), (z1, z1)).copy_from(&self.y);
        y.view_mut((z1, z1), (z2, z2)).copy_from(&(&other.y * T::from_real(sign)));
        Ok(Self { z, y })
    }

    /// Scales the represented matrix through the inner factor.
    pub fn scaled(&self, c: f64) -> Self {
        Self { z: self.z.clone(), y: &self.y * T::from_real(c) }
    }

    /// Column compression: orthonormalize `Z`, eigendecompose the congruent
    /// inner matrix and drop eigenvalues below `max(1, rho) * k * u`, where
    /// `k` is the current column count and `rho` the spectral radius of the
    /// congruent inner matrix.
    pub fn compress(&self) -> Self {
        let k = self.rank();
        let n = self.nrows();
        if k == 0 || n == 0 {
            return Self::zeros(n);
        }
        let qr = self.z.clone().qr();
        let r = qr.r();
        let q = qr.q();
        let mut inner = &r * &self.y * r.adjoint();
        inner = (&inner + inner.adjoint()) * T::from_real(0.5);
        let eig = match SymmetricEigen::try_new(inner.clone(), f64::EPSILON, 0) {
            Some(e) => e,
            None => return self.clone(),
        };
        let rho = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let threshold = rho.max(1.0) * k as f64 * UNIT_ROUNDOFF;
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i].abs() >= threshold)
            .collect();
        if keep.is_empty() {
            return Self::zeros(n);
        }
        let vecs = eig.eigenvectors.select_columns(keep.iter());
        let z = &q * vecs;
        let y = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            keep.len(),
            keep.iter().map(|&i| T::from_real(eig.eigenvalues[i])),
        ));
        Self { z, y }
    }
}

/// `||Z Y Z^H||_F` for raw factors; see [`LowRankFactor::frobenius_norm`].
/// The caller guarantees matching dimensions.
pub fn factored_norm<T>(z: &DMatrix<T>, y: &DMatrix<T>) -> f64
where
    T: ComplexField<RealField = f64> + Copy,
{
    if z.ncols() == 0 || z.nrows() == 0 {
        return 0.0;
    }
    let r = z.clone().qr().r();
    (&r * y * r.adjoint()).norm()
}

impl LowRankFactor<f64> {
    /// Factorization of a dense symmetric matrix through its eigendecomposition,
    /// truncated like [`LowRankFactor::compress`].
    pub fn from_dense_symmetric(x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != x.ncols() {
            return Err(dim_err("dense matrix is not square"));
        }
        let n = x.nrows();
        Self::new(DMatrix::identity(n, n), (x + x.transpose()) * 0.5).map(|f| f.compress())
    }

    pub fn to_complex(&self) -> LowRankFactor<num_complex::Complex64> {
        LowRankFactor {
            z: self.z.map(|v| num_complex::Complex64::new(v, 0.0)),
            y: self.y.map(|v| num_complex::Complex64::new(v, 0.0)),
        }
    }
}

/// Compression trigger: every `every` additions, or once the column count
/// reaches `fraction` of the row count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionPolicy {
    pub every: usize,
    pub fraction: f64,
}

impl Default for CompressionPolicy {
    fn default() -> Self {
        Self { every: 10, fraction: 0.5 }
    }
}

impl CompressionPolicy {
    pub fn should_compress(&self, additions: usize, columns: usize, rows: usize) -> bool {
        additions >= self.every || columns as f64 >= self.fraction * rows as f64
    }
}

/// Convenience wrapper with the default policy.
pub fn compression_policy_tick(additions: usize, columns: usize, rows: usize) -> bool {
    CompressionPolicy::default().should_compress(additions, columns, rows)
}

/// Accumulates low-rank terms and compresses according to a policy.
#[derive(Debug, Clone)]
pub struct Accumulator {
    factor: LowRankFactor<f64>,
    policy: Option<CompressionPolicy>,
    additions: usize,
    compressions: usize,
}

impl Accumulator {
    pub fn new(start: LowRankFactor<f64>, policy: Option<CompressionPolicy>) -> Self {
        Self { factor: start, policy, additions: 0, compressions: 0 }
    }

    /// Adds `Z Y Z^T` and returns true when a compression was performed.
    pub fn push(&mut self, z: DMatrix<f64>, y: DMatrix<f64>) -> Result<bool> {
        let term = LowRankFactor::new(z, y)?;
        self.factor = self.factor.add(&term, 1.0)?;
        self.additions += 1;
        if let Some(p) = self.policy {
            if p.should_compress(self.additions, self.factor.rank(), self.factor.nrows()) {
                self.factor = self.factor.compress();
                self.additions = 0;
                self.compressions += 1;
                return Ok(true);
            }
        }
        Ok(false)
    }

    pub fn factor(&self) -> &LowRankFactor<f64> {
        &self.factor
    }

    pub fn compressions(&self) -> usize {
        self.compressions
    }

    pub fn into_factor(self) -> LowRankFactor<f64> {
        self.factor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_factor(rng: &mut ChaCha8Rng, n: usize, z: usize) -> LowRankFactor {
        let zm = DMatrix::from_fn(n, z, |_, _| rng.random::<f64>() - 0.5);
        let b = DMatrix::from_fn(z, z, |_, _| rng.random::<f64>() - 0.5);
        LowRankFactor::new(zm, &b + b.transpose()).unwrap()
    }

    #[test]
    fn norm_of_identity_outer_factor() {
        let f = LowRankFactor::new(DMatrix::identity(2, 2), DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -4.0]))).unwrap();
        assert!((f.frobenius_norm() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn empty_factor_is_zero() {
        let f = LowRankFactor::<f64>::zeros(7);
        assert_eq!(f.frobenius_norm(), 0.0);
        assert_eq!(f.compress().rank(), 0);
        assert_eq!(f.to_dense(), DMatrix::zeros(7, 7));
    }

    #[test]
    fn norm_matches_dense_materialization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_factor(&mut rng, 50, 4);
        let dense = f.to_dense().norm();
        assert!((f.frobenius_norm() - dense).abs() <= 1e-12 * dense);
    }

    #[test]
    fn mismatched_inner_factor_is_rejected() {
        assert!(LowRankFactor::new(DMatrix::<f64>::zeros(5, 2), DMatrix::zeros(3, 3)).is_err());
        let nonsym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(LowRankFactor::new(DMatrix::<f64>::zeros(5, 2), nonsym).is_err());
    }

    #[test]
    fn subtracting_a_factor_from_itself_gives_zero() {
        let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let f = LowRankFactor::new(e1, DMatrix::from_element(1, 1, 1.0)).unwrap();
        let d = f.add(&f, -1.0).unwrap();
        assert_eq!(d.rank(), 2);
        assert!(d.frobenius_norm() <= 1e-14);
        assert_eq!(d.compress().rank(), 0);
    }

    #[test]
    fn add_concatenates_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_factor(&mut rng, 10, 2);
        let b = random_factor(&mut rng, 10, 3);
        assert_eq!(a.add(&b, 1.0).unwrap().rank(), 5);
        assert!(a.add(&random_factor(&mut rng, 9, 1), 1.0).is_err());
    }

    #[test]
    fn duplicate_column_compresses_to_one() {
        let z = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let f = LowRankFactor::new(z, DMatrix::identity(2, 2)).unwrap();
        let c = f.compress();
        assert_eq!(c.rank(), 1);
        assert!((c.frobenius_norm() - 2.0).abs() <= 1e-13 * 2.0);
        assert!((c.to_dense() - f.to_dense()).norm() <= 1e-14);
    }

    #[test]
    fn exact_rank_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = random_factor(&mut rng, 30, 3);
        // duplicate the columns with a random mixing so that z = 6 but rank = 3
        let mix = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() + 0.5);
        let z2 = base.z() * &mix;
        // columns of z2 lie in span(base.z), so the sum still has rank 3
        let extra = LowRankFactor::new(z2, DMatrix::identity(3, 3)).unwrap();
        let doubled = base.add(&extra, 1.0).unwrap();
        let c = doubled.compress();
        assert_eq!(doubled.rank(), 6);
        assert_eq!(c.rank(), 3);
        assert!((c.to_dense() - doubled.to_dense()).norm() <= 1e-12 * doubled.to_dense().norm());
    }

    #[test]
    fn zero_inner_factor_compresses_away() {
        let f = LowRankFactor::new(DMatrix::<f64>::identity(4, 2), DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(f.compress().rank(), 0);
    }

    #[test]
    fn complex_hermitian_compress() {
        let z = DMatrix::from_fn(6, 3, |i, j| Complex64::new((i + j) as f64, i as f64 - j as f64));
        let y = DMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        );
        let f = LowRankFactor::new(z, y).unwrap();
        let c = f.compress();
        assert!(c.rank() <= 3);
        assert!((c.to_dense() - f.to_dense()).norm() <= 1e-12 * f.to_dense().norm());
    }

    #[test]
    fn policy_examples() {
        assert!(compression_policy_tick(10, 4, 100));
        assert!(compression_policy_tick(3, 60, 100));
        assert!(!compression_policy_tick(3, 4, 100));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn norm_and_compress_agree_with_dense(seed in 0u64..1000, n in 1usize..60, z in 0usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_factor(&mut rng, n, z);
            let dense = f.to_dense();
            let dn = dense.norm();
            prop_assert!((f.frobenius_norm() - dn).abs() <= 1e-10 * dn.max(1e-300));
            let c = f.compress();
            prop_assert!(c.rank() <= f.rank());
            prop_assert!((c.to_dense() - &dense).norm() <= 1e-10 * dn.max(1.0));
            let cc = c.compress();
            prop_assert_eq!(cc.rank(), c.rank());
            prop_assert!((cc.to_dense() - &dense).norm() <= 1e-10 * dn.max(1.0));
        }

        #[test]
        fn add_commutes_with_materialization(seed in 0u64..1000, n in 1usize..40, sign in prop::sample::select(vec![-1.0, 1.0])) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_factor(&mut rng, n, 3);
            let b = random_factor(&mut rng, n, 2);
            let lhs = a.add(&b, sign).unwrap().to_dense();
            let rhs = a.to_dense() + b.to_dense() * sign;
            prop_assert!((&lhs - &rhs).norm() <= 1e-12 * rhs.norm().max(1e-300));
        }
    }
}
