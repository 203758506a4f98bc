use nalgebra::{ComplexField, DMatrix};

/// LU factorization with partial pivoting of a (symmetrically permuted)
/// banded matrix. Row interchanges stay inside the band, so the upper factor
/// widens to `kl + ku` superdiagonals.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    // superdiagonals including fill from pivoting
    ku: usize,
    width: usize,
    data: Vec<T>,
    piv: Vec<usize>,
    perm: Vec<usize>,
}

impl<T> BandLu<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    /// Factors the `n x n` matrix given by `entries` (original indices) after
    /// applying `perm` (`perm[new] = old`) to rows and columns. Returns `None`
    /// when a pivot vanishes relative to the largest entry.
    pub fn factor<I>(n: usize, perm: &[usize], entries: I) -> Option<Self>
    where
        I: IntoIterator<Item = (usize, usize, T)>,
    {
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let entries: Vec<(usize, usize, T)> = entries
            .into_iter()
            .map(|(i, j, v)| (inv[i], inv[j], v))
            .collect();
        let (mut kl, mut ku0) = (0, 0);
        for &(i, j, _) in &entries {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku0 = ku0.max(j - i);
            }
        }
        let ku = ku0 + kl;
        let width = kl + ku + 1;
        let mut data = vec![T::zero(); n * width];
        let mut scale = 0.0f64;
        for (i, j, v) in entries {
            data[i * width + j + kl - i] += v;
        }
        for v in &data {
            scale = scale.max(v.modulus());
        }
        let tiny = scale * f64::EPSILON * (n.max(1) as f64);

        let at = |i: usize, j: usize| i * width + j + kl - i;
        let mut piv = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = data[at(k, k)].modulus();
            for i in k + 1..=last_row {
                let m = data[at(i, k)].modulus();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best <= tiny || best == 0.0 {
                return None;
            }
            piv[k] = p;
            let last_col = (k + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    data.swap(at(k, j), at(p, j));
                }
            }
            let pivot = data[at(k, k)];
            for i in k + 1..=last_row {
                let idx = at(i, k);
                if data[idx] == T::zero() {
                    continue;
                }
                let l = data[idx] / pivot;
                data[idx] = l;
                for j in k + 1..=last_col {
                    let u = data[at(k, j)];
                    data[at(i, j)] -= l * u;
                }
            }
        }
        Some(Self { n, kl, ku, width, data, piv, perm: perm.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Lower and upper bandwidth of the stored factors.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Solves `A X = B` for a block of right-hand sides.
    pub fn solve(&self, b: &DMatrix<T>) -> DMatrix<T> {
        assert_eq!(b.nrows(), self.n, "right-hand side has wrong row count");
        let n = self.n;
        let (kl, ku, width) = (self.kl, self.ku, self.width);
        let at = |i: usize, j: usize| i * width + j + kl - i;
        let mut out = DMatrix::zeros(n, b.ncols());
        let mut x = vec![T::zero(); n];
        for c in 0..b.ncols() {
            for (new, &old) in self.perm.iter().enumerate() {
                x[new] = b[(old, c)];
            }
            for k in 0..n {
                let p = self.piv[k];
                if p != k {
                    x.swap(k, p);
                }
                let xk = x[k];
                if xk == T::zero() {
                    continue;
                }
                for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    x[i] -= self.data[at(i, k)] * xk;
                }
            }
            for k in (0..n).rev() {
                let mut acc = x[k];
                for j in k + 1..=(k + ku).min(n - 1) {
                    acc -= self.data[at(k, j)] * x[j];
                }
                x[k] = acc / self.data[at(k, k)];
            }
            for (new, &old) in self.perm.iter().enumerate() {
                out[(old, c)] = x[new];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_entries<T: Copy>(m: &DMatrix<T>) -> Vec<(usize, usize, T)> {
        let mut out = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out.push((i, j, m[(i, j)]));
            }
        }
        out
    }

    #[test]
    fn solves_dense_system_needing_pivoting() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0]);
        let perm = vec![0, 1, 2];
        let lu = BandLu::factor(3, &perm, dense_entries(&a)).unwrap();
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let x = lu.solve(&b);
        assert!((&a * &x - &b).norm() < 1e-13);
    }

    #[test]
    fn tridiagonal_with_permutation_and_complex_shift() {
        let n = 40;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = Complex64::new(-2.0, 0.7);
            if i + 1 < n {
                a[(i, i + 1)] = Complex64::new(1.0 + rng.random::<f64>(), 0.0);
                a[(i + 1, i)] = Complex64::new(1.0, -0.1);
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        let entries: Vec<_> = dense_entries(&a).into_iter().filter(|e| e.2 != Complex64::new(0.0, 0.0)).collect();
        let lu = BandLu::factor(n, &perm, entries).unwrap();
        let b = DMatrix::from_fn(n, 2, |i, j| Complex64::new(i as f64, j as f64 - 0.5));
        let x = lu.solve(&b);
        assert!((&a * &x - &b).norm() < 1e-11 * b.norm());
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(BandLu::factor(2, &[0, 1], dense_entries(&a)).is_none());
    }
}
