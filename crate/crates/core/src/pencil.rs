//! Sparse matrix pencils `(A + U V^T, E)` and cached shifted solves.
//!
//! The coefficient matrix of a pencil is a sparse matrix plus an optional
//! dense low-rank product that is never formed. Solves with `A + U V^T + alpha E`
//! factor the sparse part once per shift and apply Sherman-Morrison-Woodbury
//! for the update.

use std::collections::HashMap;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::sparse::{reverse_cuthill_mckee, BandLu, SparseMatrix};

/// Dense low-rank term `U V^T` added to a sparse coefficient matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankUpdate {
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Pencil {
    a: SparseMatrix,
    e: SparseMatrix,
    e_identity: bool,
    update: Option<LowRankUpdate>,
    perm: Vec<usize>,
}

impl Pencil {
    pub fn new(a: SparseMatrix, e: SparseMatrix) -> Result<Self> {
        if !a.is_square() || !e.is_square() || a.nrows() != e.nrows() {
            return Err(dim_err(format!(
                "pencil needs square matrices of equal order, got {}x{} and {}x{}",
                a.nrows(),
                a.ncols(),
                e.nrows(),
                e.ncols()
            )));
        }
        let n = a.nrows();
        let mut adj = vec![Vec::new(); n];
        for (i, j, _) in a.triplets().chain(e.triplets()) {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj);
        let e_identity = e.is_identity();
        Ok(Self { a, e, e_identity, update: None, perm })
    }

    /// Adds `U V^T` to the coefficient matrix. An update with zero columns is dropped.
    pub fn with_update(mut self, u: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        let n = self.n();
        if u.nrows() != n || v.nrows() != n || u.ncols() != v.ncols() {
            return Err(dim_err(format!(
                "low-rank update must be n x r twice, got {}x{} and {}x{}",
                u.nrows(),
                u.ncols(),
                v.nrows(),
                v.ncols()
            )));
        }
        self.update = (u.ncols() > 0).then_some(LowRankUpdate { u, v });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn e(&self) -> &SparseMatrix {
        &self.e
    }

    pub fn e_is_identity(&self) -> bool {
        self.e_identity
    }

    pub fn update(&self) -> Option<&LowRankUpdate> {
        self.update.as_ref()
    }

    /// `(A + U V^T) X`.
    pub fn apply_a<T>(&self, x: &DMatrix<T>) -> DMatrix<T>
    where
        T: ComplexField<RealField = f64> + Copy,
    {
        let mut out = self.a.mul_dense(x);
        if let Some(up) = &self.update {
            let u = up.u.map(T::from_real);
            let vt = up.v.transpose().map(T::from_real);
            out += u * (vt * x);
        }
        out
    }

    pub fn apply_e<T>(&self, x: &DMatrix<T>) -> DMatrix<T>
    where
        T: ComplexField<RealField = f64> + Copy,
    {
        if self.e_identity {
            x.clone()
        } else {
            self.e.mul_dense(x)
        }
    }

    /// Dense coefficient matrix including the update.
    pub fn dense_a(&self) -> DMatrix<f64> {
        let mut a = self.a.to_dense();
        if let Some(up) = &self.update {
            a += &up.u * up.v.transpose();
        }
        a
    }

    pub fn dense_e(&self) -> DMatrix<f64> {
        self.e.to_dense()
    }
}

struct Smw<T: ComplexField> {
    w: DMatrix<T>,
    vt: DMatrix<T>,
    capacitance: nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>,
}

struct Factored<T: ComplexField> {
    lu: BandLu<T>,
    smw: Option<Smw<T>>,
}

impl<T> Factored<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    fn build(pencil: &Pencil, alpha: T) -> Option<Self> {
        let entries = pencil
            .a
            .triplets()
            .map(|(i, j, v)| (i, j, T::from_real(v)))
            .chain(pencil.e.triplets().map(|(i, j, v)| (i, j, alpha * T::from_real(v))));
        let lu = BandLu::factor(pencil.n(), &pencil.perm, entries)?;
        let smw = match &pencil.update {
            None => None,
            Some(up) => {
                let u = up.u.map(T::from_real);
                let vt = up.v.transpose().map(T::from_real);
                let w = lu.solve(&u);
                let r = u.ncols();
                let cap = DMatrix::<T>::identity(r, r) + &vt * &w;
                let capacitance = cap.lu();
                if !capacitance.is_invertible() {
                    return None;
                }
                Some(Smw { w, vt, capacitance })
            }
        };
        Some(Self { lu, smw })
    }

    fn solve(&self, rhs: &DMatrix<T>) -> DMatrix<T> {
        let y = self.lu.solve(rhs);
        match &self.smw {
            None => y,
            Some(s) => {
                let t = s.capacitance.solve(&(&s.vt * &y)).expect("capacitance checked invertible");
                y - &s.w * t
            }
        }
    }
}

/// Per-solve cache of shifted factorizations, keyed by the shift value.
pub struct ShiftedSolver<'p> {
    pencil: &'p Pencil,
    real: HashMap<u64, Factored<f64>>,
    complex: HashMap<(u64, u64), Factored<Complex64>>,
    mass: Option<BandLu<f64>>,
    columns_solved: usize,
}

impl<'p> ShiftedSolver<'p> {
    pub fn new(pencil: &'p Pencil) -> Self {
        Self { pencil, real: HashMap::new(), complex: HashMap::new(), mass: None, columns_solved: 0 }
    }

    pub fn pencil(&self) -> &'p Pencil {
        self.pencil
    }

    /// Total number of right-hand side columns passed to shifted solves.
    pub fn columns_solved(&self) -> usize {
        self.columns_solved
    }

    pub fn cached_factorizations(&self) -> usize {
        self.real.len() + self.complex.len()
    }

    /// Solves `(A + U V^T + alpha E) X = rhs` for real `alpha`.
    pub fn solve_real(&mut self, alpha: f64, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(rhs.nrows())?;
        let key = (alpha + 0.0).to_bits();
        if !self.real.contains_key(&key) {
            let f = Factored::build(self.pencil, alpha)
                .ok_or(Error::SingularShift { alpha: Complex64::new(alpha, 0.0) })?;
            self.real.insert(key, f);
        }
        self.columns_solved += rhs.ncols();
        Ok(self.real[&key].solve(rhs))
    }

    /// Solves `(A + U V^T + alpha E) X = rhs` for complex `alpha`.
    pub fn solve_complex(&mut self, alpha: Complex64, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        self.check_rows(rhs.nrows())?;
        let key = ((alpha.re + 0.0).to_bits(), (alpha.im + 0.0).to_bits());
        if !self.complex.contains_key(&key) {
            let f = Factored::build(self.pencil, alpha).ok_or(Error::SingularShift { alpha })?;
            self.complex.insert(key, f);
        }
        self.columns_solved += rhs.ncols();
        Ok(self.complex[&key].solve(rhs))
    }

    /// Solves `E X = rhs`.
    pub fn solve_mass(&mut self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(rhs.nrows())?;
        if self.pencil.e_identity {
            return Ok(rhs.clone());
        }
        if self.mass.is_none() {
            let lu = BandLu::factor(self.pencil.n(), &self.pencil.perm, self.pencil.e.triplets())
                .ok_or_else(|| Error::Singular("mass matrix E".into()))?;
            self.mass = Some(lu);
        }
        Ok(self.mass.as_ref().unwrap().solve(rhs))
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.pencil.n() {
            return Err(dim_err(format!(
                "right-hand side has {rows} rows, pencil has order {}",
                self.pencil.n()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn laplacian(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, -2.0));
            if i + 1 < n {
                t.push((i, i + 1, 1.0));
                t.push((i + 1, i, 1.0));
            }
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn shifted_solve_with_update_matches_dense() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let e = SparseMatrix::from_diagonal(&(0..n).map(|i| 1.0 + 0.01 * i as f64).collect::<Vec<_>>());
        let u = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() - 0.5);
        let v = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() - 0.5);
        let p = Pencil::new(laplacian(n), e).unwrap().with_update(u, v).unwrap();
        let mut s = ShiftedSolver::new(&p);
        let rhs = DMatrix::from_fn(n, 3, |i, j| ((i * 3 + j) % 7) as f64);

        let x = s.solve_real(-0.7, &rhs).unwrap();
        let dense = p.dense_a() + p.dense_e() * -0.7;
        assert!((&dense * &x - &rhs).norm() < 1e-11 * rhs.norm());

        let alpha = Complex64::new(-0.3, 1.2);
        let rc = rhs.map(|v| Complex64::new(v, 0.0));
        let xc = s.solve_complex(alpha, &rc).unwrap();
        let dc = p.dense_a().map(|v| Complex64::new(v, 0.0)) + p.dense_e().map(|v| alpha * v);
        assert!((&dc * &xc - &rc).norm() < 1e-11 * rc.norm());

        s.solve_real(-0.7, &rhs).unwrap();
        assert_eq!(s.cached_factorizations(), 2);
        assert_eq!(s.columns_solved(), 9);

        let m = s.solve_mass(&rhs).unwrap();
        assert!((p.dense_e() * m - &rhs).norm() < 1e-13 * rhs.norm());
    }

    #[test]
    fn shift_at_an_eigenvalue_is_rejected() {
        let p = Pencil::new(SparseMatrix::from_diagonal(&[-1.0, -3.0]), SparseMatrix::identity(2)).unwrap();
        let mut s = ShiftedSolver::new(&p);
        let err = s.solve_real(1.0, &DMatrix::from_element(2, 1, 1.0)).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }));
    }
}
