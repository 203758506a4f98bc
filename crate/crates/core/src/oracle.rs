//! Dense reference solvers and Cayley radius analysis for small problems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::shifts::penzl_product;

/// Largest order handled by the Kronecker path of [`dense_lyapunov`].
pub const KRONECKER_MAX_ORDER: usize = 30;

fn check_square(name: &str, m: &DMatrix<f64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(dim_err(format!("{name} must be {n}x{n}, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Solves `A X E^T + E X A^T = -W` densely and symmetrizes the result.
///
/// Small orders use the vectorized Kronecker system, larger ones a complex
/// Schur (Bartels-Stewart) solve of the equivalent standard equation.
pub fn dense_lyapunov(a: &DMatrix<f64>, e: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.nrows() <= KRONECKER_MAX_ORDER {
        dense_lyapunov_kronecker(a, e, w)
    } else {
        dense_lyapunov_schur(a, e, w)
    }
}

/// Kronecker form `(E (x) A + A (x) E) vec(X) = -vec(W)`.
pub fn dense_lyapunov_kronecker(a: &DMatrix<f64>, e: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_square("A", a, n)?;
    check_square("E", e, n)?;
    check_square("W", w, n)?;
    let k = e.kronecker(a) + a.kronecker(e);
    let rhs = DVector::from_iterator(n * n, w.iter().map(|v| -v));
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Lyapunov operator (eigenvalues sum to zero)".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Bartels-Stewart on the complex Schur form of `E^{-1} A`.
pub fn dense_lyapunov_schur(a: &DMatrix<f64>, e: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_square("A", a, n)?;
    check_square("E", e, n)?;
    check_square("W", w, n)?;
    let e_lu = e.clone().lu();
    let at = e_lu.solve(a).ok_or_else(|| Error::Singular("E".into()))?;
    let we = e_lu.solve(w).ok_or_else(|| Error::Singular("E".into()))?;
    let wt = e_lu.solve(&we.transpose()).ok_or_else(|| Error::Singular("E".into()))?;
    let ac = at.map(|v| Complex64::new(v, 0.0));
    let (q, t) = nalgebra::Schur::try_new(ac, f64::EPSILON, 100_000).ok_or(Error::Eigen)?.unpack();
    let c = -(q.adjoint() * wt.map(|v| Complex64::new(v, 0.0)) * &q);
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    let scale = t.norm().max(f64::MIN_POSITIVE);
    for j in (0..n).rev() {
        let mut rhs = c.column(j).into_owned();
        for k in j + 1..n {
            let f = t[(j, k)].conj();
            if f != Complex64::new(0.0, 0.0) {
                rhs -= y.column(k) * f;
            }
        }
        let shift = t[(j, j)].conj();
        // upper triangular solve with T + shift I
        for i in (0..n).rev() {
            let mut acc = rhs[i];
            for l in i + 1..n {
                acc -= t[(i, l)] * y[(l, j)];
            }
            let d = t[(i, i)] + shift;
            if d.norm() <= 1e-14 * scale {
                return Err(Error::Singular("Lyapunov operator (eigenvalues sum to zero)".into()));
            }
            y[(i, j)] = acc / d;
        }
    }
    let x = (&q * y * q.adjoint()).map(|z| z.re);
    Ok((&x + x.transpose()) * 0.5)
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).amax() <= 1e-14 * m.amax()
}

/// Eigenvalues of the pencil `(A, E)`. Symmetric `A` with symmetric positive
/// definite `E` goes through `L^{-1} A L^{-T}` with `E = L L^T`, anything else
/// through `E^{-1} A`.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    check_square("A", a, n)?;
    check_square("E", e, n)?;
    if is_symmetric(a) && is_symmetric(e) {
        if let Some(chol) = e.clone().cholesky() {
            let l = chol.l();
            let la = l.solve_lower_triangular(a).ok_or_else(|| Error::Singular("E".into()))?;
            let c = l.solve_lower_triangular(&la.transpose()).ok_or_else(|| Error::Singular("E".into()))?;
            let c = (&c + c.transpose()) * 0.5;
            return Ok(c.symmetric_eigenvalues().iter().map(|&v| Complex64::new(v, 0.0)).collect());
        }
    }
    let m = e.clone().lu().solve(a).ok_or_else(|| Error::Singular("E".into()))?;
    crate::shifts::eigenvalues(&m)
}

/// Dense `C^T C + A^T X E + E^T X A - E^T X B B^T X E`.
pub fn riccati_residual_dense(
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    let axe = a.transpose() * x * e;
    let xbe = b.transpose() * x * e;
    c.transpose() * c + &axe + axe.transpose() - xbe.transpose() * xbe
}

/// Dense Newton-Kleinman for the ARE from `X = 0` with halving damping when the
/// residual grows. Assumes `(A, E)` is stable.
pub fn dense_are(a: &DMatrix<f64>, e: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    check_square("A", a, n)?;
    check_square("E", e, n)?;
    if b.nrows() != n || c.ncols() != n {
        return Err(dim_err("B must have n rows and C n columns"));
    }
    let ctc = c.transpose() * c;
    let target = 1e-12 * ctc.norm();
    let mut x = DMatrix::zeros(n, n);
    let mut res = riccati_residual_dense(a, e, b, c, &x).norm();
    if res <= target {
        return Ok(x);
    }
    let mut stalled = 0;
    for _ in 0..100 {
        let k = b.transpose() * &x * e;
        let ak = a - b * &k;
        let w = &ctc + k.transpose() * &k;
        let next = dense_lyapunov(&ak.transpose(), &e.transpose(), &w)?;
        let mut step = 1.0;
        let mut cand = next.clone();
        let mut cres = riccati_residual_dense(a, e, b, c, &cand).norm();
        while cres > res && step > 1e-3 {
            step *= 0.5;
            cand = &x + (&next - &x) * step;
            cres = riccati_residual_dense(a, e, b, c, &cand).norm();
        }
        if cres >= 0.5 * res {
            stalled += 1;
        } else {
            stalled = 0;
        }
        x = (&cand + cand.transpose()) * 0.5;
        res = cres;
        if res <= target {
            return Ok(x);
        }
        // roundoff floor reached
        if stalled >= 3 && res <= 1e-9 * ctc.norm() {
            return Ok(x);
        }
    }
    Err(Error::NonConvergence(format!("dense Newton stopped at residual {res:e}")))
}

/// Right-hand side of `E^T X' E = Ricc(X)`, solved for `X'`.
fn dre_rhs(
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    einv: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> DMatrix<f64> {
    let r = riccati_residual_dense(a, e, b, c, x);
    let out = einv.transpose() * r * einv;
    (&out + out.transpose()) * 0.5
}

/// Classical RK4 for `E^T X' E = Ricc(X)` with `E^T X(t_0) E = C^T C`,
/// sampled on `t_grid` (first entry is `t_0`). The internal step is at most
/// 1/200 of each grid interval and below an explicit stability bound.
pub fn dense_dre_reference(
    a: &DMatrix<f64>,
    e: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    t_grid: &[f64],
) -> Result<Vec<DMatrix<f64>>> {
    let n = a.nrows();
    check_square("A", a, n)?;
    check_square("E", e, n)?;
    if t_grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    let e_lu = e.clone().lu();
    if !e_lu.is_invertible() {
        return Err(Error::Singular("E".into()));
    }
    let ctc = c.transpose() * c;
    let einv = e_lu.solve(&DMatrix::identity(n, n)).unwrap();
    let mut x = einv.transpose() * ctc * &einv;
    x = (&x + x.transpose()) * 0.5;
    let rho = generalized_eigenvalues(a, e)?.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let coupling = (b.transpose() * &einv).norm_squared() * x.norm();
    let h_stable = 1.0 / (2.0 * rho + 2.0 * coupling).max(f64::MIN_POSITIVE);
    let mut out = vec![x.clone()];
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let h_max = (span / 200.0).min(h_stable);
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = dre_rhs(a, e, &einv, b, c, &x);
            let k2 = dre_rhs(a, e, &einv, b, c, &(&x + &k1 * (h / 2.0)));
            let k3 = dre_rhs(a, e, &einv, b, c, &(&x + &k2 * (h / 2.0)));
            let k4 = dre_rhs(a, e, &einv, b, c, &(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// `max |l - conj(alpha)| / |l + alpha|` over the eigenvalues of the pencil.
pub fn cayley_radius_from_spectrum(spectrum: &[Complex64], alpha: Complex64) -> Result<f64> {
    let mut worst = 0.0f64;
    for &l in spectrum {
        let den = (l + alpha).norm();
        if den <= 1e-14 * (l.norm() + alpha.norm()) {
            return Err(Error::SingularShift { alpha });
        }
        worst = worst.max((l - alpha.conj()).norm() / den);
    }
    Ok(worst)
}

/// Spectral radius of the Cayley transformation `(A + alpha E)^{-1} (A - conj(alpha) E)`.
pub fn cayley_radius(a: &DMatrix<f64>, e: &DMatrix<f64>, alpha: Complex64) -> Result<f64> {
    cayley_radius_from_spectrum(&generalized_eigenvalues(a, e)?, alpha)
}

/// Per-shift Cayley radii, their running products, and Penzl's greedy product
/// `prod_{i<k} |a_k - a_i| / |a_k + a_i|` along a shift order.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyReport {
    pub shifts: Vec<Complex64>,
    pub radii: Vec<f64>,
    pub rho_hat: Vec<f64>,
    pub penzl: Vec<f64>,
}

pub fn rho_hat_from_spectrum(spectrum: &[Complex64], shifts: &[Complex64]) -> Result<CayleyReport> {
    let mut radii = Vec::with_capacity(shifts.len());
    let mut rho_hat = Vec::with_capacity(shifts.len());
    let mut penzl = Vec::with_capacity(shifts.len());
    let mut acc = 1.0;
    for (k, &s) in shifts.iter().enumerate() {
        let r = cayley_radius_from_spectrum(spectrum, s)?;
        acc *= r;
        radii.push(r);
        rho_hat.push(acc);
        penzl.push(penzl_product(s, &shifts[..k]));
    }
    Ok(CayleyReport { shifts: shifts.to_vec(), radii, rho_hat, penzl })
}

pub fn rho_hat_curve(a: &DMatrix<f64>, e: &DMatrix<f64>, shifts: &[Complex64]) -> Result<CayleyReport> {
    rho_hat_from_spectrum(&generalized_eigenvalues(a, e)?, shifts)
}

/// Dense Cayley matrix `(A + alpha E)^{-1} (A - conj(alpha) E)`.
pub fn cayley_matrix(a: &DMatrix<f64>, e: &DMatrix<f64>, alpha: Complex64) -> Result<DMatrix<Complex64>> {
    let ac = a.map(|v| Complex64::new(v, 0.0));
    let ec = e.map(|v| Complex64::new(v, 0.0));
    let lhs = &ac + &ec * alpha;
    let rhs = &ac - &ec * alpha.conj();
    lhs.lu().solve(&rhs).ok_or(Error::SingularShift { alpha })
}
