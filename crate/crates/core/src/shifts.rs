//! ADI shift parameters.
//!
//! Two families are provided:
//!
//! * Penzl's heuristic `heur(l0, k+, k-)`: Ritz values from `k+` plain Arnoldi
//!   steps with `E^{-1} A` and `k-` steps with `A^{-1} E` are filtered to the open
//!   left half-plane and `l0` of them are picked greedily.
//! * Projection shifts `V(u)`: eigenvalues of the pencil projected onto the span
//!   of the most recent `u` increment blocks, ordered by Penzl's greedy rule or
//!   by real part.
//!
//! Every emitted [`ShiftSequence`] has strictly negative real parts and keeps
//! conjugate pairs adjacent (`+Im` first), which the real double-step requires.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pencil::ShiftedSolver;

/// Ordering applied to a set of shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftOrder {
    /// Penzl's greedy order.
    Heuristic,
    /// Decreasing real part, i.e. increasing magnitude for real negative shifts.
    Decreasing,
    /// Increasing real part.
    Increasing,
}

impl ShiftOrder {
    fn label(self) -> &'static str {
        match self {
            ShiftOrder::Heuristic => "heur",
            ShiftOrder::Decreasing => "decr",
            ShiftOrder::Increasing => "incr",
        }
    }
}

/// How a sequence was produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyTag {
    Heuristic { l0: usize, k_plus: usize, k_minus: usize },
    Projection { u: usize, order: ShiftOrder },
    Fixed,
}

/// Ordered shifts with negative real parts and adjacent conjugate pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSequence {
    values: Vec<Complex64>,
    tag: StrategyTag,
}

impl ShiftSequence {
    /// Validates the sequence invariants.
    pub fn new(values: Vec<Complex64>, tag: StrategyTag) -> Result<Self> {
        let mut i = 0;
        while i < values.len() {
            let a = values[i];
            if !(a.re < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "shift {a} does not have a negative real part"
                )));
            }
            if a.im != 0.0 {
                match values.get(i + 1) {
                    Some(&b) if b == a.conj() => i += 2,
                    _ => return Err(Error::UnpairedShift(a)),
                }
            } else {
                i += 1;
            }
        }
        Ok(Self { values, tag })
    }

    pub fn fixed(values: Vec<Complex64>) -> Result<Self> {
        Self::new(values, StrategyTag::Fixed)
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::fixed(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn tag(&self) -> StrategyTag {
        self.tag
    }

    /// Always true for a constructed sequence; kept as an explicit certificate.
    pub fn pair_adjacent(&self) -> bool {
        true
    }
}

/// Shift strategy selected for a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum ShiftStrategy {
    Heuristic { l0: usize, k_plus: usize, k_minus: usize, seed: u64 },
    Projection { u: usize, order: ShiftOrder },
    Fixed(ShiftSequence),
}

impl ShiftStrategy {
    pub fn heuristic(l0: usize, k_plus: usize, k_minus: usize) -> Self {
        ShiftStrategy::Heuristic { l0, k_plus, k_minus, seed: DEFAULT_ARNOLDI_SEED }
    }

    pub fn projection(u: usize, order: ShiftOrder) -> Self {
        ShiftStrategy::Projection { u, order }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ShiftStrategy::Heuristic { l0, k_plus, k_minus, .. } => {
                ShiftStrategy::Heuristic { l0, k_plus, k_minus, seed }
            }
            other => other,
        }
    }
}

impl fmt::Display for ShiftStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShiftStrategy::Heuristic { l0, k_plus, k_minus, .. } => write!(f, "heur:{l0},{k_plus},{k_minus}"),
            ShiftStrategy::Projection { u, order } => write!(f, "proj:{}:{u}", order.label()),
            ShiftStrategy::Fixed(s) => write!(f, "fixed:{}", s.len()),
        }
    }
}

impl FromStr for ShiftStrategy {
    type Err = Error;

    /// Parses `heur:l0,kp,km` or `proj:{heur|decr|incr}:u`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown shift strategy '{s}'"));
        let mut parts = s.trim().splitn(2, ':');
        match (parts.next(), parts.next()) {
            (Some("heur"), Some(rest)) => {
                let nums: Vec<usize> = rest
                    .split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?;
                match nums.as_slice() {
                    &[l0, kp, km] if l0 > 0 && kp + km > 0 => Ok(Self::heuristic(l0, kp, km)),
                    _ => Err(bad()),
                }
            }
            (Some("proj"), Some(rest)) => {
                let mut it = rest.split(':');
                let order = match it.next() {
                    Some("heur") => ShiftOrder::Heuristic,
                    Some("decr") => ShiftOrder::Decreasing,
                    Some("incr") => ShiftOrder::Increasing,
                    _ => return Err(bad()),
                };
                let u = match it.next() {
                    None => 2,
                    Some(x) => x.trim().parse::<usize>().map_err(|_| bad())?,
                };
                if u == 0 || it.next().is_some() {
                    return Err(bad());
                }
                Ok(Self::projection(u, order))
            }
            _ => Err(bad()),
        }
    }
}

/// Seed of the Arnoldi start vector when none is given.
pub const DEFAULT_ARNOLDI_SEED: u64 = 0x5eed_ad1;

/// Plain Arnoldi for `steps` iterations; returns the eigenvalues of the
/// Hessenberg matrix. Stops early on breakdown.
pub fn arnoldi_ritz<F>(mut apply: F, start: &DVector<f64>, steps: usize) -> Result<Vec<Complex64>>
where
    F: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = start.len();
    let steps = steps.min(n);
    if steps == 0 {
        return Err(Error::InvalidArgument("Arnoldi needs at least one step".into()));
    }
    let norm = start.norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("Arnoldi start vector is zero".into()));
    }
    let mut basis: Vec<DVector<f64>> = vec![start / norm];
    let mut h = DMatrix::<f64>::zeros(steps + 1, steps);
    let mut size = steps;
    for j in 0..steps {
        let mut w = apply(&basis[j])?;
        let wnorm = w.norm();
        for (i, q) in basis.iter().enumerate() {
            let hij = q.dot(&w);
            h[(i, j)] = hij;
            w.axpy(-hij, q, 1.0);
        }
        let next = w.norm();
        h[(j + 1, j)] = next;
        if next <= 1e-12 * wnorm.max(f64::MIN_POSITIVE) {
            size = j + 1;
            break;
        }
        if j + 1 < steps {
            basis.push(w / next);
        }
    }
    eigenvalues(&h.view((0, 0), (size, size)).into_owned())
}

/// Eigenvalues of a small real matrix.
pub(crate) fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    // clustered spectra sometimes stall the QR iteration at machine epsilon
    for eps in [f64::EPSILON, 16.0 * f64::EPSILON] {
        if let Some(schur) = nalgebra::Schur::try_new(m.clone(), eps, 100_000) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Eigen)
}

enum Unit {
    Real(f64),
    Pair(Complex64),
}

impl Unit {
    fn rep(&self) -> Complex64 {
        match *self {
            Unit::Real(x) => Complex64::new(x, 0.0),
            Unit::Pair(z) => z,
        }
    }

    fn emit(&self, out: &mut Vec<Complex64>) {
        match *self {
            Unit::Real(x) => out.push(Complex64::new(x, 0.0)),
            Unit::Pair(z) => {
                out.push(z);
                out.push(z.conj());
            }
        }
    }
}

// Groups a conjugation-closed list into real values and conjugate pairs.
fn pair_units(values: &[Complex64]) -> Result<Vec<Unit>> {
    let mut units = Vec::new();
    let mut lower: Vec<Option<Complex64>> = Vec::new();
    let mut upper = Vec::new();
    for &v in values {
        if v.im == 0.0 || v.im.abs() <= 1e-14 * v.re.abs() {
            units.push(Unit::Real(v.re));
        } else if v.im > 0.0 {
            upper.push(v);
        } else {
            lower.push(Some(v));
        }
    }
    for z in upper {
        let best = lower
            .iter()
            .enumerate()
            .filter_map(|(i, w)| w.map(|w| (i, (w - z.conj()).norm())))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, d)) if d <= 1e-8 * z.norm() => {
                let w = lower[i].take().unwrap();
                let re = 0.5 * (z.re + w.re);
                let im = 0.5 * (z.im - w.im);
                units.push(Unit::Pair(Complex64::new(re, im)));
            }
            _ => return Err(Error::UnpairedShift(z)),
        }
    }
    if let Some(w) = lower.into_iter().flatten().next() {
        return Err(Error::UnpairedShift(w));
    }
    Ok(units)
}

/// Sorts a conjugation-closed list so that pairs stay adjacent with `+Im` first.
/// Real-part orders use `|Im|` as secondary key.
pub fn sort_conjugate_adjacent(values: &[Complex64], order: ShiftOrder) -> Result<Vec<Complex64>> {
    let mut units = pair_units(values)?;
    match order {
        ShiftOrder::Heuristic => {
            let reps: Vec<Complex64> = units.iter().map(Unit::rep).collect();
            let idx = penzl_order(&reps, values, reps.len());
            let mut out = Vec::with_capacity(values.len());
            for i in idx {
                units[i].emit(&mut out);
            }
            Ok(out)
        }
        ShiftOrder::Decreasing | ShiftOrder::Increasing => {
            units.sort_by(|a, b| {
                let (a, b) = (a.rep(), b.rep());
                let primary = if order == ShiftOrder::Increasing {
                    a.re.total_cmp(&b.re)
                } else {
                    b.re.total_cmp(&a.re)
                };
                primary.then(a.im.abs().total_cmp(&b.im.abs()))
            });
            let mut out = Vec::with_capacity(values.len());
            for u in &units {
                u.emit(&mut out);
            }
            Ok(out)
        }
    }
}

/// Spectral radius bound `max_l |l - conj(a)| / |l + a|` over a candidate set.
pub fn cayley_bound(alpha: Complex64, set: &[Complex64]) -> f64 {
    set.iter()
        .map(|&l| (l - alpha.conj()).norm() / (l + alpha).norm())
        .fold(0.0, f64::max)
}

/// Penzl's greedy product `prod_i |l - a_i| / |l + a_i|`.
pub fn penzl_product(lambda: Complex64, chosen: &[Complex64]) -> f64 {
    chosen.iter().map(|&a| (lambda - a).norm() / (lambda + a).norm()).product()
}

// Greedy selection on units (by representative); returns unit indices.
fn penzl_order(reps: &[Complex64], all: &[Complex64], l0: usize) -> Vec<usize> {
    let mut taken = vec![false; reps.len()];
    let mut chosen: Vec<Complex64> = Vec::new();
    let mut order = Vec::new();
    let first = (0..reps.len())
        .min_by(|&a, &b| cayley_bound(reps[a], all).total_cmp(&cayley_bound(reps[b], all)));
    let Some(first) = first else { return order };
    let push = |i: usize, taken: &mut Vec<bool>, chosen: &mut Vec<Complex64>, order: &mut Vec<usize>| {
        taken[i] = true;
        order.push(i);
        chosen.push(reps[i]);
        if reps[i].im != 0.0 {
            chosen.push(reps[i].conj());
        }
    };
    push(first, &mut taken, &mut chosen, &mut order);
    while chosen.len() < l0 {
        let next = (0..reps.len())
            .filter(|&i| !taken[i])
            .max_by(|&a, &b| penzl_product(reps[a], &chosen).total_cmp(&penzl_product(reps[b], &chosen)));
        match next {
            Some(i) => push(i, &mut taken, &mut chosen, &mut order),
            None => break,
        }
    }
    order
}

/// Penzl's greedy choice of `l0` shifts from a candidate set. The first shift
/// minimizes the Cayley bound over the candidates; each further shift is the
/// candidate where the product of the chosen rational factors is largest.
/// Non-real picks bring their conjugate along, so the result may hold `l0 + 1` values.
pub fn penzl_select(candidates: &[Complex64], l0: usize) -> Result<ShiftSequence> {
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("empty shift candidate list".into()));
    }
    if l0 == 0 {
        return Err(Error::InvalidArgument("l0 must be positive".into()));
    }
    let units = pair_units(candidates)?;
    let reps: Vec<Complex64> = units.iter().map(Unit::rep).collect();
    let mut out = Vec::new();
    for i in penzl_order(&reps, candidates, l0) {
        units[i].emit(&mut out);
    }
    ShiftSequence::new(out, StrategyTag::Fixed)
}

fn stable_only(values: Vec<Complex64>) -> Vec<Complex64> {
    values.into_iter().filter(|v| v.re < 0.0 && v.re.is_finite() && v.im.is_finite()).collect()
}

/// Penzl's `heur(l0, k+, k-)` shifts for the pencil behind `solver`.
pub fn heuristic_shifts(
    solver: &mut ShiftedSolver<'_>,
    l0: usize,
    k_plus: usize,
    k_minus: usize,
    seed: u64,
) -> Result<ShiftSequence> {
    let pencil = solver.pencil();
    let n = pencil.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let mut candidates = Vec::new();
    if k_plus > 0 {
        let ritz = arnoldi_ritz(
            |x| {
                let ax = pencil.apply_a(&DMatrix::from_column_slice(n, 1, x.as_slice()));
                Ok(solver.solve_mass(&ax)?.column(0).into_owned())
            },
            &start,
            k_plus,
        )?;
        candidates.extend(ritz);
    }
    if k_minus > 0 {
        let ritz = arnoldi_ritz(
            |x| {
                let ex = pencil.apply_e(&DMatrix::from_column_slice(n, 1, x.as_slice()));
                Ok(solver.solve_real(0.0, &ex)?.column(0).into_owned())
            },
            &start,
            k_minus,
        )?;
        candidates.extend(ritz.into_iter().filter(|t| t.norm() > 0.0).map(|t| t.inv()));
    }
    let candidates = stable_only(candidates);
    if candidates.is_empty() {
        return Err(Error::NoStableShifts);
    }
    let seq = penzl_select(&candidates, l0)?;
    ShiftSequence::new(seq.values, StrategyTag::Heuristic { l0, k_plus, k_minus })
}

/// Orthonormal basis of the column span, dropping directions with relative
/// singular values below `1e-12`.
pub(crate) fn orthonormal_basis(v: &DMatrix<f64>) -> DMatrix<f64> {
    if v.ncols() == 0 || v.nrows() == 0 {
        return DMatrix::zeros(v.nrows(), 0);
    }
    let svd = v.clone().svd(true, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(v.nrows(), 0);
    }
    let u = svd.u.expect("requested");
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-12 * smax)
        .collect();
    u.select_columns(keep.iter())
}

/// Projection shifts from the span of `blocks`.
pub fn projection_shifts(
    solver: &mut ShiftedSolver<'_>,
    blocks: &[&DMatrix<f64>],
    u: usize,
    order: ShiftOrder,
) -> Result<ShiftSequence> {
    let pencil = solver.pencil();
    let n = pencil.n();
    let total: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut v = DMatrix::zeros(n, total);
    let mut c = 0;
    for b in blocks {
        v.columns_mut(c, b.ncols()).copy_from(b);
        c += b.ncols();
    }
    let q = orthonormal_basis(&v);
    if q.ncols() == 0 {
        return Err(Error::NoStableShifts);
    }
    let qt = q.transpose();
    let ka = &qt * pencil.apply_a(&q);
    let ma = &qt * pencil.apply_e(&q);
    let reduced = ma.lu().solve(&ka).ok_or_else(|| Error::Singular("projected mass matrix".into()))?;
    let vals = stable_only(eigenvalues(&reduced)?);
    if vals.is_empty() {
        return Err(Error::NoStableShifts);
    }
    let sorted = sort_conjugate_adjacent(&vals, order)?;
    ShiftSequence::new(sorted, StrategyTag::Projection { u, order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pencil::Pencil;
    use crate::sparse::SparseMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn sequence_invariants() {
        assert!(ShiftSequence::fixed(vec![c(-1.0, 2.0), c(-1.0, -2.0), c(-3.0, 0.0)]).is_ok());
        assert!(matches!(ShiftSequence::fixed(vec![c(-1.0, 2.0), c(-3.0, 0.0)]), Err(Error::UnpairedShift(_))));
        assert!(ShiftSequence::from_real(&[0.5]).is_err());
        assert!(ShiftSequence::from_real(&[0.0]).is_err());
    }

    #[test]
    fn arnoldi_on_diagonal_recovers_spectrum() {
        let d = DVector::from_vec(vec![-1.0, -2.0, -3.0]);
        let start = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let mut ritz = arnoldi_ritz(|x| Ok(d.component_mul(x)), &start, 3).unwrap();
        ritz.sort_by(|a, b| b.re.total_cmp(&a.re));
        for (r, e) in ritz.iter().zip([-1.0, -2.0, -3.0]) {
            assert!((r.re - e).abs() < 1e-10 * e.abs() && r.im.abs() < 1e-10);
        }
    }

    #[test]
    fn arnoldi_single_step_is_rayleigh_quotient() {
        let d = DVector::from_vec(vec![-1.0, -2.0, -3.0]);
        let start = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let ritz = arnoldi_ritz(|x| Ok(d.component_mul(x)), &start, 1).unwrap();
        assert_eq!(ritz.len(), 1);
        assert!((ritz[0].re + 2.0).abs() < 1e-14);
    }

    #[test]
    fn penzl_first_shift_is_brute_force_minimizer() {
        let cands = [c(-1.0, 0.0), c(-10.0, 0.0), c(-100.0, 0.0)];
        // brute force: for each alpha the worst ratio over the set
        let worst = |a: f64| {
            cands.iter().map(|l| ((l.re - a) / (l.re + a)).abs()).fold(0.0, f64::max)
        };
        let best = [-1.0, -10.0, -100.0].into_iter().min_by(|a, b| worst(*a).total_cmp(&worst(*b))).unwrap();
        assert_eq!(best, -10.0);
        let seq = penzl_select(&cands, 1).unwrap();
        assert_eq!(seq.values(), &[c(-10.0, 0.0)]);
    }

    #[test]
    fn penzl_single_and_exhaustive() {
        assert_eq!(penzl_select(&[c(-4.0, 0.0)], 3).unwrap().values(), &[c(-4.0, 0.0)]);
        let cands = [c(-1.0, 0.0), c(-2.0, 3.0), c(-2.0, -3.0), c(-7.0, 0.0), c(-0.5, 0.0)];
        let seq = penzl_select(&cands, 10).unwrap();
        assert_eq!(seq.len(), cands.len());
        for v in cands {
            assert!(seq.values().contains(&v));
        }
        assert!(penzl_select(&[], 2).is_err());
    }

    #[test]
    fn penzl_subsequent_shift_maximizes_product() {
        let cands = [c(-1.0, 0.0), c(-10.0, 0.0), c(-100.0, 0.0), c(-11.0, 0.0)];
        let seq = penzl_select(&cands, 2).unwrap();
        let first = seq.values()[0];
        let best = cands
            .iter()
            .filter(|&&v| v != first)
            .max_by(|a, b| penzl_product(**a, &[first]).total_cmp(&penzl_product(**b, &[first])))
            .unwrap();
        assert_eq!(seq.values()[1], *best);
    }

    #[test]
    fn conjugate_adjacent_sorting() {
        let vals = [c(-3.0, -4.0), c(-5.0, 0.0), c(-3.0, 4.0), c(-3.0, 0.0)];
        let incr = sort_conjugate_adjacent(&vals, ShiftOrder::Increasing).unwrap();
        assert_eq!(incr, vec![c(-5.0, 0.0), c(-3.0, 0.0), c(-3.0, 4.0), c(-3.0, -4.0)]);
        let decr = sort_conjugate_adjacent(&[c(-10.0, 0.0), c(-1.0, 0.0), c(-100.0, 0.0)], ShiftOrder::Decreasing).unwrap();
        assert_eq!(decr, vec![c(-1.0, 0.0), c(-10.0, 0.0), c(-100.0, 0.0)]);
        let pair = sort_conjugate_adjacent(&[c(-2.0, -1.0), c(-2.0, 1.0)], ShiftOrder::Decreasing).unwrap();
        assert_eq!(pair, vec![c(-2.0, 1.0), c(-2.0, -1.0)]);
        assert!(sort_conjugate_adjacent(&[c(-2.0, 1.0)], ShiftOrder::Increasing).is_err());
    }

    #[test]
    fn remark_example_spectrum() {
        // blockdiag([-3 4; -4 3], [-4 3; -3 4], [-3 2; -2 3], -5, -3) has
        // eigenvalues +-sqrt(7)i, +-sqrt(7), +-sqrt(5), -5, -3; the stable ones
        // and a stable conjugate pair sort with the pair kept together.
        let m = DMatrix::from_row_slice(
            7,
            7,
            &[
                -3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                -4.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, -4.0, 3.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, -3.0, 4.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, -3.0, 2.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, -2.0, 3.0, 0.0, //
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -5.0,
            ],
        );
        let vals = stable_only(eigenvalues(&m).unwrap());
        let sorted = sort_conjugate_adjacent(&vals, ShiftOrder::Increasing).unwrap();
        assert_eq!(sorted.len(), 3);
        assert_eq!(sorted[0], c(-5.0, 0.0));
        let with_pair = [vals.clone(), vec![c(-3.0, 4.0), c(-3.0, -4.0)]].concat();
        let sorted = sort_conjugate_adjacent(&with_pair, ShiftOrder::Increasing).unwrap();
        let i = sorted.iter().position(|v| *v == c(-3.0, 4.0)).unwrap();
        assert_eq!(sorted[i + 1], c(-3.0, -4.0));
    }

    #[test]
    fn strategy_parsing() {
        assert_eq!("heur:10,10,10".parse::<ShiftStrategy>().unwrap(), ShiftStrategy::heuristic(10, 10, 10));
        assert_eq!(
            "proj:decr:2".parse::<ShiftStrategy>().unwrap(),
            ShiftStrategy::projection(2, ShiftOrder::Decreasing)
        );
        assert_eq!("proj:incr".parse::<ShiftStrategy>().unwrap().to_string(), "proj:incr:2");
        for bad in ["heur:1,2", "proj:up:2", "wachspress", "heur:0,1,1", "proj:heur:0"] {
            assert!(bad.parse::<ShiftStrategy>().is_err(), "{bad}");
        }
    }

    #[test]
    fn projection_onto_invariant_subspace_gives_eigenvalues() {
        let a = SparseMatrix::from_diagonal(&[-1.0, -4.0, -9.0, -16.0]);
        let p = Pencil::new(a, SparseMatrix::identity(4)).unwrap();
        let mut s = ShiftedSolver::new(&p);
        let v = DMatrix::from_row_slice(4, 2, &[2.0, 0.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0]);
        let seq = projection_shifts(&mut s, &[&v], 2, ShiftOrder::Decreasing).unwrap();
        assert_eq!(seq.len(), 2);
        assert!((seq.values()[0].re + 1.0).abs() < 1e-10);
        assert!((seq.values()[1].re + 9.0).abs() < 1e-10);
        // scale invariance
        let seq2 = projection_shifts(&mut s, &[&(v * 1e3)], 2, ShiftOrder::Decreasing).unwrap();
        for (a, b) in seq.values().iter().zip(seq2.values()) {
            assert!((a - b).norm() <= 1e-10 * a.norm());
        }
    }
}
