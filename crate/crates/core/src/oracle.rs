//! Dense reference linear algebra: cyclic Jacobi for symmetric matrices,
//! LU determinants, and Sturm bisection for symmetric tridiagonal matrices.
//!
//! Nothing here knows about trees or groups; it is the independent check for
//! every closed-form spectrum in the crate.

use crate::error::{Error, Result};

/// Default largest matrix order accepted by the dense routines.
pub const DENSE_BUDGET: usize = 4096;

/// Default relative off-diagonal tolerance for Jacobi.
pub const DEFAULT_TOL: f64 = 1e-14;

const MAX_SWEEPS: usize = 60;

/// A real symmetric matrix in row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSymmetricMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseSymmetricMatrix {
    /// Accepts row-major `data`, rejecting asymmetry above `1e-14 * max|a_ij|`
    /// and symmetrizing what remains.
    pub fn new(n: usize, mut data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
        }
        check_budget(n)?;
        let scale = data.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-14 * scale {
                    return Err(Error::InvalidParams(format!("matrix not symmetric at ({i},{j}): {a} vs {b}")));
                }
                let avg = 0.5 * (a + b);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(DenseSymmetricMatrix { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        DenseSymmetricMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseSymmetricMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        DenseSymmetricMatrix::new(n, data)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets `a_ij` and `a_ji`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to `a_ij` (and to `a_ji` when `i != j`).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        DenseSymmetricMatrix { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += c;
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// Matrix product, for tests of algebraic identities.
    pub fn mul(&self, other: &DenseSymmetricMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }
}

fn off_norm_sq(n: usize, a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += a[i * n + j] * a[i * n + j];
        }
    }
    2.0 * s
}

fn check_budget(n: usize) -> Result<()> {
    if n > DENSE_BUDGET {
        return Err(Error::BudgetExceeded { what: "dense matrix order", size: n, limit: DENSE_BUDGET });
    }
    Ok(())
}

/// Eigenvalues (ascending) and, optionally, orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[j]` belongs to `values[j]`; empty when not requested.
    pub vectors: Vec<Vec<f64>>,
}

/// All eigenvalues, sorted ascending.
pub fn symmetric_eigenvalues(mat: &DenseSymmetricMatrix, tol: f64) -> Result<Vec<f64>> {
    Ok(jacobi(mat, tol, false)?.values)
}

/// Eigenvalues with eigenvectors, sorted ascending.
pub fn symmetric_eigen(mat: &DenseSymmetricMatrix, tol: f64) -> Result<SymmetricEigen> {
    jacobi(mat, tol, true)
}

/// Cyclic Jacobi in round-robin order with Rutishauser's rotation formulas.
///
/// Each round pairs every index with exactly one partner, so its `n/2`
/// rotations commute and are applied together: one pass over the rows for
/// `J^T A`, one for `A J`. Both passes touch memory contiguously. Iteration
/// stops once the off-diagonal Frobenius norm is at most `tol * ||A||_F`.
fn jacobi(mat: &DenseSymmetricMatrix, tol: f64, want_vectors: bool) -> Result<SymmetricEigen> {
    let n = mat.n;
    let mut a = mat.data.clone();
    // rows of `vt` are the eigenvectors
    let mut vt = if want_vectors { DenseSymmetricMatrix::identity(n).data } else { Vec::new() };
    let target = (tol * mat.frobenius_norm()).powi(2);
    // tournament seats; an odd order gets a dummy player `n`
    let players = n + n % 2;
    let mut seats: Vec<usize> = (0..players).collect();
    let mut rotations: Vec<(usize, usize, f64, f64)> = Vec::with_capacity(players / 2);
    let mut sweeps = 0;
    let mut off = off_norm_sq(n, &a);
    while off > target {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off: off.sqrt() });
        }
        sweeps += 1;
        // entries this small cannot affect convergence to the target
        let skip = (target / (n * n) as f64).sqrt() * 1e-3;
        for _round in 0..players.saturating_sub(1) {
            rotations.clear();
            for i in 0..players / 2 {
                let (p, q) = (seats[i].min(seats[players - 1 - i]), seats[i].max(seats[players - 1 - i]));
                if q >= n {
                    continue;
                }
                let apq = a[p * n + q];
                if apq.abs() <= skip {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                rotations.push((p, q, c, t * c));
            }
            if !rotations.is_empty() {
                apply_round(&mut a, n, &rotations, true);
                if want_vectors {
                    apply_round(&mut vt, n, &rotations, false);
                }
            }
            seats[1..].rotate_right(1);
        }
        off = off_norm_sq(n, &a);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors =
        if want_vectors { order.iter().map(|&i| vt[i * n..(i + 1) * n].to_vec()).collect() } else { Vec::new() };
    Ok(SymmetricEigen { values, vectors })
}

/// Row pairs `(x_p, x_q) <- (c x_p - s x_q, s x_p + c x_q)`, then (when
/// `both_sides`) the same map on column pairs of every row.
fn apply_round(a: &mut [f64], n: usize, rotations: &[(usize, usize, f64, f64)], both_sides: bool) {
    for &(p, q, c, s) in rotations {
        let (lo, hi) = a.split_at_mut(q * n);
        let row_p = &mut lo[p * n..(p + 1) * n];
        let row_q = &mut hi[..n];
        for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
            let (g, h) = (*x, *y);
            *x = c * g - s * h;
            *y = s * g + c * h;
        }
    }
    if !both_sides {
        return;
    }
    for row in a.chunks_exact_mut(n) {
        for &(p, q, c, s) in rotations {
            let (g, h) = (row[p], row[q]);
            row[p] = c * g - s * h;
            row[q] = s * g + c * h;
        }
    }
    for &(p, q, _, _) in rotations {
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
    }
}

/// `(sign, ln|det|)` of a general square matrix by Gaussian elimination with
/// partial pivoting. A pivot below `1e-300` in magnitude yields sign `0` and
/// log-magnitude `-inf`.
pub fn determinant(n: usize, data: &[f64]) -> Result<(f64, f64)> {
    determinant_with_tol(n, data, 0.0)
}

/// As [`determinant`], but a pivot at most `rel_tol * max|a_ij|` also counts
/// as zero. Useful when the matrix is exactly singular and rounding leaves a
/// tiny pivot behind.
pub fn determinant_with_tol(n: usize, data: &[f64], rel_tol: f64) -> Result<(f64, f64)> {
    if data.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: data.len() });
    }
    check_budget(n)?;
    let scale = data.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let zero = f64::max(1e-300, rel_tol * scale);
    let mut a = data.to_vec();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for col in 0..n {
        let (piv, pmax) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax <= zero {
            return Ok((0.0, f64::NEG_INFINITY));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            sign = -sign;
        }
        let d = a[col * n + col];
        if d < 0.0 {
            sign = -sign;
        }
        log_abs += d.abs().ln();
        for r in (col + 1)..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[r * n + k] -= f * a[col * n + k];
            }
        }
    }
    Ok((sign, log_abs))
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `diag` and off-diagonal `off` (Sturm count).
pub fn tridiagonal_count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0f64;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by bisection
/// on Sturm counts to absolute accuracy `tol`.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64], tol: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    if off.len() + 1 != n && !(n == 0 && off.is_empty()) {
        return Err(Error::DimensionMismatch { expected: n.saturating_sub(1), found: off.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    // Gershgorin enclosure
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let (lo, hi) = (lo - tol, hi + tol);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        // smallest x with count_below(x) > j, i.e. the (j+1)-th eigenvalue
        let (mut a, mut b) = (lo, hi);
        if let Some(&prev) = out.last() {
            a = f64::max(a, prev - tol);
        }
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if tridiagonal_count_below(diag, off, mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

/// Number of eigenvalues strictly below `x` of the symmetric "ring" matrix:
/// tridiagonal with diagonal `diag`, off-diagonal `off`, plus `wrap` in the
/// corners `(0, n-1)` and `(n-1, 0)`. Requires `n >= 3`.
///
/// Symmetric elimination without pivoting only fills the last column, so the
/// inertia of `A - x` comes out of one `O(n)` pass.
pub fn ring_count_below(diag: &[f64], off: &[f64], wrap: f64, x: f64) -> usize {
    let n = diag.len();
    assert!(n >= 3 && off.len() + 1 == n);
    let guard = |q: f64, i: usize| {
        if q == 0.0 {
            -f64::EPSILON * (diag[i].abs() + x.abs() + 1.0)
        } else {
            q
        }
    };
    let mut count = 0;
    // `q` is the current pivot, `c` the current entry in the last column
    let mut q = guard(diag[0] - x, 0);
    let mut c = wrap;
    let mut last = diag[n - 1] - x;
    for i in 0..n - 2 {
        if q < 0.0 {
            count += 1;
        }
        last -= c * c / q;
        let next_c = if i + 1 == n - 2 { off[n - 2] } else { 0.0 };
        c = next_c - off[i] * c / q;
        q = guard(diag[i + 1] - x - off[i] * off[i] / q, i + 1);
    }
    if q < 0.0 {
        count += 1;
    }
    last -= c * c / q;
    if guard(last, n - 1) < 0.0 {
        count += 1;
    }
    count
}

/// All eigenvalues of a ring matrix (see [`ring_count_below`]), ascending, by
/// bisection to absolute accuracy `tol`.
pub fn ring_eigenvalues(diag: &[f64], off: &[f64], wrap: f64, tol: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(Error::InvalidParams(format!("ring matrix needs order >= 3, got {n}")));
    }
    if off.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, found: off.len() });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i == 0 { wrap } else { off[i - 1] };
        let right = if i + 1 == n { wrap } else { off[i] };
        let r = left.abs() + right.abs();
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let (lo, hi) = (lo - tol, hi + tol);
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let (mut a, mut b) = (lo, hi);
        if let Some(&prev) = out.last() {
            a = f64::max(a, prev - tol);
        }
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if ring_count_below(diag, off, wrap, mid) > j {
                b = mid;
            } else {
                a = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DenseSymmetricMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = DenseSymmetricMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let ev = symmetric_eigenvalues(&DenseSymmetricMatrix::identity(5), DEFAULT_TOL).unwrap();
        assert_eq!(ev, vec![1.0; 5]);
    }

    #[test]
    fn two_by_two_markov() {
        let m = DenseSymmetricMatrix::new(2, vec![3.0, 1.0, 1.0, 3.0]).unwrap().scaled(0.25);
        let ev = symmetric_eigenvalues(&m, DEFAULT_TOL).unwrap();
        assert!((ev[0] - 0.5).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_and_wrong_size() {
        assert!(DenseSymmetricMatrix::new(2, vec![1.0, 2.0, 0.0, 1.0]).is_err());
        assert!(DenseSymmetricMatrix::new(2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let m = random_symmetric(30, 7);
        let eig = symmetric_eigen(&m, DEFAULT_TOL).unwrap();
        for (lam, v) in eig.values.iter().zip(&eig.vectors) {
            let mv = m.matvec(v);
            let res: f64 = mv.iter().zip(v).map(|(a, b)| (a - lam * b).powi(2)).sum::<f64>().sqrt();
            assert!(res < 1e-12, "residual {res}");
        }
        for i in 0..30 {
            for j in 0..30 {
                let dot: f64 = eig.vectors[i].iter().zip(&eig.vectors[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_and_shift() {
        for seed in 0..5 {
            let m = random_symmetric(25, seed);
            let ev = symmetric_eigenvalues(&m, DEFAULT_TOL).unwrap();
            let s: f64 = ev.iter().sum();
            assert!((s - m.trace()).abs() < 1e-10 * m.frobenius_norm());
            let shifted = symmetric_eigenvalues(&m.shifted(2.5), DEFAULT_TOL).unwrap();
            for (a, b) in ev.iter().zip(&shifted) {
                assert!((a + 2.5 - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn determinant_basics() {
        assert_eq!(determinant(3, &DenseSymmetricMatrix::identity(3).data).unwrap(), (1.0, 0.0));
        let (s, l) = determinant(2, &[2.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(s, 1.0);
        assert!((l - 6f64.ln()).abs() < 1e-15);
        let (s, l) = determinant(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!((s, l), (-1.0, 0.0));
        assert_eq!(determinant(2, &[1.0, 2.0, 2.0, 4.0]).unwrap().0, 0.0);
    }

    #[test]
    fn determinant_matches_eigenvalue_product() {
        for seed in 10..15 {
            let m = random_symmetric(20, seed);
            let ev = symmetric_eigenvalues(&m, DEFAULT_TOL).unwrap();
            let sign = ev.iter().fold(1.0, |s, x| s * x.signum());
            let log: f64 = ev.iter().map(|x| x.abs().ln()).sum();
            let (ds, dl) = determinant(20, &m.data).unwrap();
            assert_eq!(ds, sign);
            assert!((dl - log).abs() < 1e-10 * log.abs().max(1.0));
        }
    }

    #[test]
    fn tridiagonal_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        off[10] = 0.0;
        let mut m = DenseSymmetricMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i, diag[i]);
            if i + 1 < n {
                m.set(i, i + 1, off[i]);
            }
        }
        let a = symmetric_eigenvalues(&m, DEFAULT_TOL).unwrap();
        let b = tridiagonal_eigenvalues(&diag, &off, 1e-13).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn ring_matches_jacobi() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [3usize, 4, 17, 40] {
            let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let wrap = rng.gen_range(-1.0..1.0);
            let mut m = DenseSymmetricMatrix::zeros(n);
            for i in 0..n {
                m.set(i, i, diag[i]);
                if i + 1 < n {
                    m.set(i, i + 1, off[i]);
                }
            }
            m.set(0, n - 1, wrap);
            let a = symmetric_eigenvalues(&m, DEFAULT_TOL).unwrap();
            let b = ring_eigenvalues(&diag, &off, wrap, 1e-13).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn budget_enforced() {
        assert!(matches!(
            determinant(DENSE_BUDGET + 1, &vec![0.0; (DENSE_BUDGET + 1).pow(2)]),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
