use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{laplacian, OperatorKind, StateGraph};
use crate::error::{Error, Result};
use crate::parallel::Parallelism;

const RESIDUAL_LIMIT: f64 = 1e-8;
const SIGN_THRESHOLD: f64 = 1e-12;
/// Eigenvalues closer than this are ordered by eigenvector shape instead.
pub const EIGEN_TIE_TOLERANCE: f64 = 1e-9;
const MAX_INVERSE_STEPS: usize = 8;
const MAX_BISECTION_STEPS: usize = 256;

/// The `k` smallest eigenpairs of a symmetric operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `n x k`, orthonormal columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub operator_kind: Option<OperatorKind>,
}

impl EigenSystem {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn dimension(&self) -> usize {
        self.eigenvectors.nrows()
    }

    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.eigenvectors.column(i).into_owned()
    }
}

/// Symmetric tridiagonal form `A = Q T Q^T`, with `Q` kept as Householder
/// reflectors stored below the diagonal of `a` (column-major).
struct Tridiagonal {
    n: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    a: Vec<f64>,
    beta: Vec<f64>,
}

impl Tridiagonal {
    fn reduce(m: &DMatrix<f64>, par: Parallelism) -> Self {
        let n = m.nrows();
        let mut a = m.as_slice().to_vec();
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        let mut beta = vec![0.0; n.saturating_sub(1)];
        for j in 0..n.saturating_sub(1) {
            let col = &a[j * n..(j + 1) * n];
            diag[j] = col[j];
            let x0 = col[j + 1];
            let tail2: f64 = col[j + 2..].iter().map(|x| x * x).sum();
            if tail2 == 0.0 {
                off[j] = x0;
                continue;
            }
            let norm = (x0 * x0 + tail2).sqrt();
            let alpha = -norm.copysign(x0);
            let b = 1.0 / (norm * (norm + x0.abs()));
            let mut v = col[j + 1..].to_vec();
            v[0] = x0 - alpha;
            off[j] = alpha;
            beta[j] = b;

            let m_len = n - j - 1;
            let trailing = &a[(j + 1) * n..];
            let p: Vec<f64> = par.map(m_len, |i| {
                let c = &trailing[i * n + j + 1..(i + 1) * n];
                b * c.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>()
            });
            let half = 0.5 * b * p.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
            let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - half * vi).collect();
            par.for_each_chunk(&mut a[(j + 1) * n..], n, |i, c| {
                let (vi, wi) = (v[i], w[i]);
                for ((x, vr), wr) in c[j + 1..].iter_mut().zip(&v).zip(&w) {
                    *x -= vr * wi + wr * vi;
                }
            });
            a[j * n + j + 1..(j + 1) * n].copy_from_slice(&v);
        }
        if n > 0 {
            diag[n - 1] = a[n * n - 1];
        }
        Tridiagonal {
            n,
            diag,
            off,
            a,
            beta,
        }
    }

    fn one_norm(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let right = self.off.get(i).map_or(0.0, |e| e.abs());
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Maximal unreduced diagonal blocks as `(start, end)` ranges.
    fn blocks(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 0..self.off.len() {
            let e = self.off[i].abs();
            if e <= f64::EPSILON * (self.diag[i].abs() + self.diag[i + 1].abs()) {
                out.push((start, i + 1));
                start = i + 1;
            }
        }
        if self.n > 0 {
            out.push((start, self.n));
        }
        out
    }

    /// `y <- Q y`.
    fn back_transform(&self, y: &mut [f64], support_end: usize) {
        let n = self.n;
        for j in (0..n.saturating_sub(1)).rev() {
            if self.beta[j] == 0.0 || j + 1 >= support_end {
                continue;
            }
            let v = &self.a[j * n + j + 1..(j + 1) * n];
            let tail = &mut y[j + 1..];
            let s = self.beta[j] * v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>();
            if s != 0.0 {
                for (t, vi) in tail.iter_mut().zip(v) {
                    *t -= s * vi;
                }
            }
        }
    }
}

/// One unreduced block of the tridiagonal matrix.
struct Block<'a> {
    d: &'a [f64],
    e: &'a [f64],
    e2: Vec<f64>,
    pivmin: f64,
}

impl<'a> Block<'a> {
    fn new(d: &'a [f64], e: &'a [f64]) -> Self {
        let e2: Vec<f64> = e.iter().map(|x| x * x).collect();
        let max_e2 = e2.iter().copied().fold(1.0, f64::max);
        Block {
            d,
            e,
            e2,
            pivmin: f64::MIN_POSITIVE * max_e2,
        }
    }

    fn len(&self) -> usize {
        self.d.len()
    }

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            q = if i == 0 {
                self.d[0] - x
            } else {
                self.d[i] - x - self.e2[i - 1] / q
            };
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.len() {
            let r = if i > 0 { self.e[i - 1].abs() } else { 0.0 }
                + self.e.get(i).map_or(0.0, |x| x.abs());
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        let pad = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + 2.0 * self.pivmin;
        (lo - pad, hi + pad)
    }

    /// The `count` smallest eigenvalues by Sturm-sequence bisection.
    fn smallest(&self, count: usize, scale: f64) -> Vec<f64> {
        if self.len() == 1 {
            return vec![self.d[0]];
        }
        let (glo, ghi) = self.gershgorin();
        (0..count)
            .map(|i| {
                let (mut lo, mut hi) = (glo, ghi);
                for _ in 0..MAX_BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    let tol = f64::EPSILON * (2.0 * lo.abs().max(hi.abs()) + scale);
                    if hi - lo <= tol || mid <= lo || mid >= hi {
                        break;
                    }
                    if self.count_below(mid) > i {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                0.5 * (lo + hi)
            })
            .collect()
    }

    fn residual(&self, x: &[f64], lambda: f64) -> f64 {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut r = (self.d[i] - lambda) * x[i];
                if i > 0 {
                    r += self.e[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    r += self.e[i] * x[i + 1];
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Eigenvectors for the given ascending eigenvalues of this block.
    fn inverse_iteration(&self, eigenvalues: &[f64], scale: f64) -> Vec<Vec<f64>> {
        let m = self.len();
        if m == 1 {
            return vec![vec![1.0]];
        }
        let cluster_gap = 1e-3 * scale;
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        let tol = 16.0 * m as f64 * f64::EPSILON * scale;
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(eigenvalues.len());
        let mut cluster_start = 0;
        let mut prev_shift = f64::NEG_INFINITY;
        for (j, &lambda) in eigenvalues.iter().enumerate() {
            if j > 0 && lambda - eigenvalues[j - 1] >= cluster_gap {
                cluster_start = j;
            }
            let mut shift = lambda;
            if j > cluster_start && shift <= prev_shift {
                shift = prev_shift + 10.0 * f64::EPSILON * prev_shift.abs().max(scale);
            }
            prev_shift = shift;

            let lu = TridiagonalLu::factor(self.d, self.e, shift, tiny);
            let mut rng = ChaCha8Rng::seed_from_u64(j as u64);
            let mut x: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            normalize(&mut x);
            for step in 0..MAX_INVERSE_STEPS {
                lu.solve(&mut x);
                for _ in 0..2 {
                    for prev in &vectors[cluster_start..j] {
                        let c: f64 = prev.iter().zip(&x).map(|(a, b)| a * b).sum();
                        for (xi, pi) in x.iter_mut().zip(prev) {
                            *xi -= c * pi;
                        }
                    }
                }
                normalize(&mut x);
                if step >= 1 && self.residual(&x, lambda) <= tol {
                    break;
                }
            }
            vectors.push(x);
        }
        vectors
    }
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return;
    }
    x.iter_mut().for_each(|v| *v /= scale);
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

/// LU factorisation with partial pivoting of `T - shift I`.
struct TridiagonalLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagonalLu {
    fn factor(d: &[f64], e: &[f64], shift: f64, tiny: f64) -> Self {
        let m = d.len();
        let mut u0 = vec![0.0; m];
        let mut u1 = vec![0.0; m];
        let mut u2 = vec![0.0; m];
        let mut mult = vec![0.0; m.saturating_sub(1)];
        let mut swapped = vec![false; m.saturating_sub(1)];
        let (mut p, mut q, mut r) = (d[0] - shift, e.first().copied().unwrap_or(0.0), 0.0);
        for i in 0..m - 1 {
            let s = e[i];
            let t = d[i + 1] - shift;
            let u = e.get(i + 1).copied().unwrap_or(0.0);
            if p.abs() >= s.abs() {
                if p == 0.0 {
                    p = tiny;
                }
                let l = s / p;
                (u0[i], u1[i], u2[i]) = (p, q, r);
                mult[i] = l;
                (p, q, r) = (t - l * q, u - l * r, 0.0);
            } else {
                let l = p / s;
                (u0[i], u1[i], u2[i]) = (s, t, u);
                mult[i] = l;
                swapped[i] = true;
                (p, q, r) = (q - l * t, r - l * u, 0.0);
            }
        }
        u0[m - 1] = if p == 0.0 { tiny } else { p };
        TridiagonalLu {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, y: &mut [f64]) {
        let m = y.len();
        for i in 0..m - 1 {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        for i in (0..m).rev() {
            let mut v = y[i];
            if i + 1 < m {
                v -= self.u1[i] * y[i + 1];
            }
            if i + 2 < m {
                v -= self.u2[i] * y[i + 2];
            }
            y[i] = v / self.u0[i];
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Input(format!("{}x{} matrix is not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input("matrix has non-finite entries".into()));
    }
    let tol = 1e-12 * m.amax().max(1.0);
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::Input(format!(
                    "matrix is not symmetric at ({i}, {j}): {} vs {}",
                    m[(i, j)],
                    m[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

pub fn smallest_eigenpairs(m: &DMatrix<f64>, k: usize) -> Result<EigenSystem> {
    smallest_eigenpairs_with(m, k, Parallelism::default())
}

/// The `k` smallest eigenpairs of symmetric `m`.
///
/// Each eigenvector's first component above `1e-12` in magnitude is
/// positive. Eigenvalues within [`EIGEN_TIE_TOLERANCE`] of each other are
/// ordered by the first index of their eigenvector's largest component.
pub fn smallest_eigenpairs_with(
    m: &DMatrix<f64>,
    k: usize,
    par: Parallelism,
) -> Result<EigenSystem> {
    check_symmetric(m)?;
    let n = m.nrows();
    if k == 0 || k > n {
        return Err(Error::Input(format!("k = {k} outside 1..={n}")));
    }
    let tri = Tridiagonal::reduce(m, par);
    let scale = tri.one_norm();
    let blocks = tri.blocks();

    // Merge the smallest eigenvalues of every block.
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut block_values = Vec::with_capacity(blocks.len());
    for (b, &(lo, hi)) in blocks.iter().enumerate() {
        let block = Block::new(&tri.diag[lo..hi], &tri.off[lo..hi - 1]);
        let vals = block.smallest(k.min(hi - lo), scale);
        candidates.extend(vals.iter().enumerate().map(|(i, &v)| (v, b, i)));
        block_values.push(vals);
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    candidates.truncate(k);

    let mut wanted = vec![0usize; blocks.len()];
    for &(_, b, i) in &candidates {
        wanted[b] = wanted[b].max(i + 1);
    }
    let mut block_vectors: Vec<Vec<Vec<f64>>> = Vec::with_capacity(blocks.len());
    for (b, &(lo, hi)) in blocks.iter().enumerate() {
        if wanted[b] == 0 {
            block_vectors.push(Vec::new());
            continue;
        }
        let block = Block::new(&tri.diag[lo..hi], &tri.off[lo..hi - 1]);
        block_vectors.push(block.inverse_iteration(&block_values[b][..wanted[b]], scale));
    }

    let mut columns: Vec<Vec<f64>> = par.map(k, |c| {
        let (_, b, i) = candidates[c];
        let (lo, hi) = blocks[b];
        let mut y = vec![0.0; n];
        y[lo..hi].copy_from_slice(&block_vectors[b][i]);
        tri.back_transform(&mut y, hi);
        normalize(&mut y);
        if let Some(first) = y.iter().find(|x| x.abs() > SIGN_THRESHOLD) {
            if *first < 0.0 {
                y.iter_mut().for_each(|x| *x = -*x);
            }
        }
        y
    });
    let eigenvalues: Vec<f64> = candidates.iter().map(|c| c.0).collect();
    order_ties(&eigenvalues, &mut columns);

    let eigenvectors = DMatrix::from_fn(n, k, |r, c| columns[c][r]);
    let residuals: Vec<f64> = par.map(k, |c| {
        let v = eigenvectors.column(c);
        (m * v - v * eigenvalues[c]).amax()
    });
    if let Some((c, r)) = residuals
        .iter()
        .enumerate()
        .find(|(_, r)| !(**r < RESIDUAL_LIMIT))
    {
        return Err(Error::Numeric(format!(
            "eigenpair {c} (lambda = {:e}) has residual {r:e} after at most {MAX_INVERSE_STEPS} \
             inverse-iteration steps; limit {RESIDUAL_LIMIT:e}",
            eigenvalues[c]
        )));
    }
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        operator_kind: None,
    })
}

fn peak_index(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

/// Values stay ascending; tied vectors are permuted.
fn order_ties(values: &[f64], vectors: &mut [Vec<f64>]) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end] - values[end - 1] < EIGEN_TIE_TOLERANCE {
            end += 1;
        }
        if end - start > 1 {
            let mut idx: Vec<usize> = (start..end).collect();
            idx.sort_by_key(|&i| peak_index(&vectors[i]));
            let vecs: Vec<Vec<f64>> = idx.iter().map(|&i| vectors[i].clone()).collect();
            for (slot, v) in vectors[start..end].iter_mut().zip(vecs) {
                *slot = v;
            }
        }
        start = end;
    }
}

/// The `k` lowest-order eigenfunctions of a graph operator.
pub fn laplacian_eigensystem(
    graph: &StateGraph,
    kind: OperatorKind,
    k: usize,
    par: Parallelism,
) -> Result<EigenSystem> {
    let mut sys = smallest_eigenpairs_with(&laplacian(graph, kind), k, par)?;
    sys.operator_kind = Some(kind);
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        &a + a.transpose()
    }

    fn assert_orthonormal(v: &DMatrix<f64>) {
        let g = v.transpose() * v;
        assert_relative_eq!(g, DMatrix::identity(v.ncols(), v.ncols()), epsilon = 1e-8);
    }

    #[test]
    fn matches_reference_decomposition() {
        for (n, seed) in [(1, 0), (2, 1), (7, 2), (40, 3)] {
            let m = random_symmetric(n, seed);
            let mut reference: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            reference.sort_by(f64::total_cmp);
            let sys = smallest_eigenpairs(&m, n).unwrap();
            for (a, b) in sys.eigenvalues.iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            assert_orthonormal(&sys.eigenvectors);
        }
    }

    #[test]
    fn identity_gives_unit_eigenvalues() {
        let sys = smallest_eigenpairs(&DMatrix::identity(5, 5), 3).unwrap();
        assert_eq!(sys.eigenvalues, vec![1.0; 3]);
        assert_orthonormal(&sys.eigenvectors);
        assert_eq!(sys.vector(0).as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn diagonal_with_repeats() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0, 1.0]));
        let sys = smallest_eigenpairs(&m, 4).unwrap();
        assert_eq!(sys.eigenvalues, vec![1.0, 1.0, 2.0, 3.0]);
        assert_eq!(sys.vector(0).as_slice(), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(sys.vector(1).as_slice(), &[0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn sign_convention_holds() {
        let sys = smallest_eigenpairs(&random_symmetric(12, 9), 12).unwrap();
        for c in 0..12 {
            let v = sys.vector(c);
            let first = v.iter().find(|x| x.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn rejects_invalid_input() {
        let mut m = DMatrix::identity(3, 3);
        assert!(smallest_eigenpairs(&m, 0).is_err());
        assert!(smallest_eigenpairs(&m, 4).is_err());
        m[(0, 1)] = 1e-6;
        assert!(matches!(smallest_eigenpairs(&m, 1), Err(Error::Input(_))));
        assert!(smallest_eigenpairs(&DMatrix::zeros(2, 3), 1).is_err());
        m[(0, 1)] = f64::NAN;
        assert!(smallest_eigenpairs(&m, 1).is_err());
    }

    #[test]
    fn zero_matrix() {
        let sys = smallest_eigenpairs(&DMatrix::zeros(3, 3), 2).unwrap();
        assert_eq!(sys.eigenvalues, vec![0.0, 0.0]);
        assert_orthonormal(&sys.eigenvectors);
    }

    #[test]
    fn laplacian_eigensystem_tags_kind() {
        let g = StateGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let sys = laplacian_eigensystem(&g, OperatorKind::Normalized, 2, Parallelism::Sequential).unwrap();
        assert_eq!(sys.operator_kind, Some(OperatorKind::Normalized));
        assert!(sys.eigenvalues[0].abs() < 1e-10);
    }

    #[test]
    fn strategies_bit_identical() {
        let m = random_symmetric(60, 4);
        let a = smallest_eigenpairs_with(&m, 10, Parallelism::Sequential).unwrap();
        let b = smallest_eigenpairs_with(&m, 10, Parallelism::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
