//! Squared Euclidean distances and exact k-nearest-neighbor search.
//!
//! Large inputs are screened with a GEMM-based Gram product
//! (`|x|^2 + |y|^2 - 2 x.y`) and every surviving candidate is re-scored with
//! the direct sum of squared differences. The screening margin is a
//! rigorous rounding bound, so results equal a brute-force search with
//! ties broken toward the smaller index, independent of thread count.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Mutex;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rayon::prelude::*;

use crate::features::FeatureSet;

/// Rows per GEMM block.
pub(crate) const BLOCK_ROWS: usize = 256;

/// Rows per stripe of the symmetric screening product.
const STRIPE_ROWS: usize = 1024;

/// Rows whose locks are held together when feeding the mirrored half.
const TILE_ROWS: usize = 32;

/// Below this many `n * n * d` multiply-adds the exact path is used.
const SCREEN_MIN_WORK: usize = 1 << 24;

/// Beyond this magnitude `f32` screening could overflow.
const F32_SAFE_ABS: f64 = 1e15;

/// Direct `sum_m (a_m - b_m)^2` with a fixed accumulation order.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..4 {
            let t = x[l] - y[l];
            acc[l] += t * t;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let t = x - y;
        tail += t * t;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum()
}

/// One block of rows of the all-pairs squared distance matrix.
#[derive(Debug, Clone)]
pub struct DistanceBlock {
    pub row_start: usize,
    pub rows: usize,
    pub cols: usize,
    /// `rows x cols`, row-major.
    pub values: Vec<f64>,
}

impl DistanceBlock {
    pub fn get(&self, local_row: usize, col: usize) -> f64 {
        self.values[local_row * self.cols + col]
    }
}

/// Streams the exact all-pairs squared distance matrix in blocks of `block`
/// rows; the full `n x n` matrix is never held at once.
pub fn pairwise_sq_dist(fs: &FeatureSet, block: usize) -> impl Iterator<Item = DistanceBlock> + '_ {
    let n = fs.len();
    let block = block.max(1);
    (0..n).step_by(block).map(move |row_start| {
        let rows = block.min(n - row_start);
        let mut values = vec![0.0; rows * n];
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(r, out)| {
                let i = row_start + r;
                let xi = fs.row(i);
                for (j, o) in out.iter_mut().enumerate() {
                    *o = if i == j { 0.0 } else { sq_dist(xi, fs.row(j)) };
                }
            });
        DistanceBlock {
            row_start,
            rows,
            cols: n,
            values,
        }
    })
}

pub(crate) trait GemmScalar: faer::traits::RealField + Copy + Send + Sync + 'static {
    const UNIT_ROUNDOFF: f64;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl GemmScalar for f32 {
    const UNIT_ROUNDOFF: f64 = f32::EPSILON as f64 / 2.0;
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl GemmScalar for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}

/// Approximate distances from query rows to a fixed target set via GEMM.
pub(crate) struct GramScreen<T: GemmScalar> {
    targets: Mat<T>,
    target_norms: Vec<f64>,
    max_target_norm: f64,
    dim: usize,
}

impl<T: GemmScalar> GramScreen<T> {
    pub(crate) fn new(targets: &[f64], dim: usize) -> Self {
        let n = targets.len() / dim;
        let mat = Mat::from_fn(n, dim, |i, m| T::from_f64(targets[i * dim + m]));
        let target_norms: Vec<f64> = targets.chunks_exact(dim).map(sq_norm).collect();
        let max_target_norm = target_norms.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
        Self {
            targets: mat,
            target_norms,
            max_target_norm,
            dim,
        }
    }

    pub(crate) fn num_targets(&self) -> usize {
        self.target_norms.len()
    }

    /// Fills `out` (`rows x n_targets`, row-major) with approximate squared
    /// distances for the given query rows and returns, per row, a bound on
    /// `|approx - exact|` valid for every target.
    pub(crate) fn block(&self, queries: &[f64], out: &mut Vec<f64>) -> Vec<f64> {
        let dim = self.dim;
        let rows = queries.len() / dim;
        let nt = self.num_targets();
        let q = Mat::from_fn(dim, rows, |m, r| T::from_f64(queries[r * dim + m]));
        let mut gram = Mat::<T>::zeros(nt, rows);
        matmul(
            gram.as_mut(),
            Accum::Replace,
            self.targets.as_ref(),
            q.as_ref(),
            T::from_f64(1.0),
            Par::Seq,
        );
        out.clear();
        out.resize(rows * nt, 0.0);
        // |fl(x.y) - x.y| <= (2u + gamma_d) |x||y| covers input rounding and
        // accumulation; the final combination adds a few f64 ulps.
        let coef = 2.1 * (dim as f64 + 3.0) * T::UNIT_ROUNDOFF;
        let mut tol = Vec::with_capacity(rows);
        for r in 0..rows {
            let qrow = &queries[r * dim..(r + 1) * dim];
            let qn = sq_norm(qrow);
            let col = gram.col_as_slice(r);
            let dst = &mut out[r * nt..(r + 1) * nt];
            for ((d, &g), &tn) in dst.iter_mut().zip(col).zip(&self.target_norms) {
                *d = qn + tn - 2.0 * g.to_f64();
            }
            let m = self.max_target_norm;
            tol.push(
                coef * qn.sqrt() * m
                    + 8.0 * f64::EPSILON * (qn + m * m)
                    + dim as f64 * 1e-36,
            );
        }
        tol
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Tracks the k-th smallest value seen so far.
struct KthSmallest {
    k: usize,
    heap: BinaryHeap<Key>,
}

impl KthSmallest {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn bound(&self) -> f64 {
        if self.heap.len() < self.k {
            f64::INFINITY
        } else {
            self.heap.peek().map_or(f64::INFINITY, |k| k.0)
        }
    }

    #[inline]
    fn push(&mut self, v: f64) {
        if self.k == 0 {
            return;
        }
        if self.heap.len() < self.k {
            self.heap.push(Key(v));
        } else if v < self.bound() {
            self.heap.pop();
            self.heap.push(Key(v));
        }
    }
}

/// Per-row neighbor search request.
#[derive(Clone, Copy)]
pub(crate) struct Query<'a> {
    pub k: usize,
    /// When set, only rows on a different camera are candidates.
    pub cameras: Option<&'a [u32]>,
}

impl Query<'_> {
    #[inline]
    fn eligible(&self, i: usize, j: usize) -> bool {
        i != j && self.cameras.is_none_or(|c| c[i] != c[j])
    }
}

/// Picks the `k` eligible rows nearest to row `i` from exact distances.
fn select_row(i: usize, dist: &[f64], q: Query<'_>) -> Vec<usize> {
    let mut cand: Vec<(f64, usize)> = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| q.eligible(i, j))
        .map(|(j, &d)| (d, j))
        .collect();
    let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if q.k < cand.len() {
        cand.select_nth_unstable_by(q.k, by_key);
        cand.truncate(q.k);
    }
    cand.sort_by(by_key);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Streaming screen for one row and one query: keeps the approximate
/// k-th value and every candidate that could still fall inside the margin.
/// The surviving set depends only on the values pushed, not their order.
struct RowScreen {
    kth: KthSmallest,
    slack: f64,
    /// Values above this can never survive; tightens as the heap fills.
    limit: f64,
    cand: Vec<(f64, usize)>,
    cap: usize,
}

impl RowScreen {
    fn new(k: usize, slack: f64) -> Self {
        Self {
            kth: KthSmallest::new(k),
            slack,
            limit: if k == 0 { f64::NEG_INFINITY } else { f64::INFINITY },
            cand: Vec::new(),
            cap: 4 * k + 64,
        }
    }

    #[inline]
    fn push(&mut self, a: f64, j: usize) {
        if a > self.limit {
            return;
        }
        self.kth.push(a);
        self.limit = self.kth.bound() + self.slack;
        if a <= self.limit {
            self.cand.push((a, j));
            if self.cand.len() >= self.cap {
                let limit = self.limit;
                self.cand.retain(|c| c.0 <= limit);
                self.cap = self.cap.max(2 * self.cand.len());
            }
        }
    }

    fn finish(self, data: &[f64], dim: usize, i: usize) -> Vec<usize> {
        let threshold = self.kth.bound() + self.slack;
        let xi = &data[i * dim..(i + 1) * dim];
        let mut cand: Vec<(f64, usize)> = self
            .cand
            .into_iter()
            .filter(|c| c.0 <= threshold)
            .map(|(_, j)| (sq_dist(xi, &data[j * dim..(j + 1) * dim]), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        cand.truncate(self.kth.k);
        cand.into_iter().map(|(_, j)| j).collect()
    }
}

/// Screened search using one `f32` Gram entry per unordered pair: stripe
/// `s` multiplies its rows against rows `s..n`, feeds its own rows directly
/// and the later rows through the mirrored entries.
fn knn_screened(data: &[f64], dim: usize, queries: &[Query<'_>]) -> Vec<Vec<Vec<usize>>> {
    let n = data.len() / dim;
    let x = Mat::<f32>::from_fn(n, dim, |i, m| data[i * dim + m] as f32);
    let norms: Vec<f64> = data.chunks_exact(dim).map(sq_norm).collect();
    let m = norms.iter().fold(0.0f64, |a, &b| a.max(b)).sqrt();
    // same bound as `GramScreen::block`, doubled for the two-sided margin
    let coef = 2.1 * (dim as f64 + 3.0) * f32::UNIT_ROUNDOFF;
    let states: Vec<Mutex<Vec<RowScreen>>> = norms
        .iter()
        .map(|&qn| {
            let tol = coef * qn.sqrt() * m + 8.0 * f64::EPSILON * (qn + m * m) + dim as f64 * 1e-36;
            Mutex::new(queries.iter().map(|q| RowScreen::new(q.k, 2.0 * tol)).collect())
        })
        .collect();
    let starts: Vec<usize> = (0..n).step_by(STRIPE_ROWS).collect();
    starts.par_iter().for_each(|&start| {
        let rows = STRIPE_ROWS.min(n - start);
        let nt = n - start;
        let mut gram = Mat::<f32>::zeros(nt, rows);
        matmul(
            gram.as_mut(),
            Accum::Replace,
            x.as_ref().subrows(start, nt),
            x.as_ref().subrows(start, rows).transpose(),
            1.0f32,
            Par::Seq,
        );
        for r in 0..rows {
            let i = start + r;
            let mut st = states[i].lock().unwrap();
            for (t, &g) in gram.col_as_slice(r).iter().enumerate() {
                let j = start + t;
                let a = norms[i] + norms[j] - 2.0 * g as f64;
                for (s, q) in st.iter_mut().zip(queries) {
                    if q.eligible(i, j) {
                        s.push(a, j);
                    }
                }
            }
        }
        // locks are taken in ascending row order, so tiles cannot deadlock
        for lo in (rows..nt).step_by(TILE_ROWS) {
            let hi = (lo + TILE_ROWS).min(nt);
            let mut held: Vec<_> = (lo..hi).map(|t| states[start + t].lock().unwrap()).collect();
            for r in 0..rows {
                let i = start + r;
                for (st, (t, &g)) in held.iter_mut().zip(gram.col_as_slice(r)[lo..hi].iter().enumerate()) {
                    let j = start + lo + t;
                    let a = norms[i] + norms[j] - 2.0 * g as f64;
                    for (s, q) in st.iter_mut().zip(queries) {
                        if q.eligible(j, i) {
                            s.push(a, i);
                        }
                    }
                }
            }
        }
    });
    let per_row: Vec<Vec<Vec<usize>>> = states
        .into_par_iter()
        .enumerate()
        .map(|(i, st)| {
            st.into_inner()
                .unwrap()
                .into_iter()
                .map(|s| s.finish(data, dim, i))
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::with_capacity(n); queries.len()];
    for row_lists in per_row {
        for (q, list) in row_lists.into_iter().enumerate() {
            out[q].push(list);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Strategy {
    Exact,
    Screened,
}

impl Strategy {
    pub(crate) fn choose(data: &[f64], dim: usize) -> Self {
        let n = data.len() / dim;
        let max_abs = data.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        if n.saturating_mul(n).saturating_mul(dim) < SCREEN_MIN_WORK || max_abs > F32_SAFE_ABS {
            Strategy::Exact
        } else {
            Strategy::Screened
        }
    }
}

/// Runs several neighbor queries over the same rows, sharing one distance
/// evaluation per row block.
pub(crate) fn knn_multi(
    data: &[f64],
    dim: usize,
    queries: &[Query<'_>],
    strategy: Strategy,
) -> Vec<Vec<Vec<usize>>> {
    if strategy == Strategy::Screened {
        return knn_screened(data, dim, queries);
    }
    let n = data.len() / dim;
    let starts: Vec<usize> = (0..n).step_by(BLOCK_ROWS).collect();
    let blocks: Vec<Vec<Vec<Vec<usize>>>> = starts
        .par_iter()
        .map(|&start| {
            let rows = BLOCK_ROWS.min(n - start);
            (0..rows)
                .map(|r| {
                    let xi = &data[(start + r) * dim..(start + r + 1) * dim];
                    let row: Vec<f64> = (0..n).map(|j| sq_dist(xi, &data[j * dim..(j + 1) * dim])).collect();
                    queries
                        .iter()
                        .map(|&q| select_row(start + r, &row, q))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::with_capacity(n); queries.len()];
    for row_lists in blocks.into_iter().flatten() {
        for (q, list) in row_lists.into_iter().enumerate() {
            out[q].push(list);
        }
    }
    out
}

fn clamp_global(k: usize, n: usize) -> usize {
    let pool = n.saturating_sub(1);
    if k > pool {
        log::warn!("k={k} exceeds the {pool} available neighbors; clamping");
        pool
    } else {
        k
    }
}

/// The `k` nearest other rows of every row, nearest first; equal distances
/// go to the smaller index. `k` is clamped to `n - 1`.
pub fn knn_global(fs: &FeatureSet, k: usize) -> Vec<Vec<usize>> {
    let k = clamp_global(k, fs.len());
    let strategy = Strategy::choose(fs.data(), fs.dim());
    knn_multi(fs.data(), fs.dim(), &[Query { k, cameras: None }], strategy)
        .pop()
        .unwrap()
}

/// As [`knn_global`] but only rows from a different camera qualify. Rows
/// with fewer than `k` such candidates get all of them.
pub fn knn_cross_camera(fs: &FeatureSet, k: usize) -> Vec<Vec<usize>> {
    let cameras = fs.camera_ids();
    let k = clamp_global(k, fs.len());
    let strategy = Strategy::choose(fs.data(), fs.dim());
    let q = Query {
        k,
        cameras: Some(&cameras),
    };
    knn_multi(fs.data(), fs.dim(), &[q], strategy).pop().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{RowMeta, Split};
    use rand_chacha::rand_core::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fs_from(data: Vec<f64>, dim: usize, cams: &[u32]) -> FeatureSet {
        let meta = cams
            .iter()
            .enumerate()
            .map(|(i, &c)| RowMeta {
                person_id: i as i64,
                camera_id: c,
                tracklet_id: i as u32,
                split: Split::Gallery,
            })
            .collect();
        FeatureSet::new(data, dim, meta).unwrap()
    }

    fn random_data(n: usize, d: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * d)
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            .collect()
    }

    fn brute(data: &[f64], dim: usize, cams: Option<&[u32]>, k: usize) -> Vec<Vec<usize>> {
        let n = data.len() / dim;
        (0..n)
            .map(|i| {
                let mut c: Vec<(f64, usize)> = (0..n)
                    .filter(|&j| j != i && cams.is_none_or(|c| c[i] != c[j]))
                    .map(|j| {
                        let d: f64 = (0..dim)
                            .map(|m| (data[i * dim + m] - data[j * dim + m]).powi(2))
                            .sum();
                        (d, j)
                    })
                    .collect();
                c.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                c.into_iter().take(k).map(|x| x.1).collect()
            })
            .collect()
    }

    #[test]
    fn identical_and_orthonormal_pairs() {
        assert_eq!(sq_dist(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 0.0);
        assert_eq!(sq_dist(&[1.0, 0.0], &[0.0, 1.0]), 2.0);
    }

    #[test]
    fn pairwise_matches_double_loop() {
        let (n, d) = (50, 16);
        let data = random_data(n, d, 3);
        let fs = fs_from(data.clone(), d, &vec![0; n]);
        let mut seen = 0;
        for block in pairwise_sq_dist(&fs, 7) {
            for r in 0..block.rows {
                let i = block.row_start + r;
                for j in 0..n {
                    let mut oracle = 0.0;
                    for m in 0..d {
                        let t = data[i * d + m] - data[j * d + m];
                        oracle += t * t;
                    }
                    let got = block.get(r, j);
                    assert!((got - oracle).abs() <= 1e-9 * oracle.max(f64::MIN_POSITIVE));
                    if i == j {
                        assert_eq!(got, 0.0);
                    }
                }
                seen += 1;
            }
        }
        assert_eq!(seen, n);
    }

    #[test]
    fn line_example() {
        let fs = fs_from(vec![0.0, 1.0, 10.0], 1, &[0, 0, 0]);
        assert_eq!(knn_global(&fs, 1), vec![vec![1], vec![0], vec![1]]);
    }

    #[test]
    fn k_clamps_to_pool() {
        let fs = fs_from(vec![0.0, 1.0, 10.0], 1, &[0, 0, 0]);
        assert_eq!(knn_global(&fs, 3), vec![vec![1, 2], vec![0, 2], vec![1, 0]]);
    }

    #[test]
    fn duplicates_are_mutual_neighbors() {
        let fs = fs_from(vec![0.5, 0.5, 3.0, 0.5], 1, &[0, 0, 0, 0]);
        let nn = knn_global(&fs, 1);
        assert_eq!(nn[0], vec![1]);
        assert_eq!(nn[1], vec![0]);
        assert_eq!(nn[3], vec![0]);
    }

    #[test]
    fn cross_camera_single_camera_is_empty() {
        let fs = fs_from(vec![0.0, 1.0, 2.0], 1, &[4, 4, 4]);
        assert!(knn_cross_camera(&fs, 2).iter().all(|l| l.is_empty()));
    }

    #[test]
    fn cross_camera_two_rows() {
        let fs = fs_from(vec![0.0, 5.0], 1, &[0, 1]);
        for k in 1..4 {
            assert_eq!(knn_cross_camera(&fs, k), vec![vec![1], vec![0]]);
        }
    }

    #[test]
    fn cross_camera_matches_filtered_brute_force() {
        // 1-d positions chosen so same-camera rows are always nearer.
        let data = vec![0.0, 0.1, 1.0, 1.2, 3.0, 3.05];
        let cams = [0, 0, 1, 1, 0, 1];
        let fs = fs_from(data.clone(), 1, &cams);
        assert_eq!(knn_cross_camera(&fs, 2), brute(&data, 1, Some(&cams), 2));
        assert_eq!(knn_cross_camera(&fs, 1)[0], vec![2]);
    }

    #[test]
    fn screened_equals_exact_and_brute_force() {
        let (n, d) = (700, 48);
        let mut data = random_data(n, d, 11);
        // exact duplicates and an exact tie exercise the tie-break
        let r5: Vec<f64> = data[5 * d..6 * d].to_vec();
        data[9 * d..10 * d].copy_from_slice(&r5);
        data[600 * d..601 * d].copy_from_slice(&r5);
        let cams: Vec<u32> = (0..n as u32).map(|i| i % 3).collect();
        let qs = [
            Query { k: 10, cameras: None },
            Query { k: 4, cameras: Some(&cams) },
        ];
        let exact = knn_multi(&data, d, &qs, Strategy::Exact);
        let screened = knn_multi(&data, d, &qs, Strategy::Screened);
        assert_eq!(exact, screened);
        assert_eq!(exact[0], brute(&data, d, None, 10));
        assert_eq!(exact[1], brute(&data, d, Some(&cams), 4));
        assert_eq!(&exact[0][5][..2], &[9, 600]);
    }

    #[test]
    fn screened_spans_several_stripes() {
        let (n, d) = (2 * STRIPE_ROWS + 77, 12);
        let mut data = random_data(n, d, 21);
        let r3: Vec<f64> = data[3 * d..4 * d].to_vec();
        data[(n - 1) * d..].copy_from_slice(&r3);
        let cams: Vec<u32> = (0..n as u32).map(|i| i % 5).collect();
        let qs = [
            Query { k: 9, cameras: None },
            Query { k: 3, cameras: Some(&cams) },
            Query { k: 0, cameras: None },
        ];
        let screened = knn_multi(&data, d, &qs, Strategy::Screened);
        assert_eq!(screened, knn_multi(&data, d, &qs, Strategy::Exact));
        assert_eq!(screened[0][3][0], n - 1);
        assert_eq!(screened[0][n - 1][0], 3);
    }

    #[test]
    fn screened_handles_clustered_unit_vectors() {
        // tight clusters put many candidates inside the screening margin
        let (n, d) = (520, 64);
        let base = random_data(8, d, 5);
        let noise = random_data(n, d, 6);
        let mut data = vec![0.0; n * d];
        for i in 0..n {
            let c = i % 8;
            let row = &mut data[i * d..(i + 1) * d];
            for m in 0..d {
                row[m] = base[c * d + m] + 1e-4 * noise[i * d + m];
            }
            let norm = sq_norm(row).sqrt();
            row.iter_mut().for_each(|v| *v /= norm);
        }
        let qs = [Query { k: 15, cameras: None }];
        assert_eq!(
            knn_multi(&data, d, &qs, Strategy::Screened),
            knn_multi(&data, d, &qs, Strategy::Exact)
        );
    }
}
