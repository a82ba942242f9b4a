//! Sparse k-NN similarity graphs with Gaussian kernel weights.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::distance::sq_dist;
use crate::error::{Error, Result};
use crate::features::FeatureSet;

/// Kernel weight `exp(-sq_dist / gamma)`.
#[inline]
pub fn kernel(sq_dist: f64, gamma: f64) -> f64 {
    (-sq_dist / gamma).exp()
}

/// Sparse nonnegative `n x n` matrix in compressed-row form with explicit
/// unit self-loops and cached degree vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    row_degree: Vec<f64>,
    col_degree: Vec<f64>,
}

impl SimilarityGraph {
    /// Builds from per-row `(column, weight)` lists. Columns must be unique
    /// within a row; they are sorted here.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Shape(format!("row {i} repeats column {}", w[0].0)));
                }
            }
            for (j, w) in row {
                if j >= n {
                    return Err(Error::Shape(format!("row {i} references column {j} >= {n}")));
                }
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::Numeric(format!("weight ({i}, {j}) = {w}")));
                }
                cols.push(j);
                weights.push(w);
            }
            row_ptr.push(cols.len());
        }
        let mut g = Self {
            row_ptr,
            cols,
            weights,
            row_degree: Vec::new(),
            col_degree: Vec::new(),
        };
        g.compute_degrees();
        Ok(g)
    }

    fn compute_degrees(&mut self) {
        let n = self.n();
        self.row_degree = (0..n).map(|i| self.row(i).map(|(_, w)| w).sum()).collect();
        let mut col = vec![0.0; n];
        for i in 0..n {
            for (j, w) in self.row(i) {
                col[j] += w;
            }
        }
        self.col_degree = col;
    }

    pub fn n(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `(column, weight)` pairs of row `i`, ascending by column.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|p| self.weights[range.start + p])
    }

    pub fn row_degree(&self) -> &[f64] {
        &self.row_degree
    }

    pub fn col_degree(&self) -> &[f64] {
        &self.col_degree
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| self.row(i).all(|(j, w)| self.get(j, i) == Some(w)))
    }

    /// Dense row-major copy, for inspection and tests.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for (j, w) in self.row(i) {
                out[i * n + j] = w;
            }
        }
        out
    }

    /// Writes `i,j,weight` lines sorted by `(i, j)` with 17 significant digits.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let write = || -> std::io::Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            writeln!(w, "i,j,weight")?;
            for i in 0..self.n() {
                for (j, x) in self.row(i) {
                    writeln!(w, "{i},{j},{x:.16e}")?;
                }
            }
            w.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

/// Kernel graph from neighbor lists over raw row-major data.
pub(crate) fn similarity_from_lists(
    data: &[f64],
    dim: usize,
    neighbors: &[Vec<usize>],
    gamma: f64,
) -> Result<SimilarityGraph> {
    let n = data.len() / dim;
    if neighbors.len() != n {
        return Err(Error::Shape(format!(
            "{} neighbor lists for {n} rows",
            neighbors.len()
        )));
    }
    let row = |i: usize| &data[i * dim..(i + 1) * dim];
    let rows: Vec<Vec<(usize, f64)>> = neighbors
        .par_iter()
        .enumerate()
        .map(|(i, list)| {
            let mut entries = Vec::with_capacity(list.len() + 1);
            entries.push((i, 1.0));
            for &j in list {
                if j == i {
                    continue;
                }
                let w = kernel(sq_dist(row(i), row(j)), gamma);
                // exp underflow: the entry carries no weight
                if w > 0.0 {
                    entries.push((j, w));
                }
            }
            entries
        })
        .collect();
    SimilarityGraph::from_rows(rows)
}

/// Graph with `A[i][i] = 1` and `A[i][j] = exp(-|x_i - x_j|^2 / gamma)` for
/// each `j` in `neighbors[i]`.
pub fn build_similarity(
    fs: &FeatureSet,
    neighbors: &[Vec<usize>],
    gamma: f64,
) -> Result<SimilarityGraph> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Config(format!("gamma must be positive, got {gamma}")));
    }
    if let Some(&j) = neighbors.iter().flatten().find(|&&j| j >= fs.len()) {
        return Err(Error::Shape(format!("neighbor index {j} out of range")));
    }
    similarity_from_lists(fs.data(), fs.dim(), neighbors, gamma)
}

/// `(A + A^T) / 2` over the union sparsity pattern.
pub fn symmetrize(g: &SimilarityGraph) -> SimilarityGraph {
    let n = g.n();
    let mut transpose: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, w) in g.row(i) {
            transpose[j].push((i, w));
        }
    }
    let rows: Vec<Vec<(usize, f64)>> = transpose
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            // both sides are sorted by column: merge
            let mut out = Vec::with_capacity(g.row_len(i) + t.len());
            let mut a = g.row(i).peekable();
            let mut b = t.into_iter().peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (Some((ja, wa)), Some((jb, wb))) if ja == jb => {
                        out.push((ja, (wa + wb) / 2.0));
                        a.next();
                        b.next();
                    }
                    (Some((ja, wa)), Some((jb, _))) if ja < jb => {
                        out.push((ja, wa / 2.0));
                        a.next();
                    }
                    (Some(_), Some((jb, wb))) | (None, Some((jb, wb))) => {
                        out.push((jb, wb / 2.0));
                        b.next();
                    }
                    (Some((ja, wa)), None) => {
                        out.push((ja, wa / 2.0));
                        a.next();
                    }
                    (None, None) => break,
                }
            }
            out
        })
        .collect();
    SimilarityGraph::from_rows(rows).expect("symmetrized graph keeps a valid pattern")
}

/// Dense kernel graph over one row's neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGraph {
    pub center: usize,
    /// The center first, then its neighbors nearest first.
    pub member_ids: Vec<usize>,
    /// `m x m` row-major, `m = member_ids.len()`.
    pub weights: Vec<f64>,
}

impl LocalGraph {
    pub fn size(&self) -> usize {
        self.member_ids.len()
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.size() + v]
    }

    pub(crate) fn build(data: &[f64], dim: usize, center: usize, neighbors: &[usize], gamma: f64) -> Self {
        let mut member_ids = Vec::with_capacity(neighbors.len() + 1);
        member_ids.push(center);
        member_ids.extend(neighbors.iter().copied().filter(|&j| j != center));
        let m = member_ids.len();
        let row = |i: usize| &data[i * dim..(i + 1) * dim];
        let mut weights = vec![0.0; m * m];
        for u in 0..m {
            weights[u * m + u] = 1.0;
            for v in u + 1..m {
                let w = kernel(sq_dist(row(member_ids[u]), row(member_ids[v])), gamma);
                weights[u * m + v] = w;
                weights[v * m + u] = w;
            }
        }
        Self {
            center,
            member_ids,
            weights,
        }
    }
}

/// One [`LocalGraph`] per row over its `k` nearest neighbors (restricted
/// to other cameras when `camera_filter` is set) plus the row itself.
pub fn local_graphs(fs: &FeatureSet, k: usize, gamma: f64, camera_filter: bool) -> Vec<LocalGraph> {
    let lists = if camera_filter {
        crate::distance::knn_cross_camera(fs, k)
    } else {
        crate::distance::knn_global(fs, k)
    };
    lists
        .par_iter()
        .enumerate()
        .map(|(i, l)| LocalGraph::build(fs.data(), fs.dim(), i, l, gamma))
        .collect()
}
