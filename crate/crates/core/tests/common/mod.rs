//! Independent reference implementations shared by the integration tests.
//! Everything here works on plain dense `Vec<Vec<f64>>` and does not call
//! into the crate's numeric kernels.

#![allow(dead_code)]

use gcr::config::{GcrConfig, Variant};
use gcr::features::{FeatureSet, RowMeta, Split};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<f64>>;

pub struct Draws(ChaCha8Rng);

impl Draws {
    pub fn new(seed: u64) -> Self {
        Draws(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

pub fn meta_for(cams: &[u32]) -> Vec<RowMeta> {
    cams.iter()
        .enumerate()
        .map(|(i, &c)| RowMeta {
            person_id: i as i64,
            camera_id: c,
            tracklet_id: i as u32,
            split: if i % 3 == 0 { Split::Query } else { Split::Gallery },
        })
        .collect()
}

/// Random feature set with `n` rows, clustered so neighborhoods matter.
pub fn random_set(rng: &mut Draws, n: usize, d: usize, cameras: u32) -> FeatureSet {
    let clusters = (n / 5).max(1);
    let centers: Dense = (0..clusters)
        .map(|_| (0..d).map(|_| rng.normal()).collect())
        .collect();
    let mut data = Vec::with_capacity(n * d);
    let mut cams = Vec::with_capacity(n);
    for i in 0..n {
        let c = &centers[rng.range(0, clusters - 1)];
        data.extend(c.iter().map(|v| v + 0.5 * rng.normal()));
        cams.push((i as u32) % cameras);
    }
    FeatureSet::new(data, d, meta_for(&cams)).unwrap()
}

pub fn to_dense(fs: &FeatureSet) -> Dense {
    (0..fs.len()).map(|i| fs.row(i).to_vec()).collect()
}

pub fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Brute-force k-NN: sort every eligible candidate by (distance, index).
pub fn brute_knn(x: &Dense, k: usize, cams: Option<&[u32]>) -> Vec<Vec<usize>> {
    (0..x.len())
        .map(|i| {
            let mut c: Vec<(f64, usize)> = (0..x.len())
                .filter(|&j| j != i && cams.is_none_or(|c| c[i] != c[j]))
                .map(|j| (sq(&x[i], &x[j]), j))
                .collect();
            c.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            c.into_iter().take(k).map(|p| p.1).collect()
        })
        .collect()
}

/// Dense `A` with unit diagonal and kernel weights on the listed neighbors.
pub fn dense_adjacency(x: &Dense, lists: &[Vec<usize>], gamma: f64) -> Dense {
    let n = x.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        a[i][i] = 1.0;
        for &j in &lists[i] {
            a[i][j] = (-sq(&x[i], &x[j]) / gamma).exp();
        }
    }
    a
}

pub fn transpose_avg(a: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (a[i][j] + a[j][i])).collect())
        .collect()
}

/// `D_row^-1/2 A D_col^-1/2 X` with dense matrices.
pub fn normalized_product(a: &Dense, x: &Dense) -> Dense {
    let n = a.len();
    let d = x[0].len();
    let row: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..n).map(|j| (0..n).map(|i| a[i][j]).sum()).collect();
    let mut out = vec![vec![0.0; d]; n];
    for i in 0..n {
        for j in 0..n {
            let c = a[i][j] / (row[i].sqrt() * col[j].sqrt());
            for m in 0..d {
                out[i][m] += c * x[j][m];
            }
        }
    }
    out
}

/// Center row of the normalized product over the dense graph on `{i} ∪ N_i`.
pub fn local_product(x: &Dense, lists: &[Vec<usize>], gamma: f64) -> Dense {
    let d = x[0].len();
    (0..x.len())
        .map(|i| {
            let mut members = vec![i];
            members.extend(&lists[i]);
            let m = members.len();
            let w: Dense = (0..m)
                .map(|u| {
                    (0..m)
                        .map(|v| {
                            if u == v {
                                1.0
                            } else {
                                (-sq(&x[members[u]], &x[members[v]]) / gamma).exp()
                            }
                        })
                        .collect()
                })
                .collect();
            let deg: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
            let mut out = vec![0.0; d];
            for v in 0..m {
                let c = w[0][v] / (deg[0] * deg[v]).sqrt();
                for k in 0..d {
                    out[k] += c * x[members[v]][k];
                }
            }
            out
        })
        .collect()
}

fn normalize(x: &mut Dense) {
    for r in x {
        let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.iter_mut().for_each(|v| *v /= n);
    }
}

/// Dense re-implementation of the full iteration; returns `X_1 .. X_T`.
pub fn oracle_gcr(fs: &FeatureSet, cfg: &GcrConfig) -> Vec<Dense> {
    let cams: Vec<u32> = fs.meta().iter().map(|m| m.camera_id).collect();
    let mut x = to_dense(fs);
    if cfg.pre_normalize {
        normalize(&mut x);
    }
    let n = x.len();
    let kg = cfg.k_g.min(n - 1);
    let kc = cfg.k_c.min(n - 1);
    let mut out = Vec::new();
    for _ in 0..cfg.iterations {
        let term = |lists: Vec<Vec<usize>>| -> Dense {
            match cfg.variant {
                Variant::Nonsym => normalized_product(&dense_adjacency(&x, &lists, cfg.gamma), &x),
                Variant::Sym => normalized_product(
                    &transpose_avg(&dense_adjacency(&x, &lists, cfg.gamma)),
                    &x,
                ),
                Variant::Local => local_product(&x, &lists, cfg.gamma),
            }
        };
        let g = term(brute_knn(&x, kg, None));
        let c = term(brute_knn(&x, kc, Some(&cams)));
        let mut next: Dense = g
            .iter()
            .zip(&c)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(u, v)| cfg.alpha * u + (1.0 - cfg.alpha) * v)
                    .collect()
            })
            .collect();
        if cfg.renormalize {
            normalize(&mut next);
        }
        x = next.clone();
        out.push(next);
    }
    out
}

pub fn rel_frobenius(a: &Dense, b: &[f64]) -> f64 {
    let flat: Vec<f64> = a.iter().flatten().copied().collect();
    assert_eq!(flat.len(), b.len());
    let num: f64 = flat.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let den: f64 = flat.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

/// Minimizes `(1/n)|X v - z|^2 + lambda |v|^2` by gradient descent with
/// step `1/L`, `L` from a power-iteration bound on `X^T X / n`.
pub fn ridge_by_descent(x: &Dense, z: &[f64], lambda: f64, tol: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let d = x[0].len();
    let apply = |v: &[f64]| -> Vec<f64> {
        let xv: Vec<f64> = x.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
        let mut g = vec![0.0; d];
        for (r, s) in x.iter().zip(&xv) {
            for m in 0..d {
                g[m] += r[m] * s / n;
            }
        }
        g
    };
    let mut p = vec![1.0; d];
    let mut top = 0.0;
    for _ in 0..200 {
        let q = apply(&p);
        let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        top = norm / p.iter().map(|v| v * v).sum::<f64>().sqrt();
        p = q.iter().map(|v| v / norm).collect();
    }
    // power iteration approaches the top eigenvalue from below
    let step = 1.0 / (2.0 * (1.1 * top + lambda));
    let mut b = vec![0.0; d];
    for (r, s) in x.iter().zip(z) {
        for m in 0..d {
            b[m] += r[m] * s / n;
        }
    }
    let mut v = vec![0.0; d];
    for _ in 0..1_000_000 {
        let hv = apply(&v);
        let grad: Vec<f64> = (0..d).map(|m| 2.0 * (hv[m] + lambda * v[m] - b[m])).collect();
        if grad.iter().map(|g| g.abs()).fold(0.0, f64::max) < tol {
            break;
        }
        v.iter_mut().zip(&grad).for_each(|(a, g)| *a -= step * g);
    }
    v
}

/// Exact AP over a hit pattern.
pub fn rational_ap(hits: &[bool]) -> Option<BigRational> {
    let positives = hits.iter().filter(|&&h| h).count() as i64;
    if positives == 0 {
        return None;
    }
    let mut found = 0i64;
    let mut sum = BigRational::from_integer(0.into());
    for (r, &h) in hits.iter().enumerate() {
        if h {
            found += 1;
            sum += BigRational::new(found.into(), (r as i64 + 1).into());
        }
    }
    Some(sum / BigRational::from_integer(positives.into()))
}

pub fn ratio_f64(r: BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// One query at the origin (1-D) whose gallery, in distance order, reads
/// `hits`. A same-camera copy of the query and a distractor are interleaved
/// and must be ignored by the protocol.
pub fn hit_pattern_set(hits: &[bool]) -> FeatureSet {
    let mut data = vec![0.0, 0.5, 1.5];
    let mut meta = vec![
        RowMeta { person_id: 0, camera_id: 0, tracklet_id: 0, split: Split::Query },
        RowMeta { person_id: 0, camera_id: 0, tracklet_id: 1, split: Split::Gallery },
        RowMeta { person_id: -1, camera_id: 1, tracklet_id: 2, split: Split::Gallery },
    ];
    for (r, &h) in hits.iter().enumerate() {
        data.push(r as f64 + 1.0);
        meta.push(RowMeta {
            person_id: if h { 0 } else { 1000 + r as i64 },
            camera_id: 1,
            tracklet_id: 3 + r as u32,
            split: Split::Gallery,
        });
    }
    FeatureSet::new(data, 1, meta).unwrap()
}

pub fn hand_patterns() -> Vec<Vec<bool>> {
    let p = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<bool>>();
    [
        "101", "1", "01", "001", "110", "0101", "10001", "0011", "111", "0100110",
    ]
    .iter()
    .map(|s| p(s))
    .collect()
}
