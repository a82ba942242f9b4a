//! Euclidean retrieval and re-ID scoring (CMC, mAP).
//!
//! For each query, gallery rows sharing both its person id and camera are
//! excluded, as are distractors (`person_id == -1`). Positives are the
//! remaining rows with the query's person id. AP is the mean over positives
//! of `hits_so_far / rank`, without interpolation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{sq_dist, GramScreen, BLOCK_ROWS};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, Split};

pub const DEFAULT_CMC_LEN: usize = 50;

const SCREEN_MIN_WORK: usize = 1 << 22;

/// Gallery ordering for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub query_index: usize,
    /// Scored gallery rows, nearest first, ties to the smaller index.
    pub gallery_order: Vec<usize>,
    /// Gallery rows removed by the protocol, ascending.
    pub excluded: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rank1: f64,
    #[serde(rename = "mAP")]
    pub map: f64,
    pub cmc: Vec<f64>,
    pub num_queries: usize,
    pub skipped_queries: usize,
    /// AP of each scored query, in query order.
    pub per_query_ap: Vec<f64>,
    #[serde(default)]
    pub timings_ms: BTreeMap<String, f64>,
}

impl EvalReport {
    /// Aligned text table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16}{:>12}", "metric", "value");
        let _ = writeln!(s, "{:<16}{:>12.4}", "Rank-1", self.rank1);
        for m in [5usize, 10, 20] {
            if let Some(v) = self.cmc.get(m - 1) {
                let _ = writeln!(s, "{:<16}{:>12.4}", format!("Rank-{m}"), v);
            }
        }
        let _ = writeln!(s, "{:<16}{:>12.4}", "mAP", self.map);
        let _ = writeln!(s, "{:<16}{:>12}", "queries", self.num_queries);
        let _ = writeln!(s, "{:<16}{:>12}", "skipped", self.skipped_queries);
        for (stage, ms) in &self.timings_ms {
            let _ = writeln!(s, "{:<16}{:>12.1}", format!("{stage} ms"), ms);
        }
        s
    }
}

/// AP of a ranking given its hit pattern; `None` without positives.
pub fn average_precision(hits: &[bool]) -> Option<f64> {
    let mut found = 0usize;
    let mut sum = 0.0;
    for (r, &h) in hits.iter().enumerate() {
        if h {
            found += 1;
            sum += found as f64 / (r + 1) as f64;
        }
    }
    (found > 0).then(|| sum / found as f64)
}

struct QueryGallery {
    queries: Vec<usize>,
    gallery: Vec<usize>,
}

fn split_rows(fs: &FeatureSet) -> Result<QueryGallery> {
    let (queries, gallery): (Vec<usize>, Vec<usize>) =
        (0..fs.len()).partition(|&i| fs.meta()[i].split == Split::Query);
    if queries.is_empty() {
        return Err(Error::NoQueries);
    }
    if gallery.is_empty() {
        return Err(Error::NoGallery);
    }
    Ok(QueryGallery { queries, gallery })
}

fn gather(fs: &FeatureSet, rows: &[usize]) -> Vec<f64> {
    rows.iter().flat_map(|&i| fs.row(i).iter().copied()).collect()
}

/// Sorts gallery positions by exact distance, ties to the smaller position.
///
/// `approx` may be off by at most `tol`; any two entries whose true order
/// is inverted in `approx` sit within `2 * tol` of each other, so re-sorting
/// each run of such near-ties with exact distances restores the true order.
///
/// With a `cutoff`, entries whose approximate value exceeds it are left out;
/// the result is then the exact order of the kept entries, which is a
/// prefix of the full order whenever the cutoff lies `2 * tol` past the last
/// entry of interest.
fn exact_order(approx: &[f64], tol: f64, cutoff: f64, exact: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = approx
        .iter()
        .copied()
        .zip(0..)
        .filter(|k| k.0 <= cutoff)
        .collect();
    keyed.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut order: Vec<usize> = keyed.iter().map(|k| k.1).collect();
    if tol == 0.0 {
        return order;
    }
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && keyed[end].0 - keyed[end - 1].0 <= 2.0 * tol {
            end += 1;
        }
        if end - start > 1 {
            let mut run: Vec<(f64, usize)> = order[start..end].iter().map(|&p| (exact(p), p)).collect();
            run.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for (slot, (_, p)) in order[start..end].iter_mut().zip(run) {
                *slot = p;
            }
        }
        start = end;
    }
    order
}

/// Calls `f(query_position, sorted_gallery_positions)` for every query,
/// in parallel over query blocks; results come back in query order.
///
/// When `needed` is given, each order only runs until the last gallery
/// position `p` with `needed(query_position, p)`.
fn for_each_ranking<T: Send>(
    fs: &FeatureSet,
    split: &QueryGallery,
    needed: Option<&(dyn Fn(usize, usize) -> bool + Sync)>,
    f: impl Fn(usize, Vec<usize>) -> T + Sync,
) -> Vec<T> {
    let dim = fs.dim();
    let gallery = gather(fs, &split.gallery);
    let ng = split.gallery.len();
    let nq = split.queries.len();
    let screened = nq.saturating_mul(ng).saturating_mul(dim) >= SCREEN_MIN_WORK
        && fs.data().iter().all(|v| v.abs() < 1e150);
    let screen = screened.then(|| GramScreen::<f64>::new(&gallery, dim));
    let grow = |p: usize| &gallery[p * dim..(p + 1) * dim];
    let starts: Vec<usize> = (0..nq).step_by(BLOCK_ROWS).collect();
    starts
        .par_iter()
        .flat_map_iter(|&start| {
            let rows = BLOCK_ROWS.min(nq - start);
            let qrows = &split.queries[start..start + rows];
            let qdata = gather(fs, qrows);
            let mut approx = Vec::new();
            let tol = match &screen {
                Some(s) => s.block(&qdata, &mut approx),
                None => {
                    approx = Vec::with_capacity(rows * ng);
                    for r in 0..rows {
                        let q = &qdata[r * dim..(r + 1) * dim];
                        approx.extend((0..ng).map(|p| sq_dist(q, grow(p))));
                    }
                    vec![0.0; rows]
                }
            };
            (0..rows)
                .map(|r| {
                    let q = &qdata[r * dim..(r + 1) * dim];
                    let row = &approx[r * ng..(r + 1) * ng];
                    let cutoff = match needed {
                        Some(keep) => row
                            .iter()
                            .enumerate()
                            .filter(|&(p, _)| keep(start + r, p))
                            .fold(f64::NEG_INFINITY, |m, (_, &a)| m.max(a + 2.0 * tol[r])),
                        None => f64::INFINITY,
                    };
                    let order = exact_order(row, tol[r], cutoff, |p| sq_dist(q, grow(p)));
                    f(start + r, order)
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

fn is_excluded(fs: &FeatureSet, query: usize, g: usize) -> bool {
    let q = &fs.meta()[query];
    let m = &fs.meta()[g];
    m.is_distractor() || (m.person_id == q.person_id && m.camera_id == q.camera_id)
}

/// Ranks the gallery for every query row by squared Euclidean distance.
pub fn rank(fs: &FeatureSet) -> Result<Vec<RankedList>> {
    let split = split_rows(fs)?;
    Ok(for_each_ranking(fs, &split, None, |qp, order| {
        let query = split.queries[qp];
        let mut gallery_order = Vec::with_capacity(order.len());
        let mut excluded = Vec::new();
        for p in order {
            let g = split.gallery[p];
            if is_excluded(fs, query, g) {
                excluded.push(g);
            } else {
                gallery_order.push(g);
            }
        }
        excluded.sort_unstable();
        RankedList {
            query_index: query,
            gallery_order,
            excluded,
        }
    }))
}

pub fn evaluate(fs: &FeatureSet) -> Result<EvalReport> {
    evaluate_with(fs, DEFAULT_CMC_LEN)
}

/// [`evaluate`] with a CMC curve of `cmc_len` ranks (capped at the
/// gallery size).
pub fn evaluate_with(fs: &FeatureSet, cmc_len: usize) -> Result<EvalReport> {
    let started = std::time::Instant::now();
    let split = split_rows(fs)?;
    let cmc_len = cmc_len.clamp(1, split.gallery.len());
    // per query: (AP, rank of first positive) or None when nothing to find
    // AP and CMC only look at the ranking up to the last true match
    let is_match = |qp: usize, p: usize| {
        let query = split.queries[qp];
        let g = split.gallery[p];
        !is_excluded(fs, query, g) && fs.meta()[g].person_id == fs.meta()[query].person_id
    };
    let scored: Vec<Option<(f64, usize)>> = for_each_ranking(fs, &split, Some(&is_match), |qp, order| {
        let query = split.queries[qp];
        let pid = fs.meta()[query].person_id;
        let hits: Vec<bool> = order
            .into_iter()
            .map(|p| split.gallery[p])
            .filter(|&g| !is_excluded(fs, query, g))
            .map(|g| fs.meta()[g].person_id == pid)
            .collect();
        let first = hits.iter().position(|&h| h)?;
        Some((average_precision(&hits)?, first))
    });
    Ok(summarize(&scored, cmc_len, started.elapsed().as_secs_f64() * 1e3))
}

fn summarize(scored: &[Option<(f64, usize)>], cmc_len: usize, elapsed_ms: f64) -> EvalReport {
    let mut cmc = vec![0.0; cmc_len];
    let mut per_query_ap = Vec::new();
    let mut skipped = 0;
    for s in scored {
        match *s {
            Some((ap, first)) => {
                per_query_ap.push(ap);
                for c in cmc.iter_mut().skip(first) {
                    *c += 1.0;
                }
            }
            None => skipped += 1,
        }
    }
    let valid = per_query_ap.len();
    if valid > 0 {
        cmc.iter_mut().for_each(|c| *c /= valid as f64);
    }
    let map = if valid > 0 {
        per_query_ap.iter().sum::<f64>() / valid as f64
    } else {
        0.0
    };
    let mut timings_ms = BTreeMap::new();
    timings_ms.insert("evaluate".to_string(), elapsed_ms);
    EvalReport {
        rank1: cmc[0],
        map,
        cmc,
        num_queries: valid,
        skipped_queries: skipped,
        per_query_ap,
        timings_ms,
    }
}

/// Writes `query_index,rank,gallery_index,distance` rows (rank 1-based,
/// true Euclidean distance), keeping at most `top` rows per query.
pub fn write_ranked_lists(
    fs: &FeatureSet,
    lists: &[RankedList],
    top: Option<usize>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "query_index,rank,gallery_index,distance")?;
        for l in lists {
            let q = fs.row(l.query_index);
            for (r, &g) in l.gallery_order.iter().take(top.unwrap_or(usize::MAX)).enumerate() {
                let d = sq_dist(q, fs.row(g)).sqrt();
                writeln!(w, "{},{},{},{:.9}", l.query_index, r + 1, g, d)?;
            }
        }
        w.flush()
    };
    write().map_err(|e| Error::io(path, e))
}
