//! Degree-normalized feature propagation over k-NN graphs.
//!
//! One iteration computes
//!
//! ```text
//! X' = alpha * Dr_g^-1/2 A_g Dc_g^-1/2 X + (1 - alpha) * Dr_c^-1/2 A_c Dc_c^-1/2 X
//! ```
//!
//! where `A_g` is the global k-NN kernel graph and `A_c` the cross-camera
//! one, both rebuilt (neighbors included) from the current features.

use rayon::prelude::*;

use crate::config::{GcrConfig, Variant};
use crate::distance::{knn_multi, Query, Strategy};
use crate::error::{Error, Result};
use crate::features::{normalize_rows, FeatureSet};
use crate::graph::{similarity_from_lists, symmetrize, LocalGraph, SimilarityGraph};

/// `Dr^-1/2 A Dc^-1/2 X` for a row-major `x` with `dim` columns.
pub fn propagate_once(x: &[f64], dim: usize, g: &SimilarityGraph) -> Result<Vec<f64>> {
    let n = g.n();
    if dim == 0 || x.len() != n * dim {
        return Err(Error::Shape(format!(
            "graph has {n} rows but feature matrix has {} values of width {dim}",
            x.len()
        )));
    }
    let inv_row: Vec<f64> = g.row_degree().iter().map(|d| 1.0 / d.sqrt()).collect();
    let inv_col: Vec<f64> = g.col_degree().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut out = vec![0.0; n * dim];
    out.par_chunks_mut(dim).enumerate().for_each(|(i, dst)| {
        for (j, w) in g.row(i) {
            let c = w * inv_row[i] * inv_col[j];
            for (o, &v) in dst.iter_mut().zip(&x[j * dim..(j + 1) * dim]) {
                *o += c * v;
            }
        }
    });
    Ok(out)
}

/// `alpha * P(g_global) X + (1 - alpha) * P(g_cross) X`.
pub fn fused_step(
    x: &[f64],
    dim: usize,
    g_global: &SimilarityGraph,
    g_cross: &SimilarityGraph,
    alpha: f64,
) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let a = propagate_once(x, dim, g_global)?;
    let b = propagate_once(x, dim, g_cross)?;
    Ok(blend(a, &b, alpha))
}

fn blend(mut a: Vec<f64>, b: &[f64], alpha: f64) -> Vec<f64> {
    let beta = 1.0 - alpha;
    a.iter_mut()
        .zip(b)
        .for_each(|(x, &y)| *x = alpha * *x + beta * y);
    a
}

/// Iteration state: the current features `X_t` and how many updates ran.
#[derive(Debug, Clone)]
pub struct PropagationState {
    features: FeatureSet,
    iteration: usize,
    config: GcrConfig,
}

impl PropagationState {
    /// Validates the config and applies the optional initial normalization.
    pub fn new(fs: &FeatureSet, config: GcrConfig) -> Result<Self> {
        config.validate()?;
        let features = if config.pre_normalize {
            crate::features::l2_normalize(fs)?
        } else {
            fs.clone()
        };
        Ok(Self {
            features,
            iteration: 0,
            config,
        })
    }

    pub fn features(&self) -> &FeatureSet {
        &self.features
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn config(&self) -> &GcrConfig {
        &self.config
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.config.iterations
    }

    /// Runs one update, rebuilding both graphs from the current features.
    pub fn step(&mut self) -> Result<()> {
        if self.is_done() {
            return Err(Error::Config(format!(
                "all {} iterations already ran",
                self.config.iterations
            )));
        }
        let cfg = self.config;
        let fs = &self.features;
        let dim = fs.dim();
        let n = fs.len();
        let cameras = fs.camera_ids();
        let k_g = clamp(cfg.k_g, n);
        let k_c = clamp(cfg.k_c, n);
        // a zero-weighted term contributes exactly nothing
        let use_global = cfg.alpha > 0.0;
        let use_cross = cfg.alpha < 1.0;
        let mut queries = Vec::new();
        if use_global {
            queries.push(Query { k: k_g, cameras: None });
        }
        if use_cross {
            queries.push(Query {
                k: k_c,
                cameras: Some(&cameras),
            });
        }
        let x = fs.data();
        let mut lists = knn_multi(x, dim, &queries, Strategy::choose(x, dim)).into_iter();
        let global_lists = if use_global { lists.next() } else { None };
        let cross_lists = if use_cross { lists.next() } else { None };

        let term = |lists: Option<Vec<Vec<usize>>>| -> Result<Option<Vec<f64>>> {
            let Some(lists) = lists else { return Ok(None) };
            let out = match cfg.variant {
                Variant::Nonsym => {
                    let g = similarity_from_lists(x, dim, &lists, cfg.gamma)?;
                    propagate_once(x, dim, &g)?
                }
                Variant::Sym => {
                    let g = symmetrize(&similarity_from_lists(x, dim, &lists, cfg.gamma)?);
                    if g.row_degree() != g.col_degree() {
                        return Err(Error::Numeric(
                            "symmetric graph has unequal row and column degrees".into(),
                        ));
                    }
                    propagate_once(x, dim, &g)?
                }
                Variant::Local => propagate_local(x, dim, &lists, cfg.gamma),
            };
            Ok(Some(out))
        };
        let global = term(global_lists)?;
        let cross = term(cross_lists)?;
        let mut next = match (global, cross) {
            (Some(g), Some(c)) => blend(g, &c, cfg.alpha),
            (Some(g), None) => g,
            (None, Some(c)) => c,
            (None, None) => unreachable!("alpha selects at least one graph"),
        };
        self.iteration += 1;
        if cfg.renormalize {
            normalize_rows(&mut next, dim).map_err(|row| Error::ZeroRowAfterPropagation {
                iteration: self.iteration,
                row,
            })?;
        }
        if let Some(p) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite feature at row {} after iteration {}",
                p / dim,
                self.iteration
            )));
        }
        self.features = self.features.with_data(next)?;
        Ok(())
    }

    pub fn run(mut self) -> Result<FeatureSet> {
        while !self.is_done() {
            self.step()?;
        }
        Ok(self.features)
    }
}

fn clamp(k: usize, n: usize) -> usize {
    let pool = n.saturating_sub(1);
    if k > pool {
        log::warn!("k={k} exceeds the {pool} available neighbors; clamping");
    }
    k.min(pool)
}

/// Per-row update over dense local graphs; every row reads the same `x`.
fn propagate_local(x: &[f64], dim: usize, lists: &[Vec<usize>], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    out.par_chunks_mut(dim).enumerate().for_each(|(i, dst)| {
        let lg = LocalGraph::build(x, dim, i, &lists[i], gamma);
        let m = lg.size();
        let degree: Vec<f64> = (0..m)
            .map(|u| lg.weights[u * m..(u + 1) * m].iter().sum())
            .collect();
        // the center is member 0
        let inv_center = 1.0 / degree[0].sqrt();
        for (v, &j) in lg.member_ids.iter().enumerate() {
            let c = lg.weight(0, v) * inv_center / degree[v].sqrt();
            for (o, &val) in dst.iter_mut().zip(&x[j * dim..(j + 1) * dim]) {
                *o += c * val;
            }
        }
    });
    out
}

/// Runs `cfg.iterations` updates with the graph family `cfg.variant`.
pub fn gcr(fs: &FeatureSet, cfg: &GcrConfig) -> Result<FeatureSet> {
    PropagationState::new(fs, *cfg)?.run()
}

/// [`gcr`] over symmetrized graphs.
pub fn gcr_sym(fs: &FeatureSet, cfg: &GcrConfig) -> Result<FeatureSet> {
    gcr(
        fs,
        &GcrConfig {
            variant: Variant::Sym,
            ..*cfg
        },
    )
}

/// [`gcr`] over per-row local graphs.
pub fn gcr_local(fs: &FeatureSet, cfg: &GcrConfig) -> Result<FeatureSet> {
    gcr(
        fs,
        &GcrConfig {
            variant: Variant::Local,
            ..*cfg
        },
    )
}
