//! End-to-end run: input, profiles, propagation, evaluation, export.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::GcrConfig;
use crate::distance::{knn_cross_camera, knn_global};
use crate::error::{Error, Result};
use crate::eval::{evaluate, rank, write_ranked_lists, EvalReport};
use crate::features::{l2_normalize, load_features, FeatureSet};
use crate::graph::build_similarity;
use crate::propagation::gcr;
use crate::pvg::{mean_profile, pvg, PvgConfig, PvgMethod};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Input {
    Files { features: PathBuf, meta: PathBuf },
    Synth(SynthConfig),
}

/// Extra reference point evaluated next to "before".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Only the profiles of the selected method.
    #[default]
    Same,
    /// Also evaluate mean profiles.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: Input,
    pub gcr: GcrConfig,
    pub pvg: PvgConfig,
    pub baseline: Baseline,
    /// Where profiles, re-ranked features and the report go; nothing is
    /// written when unset.
    pub out_dir: Option<PathBuf>,
    /// Write the iteration-0 global and cross-camera graphs as CSV.
    pub dump_graph: bool,
    /// Write the top-N re-ranked lists as CSV.
    pub ranked_list: Option<usize>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.gcr.validate()?;
        self.pvg.validate()?;
        if let Input::Synth(s) = &self.input {
            s.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub num_rows: usize,
    pub num_profiles: usize,
    pub before: EvalReport,
    pub after: EvalReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_baseline: Option<EvalReport>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl PipelineReport {
    /// Before/after metrics in aligned columns.
    pub fn to_table(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let mut cols = vec![("before", &self.before), ("after", &self.after)];
        if let Some(m) = &self.mean_baseline {
            cols.insert(0, ("mean", m));
        }
        let _ = write!(s, "{:<12}", "metric");
        for (name, _) in &cols {
            let _ = write!(s, "{name:>12}");
        }
        s.push('\n');
        let mut line = |label: &str, f: &dyn Fn(&EvalReport) -> Option<f64>| {
            let _ = write!(s, "{label:<12}");
            for (_, r) in &cols {
                match f(r) {
                    Some(v) => {
                        let _ = write!(s, "{v:>12.4}");
                    }
                    None => {
                        let _ = write!(s, "{:>12}", "-");
                    }
                }
            }
            s.push('\n');
        };
        line("Rank-1", &|r| Some(r.rank1));
        for m in [5usize, 10, 20] {
            line(&format!("Rank-{m}"), &|r| r.cmc.get(m - 1).copied());
        }
        line("mAP", &|r| Some(r.map));
        line("queries", &|r| Some(r.num_queries as f64));
        for (stage, ms) in &self.timings_ms {
            let _ = writeln!(s, "{:<12}{:>12.1}", format!("{stage} ms"), ms);
        }
        s
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(file), self)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))
    }
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.0.insert(stage.to_string(), start.elapsed().as_secs_f64() * 1e3);
        log::info!("{stage}: {:.1} ms", self.0[stage]);
        Ok(out)
    }
}

pub fn load_input(input: &Input) -> Result<FeatureSet> {
    match input {
        Input::Files { features, meta } => load_features(features, meta),
        Input::Synth(cfg) => generate(cfg),
    }
}

/// Checks that `dir` exists and is a directory.
pub fn check_out_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        ))
    }
}

pub fn run(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    if let Some(dir) = &cfg.out_dir {
        check_out_dir(dir)?;
    }
    let mut t = Timer(BTreeMap::new());
    let mut images = t.time("load", || load_input(&cfg.input))?;
    if cfg.gcr.pre_normalize {
        images = t.time("normalize", || l2_normalize(&images))?;
    }
    let profiles = t.time("pvg", || pvg(&images, &cfg.pvg))?;
    for w in &profiles.warnings {
        log::warn!("{w}");
    }
    let before = t.time("evaluate_before", || evaluate(&profiles.features))?;
    let mean_baseline = match (cfg.baseline, cfg.pvg.method) {
        (Baseline::Mean, PvgMethod::Ridge) => Some(t.time("evaluate_mean", || {
            evaluate(&mean_profile(&images)?.features)
        })?),
        (Baseline::Mean, PvgMethod::Mean) => Some(before.clone()),
        (Baseline::Same, _) => None,
    };
    let reranked = t.time("rerank", || gcr(&profiles.features, &cfg.gcr))?;
    let after = t.time("evaluate_after", || evaluate(&reranked))?;

    if let Some(dir) = &cfg.out_dir {
        t.time("write", || {
            profiles.save(
                dir.join("profiles.gcrf"),
                dir.join("profiles.csv"),
                dir.join("provenance.json"),
            )?;
            crate::features::save_features(
                &reranked,
                dir.join("reranked.gcrf"),
                dir.join("reranked.csv"),
            )?;
            if cfg.dump_graph {
                dump_graphs(&profiles.features, &cfg.gcr, dir)?;
            }
            if let Some(top) = cfg.ranked_list {
                let lists = rank(&reranked)?;
                write_ranked_lists(&reranked, &lists, Some(top), dir.join("ranked.csv"))?;
            }
            Ok(())
        })?;
    }

    let report = PipelineReport {
        config: cfg.clone(),
        num_rows: images.len(),
        num_profiles: profiles.features.len(),
        before,
        after,
        mean_baseline,
        warnings: profiles.warnings,
        timings_ms: t.0,
    };
    if let Some(dir) = &cfg.out_dir {
        report.write_json(&dir.join("report.json"))?;
    }
    Ok(report)
}

/// Writes the graphs the first propagation step builds from `fs`.
pub fn dump_graphs(fs: &FeatureSet, cfg: &GcrConfig, dir: &Path) -> Result<()> {
    let fs = if cfg.pre_normalize {
        l2_normalize(fs)?
    } else {
        fs.clone()
    };
    let global = build_similarity(&fs, &knn_global(&fs, cfg.k_g), cfg.gamma)?;
    global.write_csv(dir.join("graph_global.csv"))?;
    let cross = build_similarity(&fs, &knn_cross_camera(&fs, cfg.k_c), cfg.gamma)?;
    cross.write_csv(dir.join("graph_cross.csv"))
}
