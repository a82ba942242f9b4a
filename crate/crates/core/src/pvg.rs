//! Tracklet profile vectors.
//!
//! Rows are grouped by `(camera_id, tracklet_id)`. The ridge profile of
//! tracklet `c` in camera `z` solves
//!
//! ```text
//! (X_z^T X_z + n_z * lambda_p * I) v = mean_c(x) - mean_z(x)
//! ```
//!
//! and is returned as `v / |v|`. The right-hand side equals `X_z^T y` for
//! the margin labels `y_i = 1/n_c - 1/n_z` (tracklet rows) and `-1/n_z`
//! (other rows of the camera), so `v` minimizes
//! `(1/n_z) |X_z v - y|^2 + lambda_p |v|^2`.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::{Llt, Solve};
use faer::{Accum, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{save_features, FeatureSet, RowMeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PvgMethod {
    Mean,
    #[default]
    Ridge,
}

impl fmt::Display for PvgMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PvgMethod::Mean => "mean",
            PvgMethod::Ridge => "ridge",
        })
    }
}

impl FromStr for PvgMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(PvgMethod::Mean),
            "ridge" => Ok(PvgMethod::Ridge),
            other => Err(Error::Config(format!("unknown profile method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvgConfig {
    pub lambda_p: f64,
    pub method: PvgMethod,
}

impl Default for PvgConfig {
    fn default() -> Self {
        Self {
            lambda_p: 10.0,
            method: PvgMethod::Ridge,
        }
    }
}

impl PvgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.method == PvgMethod::Ridge && !(self.lambda_p.is_finite() && self.lambda_p > 0.0) {
            return Err(Error::Config(format!(
                "lambda_p must be positive for ridge profiles, got {}",
                self.lambda_p
            )));
        }
        Ok(())
    }
}

/// One profile row per tracklet, with the source rows behind each.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSet {
    pub features: FeatureSet,
    /// `provenance[p]` lists the source row indices of profile `p`.
    pub provenance: Vec<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl ProfileSet {
    pub fn write_provenance(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), &self.provenance)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))
    }

    pub fn save(
        &self,
        features: impl AsRef<Path>,
        meta: impl AsRef<Path>,
        provenance: impl AsRef<Path>,
    ) -> Result<()> {
        save_features(&self.features, features, meta)?;
        self.write_provenance(provenance)
    }
}

/// Tracklet groups in order of first appearance.
struct Groups {
    members: Vec<Vec<usize>>,
    meta: Vec<RowMeta>,
}

fn group_tracklets(fs: &FeatureSet) -> Groups {
    let mut index: HashMap<(u32, u32), usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut meta = Vec::new();
    for (i, m) in fs.meta().iter().enumerate() {
        let g = *index.entry((m.camera_id, m.tracklet_id)).or_insert_with(|| {
            members.push(Vec::new());
            meta.push(*m);
            members.len() - 1
        });
        members[g].push(i);
    }
    Groups { members, meta }
}

fn mean_of(fs: &FeatureSet, rows: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0; fs.dim()];
    for &i in rows {
        acc.iter_mut().zip(fs.row(i)).for_each(|(a, v)| *a += v);
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Arithmetic mean of each tracklet's rows.
pub fn mean_profile(fs: &FeatureSet) -> Result<ProfileSet> {
    let groups = group_tracklets(fs);
    let data = groups
        .members
        .iter()
        .flat_map(|rows| mean_of(fs, rows))
        .collect();
    Ok(ProfileSet {
        features: FeatureSet::new(data, fs.dim(), groups.meta)?,
        provenance: groups.members,
        warnings: Vec::new(),
    })
}

/// Margin labels for one camera whose tracklets have `group_sizes` rows,
/// listed group by group: `1/n_c - 1/n_z` on the target, `-1/n_z` elsewhere.
pub fn margin_labels(group_sizes: &[usize], target: usize) -> Result<Vec<f64>> {
    if target >= group_sizes.len() {
        return Err(Error::Config(format!(
            "target tracklet {target} not among {} groups",
            group_sizes.len()
        )));
    }
    if group_sizes.contains(&0) {
        return Err(Error::Config("tracklet sizes must be positive".into()));
    }
    let n_z = group_sizes.iter().sum::<usize>() as f64;
    let n_c = group_sizes[target] as f64;
    let mut z = Vec::with_capacity(n_z as usize);
    for (g, &size) in group_sizes.iter().enumerate() {
        let v = if g == target {
            1.0 / n_c - 1.0 / n_z
        } else {
            -1.0 / n_z
        };
        z.extend(std::iter::repeat_n(v, size));
    }
    Ok(z)
}

/// Ridge system of one camera, solved for every tracklet at once.
#[derive(Debug, Clone)]
pub struct CameraRidge {
    /// Unnormalized solutions, one per tracklet.
    pub solutions: Vec<Vec<f64>>,
    /// Right-hand sides `mean_c - mean_z`, one per tracklet.
    pub targets: Vec<Vec<f64>>,
}

/// Factorizes `X^T X + n * lambda_p * I` once and solves for each tracklet.
/// `rows` is the camera's `n x dim` matrix; `tracklet[i]` in `0..t` labels row `i`.
pub fn solve_camera(rows: &[f64], dim: usize, tracklet: &[usize], lambda_p: f64) -> Result<CameraRidge> {
    let n = tracklet.len();
    if n == 0 || rows.len() != n * dim {
        return Err(Error::Shape(format!(
            "camera block of {} values does not hold {n} rows of width {dim}",
            rows.len()
        )));
    }
    let t = tracklet.iter().max().unwrap() + 1;
    let mut sizes = vec![0usize; t];
    let mut sums = vec![vec![0.0; dim]; t];
    let mut total = vec![0.0; dim];
    for (i, &c) in tracklet.iter().enumerate() {
        sizes[c] += 1;
        let row = &rows[i * dim..(i + 1) * dim];
        sums[c].iter_mut().zip(row).for_each(|(a, v)| *a += v);
        total.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
    if let Some(c) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Config(format!("tracklet label {c} has no rows")));
    }
    let nf = n as f64;
    let targets: Vec<Vec<f64>> = sums
        .iter()
        .zip(&sizes)
        .map(|(s, &size)| {
            s.iter()
                .zip(&total)
                .map(|(a, b)| a / size as f64 - b / nf)
                .collect()
        })
        .collect();

    let x = Mat::from_fn(n, dim, |i, m| rows[i * dim + m]);
    let mut gram = Mat::<f64>::zeros(dim, dim);
    matmul(
        gram.as_mut(),
        Accum::Replace,
        x.transpose(),
        x.as_ref(),
        1.0,
        faer::get_global_parallelism(),
    );
    let ridge = nf * lambda_p;
    for m in 0..dim {
        gram[(m, m)] += ridge;
    }
    let llt = Llt::new(gram.as_ref(), Side::Lower)
        .map_err(|e| Error::Numeric(format!("ridge system is not positive definite: {e:?}")))?;
    let mut rhs = Mat::from_fn(dim, t, |m, c| targets[c][m]);
    llt.solve_in_place(rhs.as_mut());
    let solutions = (0..t).map(|c| rhs.col_as_slice(c).to_vec()).collect();
    Ok(CameraRidge { solutions, targets })
}

/// Normalized ridge profile per tracklet. A camera holding a single
/// tracklet has a zero right-hand side; that tracklet falls back to its
/// mean and a warning is recorded.
pub fn ridge_profile(fs: &FeatureSet, cfg: &PvgConfig) -> Result<ProfileSet> {
    cfg.validate()?;
    let dim = fs.dim();
    let groups = group_tracklets(fs);
    let mut cameras: Vec<u32> = Vec::new();
    let mut by_camera: HashMap<u32, Vec<usize>> = HashMap::new();
    for (g, m) in groups.meta.iter().enumerate() {
        by_camera
            .entry(m.camera_id)
            .or_insert_with(|| {
                cameras.push(m.camera_id);
                Vec::new()
            })
            .push(g);
    }

    let mut profiles = vec![Vec::new(); groups.members.len()];
    let mut warnings = Vec::new();
    for cam in cameras {
        let camera_groups = &by_camera[&cam];
        if camera_groups.len() == 1 {
            let g = camera_groups[0];
            warnings.push(format!(
                "camera {cam} holds only tracklet {}; using its mean profile",
                groups.meta[g].tracklet_id
            ));
            profiles[g] = mean_of(fs, &groups.members[g]);
            continue;
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (local, &g) in camera_groups.iter().enumerate() {
            for &i in &groups.members[g] {
                rows.extend_from_slice(fs.row(i));
                labels.push(local);
            }
        }
        let solved = solve_camera(&rows, dim, &labels, cfg.lambda_p)?;
        for (local, &g) in camera_groups.iter().enumerate() {
            let v = &solved.solutions[local];
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                profiles[g] = v.iter().map(|a| a / norm).collect();
            } else {
                warnings.push(format!(
                    "tracklet {} in camera {cam} has a zero ridge solution; using its mean profile",
                    groups.meta[g].tracklet_id
                ));
                profiles[g] = mean_of(fs, &groups.members[g]);
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ProfileSet {
        features: FeatureSet::new(profiles.concat(), dim, groups.meta)?,
        provenance: groups.members,
        warnings,
    })
}

pub fn pvg(fs: &FeatureSet, cfg: &PvgConfig) -> Result<ProfileSet> {
    cfg.validate()?;
    match cfg.method {
        PvgMethod::Mean => mean_profile(fs),
        PvgMethod::Ridge => ridge_profile(fs, cfg),
    }
}
