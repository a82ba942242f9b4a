//! Two-component PCA for plotting features outside this tool.

use std::io::Write;
use std::path::Path;

use faer::{Accum, Mat, Par, Side};

use crate::error::{Error, Result};
use crate::features::FeatureSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `(x, y)` per row.
    pub coords: Vec<[f64; 2]>,
    /// Variance captured by each axis, largest first.
    pub variances: [f64; 2],
}

/// Projects centered rows onto the two leading eigenvectors of the sample
/// covariance. Each axis is signed so that its largest-magnitude component
/// is positive. With `d = 1` the second axis is identically zero.
pub fn project(fs: &FeatureSet) -> Result<Projection> {
    let (n, d) = (fs.len(), fs.dim());
    let mut mean = vec![0.0; d];
    for r in fs.rows() {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = Mat::<f64>::from_fn(n, d, |i, j| fs.row(i)[j] - mean[j]);

    let mut cov = Mat::<f64>::zeros(d, d);
    faer::linalg::matmul::matmul(
        cov.as_mut(),
        Accum::Replace,
        centered.transpose(),
        centered.as_ref(),
        1.0 / (n.max(2) - 1) as f64,
        Par::Seq,
    );
    let evd = cov
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigendecomposition failed: {e:?}")))?;
    let u = evd.U();
    let s = evd.S().column_vector();

    let mut axes = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [0.0; 2];
    for (slot, axis) in axes.iter_mut().enumerate().take(d) {
        let col = d - 1 - slot;
        *axis = (0..d).map(|r| u[(r, col)]).collect();
        variances[slot] = s[col].max(0.0);
        let pivot = axis
            .iter()
            .enumerate()
            .fold(0, |best, (i, v)| if v.abs() > axis[best].abs() { i } else { best });
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
    }

    let coords = (0..n)
        .map(|i| {
            let dot = |a: &[f64]| (0..d).map(|j| centered[(i, j)] * a[j]).sum::<f64>();
            [dot(&axes[0]), dot(&axes[1])]
        })
        .collect();
    Ok(Projection { coords, variances })
}

pub fn write_projection(fs: &FeatureSet, proj: &Projection, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "index,x,y,person_id,camera_id")?;
        for (i, (c, m)) in proj.coords.iter().zip(fs.meta()).enumerate() {
            writeln!(w, "{i},{:.16e},{:.16e},{},{}", c[0], c[1], m.person_id, m.camera_id)?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::io(path, e))
}
