//! Feature matrices with per-row metadata, their on-disk format and
//! row normalization.
//!
//! Feature file layout (little-endian):
//!
//! ```text
//! "GCRF" | version: u16 | n: u32 | d: u32 | n*d f32 values, row-major
//! ```
//!
//! Metadata is a CSV file with header `index,person_id,camera_id,tracklet_id,split`.
//! Values are held as `f64` in memory and stored as `f32` on disk.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GCRF";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4;

/// Person id reserved for distractor and junk rows.
pub const DISTRACTOR_ID: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Query,
    Gallery,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowMeta {
    pub person_id: i64,
    pub camera_id: u32,
    pub tracklet_id: u32,
    pub split: Split,
}

impl RowMeta {
    pub fn is_distractor(&self) -> bool {
        self.person_id == DISTRACTOR_ID
    }
}

/// An `n x d` row-major feature matrix plus one [`RowMeta`] per row.
///
/// Every entry is finite and `n, d >= 1`; this is checked on construction
/// and the set is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    data: Vec<f64>,
    dim: usize,
    meta: Vec<RowMeta>,
}

impl FeatureSet {
    pub fn new(data: Vec<f64>, dim: usize, meta: Vec<RowMeta>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("feature dimension must be at least 1".into()));
        }
        if meta.is_empty() {
            return Err(Error::Shape("feature set must contain at least one row".into()));
        }
        if data.len() != meta.len() * dim {
            return Err(Error::RowCountMismatch {
                feature_rows: data.len() / dim,
                meta_rows: meta.len(),
            });
        }
        check_finite(&data, dim)?;
        Ok(Self { data, dim, meta })
    }

    /// Replaces the matrix while keeping the metadata.
    pub fn with_data(&self, data: Vec<f64>) -> Result<Self> {
        Self::new(data, self.dim, self.meta.clone())
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }

    pub fn camera_ids(&self) -> Vec<u32> {
        self.meta.iter().map(|m| m.camera_id).collect()
    }

    /// Returns the rows listed in `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        let mut meta = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            meta.push(self.meta[i]);
        }
        Self::new(data, self.dim, meta)
    }
}

fn check_finite(data: &[f64], dim: usize) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(p) => Err(Error::NonFinite {
            row: p / dim,
            col: p % dim,
        }),
        None => Ok(()),
    }
}

/// Scales every row to unit Euclidean norm. A zero row is an error.
pub fn l2_normalize(fs: &FeatureSet) -> Result<FeatureSet> {
    let mut data = fs.data.clone();
    normalize_rows(&mut data, fs.dim).map_err(|row| Error::ZeroRow { row })?;
    fs.with_data(data)
}

/// In-place row normalization; on a zero row returns its index.
pub(crate) fn normalize_rows(data: &mut [f64], dim: usize) -> std::result::Result<(), usize> {
    for (i, row) in data.chunks_exact_mut(dim).enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(i);
        }
        row.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaRecord {
    index: usize,
    person_id: i64,
    camera_id: u32,
    tracklet_id: u32,
    split: Split,
}

pub fn load_features(path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let (rows, dim, data) = decode_matrix(&bytes)?;
    let meta = load_meta(meta_path)?;
    if meta.len() != rows {
        return Err(Error::RowCountMismatch {
            feature_rows: rows,
            meta_rows: meta.len(),
        });
    }
    FeatureSet::new(data, dim, meta)
}

/// Decodes a feature file image into `(n, d, values)`.
pub fn decode_matrix(bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::MalformedHeader(format!(
            "file is {} bytes, header needs {HEADER_LEN}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::MalformedHeader("bad magic bytes".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::MalformedHeader(format!("unsupported version {version}")));
    }
    let rows = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    if rows == 0 || dim == 0 {
        return Err(Error::MalformedHeader(format!("empty shape {rows}x{dim}")));
    }
    let payload = &bytes[HEADER_LEN..];
    if payload.len() % 4 != 0 || payload.len() / 4 != rows * dim {
        return Err(Error::DimensionMismatch {
            rows,
            cols: dim,
            actual: payload.len() / 4,
        });
    }
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    check_finite(&data, dim)?;
    Ok((rows, dim, data))
}

pub fn encode_matrix(fs: &FeatureSet) -> Result<Vec<u8>> {
    let rows = u32::try_from(fs.len()).map_err(|_| Error::Shape("too many rows".into()))?;
    let dim = u32::try_from(fs.dim()).map_err(|_| Error::Shape("dimension too large".into()))?;
    let mut out = Vec::with_capacity(HEADER_LEN + fs.data.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&rows.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for (p, &v) in fs.data.iter().enumerate() {
        let v32 = v as f32;
        if !v32.is_finite() {
            return Err(Error::NonFinite {
                row: p / fs.dim,
                col: p % fs.dim,
            });
        }
        out.extend_from_slice(&v32.to_le_bytes());
    }
    Ok(out)
}

pub fn load_meta(path: impl AsRef<Path>) -> Result<Vec<RowMeta>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let expected = ["index", "person_id", "camera_id", "tracklet_id", "split"];
    let headers = reader
        .headers()
        .map_err(|e| Error::MalformedMeta(e.to_string()))?;
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::MalformedMeta(format!(
            "expected header {}, found {}",
            expected.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut meta = Vec::new();
    for (pos, record) in reader.deserialize::<MetaRecord>().enumerate() {
        let r = record.map_err(|e| Error::MalformedMeta(e.to_string()))?;
        if r.index != pos {
            return Err(Error::MalformedMeta(format!(
                "row {pos} carries index {}; rows must be sorted by index starting at 0",
                r.index
            )));
        }
        meta.push(RowMeta {
            person_id: r.person_id,
            camera_id: r.camera_id,
            tracklet_id: r.tracklet_id,
            split: r.split,
        });
    }
    Ok(meta)
}

pub fn save_meta(meta: &[RowMeta], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(BufWriter::new(file));
    for (index, m) in meta.iter().enumerate() {
        writer
            .serialize(MetaRecord {
                index,
                person_id: m.person_id,
                camera_id: m.camera_id,
                tracklet_id: m.tracklet_id,
                split: m.split,
            })
            .map_err(|e| csv_io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

pub fn save_features(
    fs: &FeatureSet,
    path: impl AsRef<Path>,
    meta_path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_matrix(fs)?;
    File::create(path)
        .and_then(|f| {
            let mut w = BufWriter::new(f);
            w.write_all(&bytes)?;
            w.flush()
        })
        .map_err(|e| Error::io(path, e))?;
    save_meta(&fs.meta, meta_path)
}
