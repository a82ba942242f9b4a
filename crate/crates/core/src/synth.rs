//! Deterministic synthetic re-ID features with per-camera bias.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`), seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`. Uniforms take the top 53 bits of
//! `next_u64`; normals use Box-Muller on `(1 - u1, u2)`, consuming both
//! outputs in order. Draws happen in this order:
//!
//! 1. identity centers (real identities, then distractors), `dim` normals each,
//!    rescaled to norm `id_spread`;
//! 2. camera bias vectors, `dim` normals each, rescaled to norm `camera_bias`;
//! 3. per-row noise, identity-major, then camera, then image.
//!
//! Row `= center + bias[camera] + noise * N(0, I)`, then unit-normalized.
//! Identity `p` is queried from camera `p % cameras`; the rows it has there
//! form the query tracklet. Distractors (`person_id = -1`) are gallery-only.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSet, RowMeta, Split, DISTRACTOR_ID};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub num_ids: usize,
    pub cameras: usize,
    /// Images per identity per camera (the tracklet length).
    pub images_per_id_per_camera: usize,
    pub dim: usize,
    /// Norm of each identity center.
    pub id_spread: f64,
    /// Per-coordinate noise standard deviation.
    pub noise: f64,
    /// Norm of each camera's additive offset.
    pub camera_bias: f64,
    /// Fraction of identities that are distractors.
    pub distractor_fraction: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_ids: 200,
            cameras: 4,
            images_per_id_per_camera: 2,
            dim: 64,
            id_spread: 1.0,
            noise: 0.16,
            camera_bias: 0.3,
            distractor_fraction: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("num_ids", self.num_ids),
            ("cameras", self.cameras),
            ("images_per_id_per_camera", self.images_per_id_per_camera),
            ("dim", self.dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.id_spread.is_finite() && self.id_spread > 0.0) {
            return Err(Error::Config("id_spread must be positive".into()));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::Config("noise must be nonnegative".into()));
        }
        if !(self.camera_bias.is_finite() && self.camera_bias >= 0.0) {
            return Err(Error::Config("camera_bias must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.distractor_fraction) {
            return Err(Error::Config("distractor_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn num_distractors(&self) -> usize {
        let f = self.distractor_fraction;
        (self.num_ids as f64 * f / (1.0 - f)).round() as usize
    }

    pub fn num_rows(&self) -> usize {
        (self.num_ids + self.num_distractors()) * self.cameras * self.images_per_id_per_camera
    }
}

struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(v) = self.spare.take() {
            return v;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    fn direction(&mut self, dim: usize, scale: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (0..dim).map(|_| self.next()).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let s = if norm > 0.0 { scale / norm } else { 0.0 };
        v.iter_mut().for_each(|a| *a *= s);
        v
    }
}

pub fn generate(cfg: &SynthConfig) -> Result<FeatureSet> {
    cfg.validate()?;
    let dim = cfg.dim;
    let identities = cfg.num_ids + cfg.num_distractors();
    let mut rng = Gaussian::new(cfg.seed);
    let centers: Vec<Vec<f64>> = (0..identities)
        .map(|_| rng.direction(dim, cfg.id_spread))
        .collect();
    let biases: Vec<Vec<f64>> = (0..cfg.cameras)
        .map(|_| rng.direction(dim, cfg.camera_bias))
        .collect();

    let mut data = Vec::with_capacity(cfg.num_rows() * dim);
    let mut meta = Vec::with_capacity(cfg.num_rows());
    for (p, center) in centers.iter().enumerate() {
        let distractor = p >= cfg.num_ids;
        for (cam, bias) in biases.iter().enumerate() {
            let split = if !distractor && cam == p % cfg.cameras {
                Split::Query
            } else {
                Split::Gallery
            };
            for _ in 0..cfg.images_per_id_per_camera {
                let mut row: Vec<f64> = center
                    .iter()
                    .zip(bias)
                    .map(|(c, b)| c + b + cfg.noise * rng.next())
                    .collect();
                let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|a| *a /= norm);
                }
                data.extend(row);
                meta.push(RowMeta {
                    person_id: if distractor { DISTRACTOR_ID } else { p as i64 },
                    camera_id: cam as u32,
                    tracklet_id: p as u32,
                    split,
                });
            }
        }
    }
    FeatureSet::new(data, dim, meta)
}
