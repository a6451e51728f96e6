//! Synthetic datasets (2D/3D ring of Gaussians), noise sampling, and MNIST
//! IDX ingestion.
//!
//! All randomness flows through ChaCha8 streams keyed by the run seed
//! (`rand_core`'s SplitMix64 expansion of the u64) with one stream id per
//! purpose, so data, noise, initialization and evaluation draws never
//! interleave. Uniforms take the high 53 bits of each u64; normals are
//! Box-Muller pairs with the second value discarded. Every sampler is a pure
//! function of (spec, n, seed).

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::models::{NoiseFamily, NoiseSpec};

/// Stream ids for per-purpose RNG splitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Data = 0,
    Noise = 1,
    GeneratorInit = 2,
    CriticInit = 3,
    Eval = 4,
}

/// ChaCha8 stream for one purpose under one run seed.
pub fn stream(seed: u64, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng
}

/// Uniform in [0, 1) from the high 53 bits.
pub fn uniform01(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal via Box-Muller on (0, 1] x [0, 1); one draw per call.
pub fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Unbiased uniform integer in [0, n) by rejection.
fn uniform_index(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let n = n as u64;
    let zone = u64::MAX - (u64::MAX % n);
    loop {
        let v = rng.next_u64();
        if v < zone {
            return (v % n) as usize;
        }
    }
}

/// Ring of Gaussians: `n_modes` isotropic components of standard deviation
/// `mode_std`, centers at angles `2 pi k / n_modes` on a circle of the given
/// radius. The 3D variant appends `N(0, third_dim_std^2)` noise and rotates
/// the result about the second axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingSpec {
    pub n_modes: usize,
    pub mode_std: f64,
    pub radius: f64,
    pub rotation_deg_axis2: f64,
    pub third_dim_std: f64,
}

impl RingSpec {
    /// The 2D benchmark: 8 modes, std 0.01, radius 1.
    pub fn ring2d() -> Self {
        RingSpec {
            n_modes: 8,
            mode_std: 0.01,
            radius: 1.0,
            rotation_deg_axis2: 0.0,
            third_dim_std: 0.1,
        }
    }

    /// The 3D variant: third dimension N(0, 0.1^2), rotated 60 degrees.
    pub fn ring3d() -> Self {
        RingSpec {
            rotation_deg_axis2: 60.0,
            ..Self::ring2d()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidSpec {
                what: "ring",
                reason: "n_modes must be at least 1".into(),
            });
        }
        if !(self.mode_std > 0.0) || !(self.radius > 0.0) || !(self.third_dim_std > 0.0) {
            return Err(Error::InvalidSpec {
                what: "ring",
                reason: "mode_std, radius and third_dim_std must be positive".into(),
            });
        }
        Ok(())
    }

    /// Center of mode k, at angle 2 pi k / n_modes.
    pub fn center(&self, k: usize) -> (f64, f64) {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / self.n_modes as f64;
        (self.radius * theta.cos(), self.radius * theta.sin())
    }

    /// Mode centers in the output space (2 or 3 columns).
    pub fn centers(&self, dim: usize) -> Mat {
        assert!(dim == 2 || dim == 3, "ring centers: dim must be 2 or 3");
        let mut c = Array2::zeros((self.n_modes, dim));
        for k in 0..self.n_modes {
            let (x, y) = self.center(k);
            c[[k, 0]] = x;
            c[[k, 1]] = y;
        }
        if dim == 3 {
            let r = rotation_about_axis2(self.rotation_deg_axis2);
            c = c.dot(&r.t());
        }
        c
    }
}

/// Right-handed rotation about the second axis, for column vectors:
/// x' = x cos t + z sin t, y' = y, z' = -x sin t + z cos t.
pub fn rotation_about_axis2(degrees: f64) -> Mat {
    let t = degrees.to_radians();
    let (s, c) = (t.sin(), t.cos());
    ndarray::array![[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn ring2d_sample(spec: &RingSpec, n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ring2d_sample_with(spec, n, &mut rng)
}

pub fn ring2d_sample_with(spec: &RingSpec, n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut out = Array2::zeros((n, 2));
    for i in 0..n {
        let k = uniform_index(rng, spec.n_modes);
        let (cx, cy) = spec.center(k);
        out[[i, 0]] = cx + spec.mode_std * standard_normal(rng);
        out[[i, 1]] = cy + spec.mode_std * standard_normal(rng);
    }
    out
}

pub fn ring3d_sample(spec: &RingSpec, n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ring3d_sample_with(spec, n, &mut rng)
}

/// 2D ring with a Gaussian third coordinate appended, then rotated about the
/// second axis. The rotation happens after all noise is drawn.
pub fn ring3d_sample_with(spec: &RingSpec, n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut out = Array2::zeros((n, 3));
    for i in 0..n {
        let k = uniform_index(rng, spec.n_modes);
        let (cx, cy) = spec.center(k);
        out[[i, 0]] = cx + spec.mode_std * standard_normal(rng);
        out[[i, 1]] = cy + spec.mode_std * standard_normal(rng);
        out[[i, 2]] = spec.third_dim_std * standard_normal(rng);
    }
    let r = rotation_about_axis2(spec.rotation_deg_axis2);
    out.dot(&r.t())
}

pub fn noise_sample(spec: &NoiseSpec, n: usize, seed: u64) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    noise_sample_with(spec, n, &mut rng)
}

pub fn noise_sample_with(spec: &NoiseSpec, n: usize, rng: &mut ChaCha8Rng) -> Mat {
    let mut out = Array2::zeros((n, spec.dim));
    for i in 0..n {
        for j in 0..spec.dim {
            out[[i, j]] = match spec.family {
                NoiseFamily::StandardGaussian => standard_normal(rng),
                NoiseFamily::UniformPm1 => 2.0 * uniform01(rng) - 1.0,
            };
        }
    }
    out
}

/// A sampleable data source with a fixed row dimension.
#[derive(Debug, Clone)]
pub struct DatasetHandle {
    dim: usize,
    source: DataSource,
}

#[derive(Debug, Clone)]
enum DataSource {
    Ring2d(RingSpec),
    Ring3d(RingSpec),
    /// Materialized rows; minibatches draw row indices with replacement.
    Materialized(Mat),
}

impl DatasetHandle {
    pub fn ring2d(spec: RingSpec) -> Result<Self> {
        spec.validate()?;
        Ok(DatasetHandle {
            dim: 2,
            source: DataSource::Ring2d(spec),
        })
    }

    pub fn ring3d(spec: RingSpec) -> Result<Self> {
        spec.validate()?;
        Ok(DatasetHandle {
            dim: 3,
            source: DataSource::Ring3d(spec),
        })
    }

    pub fn materialized(rows: Mat) -> Self {
        DatasetHandle {
            dim: rows.ncols(),
            source: DataSource::Materialized(rows),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ring_spec(&self) -> Option<&RingSpec> {
        match &self.source {
            DataSource::Ring2d(s) | DataSource::Ring3d(s) => Some(s),
            DataSource::Materialized(_) => None,
        }
    }

    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Mat {
        match &self.source {
            DataSource::Ring2d(spec) => ring2d_sample_with(spec, n, rng),
            DataSource::Ring3d(spec) => ring3d_sample_with(spec, n, rng),
            DataSource::Materialized(rows) => {
                let mut out = Array2::zeros((n, self.dim));
                for i in 0..n {
                    let idx = uniform_index(rng, rows.nrows());
                    out.row_mut(i).assign(&rows.row(idx));
                }
                out
            }
        }
    }
}

// ── MNIST IDX ──────────────────────────────────────────────────────────

const IDX_IMAGES_MAGIC: u32 = 2051;
const IDX_LABELS_MAGIC: u32 = 2049;

fn read_be_u32(bytes: &[u8], at: usize, path: &str) -> Result<u32> {
    let end = at + 4;
    if bytes.len() < end {
        return Err(Error::IdxTruncated {
            path: path.to_string(),
            needed: end,
            available: bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[at],
        bytes[at + 1],
        bytes[at + 2],
        bytes[at + 3],
    ]))
}

/// Load an MNIST-style pair of IDX files. Image pixels are scaled by 1/255
/// and flattened row-major, so 28x28 images become 784-dim rows in [0, 1].
/// The label file is parsed to validate that counts match.
pub fn mnist_load(images_path: &Path, labels_path: &Path) -> Result<DatasetHandle> {
    let img_name = images_path.display().to_string();
    let bytes = std::fs::read(images_path)?;
    let magic = read_be_u32(&bytes, 0, &img_name)?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::IdxMagic {
            path: img_name,
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = read_be_u32(&bytes, 4, &img_name)? as usize;
    let rows = read_be_u32(&bytes, 8, &img_name)? as usize;
    let cols = read_be_u32(&bytes, 12, &img_name)? as usize;
    let dim = rows * cols;
    let needed = 16 + count * dim;
    if bytes.len() < needed {
        return Err(Error::IdxTruncated {
            path: img_name,
            needed,
            available: bytes.len(),
        });
    }
    let mut data = Array2::zeros((count, dim));
    for i in 0..count {
        for j in 0..dim {
            data[[i, j]] = bytes[16 + i * dim + j] as f64 / 255.0;
        }
    }

    let lbl_name = labels_path.display().to_string();
    let lbl_bytes = std::fs::read(labels_path)?;
    let lbl_magic = read_be_u32(&lbl_bytes, 0, &lbl_name)?;
    if lbl_magic != IDX_LABELS_MAGIC {
        return Err(Error::IdxMagic {
            path: lbl_name,
            expected: IDX_LABELS_MAGIC,
            found: lbl_magic,
        });
    }
    let lbl_count = read_be_u32(&lbl_bytes, 4, &lbl_name)? as usize;
    if lbl_bytes.len() < 8 + lbl_count {
        return Err(Error::IdxTruncated {
            path: lbl_name,
            needed: 8 + lbl_count,
            available: lbl_bytes.len(),
        });
    }
    if lbl_count != count {
        return Err(Error::IdxCountMismatch {
            images: count,
            labels: lbl_count,
        });
    }
    Ok(DatasetHandle::materialized(data))
}
