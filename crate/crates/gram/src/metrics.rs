//! Quantitative evaluation: mode coverage on ring data, held-out MMD, and
//! the Fréchet distance between Gaussian fits with a pluggable (here:
//! identity) embedding.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::{rotation_about_axis2, RingSpec};
use crate::error::{Error, Result};
use crate::kernels::{mmd2_biased_between, KernelSpec};
use crate::linalg::{sym_eigen, Mat};

/// Gaussian moments fitted to a sample set.
#[derive(Debug, Clone)]
pub struct GaussianFit {
    pub mean: Array1<f64>,
    pub cov: Mat,
    pub n: usize,
}

/// Sample mean and unbiased sample covariance.
pub fn gaussian_fit(samples: &Mat) -> GaussianFit {
    let n = samples.nrows();
    let d = samples.ncols();
    assert!(n >= 1, "gaussian_fit: empty sample set");
    let mean = samples.sum_axis(ndarray::Axis(0)) / n as f64;
    let mut cov = Array2::zeros((d, d));
    if n > 1 {
        for row in samples.rows() {
            for i in 0..d {
                let di = row[i] - mean[i];
                for j in i..d {
                    cov[[i, j]] += di * (row[j] - mean[j]);
                }
            }
        }
        cov /= (n - 1) as f64;
        for i in 0..d {
            for j in 0..i {
                cov[[i, j]] = cov[[j, i]];
            }
        }
    }
    GaussianFit { mean, cov, n }
}

/// Per-mode capture report for ring-shaped data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeReport {
    /// Samples within 3·mode_std of each center (nearest-center assignment).
    pub per_mode_counts: Vec<usize>,
    /// Modes whose close-sample share is at least `min_frac` of all samples.
    pub modes_captured: usize,
    /// Fraction of samples within 3·mode_std of any center.
    pub high_quality_fraction: f64,
}

/// Map 3D ring samples back to the pre-rotation plane coordinates.
fn to_ring_plane(samples: &Mat, spec: &RingSpec) -> Mat {
    match samples.ncols() {
        2 => samples.clone(),
        3 => {
            // samples = pre · R^T, so pre = samples · R; drop the noise axis.
            let r = rotation_about_axis2(spec.rotation_deg_axis2);
            let pre = samples.dot(&r);
            let mut out = Array2::zeros((samples.nrows(), 2));
            out.column_mut(0).assign(&pre.column(0));
            out.column_mut(1).assign(&pre.column(1));
            out
        }
        d => panic!("mode_coverage: samples must be 2 or 3 dimensional, got {d}"),
    }
}

/// Assign each sample to its nearest mode center and report capture counts.
/// A mode counts as captured if at least `min_frac` of all samples lie
/// within 3·mode_std of its center. 3D inputs are unrotated onto the ring
/// plane first; the appended noise dimension does not count against capture.
pub fn mode_coverage(samples: &Mat, spec: &RingSpec, min_frac: f64) -> ModeReport {
    mode_coverage_with_radius(samples, spec, min_frac, 3.0 * spec.mode_std)
}

/// [`mode_coverage`] with an explicit capture radius, for methods whose
/// captured modes are blurrier than the mixture's own component width. The
/// radius must stay below half the distance between adjacent centers or
/// assignments lose meaning.
pub fn mode_coverage_with_radius(
    samples: &Mat,
    spec: &RingSpec,
    min_frac: f64,
    radius: f64,
) -> ModeReport {
    let plane = to_ring_plane(samples, spec);
    let centers = spec.centers(2);
    let n = plane.nrows();
    let mut counts = vec![0usize; spec.n_modes];
    for row in plane.rows() {
        let mut best = 0;
        let mut best_d2 = f64::INFINITY;
        for (k, c) in centers.rows().into_iter().enumerate() {
            let d2 = (row[0] - c[0]).powi(2) + (row[1] - c[1]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = k;
            }
        }
        if best_d2.sqrt() <= radius {
            counts[best] += 1;
        }
    }
    let threshold = min_frac * n as f64;
    let modes_captured = counts.iter().filter(|&&c| c as f64 >= threshold).count();
    let high_quality_fraction = counts.iter().sum::<usize>() as f64 / n.max(1) as f64;
    ModeReport {
        per_mode_counts: counts,
        modes_captured,
        high_quality_fraction,
    }
}

/// Mean distance from each sample to its nearest mode center, on the ring
/// plane. Larger means a blurrier fit of the mixture.
pub fn within_mode_spread(samples: &Mat, spec: &RingSpec) -> f64 {
    let plane = to_ring_plane(samples, spec);
    let centers = spec.centers(2);
    let mut total = 0.0;
    for row in plane.rows() {
        let mut best = f64::INFINITY;
        for c in centers.rows() {
            let d2 = (row[0] - c[0]).powi(2) + (row[1] - c[1]).powi(2);
            best = best.min(d2);
        }
        total += best.sqrt();
    }
    total / plane.nrows().max(1) as f64
}

/// Symmetric PSD square root via eigendecomposition; eigenvalues below
/// -1e-8 are an error, small negatives are clamped to zero.
fn sqrt_psd(m: &Mat) -> Result<Mat> {
    let sym = 0.5 * (m + &m.t());
    let (vals, vecs) = sym_eigen(&sym);
    if let Some(&bad) = vals.iter().find(|&&v| v < -1e-8) {
        return Err(Error::NotPsd { eigenvalue: bad });
    }
    let sqrt_vals = vals.mapv(|v| v.max(0.0).sqrt());
    let lambda = Array2::from_diag(&sqrt_vals);
    Ok(vecs.dot(&lambda).dot(&vecs.t()))
}

/// Fréchet distance between Gaussian fits:
/// `||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2)`.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            context: "frechet_distance",
            lhs: a.mean.len(),
            rhs: b.mean.len(),
        });
    }
    let mean_term: f64 = a
        .mean
        .iter()
        .zip(b.mean.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let a_half = sqrt_psd(&a.cov)?;
    let inner = a_half.dot(&b.cov).dot(&a_half);
    let inner_sym = 0.5 * (&inner + &inner.t());
    let (vals, _) = sym_eigen(&inner_sym);
    if let Some(&bad) = vals.iter().find(|&&v| v < -1e-8) {
        return Err(Error::NotPsd { eigenvalue: bad });
    }
    let trace_sqrt: f64 = vals.iter().map(|&v| v.max(0.0).sqrt()).sum();
    let trace_a: f64 = (0..a.cov.nrows()).map(|i| a.cov[[i, i]]).sum();
    let trace_b: f64 = (0..b.cov.nrows()).map(|i| b.cov[[i, i]]).sum();
    Ok(mean_term + trace_a + trace_b - 2.0 * trace_sqrt)
}

/// Squared MMD between fresh evaluation batches; delegates to the kernels
/// module so evaluation and training use the same statistic.
pub fn held_out_mmd(data_samples: &Mat, gen_samples: &Mat, kernel: &KernelSpec) -> f64 {
    mmd2_biased_between(data_samples, gen_samples, kernel)
}
