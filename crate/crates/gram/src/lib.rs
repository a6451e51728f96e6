//! Generative ratio matching (GRAM): joint, non-adversarial training of a
//! generator network and a projection critic. The critic is trained to
//! maximize a Gram-matrix estimate of the Pearson divergence between the
//! projected data and model distributions; the generator is trained to
//! minimize the MMD between the same projections. GAN and MMD-net baselines
//! plus the ring-of-Gaussians evaluation suite are included.
//!
//! Kernel convention used throughout (it rescales every reported loss):
//! `k(x, y) = sum_b exp(-||x - y||^2 / (2 sigma_b^2))`, a SUM over the
//! bandwidth list, so `k(x, x)` equals the number of bandwidths.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod ratio;
pub mod train;

pub use error::{Error, Result};
pub use linalg::Mat;
