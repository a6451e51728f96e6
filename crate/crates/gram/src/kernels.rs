//! RBF kernel mixtures, Gram matrices and the biased empirical squared MMD.
//!
//! Convention, fixed everywhere: `k(x, y) = sum_b exp(-||x - y||^2 / (2 sigma_b^2))`.
//! Bandwidth mixtures are SUMMED, not averaged, so `k(x, x) = B` for a list
//! of B bandwidths. Alternate conventions rescale every loss value reported
//! by this crate, which is why this one is pinned here.

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Bandwidth list for the RBF mixture kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    bandwidths: Vec<f64>,
}

impl KernelSpec {
    /// Requires a nonempty list of strictly positive, finite bandwidths.
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::InvalidSpec {
                what: "kernel",
                reason: "bandwidth list is empty".into(),
            });
        }
        if let Some(bad) = bandwidths.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidSpec {
                what: "kernel",
                reason: format!("bandwidth {bad} is not strictly positive"),
            });
        }
        Ok(KernelSpec { bandwidths })
    }

    pub fn single(sigma: f64) -> Result<Self> {
        Self::new(vec![sigma])
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// k(x, x), which equals the number of bandwidths.
    pub fn self_similarity(&self) -> f64 {
        self.bandwidths.len() as f64
    }
}

/// The Gram matrices one training iteration shares between both losses.
///
/// `k_qq` is M x M over generated-sample projections, `k_qp` is M x N against
/// the data projections and `k_pp` (N x N, data only) is needed only by the
/// generator's MMD loss.
#[derive(Debug, Clone, Copy)]
pub struct GramPair {
    pub k_qq: Var,
    pub k_qp: Var,
    pub k_pp: Option<Var>,
}

/// Differentiable squared distances; entry (i, j) = ||X_i - Y_j||^2.
pub fn pairwise_sq_dist(g: &mut Graph, x: Var, y: Var) -> Var {
    g.pairwise_sq_dist(x, y)
}

/// Differentiable Gram matrix of the RBF mixture between row sets.
pub fn rbf_gram(g: &mut Graph, x: Var, y: Var, spec: &KernelSpec) -> Var {
    let d = g.pairwise_sq_dist(x, y);
    let mut total: Option<Var> = None;
    for &sigma in spec.bandwidths() {
        let scaled = g.scale(d, -1.0 / (2.0 * sigma * sigma));
        let term = g.exp(scaled);
        total = Some(match total {
            None => term,
            Some(t) => g.add(t, term),
        });
    }
    total.expect("bandwidth list validated nonempty")
}

/// Biased (V-statistic) squared MMD from Gram matrices:
/// `(1/N^2) sum K_xx - (2/NM) sum K_xy + (1/M^2) sum K_yy`.
///
/// Includes the diagonal terms, so it is nonnegative up to roundoff for any
/// Gram matrices produced by a common kernel.
pub fn mmd2_biased(g: &mut Graph, k_xx: Var, k_xy: Var, k_yy: Var) -> Var {
    let n = g.value(k_xx).nrows();
    let m = g.value(k_yy).nrows();
    assert_eq!(
        g.value(k_xx).dim(),
        (n, n),
        "mmd2_biased: K_xx must be square"
    );
    assert_eq!(
        g.value(k_yy).dim(),
        (m, m),
        "mmd2_biased: K_yy must be square"
    );
    assert_eq!(
        g.value(k_xy).dim(),
        (n, m),
        "mmd2_biased: K_xy must be {}x{}, got {}x{}",
        n,
        m,
        g.value(k_xy).nrows(),
        g.value(k_xy).ncols()
    );
    let sxx = g.sum(k_xx);
    let sxy = g.sum(k_xy);
    let syy = g.sum(k_yy);
    let txx = g.scale(sxx, 1.0 / (n as f64 * n as f64));
    let txy = g.scale(sxy, -2.0 / (n as f64 * m as f64));
    let tyy = g.scale(syy, 1.0 / (m as f64 * m as f64));
    let partial = g.add(txx, txy);
    g.add(partial, tyy)
}

/// Plain-number squared MMD between two row sets (builds a throwaway graph).
pub fn mmd2_biased_between(x: &Mat, y: &Mat, spec: &KernelSpec) -> f64 {
    let mut g = Graph::new();
    let xv = g.leaf(x.clone());
    let yv = g.leaf(y.clone());
    let k_xx = rbf_gram(&mut g, xv, xv, spec);
    let k_xy = rbf_gram(&mut g, xv, yv, spec);
    let k_yy = rbf_gram(&mut g, yv, yv, spec);
    let v = mmd2_biased(&mut g, k_xx, k_xy, k_yy);
    g.scalar_value(v)
}
