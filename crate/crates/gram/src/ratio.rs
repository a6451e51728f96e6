//! Density-ratio estimation from Gram matrices and the critic objective.
//!
//! Given projections of M generated samples and N data samples, the ratio of
//! data density to model density at the generated points is estimated in
//! closed form as `r = (M/N) (K_qq + ridge I)^-1 K_qp 1`. The critic ascends
//! `(1/M) sum (r_i - 1)^2 + lambda sum r_i` (a Pearson-divergence estimate
//! plus a positivity term); the alternative clips the ratio at zero and drops
//! the positivity term.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linalg::{eye, Mat};

/// Estimated density ratio at the generated sample points, with the solver
/// metadata used to produce it.
#[derive(Debug, Clone, Copy)]
pub struct RatioEstimate {
    r: Var,
    ridge: f64,
    scale_corrected: bool,
}

impl RatioEstimate {
    /// Wrap an existing M x 1 ratio vector (used by tests and the clip path).
    pub fn from_var(g: &Graph, r: Var, ridge: f64, scale_corrected: bool) -> Self {
        assert_eq!(
            g.value(r).ncols(),
            1,
            "ratio estimate must be a column vector, got {}x{}",
            g.value(r).nrows(),
            g.value(r).ncols()
        );
        RatioEstimate {
            r,
            ridge,
            scale_corrected,
        }
    }

    pub fn var(&self) -> Var {
        self.r
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn scale_corrected(&self) -> bool {
        self.scale_corrected
    }

    pub fn values(&self, g: &Graph) -> Vec<f64> {
        g.value(self.r).iter().copied().collect()
    }

    pub fn len(&self, g: &Graph) -> usize {
        g.value(self.r).nrows()
    }
}

/// How the ratio's positivity is handled in the critic loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityMode {
    /// Add `lambda * sum(r)` to the maximized objective.
    Penalty,
    /// Clip the estimate at zero elementwise and drop the lambda term.
    Clip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticLossConfig {
    pub lambda: f64,
    pub positivity_mode: PositivityMode,
    pub ridge: f64,
}

impl Default for CriticLossConfig {
    fn default() -> Self {
        CriticLossConfig {
            lambda: 1.0,
            positivity_mode: PositivityMode::Penalty,
            ridge: 1e-6,
        }
    }
}

impl CriticLossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidSpec {
                what: "critic loss",
                reason: format!("lambda must be nonnegative, got {}", self.lambda),
            });
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidSpec {
                what: "critic loss",
                reason: format!("ridge must be nonnegative, got {}", self.ridge),
            });
        }
        Ok(())
    }
}

/// Closed-form ratio estimate `r = (M/N) (K_qq + ridge I)^-1 K_qp 1`,
/// differentiable through both Gram matrices.
///
/// The M/N factor is the exact minimizer for unequal batch sizes and reduces
/// to the plain form when M = N.
pub fn estimate_ratio(
    g: &mut Graph,
    k_qq: Var,
    k_qp: Var,
    ridge: f64,
) -> Result<RatioEstimate> {
    let (m, m2) = g.value(k_qq).dim();
    assert_eq!(m, m2, "estimate_ratio: K_qq must be square, got {m}x{m2}");
    let (qpr, n) = g.value(k_qp).dim();
    assert_eq!(
        qpr, m,
        "estimate_ratio: K_qp must have {m} rows, got {qpr}x{n}"
    );
    let system = if ridge > 0.0 {
        let ridge_diag = g.leaf(ridge * eye(m));
        g.add(k_qq, ridge_diag)
    } else {
        k_qq
    };
    let ones = g.leaf(Array2::from_elem((n, 1), 1.0));
    let rhs = g.matmul(k_qp, ones);
    let solved = g.solve(system, rhs)?;
    let r = g.scale(solved, m as f64 / n as f64);
    Ok(RatioEstimate {
        r,
        ridge,
        scale_corrected: true,
    })
}

/// Pearson-divergence estimate `(1/M) sum (r_i - 1)^2`; zero iff the two
/// projected distributions agree on the sample.
pub fn pearson_divergence_estimate(g: &mut Graph, est: &RatioEstimate) -> Var {
    let shifted = g.add_scalar(est.var(), -1.0);
    let sq = g.mul(shifted, shifted);
    g.mean(sq)
}

/// The critic objective, to be MAXIMIZED with respect to the critic.
///
/// Penalty mode returns `(1/M) sum (r_i - 1)^2 + lambda * sum r_i`; clip mode
/// clips r at zero elementwise first and omits the lambda term (clipped
/// entries get zero gradient).
pub fn critic_loss(g: &mut Graph, est: &RatioEstimate, cfg: &CriticLossConfig) -> Var {
    match cfg.positivity_mode {
        PositivityMode::Penalty => {
            let pd = pearson_divergence_estimate(g, est);
            let total = g.sum(est.var());
            let penalty = g.scale(total, cfg.lambda);
            g.add(pd, penalty)
        }
        PositivityMode::Clip => {
            let clipped = g.relu(est.var());
            let clipped_est = RatioEstimate::from_var(g, clipped, cfg.ridge, est.scale_corrected);
            pearson_divergence_estimate(g, &clipped_est)
        }
    }
}

// ── LOTUS consistency check ────────────────────────────────────────────

/// A Gaussian with explicit mean and covariance, samplable and closed under
/// linear maps. Used by the change-of-variables consistency check.
#[derive(Debug, Clone)]
pub struct GaussianSpec {
    pub mean: Vec<f64>,
    pub cov: Mat,
}

impl GaussianSpec {
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Self {
        let d = mean.len();
        GaussianSpec {
            mean,
            cov: variance * eye(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn chol(&self) -> Mat {
        let d = self.dim();
        let mut l: Mat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..=i {
                let mut s = self.cov[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                if i == j {
                    l[[i, j]] = s.max(0.0).sqrt();
                } else {
                    l[[i, j]] = if l[[j, j]] > 0.0 { s / l[[j, j]] } else { 0.0 };
                }
            }
        }
        l
    }

    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Mat {
        let d = self.dim();
        let l = self.chol();
        let z = Array2::from_shape_fn((n, d), |_| crate::data::standard_normal(rng));
        let mut x = z.dot(&l.t());
        for mut row in x.rows_mut() {
            for (v, m) in row.iter_mut().zip(&self.mean) {
                *v += m;
            }
        }
        x
    }

    /// Distribution of `map(x)` for x from this Gaussian.
    pub fn pushforward(&self, map: &CriticMap) -> PushforwardDist {
        match map {
            CriticMap::Identity => PushforwardDist::Gaussian(self.clone()),
            CriticMap::Linear(w) => {
                let mean_row = Array2::from_shape_vec((1, self.dim()), self.mean.clone())
                    .expect("mean shape");
                let new_mean = mean_row.dot(w);
                let new_cov = w.t().dot(&self.cov).dot(w);
                PushforwardDist::Gaussian(GaussianSpec {
                    mean: new_mean.iter().copied().collect(),
                    cov: new_cov,
                })
            }
            CriticMap::Constant(c) => PushforwardDist::Point(c.clone()),
        }
    }
}

/// Fixed maps used as critics in the consistency check.
#[derive(Debug, Clone)]
pub enum CriticMap {
    Identity,
    /// Row-vector convention: y = x W with W of shape D x K.
    Linear(Mat),
    Constant(Vec<f64>),
}

impl CriticMap {
    pub fn apply(&self, x: &Mat) -> Mat {
        match self {
            CriticMap::Identity => x.clone(),
            CriticMap::Linear(w) => {
                assert_eq!(
                    x.ncols(),
                    w.nrows(),
                    "critic map: input has {} columns, map expects {}",
                    x.ncols(),
                    w.nrows()
                );
                x.dot(w)
            }
            CriticMap::Constant(c) => {
                let mut out = Array2::zeros((x.nrows(), c.len()));
                for mut row in out.rows_mut() {
                    for (v, cv) in row.iter_mut().zip(c) {
                        *v = *cv;
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum PushforwardDist {
    Gaussian(GaussianSpec),
    Point(Vec<f64>),
}

impl PushforwardDist {
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Mat {
        match self {
            PushforwardDist::Gaussian(g) => g.sample(n, rng),
            PushforwardDist::Point(c) => {
                let mut out = Array2::zeros((n, c.len()));
                for mut row in out.rows_mut() {
                    for (v, cv) in row.iter_mut().zip(c) {
                        *v = *cv;
                    }
                }
                out
            }
        }
    }
}

const LOTUS_REFERENCE_SIZE: usize = 500;
const LOTUS_RIDGE: f64 = 1e-6;

/// Change-of-variables consistency of the ratio estimator: the Monte-Carlo
/// average of `g(f(x))` over fresh x ~ q must match the average of `g` over
/// fresh draws from the pushforward of q through f, where `g = r^2` is built
/// once from the Gram-matrix ratio values on a shared projected reference
/// set (kernel-weighted extension of those values to arbitrary query
/// points). Returns the absolute difference of the two estimates, which
/// shrinks with `n_samples`.
pub fn lotus_consistency_check(
    p_spec: &GaussianSpec,
    q_spec: &GaussianSpec,
    critic: &CriticMap,
    kernel: &KernelSpec,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let mut ref_rng = ChaCha8Rng::seed_from_u64(seed);
    let xq_ref = q_spec.sample(LOTUS_REFERENCE_SIZE, &mut ref_rng);
    let xp_ref = p_spec.sample(LOTUS_REFERENCE_SIZE, &mut ref_rng);
    let yq_ref = critic.apply(&xq_ref);
    let yp_ref = critic.apply(&xp_ref);

    // Ratio values at the reference points, via the Gram-matrix estimator.
    let mut g = Graph::new();
    let yq_var = g.leaf(yq_ref.clone());
    let yp_var = g.leaf(yp_ref);
    let k_qq = crate::kernels::rbf_gram(&mut g, yq_var, yq_var, kernel);
    let k_qp = crate::kernels::rbf_gram(&mut g, yq_var, yp_var, kernel);
    let est = estimate_ratio(&mut g, k_qq, k_qp, LOTUS_RIDGE)?;
    let r_values = est.values(&g);

    // Kernel-weighted average of the reference values; bounded by the value
    // range, unlike straight RBF interpolation whose coefficients explode on
    // dense reference sets.
    let ratio_sq_at = |points: &Mat| -> Vec<f64> {
        let mut out = Vec::with_capacity(points.nrows());
        for row in points.rows() {
            let mut num = 0.0;
            let mut den = 0.0;
            for (j, ref_row) in yq_ref.rows().into_iter().enumerate() {
                let mut d2 = 0.0;
                for (a, b) in row.iter().zip(ref_row.iter()) {
                    d2 += (a - b) * (a - b);
                }
                let mut k = 0.0;
                for &sigma in kernel.bandwidths() {
                    k += (-d2 / (2.0 * sigma * sigma)).exp();
                }
                num += k * r_values[j];
                den += k;
            }
            let r = num / den.max(1e-300);
            out.push(r * r);
        }
        out
    };

    // Data-space route: x ~ q, evaluate g(f(x)).
    let mut q_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let xq = q_spec.sample(n_samples, &mut q_rng);
    let lhs_vals = ratio_sq_at(&critic.apply(&xq));
    let lhs = lhs_vals.iter().sum::<f64>() / n_samples as f64;

    // Projected-space route: y ~ pushforward of q, evaluate g(y).
    let mut push_rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let ybar = q_spec.pushforward(critic).sample(n_samples, &mut push_rng);
    let rhs_vals = ratio_sq_at(&ybar);
    let rhs = rhs_vals.iter().sum::<f64>() / n_samples as f64;

    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{check_gradients, ModelParams};
    use crate::kernels::rbf_gram;
    use crate::models::{optimizer_step, Direction, Mlp, MlpSpec, OptimizerConfig, OptimizerState, OutputActivation};
    use ndarray::array;
    use rand_core::RngCore;

    fn uniform(rng: &mut ChaCha8Rng) -> f64 {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn rand_mat(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> Mat {
        Array2::from_shape_fn((n, m), |_| lo + (hi - lo) * uniform(rng))
    }

    #[test]
    fn identical_batches_give_unit_ratio() {
        // Well-spread points and a local kernel keep the Gram system
        // comfortably conditioned.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = rand_mat(&mut rng, 40, 2, -3.0, 3.0);
        let spec = KernelSpec::single(0.5).unwrap();
        let mut g = Graph::new();
        let q = g.leaf(pts.clone());
        let p = g.leaf(pts);
        let k_qq = rbf_gram(&mut g, q, q, &spec);
        let k_qp = rbf_gram(&mut g, q, p, &spec);
        let est = estimate_ratio(&mut g, k_qq, k_qp, 0.0).unwrap();
        for v in est.values(&g) {
            assert!((v - 1.0).abs() < 1e-8, "ratio entry {v}");
        }
        assert!(est.scale_corrected());
        // And the Pearson divergence of a unit ratio is numerically zero.
        let pd = pearson_divergence_estimate(&mut g, &est);
        assert!(g.scalar_value(pd) < 1e-12);
    }

    #[test]
    fn single_pair_ratio_is_kernel_value() {
        let spec = KernelSpec::single(1.0).unwrap();
        let mut g = Graph::new();
        let q = g.leaf(array![[0.0, 0.0]]);
        let p = g.leaf(array![[1.0, 1.0]]);
        let k_qq = rbf_gram(&mut g, q, q, &spec);
        let k_qp = rbf_gram(&mut g, q, p, &spec);
        let est = estimate_ratio(&mut g, k_qq, k_qp, 0.0).unwrap();
        let expected = (-1.0f64).exp(); // k(y_q, y_p) with squared distance 2
        assert!((est.values(&g)[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicating_both_batches_keeps_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = rand_mat(&mut rng, 30, 2, -3.0, 3.0);
        let p = rand_mat(&mut rng, 25, 2, -3.0, 3.0);
        let spec = KernelSpec::single(0.5).unwrap();
        let ridge = 1e-6;

        let run = |q: &Mat, p: &Mat| -> Vec<f64> {
            let mut g = Graph::new();
            let qv = g.leaf(q.clone());
            let pv = g.leaf(p.clone());
            let k_qq = rbf_gram(&mut g, qv, qv, &spec);
            let k_qp = rbf_gram(&mut g, qv, pv, &spec);
            estimate_ratio(&mut g, k_qq, k_qp, ridge).unwrap().values(&g)
        };

        let base = run(&q, &p);
        let q2 = ndarray::concatenate(ndarray::Axis(0), &[q.view(), q.view()]).unwrap();
        let p2 = ndarray::concatenate(ndarray::Axis(0), &[p.view(), p.view()]).unwrap();
        let dup = run(&q2, &p2);
        for i in 0..30 {
            assert!(
                (dup[i] - base[i]).abs() < 1e-4,
                "entry {i}: {} vs {}",
                dup[i],
                base[i]
            );
            assert!((dup[i + 30] - base[i]).abs() < 1e-4);
        }
    }

    #[test]
    fn ridge_zero_on_duplicated_batch_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = rand_mat(&mut rng, 10, 2, -2.0, 2.0);
        let q2 = ndarray::concatenate(ndarray::Axis(0), &[q.view(), q.view()]).unwrap();
        let spec = KernelSpec::single(1.0).unwrap();
        let mut g = Graph::new();
        let qv = g.leaf(q2.clone());
        let k_qq = rbf_gram(&mut g, qv, qv, &spec);
        let k_qp = rbf_gram(&mut g, qv, qv, &spec);
        let err = estimate_ratio(&mut g, k_qq, k_qp, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularMatrix { .. }));
    }

    #[test]
    fn pearson_divergence_arithmetic() {
        let mut g = Graph::new();
        let ones = g.leaf(Array2::from_elem((5, 1), 1.0));
        let est = RatioEstimate::from_var(&g, ones, 0.0, true);
        let pd = pearson_divergence_estimate(&mut g, &est);
        assert_eq!(g.scalar_value(pd), 0.0);

        let two = g.leaf(array![[2.0]]);
        let est = RatioEstimate::from_var(&g, two, 0.0, true);
        let pd = pearson_divergence_estimate(&mut g, &est);
        assert_eq!(g.scalar_value(pd), 1.0);
    }

    #[test]
    fn critic_loss_penalty_arithmetic() {
        let cfg = CriticLossConfig::default();
        cfg.validate().unwrap();

        let mut g = Graph::new();
        let ones = g.leaf(Array2::from_elem((200, 1), 1.0));
        let est = RatioEstimate::from_var(&g, ones, cfg.ridge, true);
        let loss = critic_loss(&mut g, &est, &cfg);
        assert_eq!(g.scalar_value(loss), 200.0);

        let mut g = Graph::new();
        let r = g.leaf(array![[0.5], [1.5]]);
        let est = RatioEstimate::from_var(&g, r, cfg.ridge, true);
        let loss = critic_loss(&mut g, &est, &cfg);
        assert!((g.scalar_value(loss) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn critic_loss_clip_arithmetic() {
        let cfg = CriticLossConfig {
            positivity_mode: PositivityMode::Clip,
            ..CriticLossConfig::default()
        };
        let mut g = Graph::new();
        let r = g.leaf(array![[-0.5], [1.0]]);
        let est = RatioEstimate::from_var(&g, r, cfg.ridge, true);
        let loss = critic_loss(&mut g, &est, &cfg);
        assert!((g.scalar_value(loss) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad = CriticLossConfig {
            lambda: -1.0,
            ..CriticLossConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CriticLossConfig {
            ridge: f64::NAN,
            ..CriticLossConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn critic_loss_gradients_pass_check() {
        // Full pipeline: critic MLP -> projections -> Grams -> ratio -> loss.
        let spec = MlpSpec::with_hidden(2, &[4], 2, OutputActivation::Identity).unwrap();
        let critic = Mlp::init_seeded(spec.clone(), 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let xq = rand_mat(&mut rng, 6, 2, -1.5, 1.5);
        let xp = rand_mat(&mut rng, 6, 2, -1.5, 1.5);
        let kspec = KernelSpec::single(1.0).unwrap();
        let cfg = CriticLossConfig::default();
        let mut params = critic.params.clone();
        let mlp_spec = spec.clone();
        let err = check_gradients(&mut params, 1e-5, move |g, bound| {
            let mlp = Mlp {
                spec: mlp_spec.clone(),
                params: ModelParams::new(),
            };
            let xq_v = g.leaf(xq.clone());
            let xp_v = g.leaf(xp.clone());
            let fq = mlp.forward(g, bound, xq_v);
            let fp = mlp.forward(g, bound, xp_v);
            let k_qq = rbf_gram(g, fq, fq, &kspec);
            let k_qp = rbf_gram(g, fq, fp, &kspec);
            let est = estimate_ratio(g, k_qq, k_qp, cfg.ridge)?;
            Ok(critic_loss(g, &est, &cfg))
        })
        .unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn ascending_critic_loss_raises_pearson_divergence() {
        // Linear 2D -> 2D critic, two separated Gaussians, fixed batches.
        let spec = MlpSpec::new(vec![2, 2], OutputActivation::Identity).unwrap();
        let mut critic = Mlp::init_seeded(spec.clone(), 21).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut xp = rand_mat(&mut rng, 150, 2, -0.5, 0.5);
        xp.mapv_inplace(|v| v + 1.5);
        let xq = rand_mat(&mut rng, 150, 2, -0.5, 0.5);
        let kspec = KernelSpec::single(1.0).unwrap();
        let cfg = CriticLossConfig::default();
        let opt = OptimizerConfig::adam(1e-3, 0.5);
        let mut state = OptimizerState::new(&critic.params);

        let pd_value = |critic: &Mlp| -> f64 {
            let mut g = Graph::new();
            let bound = critic.bind(&mut g);
            let xq_v = g.leaf(xq.clone());
            let xp_v = g.leaf(xp.clone());
            let fq = critic.forward(&mut g, &bound, xq_v);
            let fp = critic.forward(&mut g, &bound, xp_v);
            let k_qq = rbf_gram(&mut g, fq, fq, &kspec);
            let k_qp = rbf_gram(&mut g, fq, fp, &kspec);
            let est = estimate_ratio(&mut g, k_qq, k_qp, cfg.ridge).unwrap();
            let pd = pearson_divergence_estimate(&mut g, &est);
            g.scalar_value(pd)
        };

        let pd0 = pd_value(&critic);
        for _ in 0..100 {
            let mut g = Graph::new();
            let bound = critic.bind(&mut g);
            let xq_v = g.leaf(xq.clone());
            let xp_v = g.leaf(xp.clone());
            let fq = critic.forward(&mut g, &bound, xq_v);
            let fp = critic.forward(&mut g, &bound, xp_v);
            let k_qq = rbf_gram(&mut g, fq, fq, &kspec);
            let k_qp = rbf_gram(&mut g, fq, fp, &kspec);
            let est = estimate_ratio(&mut g, k_qq, k_qp, cfg.ridge).unwrap();
            let loss = critic_loss(&mut g, &est, &cfg);
            g.backward(loss).unwrap();
            let grads = bound.grads(&g);
            optimizer_step(&mut state, &mut critic.params, &grads, &opt, Direction::Ascend)
                .unwrap();
        }
        let pd100 = pd_value(&critic);
        assert!(
            pd100 > pd0,
            "Pearson divergence did not increase: {pd0} -> {pd100}"
        );
    }

    #[test]
    fn lotus_identity_critic_same_distribution() {
        let p = GaussianSpec::isotropic(vec![0.0, 0.0], 1.0);
        let q = GaussianSpec::isotropic(vec![0.0, 0.0], 1.0);
        let kernel = KernelSpec::single(1.0).unwrap();
        let n = 10_000;
        let d = lotus_consistency_check(&p, &q, &CriticMap::Identity, &kernel, n, 77).unwrap();
        assert!(
            d < 2.0 / (n as f64).sqrt(),
            "discrepancy {d} vs bound {}",
            2.0 / (n as f64).sqrt()
        );
    }

    #[test]
    fn lotus_constant_critic_is_exact() {
        let p = GaussianSpec::isotropic(vec![0.5], 1.0);
        let q = GaussianSpec::isotropic(vec![0.0], 1.0);
        let kernel = KernelSpec::single(1.0).unwrap();
        let critic = CriticMap::Constant(vec![0.3]);
        let d = lotus_consistency_check(&p, &q, &critic, &kernel, 500, 78).unwrap();
        assert_eq!(d, 0.0);
    }
}
