//! Finite-difference agreement for every exported loss on randomized small
//! instances, across many seeds.
//!
//! Central differences are only valid away from ReLU kinks: at a kink the
//! two-sided difference averages the one-sided slopes while reverse mode
//! takes the zero-side subgradient, and zero-initialized biases make exact
//! kinks common (a generator row whose hidden units are all clipped is the
//! exact zero vector). Instances are therefore screened by a forward-only
//! margin condition: every hidden preactivation of every network must be at
//! least 1e-3 from zero, far above the 1e-5 probe step.

use gram::autodiff::{check_gradients, BoundParams, ModelParams};
use gram::kernels::{mmd2_biased, rbf_gram, KernelSpec};
use gram::linalg::{eye, LuFactors};
use gram::models::{Mlp, MlpSpec, OutputActivation};
use gram::ratio::{critic_loss, estimate_ratio, CriticLossConfig, PositivityMode};
use gram::Mat;
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const KINK_MARGIN: f64 = 1e-3;
/// Central differences through the Gram solve carry rounding noise that
/// grows with the system's conditioning; instances are screened so the
/// noise floor stays below the tolerance.
const MAX_GRAM_CONDITION: f64 = 300.0;

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn rand_mat(rng: &mut ChaCha8Rng, n: usize, m: usize, lo: f64, hi: f64) -> Mat {
    Array2::from_shape_fn((n, m), |_| lo + (hi - lo) * uniform(rng))
}

/// Minimum |preactivation| over every ReLU layer of the net on a batch.
fn kink_margin(mlp: &Mlp, x: &Mat) -> f64 {
    let mut h = x.clone();
    let mut margin = f64::INFINITY;
    let n_layers = mlp.spec.n_layers();
    for l in 0..n_layers {
        let w = &mlp.params.tensors()[2 * l].value;
        let b = &mlp.params.tensors()[2 * l + 1].value;
        let mut z = h.dot(w);
        z += b;
        if l + 1 < n_layers {
            for v in z.iter() {
                margin = margin.min(v.abs());
            }
            h = z.mapv(|v| v.max(0.0));
        } else {
            h = z;
        }
    }
    margin
}

struct RatioInstance {
    critic: Mlp,
    xq: Mat,
    xp: Mat,
}

/// First `count` seeds whose Eq. 9 instance is kink-clear and whose Gram
/// system is well conditioned.
fn ratio_instances(count: usize) -> Vec<(u64, RatioInstance)> {
    let spec = MlpSpec::with_hidden(2, &[4], 2, OutputActivation::Identity).unwrap();
    let kernel = KernelSpec::single(1.0).unwrap();
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let critic = Mlp::init_seeded(spec.clone(), 400 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let xq = rand_mat(&mut rng, 8, 2, -1.5, 1.5);
        let xp = rand_mat(&mut rng, 8, 2, -1.5, 1.5);
        seed += 1;
        assert!(seed < 2000, "could not find acceptable instances");
        let margin = kink_margin(&critic, &xq).min(kink_margin(&critic, &xp));
        if margin <= KINK_MARGIN {
            continue;
        }
        let fq = critic.forward_plain(&xq);
        let mut g = gram::autodiff::Graph::new();
        let q = g.leaf(fq);
        let k_qq = rbf_gram(&mut g, q, q, &kernel);
        let system = g.value(k_qq).clone() + 1e-6 * eye(8);
        let cond = LuFactors::factor(&system)
            .map(|f| f.diag_condition())
            .unwrap_or(f64::INFINITY);
        if cond > MAX_GRAM_CONDITION {
            continue;
        }
        // The estimate itself must be in the sane regime (overlapping
        // uniform batches have ratios near 1); solver-degenerate instances
        // oscillate and push the finite-difference noise floor above the
        // tolerance.
        let fp = critic.forward_plain(&xp);
        let p_var = g.leaf(fp);
        let k_qp = rbf_gram(&mut g, q, p_var, &kernel);
        let est = match estimate_ratio(&mut g, k_qq, k_qp, 1e-6) {
            Ok(e) => e,
            Err(_) => continue,
        };
        if est.values(&g).iter().any(|r| (r - 1.0).abs() > 3.0) {
            continue;
        }
        out.push((seed - 1, RatioInstance { critic, xq, xp }));
    }
    out
}

struct MmdInstance {
    generator: Mlp,
    critic: Mlp,
    z: Mat,
    xp: Mat,
}

/// First `count` seeds whose Eq. 10 instance (generator + critic) is
/// kink-clear, including the critic evaluated on the generator's output.
fn mmd_instances(count: usize) -> Vec<(u64, MmdInstance)> {
    let gen_spec = MlpSpec::with_hidden(3, &[4], 2, OutputActivation::Identity).unwrap();
    let critic_spec = MlpSpec::with_hidden(2, &[4], 2, OutputActivation::Identity).unwrap();
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < count {
        let generator = Mlp::init_seeded(gen_spec.clone(), seed * 2 + 1).unwrap();
        let critic = Mlp::init_seeded(critic_spec.clone(), seed * 2 + 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let z = rand_mat(&mut rng, 10, 3, -1.0, 1.0);
        let xp = rand_mat(&mut rng, 12, 2, -1.5, 1.5);
        let xq = generator.forward_plain(&z);
        let margin = kink_margin(&generator, &z)
            .min(kink_margin(&critic, &xq))
            .min(kink_margin(&critic, &xp));
        if margin > KINK_MARGIN {
            out.push((
                seed,
                MmdInstance {
                    generator,
                    critic,
                    z,
                    xp,
                },
            ));
        }
        seed += 1;
        assert!(seed < 500, "could not find kink-clear instances");
    }
    out
}

#[test]
fn projected_mmd_loss_gradients_many_seeds() {
    let kspec = KernelSpec::single(1.0).unwrap();
    for (seed, inst) in mmd_instances(20) {
        let mut params = ModelParams::new();
        for t in inst.generator.params.tensors() {
            params.push(format!("g_{}", t.name), t.value.clone()).unwrap();
        }
        for t in inst.critic.params.tensors() {
            params.push(format!("c_{}", t.name), t.value.clone()).unwrap();
        }
        let n_gen = inst.generator.params.len();
        let gs = inst.generator.spec.clone();
        let cs = inst.critic.spec.clone();
        let ks = kspec.clone();
        let (z, xp) = (inst.z.clone(), inst.xp.clone());
        let err = check_gradients(&mut params, 1e-5, move |g, bound| {
            let gen_vars = BoundParams::from_vars(bound.vars()[..n_gen].to_vec());
            let critic_vars = BoundParams::from_vars(bound.vars()[n_gen..].to_vec());
            let gen = Mlp {
                spec: gs.clone(),
                params: ModelParams::new(),
            };
            let critic = Mlp {
                spec: cs.clone(),
                params: ModelParams::new(),
            };
            let z_v = g.leaf(z.clone());
            let xp_v = g.leaf(xp.clone());
            let xq = gen.forward(g, &gen_vars, z_v);
            let fq = critic.forward(g, &critic_vars, xq);
            let fp = critic.forward(g, &critic_vars, xp_v);
            let k_pp = rbf_gram(g, fp, fp, &ks);
            let k_pq = rbf_gram(g, fp, fq, &ks);
            let k_qq = rbf_gram(g, fq, fq, &ks);
            Ok(mmd2_biased(g, k_pp, k_pq, k_qq))
        })
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn critic_ratio_loss_gradients_many_seeds_both_modes() {
    let kspec = KernelSpec::single(1.0).unwrap();
    for (seed, inst) in ratio_instances(20) {
        for mode in [PositivityMode::Penalty, PositivityMode::Clip] {
            let cfg = CriticLossConfig {
                positivity_mode: mode,
                ..CriticLossConfig::default()
            };
            let mut params = inst.critic.params.clone();
            let ms = inst.critic.spec.clone();
            let ks = kspec.clone();
            let (xq, xp) = (inst.xq.clone(), inst.xp.clone());
            let err = check_gradients(&mut params, 1e-5, move |g, bound| {
                let mlp = Mlp {
                    spec: ms.clone(),
                    params: ModelParams::new(),
                };
                let xq_v = g.leaf(xq.clone());
                let xp_v = g.leaf(xp.clone());
                let fq = mlp.forward(g, bound, xq_v);
                let fp = mlp.forward(g, bound, xp_v);
                let k_qq = rbf_gram(g, fq, fq, &ks);
                let k_qp = rbf_gram(g, fq, fp, &ks);
                let est = estimate_ratio(g, k_qq, k_qp, cfg.ridge)?;
                Ok(critic_loss(g, &est, &cfg))
            })
            .unwrap();
            assert!(err < 1e-4, "seed {seed} {mode:?}: relative error {err}");
        }
    }
}

#[test]
fn gan_loss_gradients_many_seeds() {
    let body_spec = MlpSpec::with_hidden(2, &[5], 3, OutputActivation::Identity).unwrap();
    let head_spec = MlpSpec::new(vec![3, 1], OutputActivation::Sigmoid).unwrap();
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 20 {
        let body = Mlp::init_seeded(body_spec.clone(), 600 + seed).unwrap();
        let head = Mlp::init_seeded(head_spec.clone(), 700 + seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
        let xp = rand_mat(&mut rng, 9, 2, -1.0, 1.0);
        let xq = rand_mat(&mut rng, 9, 2, -1.0, 1.0);
        seed += 1;
        assert!(seed < 500, "could not find kink-clear instances");
        if kink_margin(&body, &xp).min(kink_margin(&body, &xq)) <= KINK_MARGIN {
            continue;
        }
        checked += 1;

        let mut params = ModelParams::new();
        for t in body.params.tensors() {
            params.push(format!("b_{}", t.name), t.value.clone()).unwrap();
        }
        for t in head.params.tensors() {
            params.push(format!("h_{}", t.name), t.value.clone()).unwrap();
        }
        let n_body = body.params.len();
        let bs = body_spec.clone();
        let hs = head_spec.clone();
        let err = check_gradients(&mut params, 1e-5, move |g, bound| {
            let body_vars = BoundParams::from_vars(bound.vars()[..n_body].to_vec());
            let head_vars = BoundParams::from_vars(bound.vars()[n_body..].to_vec());
            let body = Mlp {
                spec: bs.clone(),
                params: ModelParams::new(),
            };
            let head = Mlp {
                spec: hs.clone(),
                params: ModelParams::new(),
            };
            let xp_v = g.leaf(xp.clone());
            let xq_v = g.leaf(xq.clone());
            let h_real = body.forward(g, &body_vars, xp_v);
            let s_real = head.forward_preact(g, &head_vars, h_real);
            let h_fake = body.forward(g, &body_vars, xq_v);
            let s_fake = head.forward_preact(g, &head_vars, h_fake);
            let neg_real = g.neg(s_real);
            let sp_nr = g.softplus(neg_real);
            let log_d = g.neg(sp_nr);
            let sp_f = g.softplus(s_fake);
            let log_omd = g.neg(sp_f);
            let t1 = g.mean(log_d);
            let t2 = g.mean(log_omd);
            Ok(g.add(t1, t2))
        })
        .unwrap();
        assert!(err < 1e-4, "seed {seed}: relative error {err}");
    }
}

#[test]
fn graph_reductions_are_consistent() {
    use gram::autodiff::Graph;
    // mean equals sum/numel bit-for-bit (shared ordered reduction), and
    // axis sums agree with the full sum up to roundoff.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = rand_mat(&mut rng, 7, 5, -3.0, 3.0);
    let mut g = Graph::new();
    let v = g.leaf(m);
    let total = g.sum(v);
    let mean = g.mean(v);
    assert_eq!(
        g.scalar_value(mean).to_bits(),
        (g.scalar_value(total) / 35.0).to_bits()
    );
    let by_rows = g.sum_axis(v, 0);
    let total2 = g.sum(by_rows);
    assert!((g.scalar_value(total2) - g.scalar_value(total)).abs() < 1e-12);
}
