//! Scratch calibration runs for threshold verification.
use gram::data::*;
use gram::kernels::*;
use gram::metrics::*;
use gram::models::*;
use gram::ratio::*;
use gram::train::*;
use gram::autodiff::Graph;
use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use std::time::Instant;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "gram" => run_gram(),
        "mmdnet" => run_mmdnet(),
        "gan" => run_gan(),
        "ratio" => run_ratio(),
        "pd" => run_pd(),
        _ => println!("usage: calibrate [gram|mmdnet|gan|ratio|pd]"),
    }
}

fn eval_gen(cfg: &TrainConfig, res: &TrainResult) {
    let m = evaluate_run(cfg, res).unwrap();
    let report = m.mode_report.as_ref().unwrap();
    println!(
        "  modes={} hq={:.3} spread={:.4} held_out_mmd2={:.3e} frechet={:.3e} diverged={:?}",
        report.modes_captured,
        report.high_quality_fraction,
        m.mean_within_mode_spread.unwrap(),
        m.held_out_mmd2,
        m.frechet_identity,
        m.diverged_at
    );
}

fn run_gram() {
    let t0 = Instant::now();
    let cfg = TrainConfig::defaults_for(Method::Gram, 42);
    let res = train(&cfg).unwrap();
    println!("gram defaults: {:.1}s", t0.elapsed().as_secs_f64());
    let r10 = res.trace.records[9].generator_mmd2.unwrap();
    let r2000 = res.trace.records[1999].generator_mmd2.unwrap();
    println!("  mmd2@10={:.4e} mmd2@2000={:.4e} ratio={:.1}", r10, r2000, r10 / r2000);
    let pd_finite = res.trace.records.iter().all(|r| r.pd_estimate.unwrap().is_finite());
    println!("  pd finite: {pd_finite}");
    eval_gen(&cfg, &res);
}

fn run_mmdnet() {
    let t0 = Instant::now();
    let cfg = TrainConfig::defaults_for(Method::Mmdnet, 42);
    let res = train(&cfg).unwrap();
    println!("mmdnet defaults: {:.1}s", t0.elapsed().as_secs_f64());
    eval_gen(&cfg, &res);
}

fn run_gan() {
    for seed in [42u64] {
        let t0 = Instant::now();
        let cfg = TrainConfig::defaults_for(Method::Gan, seed);
        let res = train(&cfg).unwrap();
        println!("gan seed {seed}: {:.1}s", t0.elapsed().as_secs_f64());
        eval_gen(&cfg, &res);
    }
}

fn run_ratio() {
    // 1D Gaussians: q = N(0,1) generated, p = N(0.5,1) data; analytic
    // ratio p/q at x is exp(0.5 x - 0.125).
    let t0 = Instant::now();
    let m = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xq = Array2::from_shape_fn((m, 1), |_| standard_normal(&mut rng));
    let xp = Array2::from_shape_fn((m, 1), |_| standard_normal(&mut rng) + 0.5);
    let spec = KernelSpec::single(1.0).unwrap();
    let mut g = Graph::new();
    let q = g.leaf(xq.clone());
    let p = g.leaf(xp);
    let k_qq = rbf_gram(&mut g, q, q, &spec);
    let k_qp = rbf_gram(&mut g, q, p, &spec);
    let est = estimate_ratio(&mut g, k_qq, k_qp, 1e-6).unwrap();
    let r = est.values(&g);
    let mut num = 0.0; let mut cnt = 0;
    for (i, &x) in xq.column(0).iter().enumerate() {
        if x.abs() <= 2.0 {
            let truth = (0.5 * x - 0.125f64).exp();
            num += ((r[i] - truth) / truth).powi(2);
            cnt += 1;
        }
    }
    println!("ratio: relRMSE = {:.4} over {cnt} pts, {:.1}s", (num / cnt as f64).sqrt(), t0.elapsed().as_secs_f64());
}

fn run_pd() {
    // p = N(1,1), q = N(0,1): population PD = e - 1.
    for m in [2000usize] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xq = Array2::from_shape_fn((m, 1), |_| standard_normal(&mut rng));
        let xp = Array2::from_shape_fn((m, 1), |_| standard_normal(&mut rng) + 1.0);
        let spec = KernelSpec::single(1.0).unwrap();
        let mut g = Graph::new();
        let q = g.leaf(xq);
        let p = g.leaf(xp);
        let k_qq = rbf_gram(&mut g, q, q, &spec);
        let k_qp = rbf_gram(&mut g, q, p, &spec);
        let est = estimate_ratio(&mut g, k_qq, k_qp, 1e-6).unwrap();
        let pd = pearson_divergence_estimate(&mut g, &est);
        let v = g.scalar_value(pd);
        let truth = std::f64::consts::E - 1.0;
        println!("pd m={m}: estimate={:.4} analytic={:.4} rel={:.3}", v, truth, (v - truth).abs() / truth);
    }
}
