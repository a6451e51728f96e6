use gram::kernels::KernelSpec;
use gram::ratio::{lotus_consistency_check, CriticMap, GaussianSpec};
use ndarray::array;

fn main() {
    let kernel = KernelSpec::single(1.0).unwrap();
    // 2D Gaussians with different means, linear 2D->1D critic.
    let p = GaussianSpec::isotropic(vec![0.6, -0.3], 1.0);
    let q = GaussianSpec::isotropic(vec![0.0, 0.0], 1.0);
    let w = array![[0.8], [0.6]];
    let critic = CriticMap::Linear(w);
    for seed in [77u64, 101, 202, 303] {
        let d4 = lotus_consistency_check(&p, &q, &critic, &kernel, 10_000, seed).unwrap();
        let d5 = lotus_consistency_check(&p, &q, &critic, &kernel, 100_000, seed).unwrap();
        println!("seed {seed}: d(1e4)={d4:.6e} d(1e5)={d5:.6e} decreasing={}", d5 < d4);
    }
    // identity critic p=q bound check at 1e4
    let p0 = GaussianSpec::isotropic(vec![0.0, 0.0], 1.0);
    let q0 = GaussianSpec::isotropic(vec![0.0, 0.0], 1.0);
    for seed in [77u64, 101] {
        let d = lotus_consistency_check(&p0, &q0, &CriticMap::Identity, &kernel, 10_000, seed).unwrap();
        println!("identity p=q seed {seed}: d={d:.6e} bound={:.3e}", 2.0/(10000f64).sqrt());
    }
}
