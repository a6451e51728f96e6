//! MLP generator and critic networks, parameter initialization, ADAM and
//! RMSprop optimizers, and a versioned text checkpoint format.
//!
//! Hidden activations are always ReLU; only the output activation varies.
//! Batch normalization is deliberately absent.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::autodiff::{BoundParams, Graph, ModelParams, Var};
use crate::error::{Error, Result};
use crate::linalg::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Identity,
    Tanh,
    Sigmoid,
}

impl OutputActivation {
    pub fn apply_scalar(self, x: f64) -> f64 {
        match self {
            OutputActivation::Identity => x,
            OutputActivation::Tanh => x.tanh(),
            OutputActivation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// Layer sizes from input to output, plus the output activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, output_activation: OutputActivation) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidSpec {
                what: "mlp",
                reason: format!("need at least 2 layer sizes, got {}", layer_sizes.len()),
            });
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidSpec {
                what: "mlp",
                reason: "layer sizes must be positive".into(),
            });
        }
        Ok(MlpSpec {
            layer_sizes,
            output_activation,
        })
    }

    /// input -> hidden... -> output with the given output activation.
    pub fn with_hidden(
        input: usize,
        hidden: &[usize],
        output: usize,
        act: OutputActivation,
    ) -> Result<Self> {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(input);
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        Self::new(sizes, act)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Total weight and bias entries.
    pub fn param_count(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }
}

/// Input noise distribution for the generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub dim: usize,
    pub family: NoiseFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    StandardGaussian,
    UniformPm1,
}

impl NoiseSpec {
    pub fn new(dim: usize, family: NoiseFamily) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSpec {
                what: "noise",
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(NoiseSpec { dim, family })
    }
}

/// An MLP with its named parameters ("w0", "b0", "w1", ...).
#[derive(Debug, Clone)]
pub struct Mlp {
    pub spec: MlpSpec,
    pub params: ModelParams,
}

fn uniform_sym(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (2.0 * u - 1.0) * bound
}

impl Mlp {
    /// Kaiming-uniform weights (bound sqrt(6 / fan_in)) for the ReLU layers,
    /// Xavier-uniform (bound sqrt(6 / (fan_in + fan_out))) for the output
    /// layer, zero biases. Deterministic given the rng state.
    pub fn init(spec: MlpSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        let mut params = ModelParams::new();
        let n_layers = spec.n_layers();
        for (l, w) in spec.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = if l + 1 == n_layers {
                (6.0 / (fan_in + fan_out) as f64).sqrt()
            } else {
                (6.0 / fan_in as f64).sqrt()
            };
            let weight = Array2::from_shape_fn((fan_in, fan_out), |_| uniform_sym(rng, bound));
            params.push(format!("w{l}"), weight)?;
            params.push(format!("b{l}"), Array2::zeros((1, fan_out)))?;
        }
        Ok(Mlp { spec, params })
    }

    pub fn init_seeded(spec: MlpSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(spec, &mut rng)
    }

    pub fn bind(&self, g: &mut Graph) -> BoundParams {
        self.params.bind(g)
    }

    /// Differentiable forward pass, output activation applied.
    pub fn forward(&self, g: &mut Graph, bound: &BoundParams, x: Var) -> Var {
        let z = self.forward_preact(g, bound, x);
        match self.spec.output_activation {
            OutputActivation::Identity => z,
            OutputActivation::Tanh => g.tanh(z),
            OutputActivation::Sigmoid => g.sigmoid(z),
        }
    }

    /// Forward pass up to the last layer's pre-activation.
    pub fn forward_preact(&self, g: &mut Graph, bound: &BoundParams, x: Var) -> Var {
        assert_eq!(
            g.value(x).ncols(),
            self.spec.input_dim(),
            "mlp_forward: input has {} columns, spec expects {}",
            g.value(x).ncols(),
            self.spec.input_dim()
        );
        let n_layers = self.spec.n_layers();
        let mut h = x;
        for l in 0..n_layers {
            let w = bound.var(2 * l);
            let b = bound.var(2 * l + 1);
            let z0 = g.matmul(h, w);
            let z = g.add_row(z0, b);
            h = if l + 1 == n_layers { z } else { g.relu(z) };
        }
        h
    }

    /// Forward pass on plain matrices, for evaluation and snapshots.
    pub fn forward_plain(&self, x: &Mat) -> Mat {
        assert_eq!(
            x.ncols(),
            self.spec.input_dim(),
            "mlp_forward: input has {} columns, spec expects {}",
            x.ncols(),
            self.spec.input_dim()
        );
        let n_layers = self.spec.n_layers();
        let mut h = x.clone();
        for l in 0..n_layers {
            let w = &self.params.tensors()[2 * l].value;
            let b = &self.params.tensors()[2 * l + 1].value;
            let mut z = h.dot(w);
            z += b;
            h = if l + 1 == n_layers {
                z.mapv(|v| self.spec.output_activation.apply_scalar(v))
            } else {
                z.mapv(|v| v.max(0.0))
            };
        }
        h
    }
}

// ── optimizers ─────────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptKind {
    Adam,
    Rmsprop,
}

/// For ADAM, `beta1`/`beta2` are the moment decays; for RMSprop only `beta2`
/// is used, as the squared-gradient decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerConfig {
    pub fn adam(learning_rate: f64, beta1: f64) -> Self {
        OptimizerConfig {
            kind: OptKind::Adam,
            learning_rate,
            beta1,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn rmsprop(learning_rate: f64) -> Self {
        OptimizerConfig {
            kind: OptKind::Rmsprop,
            learning_rate,
            beta1: 0.0,
            beta2: 0.9,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidSpec {
                what: "optimizer",
                reason: format!("learning_rate must be positive, got {}", self.learning_rate),
            });
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidSpec {
                    what: "optimizer",
                    reason: format!("{name} must be in [0, 1), got {b}"),
                });
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidSpec {
                what: "optimizer",
                reason: format!("epsilon must be positive, got {}", self.epsilon),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Ascend,
    Descend,
}

/// First/second moment accumulators, index-aligned with the parameters.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    m: Vec<Mat>,
    v: Vec<Mat>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Mat> = params
            .tensors()
            .iter()
            .map(|t| Array2::zeros(t.value.dim()))
            .collect();
        OptimizerState {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn second_moment(&self, i: usize) -> &Mat {
        &self.v[i]
    }
}

/// One optimizer update. The critic ascends its objective, the generator
/// descends; both use the same state machinery.
pub fn optimizer_step(
    state: &mut OptimizerState,
    params: &mut ModelParams,
    grads: &[Mat],
    cfg: &OptimizerConfig,
    direction: Direction,
) -> Result<()> {
    assert_eq!(
        grads.len(),
        params.len(),
        "optimizer_step: {} gradients for {} parameters",
        grads.len(),
        params.len()
    );
    for (t, grad) in params.tensors().iter().zip(grads) {
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                name: t.name.clone(),
            });
        }
        assert_eq!(
            grad.dim(),
            t.value.dim(),
            "optimizer_step: gradient shape {:?} for parameter '{}' of shape {:?}",
            grad.dim(),
            t.name,
            t.value.dim()
        );
    }
    state.step += 1;
    let sign = match direction {
        Direction::Ascend => 1.0,
        Direction::Descend => -1.0,
    };
    match cfg.kind {
        OptKind::Adam => {
            let t = state.step as i32;
            let bc1 = 1.0 - cfg.beta1.powi(t);
            let bc2 = 1.0 - cfg.beta2.powi(t);
            for i in 0..params.len() {
                let g = &grads[i];
                state.m[i] = cfg.beta1 * &state.m[i] + (1.0 - cfg.beta1) * g;
                state.v[i] = cfg.beta2 * &state.v[i] + (1.0 - cfg.beta2) * &(g * g);
                let m_hat = &state.m[i] / bc1;
                let v_hat = &state.v[i] / bc2;
                let update = m_hat / (v_hat.mapv(f64::sqrt) + cfg.epsilon);
                let value = &mut params.tensors_mut()[i].value;
                *value = &*value + &(sign * cfg.learning_rate * &update);
            }
        }
        OptKind::Rmsprop => {
            for i in 0..params.len() {
                let g = &grads[i];
                state.v[i] = cfg.beta2 * &state.v[i] + (1.0 - cfg.beta2) * &(g * g);
                let update = g / &(state.v[i].mapv(f64::sqrt) + cfg.epsilon);
                let value = &mut params.tensors_mut()[i].value;
                *value = &*value + &(sign * cfg.learning_rate * &update);
            }
        }
    }
    Ok(())
}

// ── checkpoints ────────────────────────────────────────────────────────

const CHECKPOINT_HEADER: &str = "gram-params v1";

/// Write parameters as text: a version header, then one line per tensor
/// with `name rows cols` followed by row-major values at 17 significant
/// digits (lossless for f64).
pub fn save_params(params: &ModelParams, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(CHECKPOINT_HEADER);
    out.push('\n');
    for t in params.tensors() {
        let (r, c) = t.value.dim();
        write!(out, "{} {} {}", t.name, r, c).unwrap();
        for v in t.value.iter() {
            write!(out, " {v:.16e}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CHECKPOINT_HEADER => {}
        other => {
            return Err(Error::Checkpoint {
                line: 1,
                reason: format!("expected header '{CHECKPOINT_HEADER}', got {other:?}"),
            })
        }
    }
    let mut params = ModelParams::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let err = |reason: String| Error::Checkpoint {
            line: idx + 1,
            reason,
        };
        let name = parts.next().ok_or_else(|| err("missing name".into()))?;
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad row count".into()))?;
        let cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad column count".into()))?;
        let values: Vec<f64> = parts
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(format!("bad value: {e}")))?;
        if values.len() != rows * cols {
            return Err(err(format!(
                "expected {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        let m = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| err(format!("shape error: {e}")))?;
        params.push(name, m)?;
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::check_gradients;
    use ndarray::array;

    fn small_spec() -> MlpSpec {
        MlpSpec::with_hidden(2, &[4], 2, OutputActivation::Identity).unwrap()
    }

    #[test]
    fn init_is_deterministic() {
        let a = Mlp::init_seeded(small_spec(), 7).unwrap();
        let b = Mlp::init_seeded(small_spec(), 7).unwrap();
        for (ta, tb) in a.params.tensors().iter().zip(b.params.tensors()) {
            assert!(ta
                .value
                .iter()
                .zip(tb.value.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        let c = Mlp::init_seeded(small_spec(), 8).unwrap();
        assert!(a.params.tensors()[0].value != c.params.tensors()[0].value);
    }

    #[test]
    fn param_count_formula() {
        // 2*100+100 + 100*100+100 + 100*10+10 = 11,410.
        let spec = MlpSpec::new(vec![2, 100, 100, 10], OutputActivation::Identity).unwrap();
        assert_eq!(spec.param_count(), 11_410);
        let mlp = Mlp::init_seeded(spec, 0).unwrap();
        assert_eq!(mlp.params.param_count(), 11_410);
    }

    #[test]
    fn zero_params_forward_is_activation_of_zero() {
        let spec = MlpSpec::with_hidden(3, &[5], 2, OutputActivation::Sigmoid).unwrap();
        let mut mlp = Mlp::init_seeded(spec, 1).unwrap();
        for t in mlp.params.tensors_mut() {
            t.value.fill(0.0);
        }
        let x = array![[0.4, -0.2, 1.0], [2.0, 0.0, -1.0]];
        let y = mlp.forward_plain(&x);
        assert!(y.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_single_layer_passes_input_through() {
        let spec = MlpSpec::new(vec![2, 2], OutputActivation::Identity).unwrap();
        let mut mlp = Mlp::init_seeded(spec, 1).unwrap();
        mlp.params.tensors_mut()[0].value = array![[1.0, 0.0], [0.0, 1.0]];
        mlp.params.tensors_mut()[1].value.fill(0.0);
        let x = array![[0.7, -1.3], [2.0, 0.25]];
        let y = mlp.forward_plain(&x);
        assert_eq!(y, x);
    }

    #[test]
    fn graph_forward_matches_plain_forward() {
        let spec = MlpSpec::with_hidden(2, &[6, 5], 3, OutputActivation::Tanh).unwrap();
        let mlp = Mlp::init_seeded(spec, 3).unwrap();
        let x = array![[0.1, -0.4], [1.2, 0.8], [-0.9, 0.0]];
        let plain = mlp.forward_plain(&x);
        let mut g = Graph::new();
        let bound = mlp.bind(&mut g);
        let xv = g.leaf(x);
        let y = mlp.forward(&mut g, &bound, xv);
        let graph_out = g.value(y);
        assert!(plain
            .iter()
            .zip(graph_out.iter())
            .all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn forward_gradients_match_finite_differences() {
        let spec = MlpSpec::with_hidden(2, &[4], 2, OutputActivation::Tanh).unwrap();
        let mlp = Mlp::init_seeded(spec.clone(), 5).unwrap();
        let x = array![[0.3, -0.8], [1.1, 0.2], [0.0, 0.9]];
        let mut params = mlp.params.clone();
        let spec2 = spec.clone();
        let err = check_gradients(&mut params, 1e-5, move |g, bound| {
            let mlp = Mlp {
                spec: spec2.clone(),
                params: ModelParams::new(),
            };
            let xv = g.leaf(x.clone());
            let y = mlp.forward(g, bound, xv);
            Ok(g.mean(y))
        })
        .unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn forward_is_permutation_equivariant() {
        let spec = MlpSpec::with_hidden(2, &[8], 3, OutputActivation::Identity).unwrap();
        let mlp = Mlp::init_seeded(spec, 9).unwrap();
        let x = array![[0.1, 0.2], [-1.0, 0.5], [2.0, -0.3]];
        let y = mlp.forward_plain(&x);
        let xp = array![[2.0, -0.3], [0.1, 0.2], [-1.0, 0.5]];
        let yp = mlp.forward_plain(&xp);
        for j in 0..3 {
            assert_eq!(y[[0, j]], yp[[1, j]]);
            assert_eq!(y[[1, j]], yp[[2, j]]);
            assert_eq!(y[[2, j]], yp[[0, j]]);
        }
    }

    #[test]
    fn adam_first_step_is_sign_scaled() {
        let mut params = ModelParams::new();
        params.push("w", array![[1.0, -2.0]]).unwrap();
        let mut state = OptimizerState::new(&params);
        let cfg = OptimizerConfig::adam(0.01, 0.5);
        let grads = vec![array![[0.5, -3.0]]];
        optimizer_step(&mut state, &mut params, &grads, &cfg, Direction::Descend).unwrap();
        let w = &params.tensors()[0].value;
        // First bias-corrected step is lr * g / (|g| + eps) ~ lr * sign(g).
        assert!((w[[0, 0]] - (1.0 - 0.01)).abs() < 1e-6);
        assert!((w[[0, 1]] - (-2.0 + 0.01)).abs() < 1e-6);
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let mut params = ModelParams::new();
        params.push("w", array![[0.5]]).unwrap();
        let mut state = OptimizerState::new(&params);
        let cfg = OptimizerConfig::adam(0.1, 0.5);
        // Prime the moments with one nonzero step.
        optimizer_step(
            &mut state,
            &mut params,
            &[array![[1.0]]],
            &cfg,
            Direction::Descend,
        )
        .unwrap();
        let v_before = state.second_moment(0)[[0, 0]];
        let w_before = params.tensors()[0].value[[0, 0]];
        // Fresh state + zero gradient: parameters must not move at all.
        let mut fresh = OptimizerState::new(&params);
        optimizer_step(
            &mut fresh,
            &mut params,
            &[array![[0.0]]],
            &cfg,
            Direction::Descend,
        )
        .unwrap();
        assert_eq!(params.tensors()[0].value[[0, 0]], w_before);
        // Continuing with zero gradients decays the second moment.
        optimizer_step(
            &mut state,
            &mut params,
            &[array![[0.0]]],
            &cfg,
            Direction::Descend,
        )
        .unwrap();
        assert!(state.second_moment(0)[[0, 0]] < v_before);
    }

    #[test]
    fn adam_converges_on_quadratic() {
        let mut params = ModelParams::new();
        let w0 = array![[0.6, -0.8]]; // unit norm
        params.push("w", w0).unwrap();
        let mut state = OptimizerState::new(&params);
        let cfg = OptimizerConfig::adam(0.1, 0.5);
        for _ in 0..200 {
            let grad = params.tensors()[0].value.mapv(|v| 2.0 * v);
            optimizer_step(&mut state, &mut params, &[grad], &cfg, Direction::Descend).unwrap();
        }
        let norm = params.tensors()[0]
            .value
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!(norm < 1e-3, "norm after 200 steps: {norm}");
        assert_eq!(state.step, 200);
    }

    #[test]
    fn rmsprop_reduces_quadratic() {
        let mut params = ModelParams::new();
        params.push("w", array![[1.0, -1.0]]).unwrap();
        let mut state = OptimizerState::new(&params);
        let cfg = OptimizerConfig::rmsprop(1e-2);
        for _ in 0..500 {
            let grad = params.tensors()[0].value.mapv(|v| 2.0 * v);
            optimizer_step(&mut state, &mut params, &[grad], &cfg, Direction::Descend).unwrap();
        }
        let norm = params.tensors()[0]
            .value
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        assert!(norm < 0.1, "norm after 500 steps: {norm}");
    }

    #[test]
    fn identical_runs_produce_identical_trajectories() {
        let run = || {
            let mut params = ModelParams::new();
            params.push("w", array![[0.3, 0.9], [-0.4, 0.1]]).unwrap();
            let mut state = OptimizerState::new(&params);
            let cfg = OptimizerConfig::adam(0.05, 0.5);
            for step in 0..50 {
                let grad = params.tensors()[0]
                    .value
                    .mapv(|v| 2.0 * v + (step as f64 * 0.01).sin());
                optimizer_step(&mut state, &mut params, &[grad], &cfg, Direction::Descend)
                    .unwrap();
            }
            params.tensors()[0].value.clone()
        };
        let a = run();
        let b = run();
        assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut params = ModelParams::new();
        params.push("w_bad", array![[1.0]]).unwrap();
        let mut state = OptimizerState::new(&params);
        let cfg = OptimizerConfig::adam(0.1, 0.5);
        let err = optimizer_step(
            &mut state,
            &mut params,
            &[array![[f64::NAN]]],
            &cfg,
            Direction::Descend,
        )
        .unwrap_err();
        assert!(err.to_string().contains("w_bad"));
    }

    #[test]
    fn checkpoint_round_trips_exactly() {
        let mlp = Mlp::init_seeded(small_spec(), 21).unwrap();
        let dir = std::env::temp_dir().join("gram_ckpt_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("params.txt");
        save_params(&mlp.params, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(loaded.len(), mlp.params.len());
        for (a, b) in mlp.params.tensors().iter().zip(loaded.tensors()) {
            assert_eq!(a.name, b.name);
            assert!(a
                .value
                .iter()
                .zip(b.value.iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
        std::fs::remove_file(&path).unwrap();
    }
}
