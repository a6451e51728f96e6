//! Sectioned key=value configuration files (a TOML subset) resolved against
//! per-method defaults. Unknown keys are rejected rather than ignored, so a
//! typo cannot silently fall back to a default.

use gram::kernels::KernelSpec;
use gram::models::{
    MlpSpec, NoiseFamily, NoiseSpec, OptKind, OptimizerConfig, OutputActivation,
};
use gram::ratio::{CriticLossConfig, PositivityMode};
use gram::train::{DatasetConfig, Method, TrainConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    /// TOML syntax or unknown-key error; the message carries line/column.
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),

    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },

    #[error(transparent)]
    Gram(#[from] gram::Error),
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub run: RunSection,
    pub data: DataSection,
    pub generator: GeneratorSection,
    pub critic: CriticSection,
    pub kernel: KernelSection,
    pub critic_loss: CriticLossSection,
    pub optimizer: OptimizerSections,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    /// Training length in epochs (one epoch = ITERATIONS_PER_EPOCH
    /// minibatch iterations). Mutually exclusive with `iterations`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Raw iteration count, for fine control.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_deg_axis2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub third_dim_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub images: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_family: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_activation: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projected_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidths: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticLossSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positivity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSections {
    pub generator: OptSection,
    pub critic: OptSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// Grid axes for the stability sweep: noise dimension x critic hidden size
/// x method, Cartesian product.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critic_hidden: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub methods: Option<Vec<String>>,
}

/// Command-line overrides applied before resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub seed: Option<u64>,
}

pub fn parse_method(s: &str) -> Result<Method, ConfigError> {
    match s {
        "gram" => Ok(Method::Gram),
        "gan" => Ok(Method::Gan),
        "mmdnet" => Ok(Method::Mmdnet),
        other => Err(invalid(
            "run.method",
            format!("expected gram|gan|mmdnet, got '{other}'"),
        )),
    }
}

pub fn parse_file(text: &str) -> Result<ConfigFile, ConfigError> {
    Ok(toml::from_str(text)?)
}

/// Parse a config file and resolve it to a full [`TrainConfig`]. Missing
/// keys fall back to the per-method benchmark defaults; present keys are
/// validated with their key path in the error.
pub fn resolve(file: &ConfigFile, overrides: &Overrides) -> Result<TrainConfig, ConfigError> {
    let method = match overrides.method {
        Some(m) => m,
        None => match &file.run.method {
            Some(s) => parse_method(s)?,
            None => Method::Gram,
        },
    };
    let seed = overrides
        .seed
        .or(file.run.seed)
        .unwrap_or(42);
    let mut cfg = TrainConfig::defaults_for(method, seed);

    if file.run.epochs.is_some() && file.run.iterations.is_some() {
        return Err(invalid(
            "run.iterations",
            "specify either run.epochs or run.iterations, not both",
        ));
    }
    if let Some(epochs) = file.run.epochs {
        if epochs == 0 {
            return Err(invalid("run.epochs", "must be at least 1"));
        }
        cfg.iterations = epochs * gram::train::ITERATIONS_PER_EPOCH;
    }
    if let Some(iters) = file.run.iterations {
        if iters == 0 {
            return Err(invalid("run.iterations", "must be at least 1"));
        }
        cfg.iterations = iters;
    }

    // Dataset.
    let mut ring = gram::data::RingSpec::ring2d();
    if let Some(m) = file.data.n_modes {
        ring.n_modes = m;
    }
    if let Some(s) = file.data.mode_std {
        ring.mode_std = s;
    }
    if let Some(r) = file.data.radius {
        ring.radius = r;
    }
    if let Some(r) = file.data.rotation_deg_axis2 {
        ring.rotation_deg_axis2 = r;
    }
    if let Some(s) = file.data.third_dim_std {
        ring.third_dim_std = s;
    }
    let dataset_name = file.data.dataset.as_deref().unwrap_or("ring2d");
    cfg.dataset = match dataset_name {
        "ring2d" => DatasetConfig::Ring2d { spec: ring },
        "ring3d" => {
            if file.data.rotation_deg_axis2.is_none() {
                ring.rotation_deg_axis2 = 60.0;
            }
            DatasetConfig::Ring3d { spec: ring }
        }
        "mnist" => {
            let images = file
                .data
                .images
                .clone()
                .ok_or_else(|| invalid("data.images", "required for dataset = \"mnist\""))?;
            let labels = file
                .data
                .labels
                .clone()
                .ok_or_else(|| invalid("data.labels", "required for dataset = \"mnist\""))?;
            DatasetConfig::Mnist { images, labels }
        }
        other => {
            return Err(invalid(
                "data.dataset",
                format!("expected ring2d|ring3d|mnist, got '{other}'"),
            ))
        }
    };
    if let Some(spec) = cfg.dataset.ring_spec() {
        spec.validate().map_err(|e| invalid("data", e.to_string()))?;
    }
    if let Some(n) = file.data.batch_n {
        if n == 0 {
            return Err(invalid("data.batch_n", "must be at least 1"));
        }
        cfg.batch_n = n;
    }
    if let Some(m) = file.generator.batch_m {
        if m == 0 {
            return Err(invalid("generator.batch_m", "must be at least 1"));
        }
        cfg.batch_m = m;
    }

    // Noise.
    if let Some(d) = file.generator.noise_dim {
        cfg.noise = NoiseSpec::new(d, cfg.noise.family)
            .map_err(|e| invalid("generator.noise_dim", e.to_string()))?;
    }
    if let Some(fam) = &file.generator.noise_family {
        cfg.noise.family = match fam.as_str() {
            "gaussian" | "standard_gaussian" => NoiseFamily::StandardGaussian,
            "uniform" | "uniform_pm1" => NoiseFamily::UniformPm1,
            other => {
                return Err(invalid(
                    "generator.noise_family",
                    format!("expected gaussian|uniform_pm1, got '{other}'"),
                ))
            }
        };
    }

    // Generator architecture.
    let data_dim = cfg.data_dim();
    let gen_hidden = file
        .generator
        .hidden
        .clone()
        .unwrap_or_else(|| vec![100, 100]);
    let gen_act = match file.generator.output_activation.as_deref() {
        None | Some("identity") => OutputActivation::Identity,
        Some("tanh") => OutputActivation::Tanh,
        Some("sigmoid") => OutputActivation::Sigmoid,
        Some(other) => {
            return Err(invalid(
                "generator.output_activation",
                format!("expected identity|tanh|sigmoid, got '{other}'"),
            ))
        }
    };
    cfg.generator_spec = MlpSpec::with_hidden(cfg.noise.dim, &gen_hidden, data_dim, gen_act)
        .map_err(|e| invalid("generator.hidden", e.to_string()))?;

    // Critic architecture (ignored by mmdnet).
    if method != Method::Mmdnet {
        let critic_hidden = file.critic.hidden.clone().unwrap_or_else(|| vec![100, 100]);
        let k = file.critic.projected_dim.unwrap_or(10);
        if k == 0 {
            return Err(invalid("critic.projected_dim", "must be at least 1"));
        }
        cfg.projected_dim = Some(k);
        cfg.critic_spec = Some(
            MlpSpec::with_hidden(data_dim, &critic_hidden, k, OutputActivation::Identity)
                .map_err(|e| invalid("critic.hidden", e.to_string()))?,
        );
    }

    // Kernel.
    if let Some(b) = &file.kernel.bandwidths {
        cfg.kernel =
            KernelSpec::new(b.clone()).map_err(|e| invalid("kernel.bandwidths", e.to_string()))?;
    }

    // Critic loss.
    let mut critic_cfg = CriticLossConfig::default();
    if let Some(l) = file.critic_loss.lambda {
        critic_cfg.lambda = l;
    }
    if let Some(p) = &file.critic_loss.positivity {
        critic_cfg.positivity_mode = match p.as_str() {
            "penalty" => PositivityMode::Penalty,
            "clip" => PositivityMode::Clip,
            other => {
                return Err(invalid(
                    "critic_loss.positivity",
                    format!("expected penalty|clip, got '{other}'"),
                ))
            }
        };
    }
    if let Some(r) = file.critic_loss.ridge {
        critic_cfg.ridge = r;
    }
    critic_cfg
        .validate()
        .map_err(|e| invalid("critic_loss", e.to_string()))?;
    cfg.critic_cfg = critic_cfg;

    // Optimizers.
    cfg.generator_opt = resolve_opt(
        &file.optimizer.generator,
        cfg.generator_opt,
        "optimizer.generator",
    )?;
    if let Some(base) = cfg.critic_opt {
        cfg.critic_opt = Some(resolve_opt(&file.optimizer.critic, base, "optimizer.critic")?);
    }

    cfg.validate()?;
    Ok(cfg)
}

fn resolve_opt(
    section: &OptSection,
    base: OptimizerConfig,
    key: &'static str,
) -> Result<OptimizerConfig, ConfigError> {
    let mut opt = base;
    if let Some(kind) = &section.kind {
        opt.kind = match kind.as_str() {
            "adam" => OptKind::Adam,
            "rmsprop" => OptKind::Rmsprop,
            other => {
                return Err(invalid(key, format!("kind must be adam|rmsprop, got '{other}'")))
            }
        };
    }
    if let Some(lr) = section.learning_rate {
        opt.learning_rate = lr;
    }
    if let Some(b) = section.beta1 {
        opt.beta1 = b;
    }
    if let Some(b) = section.beta2 {
        opt.beta2 = b;
    }
    if let Some(e) = section.epsilon {
        opt.epsilon = e;
    }
    opt.validate().map_err(|e| invalid(key, e.to_string()))?;
    Ok(opt)
}

/// Render a resolved config back into the config-file schema, fully
/// specified, so parsing the output reproduces the config exactly.
pub fn to_config_file(cfg: &TrainConfig) -> ConfigFile {
    let (dataset, ring) = match &cfg.dataset {
        DatasetConfig::Ring2d { spec } => ("ring2d", Some(spec.clone())),
        DatasetConfig::Ring3d { spec } => ("ring3d", Some(spec.clone())),
        DatasetConfig::Mnist { .. } => ("mnist", None),
    };
    let (images, labels) = match &cfg.dataset {
        DatasetConfig::Mnist { images, labels } => (Some(images.clone()), Some(labels.clone())),
        _ => (None, None),
    };
    let gen_hidden =
        cfg.generator_spec.layer_sizes[1..cfg.generator_spec.layer_sizes.len() - 1].to_vec();
    let critic_hidden = cfg
        .critic_spec
        .as_ref()
        .map(|s| s.layer_sizes[1..s.layer_sizes.len() - 1].to_vec());
    ConfigFile {
        run: RunSection {
            method: Some(cfg.method.as_str().to_string()),
            epochs: None,
            iterations: Some(cfg.iterations),
            seed: Some(cfg.seed),
        },
        data: DataSection {
            dataset: Some(dataset.to_string()),
            batch_n: Some(cfg.batch_n),
            n_modes: ring.as_ref().map(|r| r.n_modes),
            mode_std: ring.as_ref().map(|r| r.mode_std),
            radius: ring.as_ref().map(|r| r.radius),
            rotation_deg_axis2: ring.as_ref().map(|r| r.rotation_deg_axis2),
            third_dim_std: ring.as_ref().map(|r| r.third_dim_std),
            images,
            labels,
        },
        generator: GeneratorSection {
            hidden: Some(gen_hidden),
            noise_dim: Some(cfg.noise.dim),
            noise_family: Some(
                match cfg.noise.family {
                    NoiseFamily::StandardGaussian => "gaussian",
                    NoiseFamily::UniformPm1 => "uniform_pm1",
                }
                .to_string(),
            ),
            batch_m: Some(cfg.batch_m),
            output_activation: Some(
                match cfg.generator_spec.output_activation {
                    OutputActivation::Identity => "identity",
                    OutputActivation::Tanh => "tanh",
                    OutputActivation::Sigmoid => "sigmoid",
                }
                .to_string(),
            ),
        },
        critic: CriticSection {
            hidden: critic_hidden,
            projected_dim: cfg.projected_dim,
        },
        kernel: KernelSection {
            bandwidths: Some(cfg.kernel.bandwidths().to_vec()),
        },
        critic_loss: CriticLossSection {
            lambda: Some(cfg.critic_cfg.lambda),
            positivity: Some(
                match cfg.critic_cfg.positivity_mode {
                    PositivityMode::Penalty => "penalty",
                    PositivityMode::Clip => "clip",
                }
                .to_string(),
            ),
            ridge: Some(cfg.critic_cfg.ridge),
        },
        optimizer: OptimizerSections {
            generator: opt_section(&cfg.generator_opt),
            critic: cfg.critic_opt.as_ref().map(opt_section).unwrap_or_default(),
        },
        grid: None,
    }
}

fn opt_section(opt: &OptimizerConfig) -> OptSection {
    OptSection {
        kind: Some(
            match opt.kind {
                OptKind::Adam => "adam",
                OptKind::Rmsprop => "rmsprop",
            }
            .to_string(),
        ),
        learning_rate: Some(opt.learning_rate),
        beta1: Some(opt.beta1),
        beta2: Some(opt.beta2),
        epsilon: Some(opt.epsilon),
    }
}

pub fn to_toml_string(cfg: &TrainConfig) -> String {
    toml::to_string(&to_config_file(cfg)).expect("resolved config serializes")
}
