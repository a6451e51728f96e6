//! Experiment runner: single training runs, stability grids and plot
//! generation, with all artifacts written under a per-run directory.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use gram::models::{MlpSpec, NoiseSpec, OutputActivation};
use gram::train::{evaluate_run, train, Method, TrainConfig, TrainResult};
use rayon::prelude::*;

use crate::artifacts::{
    run_id, write_manifest, write_metrics, write_snapshots, write_trace_csv, MetricsReport,
    RunManifest,
};
use crate::config::{parse_file, parse_method, resolve, ConfigFile, Overrides};
use crate::plot;

/// Exit code used when a run stops on a non-finite loss.
pub const EXIT_DIVERGED: i32 = 2;

/// Resolve an output directory against the GRAM_OUT_ROOT env var: relative
/// paths land under the root when it is set.
pub fn resolve_out_dir(out: &Path) -> PathBuf {
    match std::env::var_os("GRAM_OUT_ROOT") {
        Some(root) if out.is_relative() => PathBuf::from(root).join(out),
        _ => out.to_path_buf(),
    }
}

pub fn load_config(path: Option<&Path>) -> Result<ConfigFile> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            Ok(parse_file(&text)?)
        }
        None => Ok(ConfigFile::default()),
    }
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Run one configuration and write all artifacts into `dir`. Returns the
/// result so callers can aggregate.
pub fn execute_run(config: &TrainConfig, dir: &Path) -> Result<TrainResult> {
    std::fs::create_dir_all(dir)?;
    let result = train(config)?;
    let id = run_id(config);

    write_trace_csv(&result.trace, &dir.join("trace.csv"))?;
    write_snapshots(&result.trace, &dir.join("snapshots"))?;
    std::fs::write(dir.join("resolved.toml"), crate::config::to_toml_string(config))?;
    gram::models::save_params(&result.generator.params, &dir.join("params_generator.txt"))?;
    if let Some(critic) = &result.critic {
        gram::models::save_params(&critic.params, &dir.join("params_critic.txt"))?;
    }

    let metrics = evaluate_run(config, &result)?;
    write_metrics(
        &MetricsReport {
            run_id: &id,
            method: config.method.as_str(),
            seed: config.seed,
            metrics: &metrics,
        },
        &dir.join("metrics.json"),
    )?;
    write_manifest(
        &RunManifest {
            run_id: id,
            method: config.method.as_str().to_string(),
            seed: config.seed,
            out_dir: dir.display().to_string(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix_ms: unix_ms(),
            total_seconds: result.trace.total_seconds,
            diverged_at: result.diverged.as_ref().map(|d| d.iteration),
            config: config.clone(),
        },
        &dir.join("manifest.json"),
    )?;
    Ok(result)
}

/// `train` subcommand: returns the process exit code.
pub fn cmd_train(config_path: Option<&Path>, overrides: &Overrides, out: &Path) -> Result<i32> {
    let file = load_config(config_path)?;
    let config = resolve(&file, overrides)?;
    let dir = resolve_out_dir(out);
    let result = execute_run(&config, &dir)?;
    match &result.diverged {
        Some(d) => {
            eprintln!(
                "run diverged at iteration {} ({}); artifacts in {}",
                d.iteration,
                d.loss_name,
                dir.display()
            );
            Ok(EXIT_DIVERGED)
        }
        None => {
            println!("run complete; artifacts in {}", dir.display());
            Ok(0)
        }
    }
}

/// One cell of the stability grid.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub method: Method,
    pub noise_dim: usize,
    pub critic_hidden: usize,
}

impl GridCell {
    pub fn dir_name(&self) -> String {
        format!(
            "{}_h{}_c{}",
            self.method.as_str(),
            self.noise_dim,
            self.critic_hidden
        )
    }
}

/// Derive a cell configuration from the base: the noise dimension and both
/// critic hidden layers vary, everything else is inherited.
pub fn cell_config(base: &TrainConfig, cell: &GridCell) -> Result<TrainConfig> {
    let mut cfg = base.clone();
    cfg.method = cell.method;
    if cfg.method != base.method {
        // Optimizer defaults are method-specific.
        let defaults = TrainConfig::defaults_for(cell.method, base.seed);
        cfg.generator_opt = defaults.generator_opt;
        cfg.critic_opt = defaults.critic_opt;
        cfg.critic_spec = defaults.critic_spec;
        cfg.projected_dim = defaults.projected_dim;
    }
    let data_dim = cfg.data_dim();
    cfg.noise = NoiseSpec::new(cell.noise_dim, cfg.noise.family)?;
    let gen_hidden: Vec<usize> =
        base.generator_spec.layer_sizes[1..base.generator_spec.layer_sizes.len() - 1].to_vec();
    cfg.generator_spec = MlpSpec::with_hidden(
        cell.noise_dim,
        &gen_hidden,
        data_dim,
        base.generator_spec.output_activation,
    )?;
    if cfg.method != Method::Mmdnet {
        let k = cfg.projected_dim.unwrap_or(10);
        cfg.critic_spec = Some(MlpSpec::with_hidden(
            data_dim,
            &[cell.critic_hidden, cell.critic_hidden],
            k,
            OutputActivation::Identity,
        )?);
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone)]
pub struct GridRow {
    pub cell: GridCell,
    pub modes_captured: usize,
    pub high_quality_fraction: f64,
    pub mean_spread: Option<f64>,
    pub held_out_mmd2: f64,
    pub diverged_at: Option<usize>,
}

pub fn grid_cells(file: &ConfigFile, base_method: Method) -> Result<Vec<GridCell>> {
    let grid = file.grid.clone().unwrap_or_default();
    let noise_dims = grid.noise_dims.unwrap_or_else(|| vec![2, 4, 8, 16]);
    let hidden = grid.critic_hidden.unwrap_or_else(|| vec![20, 100, 200]);
    let methods: Vec<Method> = match grid.methods {
        Some(names) => names
            .iter()
            .map(|n| parse_method(n))
            .collect::<std::result::Result<_, _>>()?,
        None => vec![base_method],
    };
    let mut cells = Vec::new();
    for method in &methods {
        for &h in &noise_dims {
            for &c in &hidden {
                cells.push(GridCell {
                    method: *method,
                    noise_dim: h,
                    critic_hidden: c,
                });
            }
        }
    }
    Ok(cells)
}

/// Run every grid cell (possibly in parallel) and write one summary row per
/// cell plus the full per-cell artifacts in subdirectories.
pub fn run_grid(
    base: &TrainConfig,
    cells: &[GridCell],
    out_dir: &Path,
    parallel: usize,
) -> Result<Vec<GridRow>> {
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .context("building grid thread pool")?;
    let rows: Vec<Result<GridRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| -> Result<GridRow> {
                let cfg = cell_config(base, cell)?;
                let dir = out_dir.join(cell.dir_name());
                let result = execute_run(&cfg, &dir)?;
                let metrics = evaluate_run(&cfg, &result)?;
                let (modes, hq) = metrics
                    .mode_report
                    .as_ref()
                    .map(|r| (r.modes_captured, r.high_quality_fraction))
                    .unwrap_or((0, 0.0));
                Ok(GridRow {
                    cell: cell.clone(),
                    modes_captured: modes,
                    high_quality_fraction: hq,
                    mean_spread: metrics.mean_within_mode_spread,
                    held_out_mmd2: metrics.held_out_mmd2,
                    diverged_at: metrics.diverged_at,
                })
            })
            .collect()
    });
    let rows: Vec<GridRow> = rows.into_iter().collect::<Result<_>>()?;
    write_grid_summary(&rows, &out_dir.join("summary.csv"))?;
    Ok(rows)
}

pub fn write_grid_summary(rows: &[GridRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "cell",
        "method",
        "noise_dim",
        "critic_hidden",
        "modes_captured",
        "high_quality_fraction",
        "mean_spread",
        "held_out_mmd2",
        "diverged_at",
    ])?;
    for r in rows {
        w.write_record([
            r.cell.dir_name(),
            r.cell.method.as_str().to_string(),
            r.cell.noise_dim.to_string(),
            r.cell.critic_hidden.to_string(),
            r.modes_captured.to_string(),
            crate::artifacts::format_f64(r.high_quality_fraction),
            r.mean_spread
                .map(crate::artifacts::format_f64)
                .unwrap_or_default(),
            crate::artifacts::format_f64(r.held_out_mmd2),
            r.diverged_at.map(|i| i.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `grid` subcommand.
pub fn cmd_grid(
    config_path: Option<&Path>,
    overrides: &Overrides,
    out: &Path,
    parallel: usize,
) -> Result<i32> {
    let file = load_config(config_path)?;
    let base = resolve(&file, overrides)?;
    let cells = grid_cells(&file, base.method)?;
    let dir = resolve_out_dir(out);
    let rows = run_grid(&base, &cells, &dir, parallel)?;
    println!(
        "grid complete: {} cells, summary in {}",
        rows.len(),
        dir.join("summary.csv").display()
    );
    for r in &rows {
        println!(
            "  {:22} modes={} diverged={:?}",
            r.cell.dir_name(),
            r.modes_captured,
            r.diverged_at
        );
    }
    Ok(0)
}

/// `plot` subcommand: render the trace and every snapshot of a finished run.
pub fn cmd_plot(run_dir: &Path) -> Result<i32> {
    let dir = resolve_out_dir(run_dir);
    let records = crate::artifacts::read_trace_csv(&dir.join("trace.csv"))?;
    let svg = plot::trace_svg(&records)?;
    std::fs::write(dir.join("trace.svg"), svg)?;

    let snap_dir = dir.join("snapshots");
    let mut count = 0;
    if snap_dir.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&snap_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .collect();
        entries.sort();
        for csv_path in entries {
            let (data, gen) = crate::artifacts::read_labeled_csv(&csv_path)?;
            let stem = csv_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("snapshot")
                .to_string();
            let svg = plot::scatter_svg(&data, &gen, &stem)?;
            std::fs::write(snap_dir.join(format!("{stem}.svg")), svg)?;
            count += 1;
        }
    }
    println!("wrote trace.svg and {count} snapshot plots in {}", dir.display());
    Ok(0)
}
