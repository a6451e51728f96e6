//! Run artifacts: trace and snapshot CSVs, metrics and manifest JSON, and
//! parameter checkpoints. All floating-point output uses 17 significant
//! digits, so values round-trip through the decimal text losslessly and
//! repeated seeded runs produce byte-identical traces.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use gram::linalg::Mat;
use gram::train::{RunMetrics, Snapshot, TraceRecord, TrainConfig, TrainTrace};
use serde::Serialize;

/// Lossless decimal rendering of an f64 (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn write_trace_csv(trace: &TrainTrace, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record([
        "iter",
        "generator_mmd2",
        "pd_estimate",
        "gan_d_loss",
        "gan_g_loss",
        "rng_digest",
    ])?;
    for r in &trace.records {
        w.write_record([
            r.iter.to_string(),
            format_opt(r.generator_mmd2),
            format_opt(r.pd_estimate),
            format_opt(r.gan_d_loss),
            format_opt(r.gan_g_loss),
            format!("{:016x}", r.rng_digest),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let parse_opt = |i: usize| -> Result<Option<f64>> {
            let field = record.get(i).unwrap_or("");
            if field.is_empty() {
                Ok(None)
            } else {
                Ok(Some(field.parse::<f64>().with_context(|| {
                    format!("bad float '{field}' in {}", path.display())
                })?))
            }
        };
        out.push(TraceRecord {
            iter: record.get(0).unwrap_or("0").parse()?,
            generator_mmd2: parse_opt(1)?,
            pd_estimate: parse_opt(2)?,
            gan_d_loss: parse_opt(3)?,
            gan_g_loss: parse_opt(4)?,
            rng_digest: u64::from_str_radix(record.get(5).unwrap_or("0"), 16)?,
        });
    }
    Ok(out)
}

/// Matrix rows as CSV with a header `x0,x1,...` per the sample-export format.
pub fn write_samples_csv(samples: &Mat, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let header: Vec<String> = (0..samples.ncols()).map(|j| format!("x{j}")).collect();
    w.write_record(&header)?;
    for row in samples.rows() {
        let fields: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Labeled scatter CSV (`label,x0,x1,...`) holding both data and generated
/// points of one snapshot space.
fn write_labeled_csv(data: &Mat, gen: &Mat, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    let dim = data.ncols().max(gen.ncols());
    let mut header = vec!["label".to_string()];
    header.extend((0..dim).map(|j| format!("x{j}")));
    w.write_record(&header)?;
    for (label, m) in [("data", data), ("gen", gen)] {
        for row in m.rows() {
            let mut fields = vec![label.to_string()];
            fields.extend(row.iter().map(|&v| format_f64(v)));
            w.write_record(&fields)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn snapshot_paths(dir: &Path, iter: usize) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("iter_{iter:06}_original.csv")),
        dir.join(format!("iter_{iter:06}_projected.csv")),
    )
}

pub fn write_snapshots(trace: &TrainTrace, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for snap in &trace.snapshots {
        write_snapshot(snap, dir)?;
    }
    Ok(())
}

pub fn write_snapshot(snap: &Snapshot, dir: &Path) -> Result<()> {
    let (original, projected) = snapshot_paths(dir, snap.iter);
    write_labeled_csv(&snap.data_original, &snap.gen_original, &original)?;
    if let (Some(dp), Some(gp)) = (&snap.data_projected, &snap.gen_projected) {
        write_labeled_csv(dp, gp, &projected)?;
    }
    Ok(())
}

pub fn read_labeled_csv(path: &Path) -> Result<(Mat, Mat)> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let dim = r.headers()?.len() - 1;
    let mut data = Vec::new();
    let mut gen = Vec::new();
    let mut n_data = 0;
    let mut n_gen = 0;
    for record in r.records() {
        let record = record?;
        let values: Vec<f64> = (1..=dim)
            .map(|i| record.get(i).unwrap_or("0").parse::<f64>())
            .collect::<std::result::Result<_, _>>()?;
        match record.get(0) {
            Some("data") => {
                data.extend(values);
                n_data += 1;
            }
            _ => {
                gen.extend(values);
                n_gen += 1;
            }
        }
    }
    Ok((
        Mat::from_shape_vec((n_data, dim), data)?,
        Mat::from_shape_vec((n_gen, dim), gen)?,
    ))
}

/// Everything needed to reproduce and audit a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub run_id: String,
    pub method: String,
    pub seed: u64,
    pub out_dir: String,
    pub code_version: String,
    pub created_unix_ms: u128,
    pub total_seconds: f64,
    pub diverged_at: Option<usize>,
    pub config: TrainConfig,
}

pub fn run_id(config: &TrainConfig) -> String {
    let toml = crate::config::to_toml_string(config);
    let mut h: u64 = 0xcbf29ce484222325;
    for b in toml.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{}-seed{}-{:08x}", config.method.as_str(), config.seed, h as u32)
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, json)?;
    Ok(())
}

/// Metric report keyed by run id.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport<'a> {
    pub run_id: &'a str,
    pub method: &'a str,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: &'a RunMetrics,
}

pub fn write_metrics(report: &MetricsReport, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(report)?;
    std::fs::write(path, json)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gram::train::TraceRecord;

    #[test]
    fn trace_csv_round_trips_losslessly() {
        let trace = TrainTrace {
            records: vec![
                TraceRecord {
                    iter: 1,
                    generator_mmd2: Some(0.1234567890123456789),
                    pd_estimate: Some(1e-300),
                    gan_d_loss: None,
                    gan_g_loss: None,
                    rng_digest: 0xdeadbeef12345678,
                },
                TraceRecord {
                    iter: 2,
                    generator_mmd2: None,
                    pd_estimate: None,
                    gan_d_loss: Some(-1.375),
                    gan_g_loss: Some(f64::MIN_POSITIVE),
                    rng_digest: 42,
                },
            ],
            snapshots: vec![],
            total_seconds: 1.0,
        };
        let dir = std::env::temp_dir().join("gram_cli_trace_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        write_trace_csv(&trace, &path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back, trace.records);
        std::fs::remove_file(path).unwrap();
    }

    #[test]
    fn format_is_17_significant_digits() {
        let s = format_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
