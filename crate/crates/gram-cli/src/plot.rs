//! Text-only SVG rendering: scatter plots of data vs generated samples and
//! log-scale loss traces. No external renderer; byte output is a pure
//! function of the inputs.

use anyhow::{bail, Result};
use gram::linalg::Mat;
use gram::train::TraceRecord;
use std::fmt::Write;

const W: f64 = 480.0;
const H: f64 = 480.0;
const MARGIN: f64 = 48.0;
const LOG_FLOOR: f64 = 1e-16;

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

/// Scatter plot of two point sets projected onto their first two columns:
/// data as hollow circles, generated samples as filled crosses.
pub fn scatter_svg(data: &Mat, gen: &Mat, title: &str) -> Result<String> {
    if data.nrows() == 0 && gen.nrows() == 0 {
        bail!("scatter plot: no points");
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for m in [data, gen] {
        for row in m.rows() {
            for j in 0..2.min(m.ncols()) {
                lo[j] = lo[j].min(row[j]);
                hi[j] = hi[j].max(row[j]);
            }
        }
    }
    for j in 0..2 {
        if !lo[j].is_finite() || !hi[j].is_finite() {
            bail!("scatter plot: non-finite coordinates");
        }
        let pad = 0.05 * (hi[j] - lo[j]).max(1e-9);
        lo[j] -= pad;
        hi[j] += pad;
    }
    let sx = (W - 2.0 * MARGIN) / (hi[0] - lo[0]);
    let sy = (H - 2.0 * MARGIN) / (hi[1] - lo[1]);
    let px = |x: f64| MARGIN + (x - lo[0]) * sx;
    let py = |y: f64| H - MARGIN - (y - lo[1]) * sy;

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )?;
    write!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>"
    )?;
    write!(
        svg,
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">{title}</text>",
        MARGIN
    )?;
    write!(
        svg,
        "<rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#888\"/>",
        m = MARGIN,
        w = W - 2.0 * MARGIN,
        h = H - 2.0 * MARGIN
    )?;
    for row in data.rows() {
        let (x, y) = (row[0], if data.ncols() > 1 { row[1] } else { 0.0 });
        write!(
            svg,
            "<circle class=\"data\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"none\" stroke=\"#3572a5\"/>",
            fmt(px(x)),
            fmt(py(y))
        )?;
    }
    for row in gen.rows() {
        let (x, y) = (row[0], if gen.ncols() > 1 { row[1] } else { 0.0 });
        let (cx, cy) = (px(x), py(y));
        write!(
            svg,
            "<path class=\"gen\" d=\"M{} {}L{} {}M{} {}L{} {}\" stroke=\"#e8872e\" stroke-width=\"1.5\"/>",
            fmt(cx - 2.5),
            fmt(cy - 2.5),
            fmt(cx + 2.5),
            fmt(cy + 2.5),
            fmt(cx - 2.5),
            fmt(cy + 2.5),
            fmt(cx + 2.5),
            fmt(cy - 2.5)
        )?;
    }
    svg.push_str("</svg>");
    Ok(svg)
}

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    /// (iteration, plotted value); values are pre-mapped to positives.
    points: Vec<(f64, f64)>,
}

/// Loss traces with a log10 y-axis. GAN losses are negative log-likelihood
/// sums, so they are negated before the log mapping; values below the
/// positive floor are clamped.
pub fn trace_svg(records: &[TraceRecord]) -> Result<String> {
    if records.is_empty() {
        bail!("trace plot: empty trace");
    }
    let col = |f: fn(&TraceRecord) -> Option<f64>, negate: bool| -> Vec<(f64, f64)> {
        records
            .iter()
            .filter_map(|r| {
                f(r).map(|v| {
                    let v = if negate { -v } else { v };
                    (r.iter as f64, v.max(LOG_FLOOR).log10())
                })
            })
            .collect()
    };
    let series = [
        Series {
            name: "generator_mmd2",
            color: "#e8872e",
            points: col(|r| r.generator_mmd2, false),
        },
        Series {
            name: "pd_estimate",
            color: "#3572a5",
            points: col(|r| r.pd_estimate, false),
        },
        Series {
            name: "-gan_d_loss",
            color: "#6a51a3",
            points: col(|r| r.gan_d_loss, true),
        },
        Series {
            name: "-gan_g_loss",
            color: "#2e8b57",
            points: col(|r| r.gan_g_loss, true),
        },
    ];
    let active: Vec<&Series> = series.iter().filter(|s| !s.points.is_empty()).collect();
    if active.is_empty() {
        bail!("trace plot: no loss columns present");
    }
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in &active {
        for &(x, y) in &s.points {
            x_hi = x_hi.max(x);
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    let x_lo = 0.0;
    if y_hi - y_lo < 1e-9 {
        y_hi = y_lo + 1.0;
    }
    let sx = (W - 2.0 * MARGIN) / (x_hi - x_lo).max(1.0);
    let sy = (H - 2.0 * MARGIN) / (y_hi - y_lo);
    let px = |x: f64| MARGIN + (x - x_lo) * sx;
    let py = |y: f64| H - MARGIN - (y - y_lo) * sy;

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )?;
    write!(
        svg,
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>"
    )?;
    write!(
        svg,
        "<text x=\"{MARGIN}\" y=\"24\" font-family=\"monospace\" font-size=\"14\">loss traces (log10 y)</text>"
    )?;
    write!(
        svg,
        "<rect x=\"{m}\" y=\"{m}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#888\"/>",
        m = MARGIN,
        w = W - 2.0 * MARGIN,
        h = H - 2.0 * MARGIN
    )?;
    // Integer-decade ticks on the log axis.
    let mut decade = y_lo.ceil() as i64;
    while (decade as f64) <= y_hi {
        let y = py(decade as f64);
        write!(
            svg,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#ddd\"/>",
            fmt(MARGIN),
            fmt(y),
            fmt(W - MARGIN),
            fmt(y)
        )?;
        write!(
            svg,
            "<text x=\"4\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">1e{decade}</text>",
            fmt(y + 4.0)
        )?;
        decade += 1;
    }
    for (i, s) in active.iter().enumerate() {
        let path: Vec<String> = s
            .points
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| {
                format!("{}{} {}", if k == 0 { "M" } else { "L" }, fmt(px(x)), fmt(py(y)))
            })
            .collect();
        write!(
            svg,
            "<path class=\"trace-{}\" d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>",
            s.name,
            path.join(""),
            s.color
        )?;
        write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" fill=\"{}\">{}</text>",
            fmt(W - MARGIN - 150.0),
            fmt(MARGIN + 16.0 * (i as f64 + 1.0)),
            s.color,
            s.name
        )?;
    }
    svg.push_str("</svg>");
    Ok(svg)
}
