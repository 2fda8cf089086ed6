//! Minimal deterministic SVG line charts and the CSV they are fed from.
//!
//! Data series are rendered as `<polyline>` elements (one per series); axes,
//! ticks and legends use other SVG primitives, so the polyline count always
//! equals the series count.

use crate::error::{CliError, Result};
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn axis_transform(v: f64, log: bool) -> f64 {
    if log {
        v.log10()
    } else {
        v
    }
}

/// Renders a line chart; output bytes depend only on the inputs.
pub fn render_line_chart(series: &[Series], opts: &PlotOptions) -> Result<String> {
    if series.is_empty() || series.iter().any(|s| s.points.is_empty()) {
        return Err(CliError::Plot("empty series".to_string()));
    }
    for s in series {
        for (x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                return Err(CliError::Plot(format!("non-finite point in series '{}'", s.name)));
            }
            if (opts.log_x && *x <= 0.0) || (opts.log_y && *y <= 0.0) {
                return Err(CliError::Plot(format!(
                    "series '{}' has non-positive values on a log axis",
                    s.name
                )));
            }
        }
    }
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            let xv = axis_transform(x, opts.log_x);
            let yv = axis_transform(y, opts.log_y);
            xmin = xmin.min(xv);
            xmax = xmax.max(xv);
            ymin = ymin.min(yv);
            ymax = ymax.max(yv);
        }
    }
    if xmin == xmax {
        xmin -= 0.5;
        xmax += 0.5;
    }
    if ymin == ymax {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |v: f64| MARGIN_L + (axis_transform(v, opts.log_x) - xmin) / (xmax - xmin) * plot_w;
    let sy = |v: f64| HEIGHT - MARGIN_B - (axis_transform(v, opts.log_y) - ymin) / (ymax - ymin) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>",
        WIDTH / 2.0,
        escape(&opts.title)
    );
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{}\" stroke=\"black\"/>",
        HEIGHT - MARGIN_B
    );
    // Ticks: 5 per axis in transformed coordinates.
    for t in 0..=4 {
        let fx = xmin + (xmax - xmin) * t as f64 / 4.0;
        let px = MARGIN_L + plot_w * t as f64 / 4.0;
        let label = if opts.log_x {
            format_tick(10f64.powf(fx))
        } else {
            format_tick(fx)
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{px}\" y1=\"{}\" x2=\"{px}\" y2=\"{}\" stroke=\"black\"/>",
            HEIGHT - MARGIN_B,
            HEIGHT - MARGIN_B + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            HEIGHT - MARGIN_B + 18.0
        );
        let fy = ymin + (ymax - ymin) * t as f64 / 4.0;
        let py = HEIGHT - MARGIN_B - plot_h * t as f64 / 4.0;
        let label = if opts.log_y {
            format_tick(10f64.powf(fy))
        } else {
            format_tick(fy)
        };
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{py}\" x2=\"{MARGIN_L}\" y2=\"{py}\" stroke=\"black\"/>",
            MARGIN_L - 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            MARGIN_L - 8.0,
            py + 4.0
        );
    }
    // Axis labels.
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{}</text>",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0,
        escape(&opts.x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 {})\">{}</text>",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(&opts.y_label)
    );
    // Series.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = String::new();
        for &(x, y) in &s.points {
            let _ = write!(pts, "{:.3},{:.3} ", sx(x), sy(y));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>",
            pts.trim_end()
        );
        let ly = MARGIN_T + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"1.8\"/>",
            WIDTH - MARGIN_R - 120.0,
            WIDTH - MARGIN_R - 96.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            WIDTH - MARGIN_R - 90.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

/// Reads a "wide" numeric CSV: header row names the x column and one column
/// per series; every further row is numbers.
pub fn read_wide_csv(path: &Path) -> Result<(String, Vec<Series>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Plot(format!("{}: empty CSV", path.display())))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names.len() < 2 {
        return Err(CliError::Plot(format!(
            "{}: need an x column and at least one series",
            path.display()
        )));
    }
    let mut series: Vec<Series> = names[1..]
        .iter()
        .map(|n| Series {
            name: n.to_string(),
            points: Vec::new(),
        })
        .collect();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(CliError::Plot(format!(
                "{}: row {} has {} fields, header has {}",
                path.display(),
                lineno + 2,
                fields.len(),
                names.len()
            )));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| CliError::Plot(format!("{}: bad number '{s}'", path.display())))
        };
        let x = parse(fields[0])?;
        for (s, f) in series.iter_mut().zip(&fields[1..]) {
            s.points.push((x, parse(f)?));
        }
    }
    if series.iter().any(|s| s.points.is_empty()) {
        return Err(CliError::Plot(format!("{}: no data rows", path.display())));
    }
    Ok((names[0].to_string(), series))
}

/// Least-squares slope, intercept and R^2 of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let p = slope * a + intercept;
            (b - p) * (b - p)
        })
        .sum();
    let r2 = if ss_res <= 1e-30 {
        1.0
    } else if ss_tot == 0.0 {
        0.0
    } else {
        1.0 - ss_res / ss_tot
    };
    (slope, intercept, r2)
}
