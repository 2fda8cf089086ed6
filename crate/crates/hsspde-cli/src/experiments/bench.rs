//! Wall-time scaling of structured vs dense matvec, plus the storage count.

use crate::config::BenchConfig;
use crate::error::{CliError, Result};
use crate::plot::{linear_fit, render_line_chart, PlotOptions, Series};
use hsspde_core::{ClusterTree, Hss, Mat};
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct BenchPoint {
    pub d: usize,
    pub structure: &'static str,
    pub median_ns: f64,
    pub reps: usize,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    pub hss_exponent: f64,
    pub dense_exponent: f64,
    pub param_exponent: f64,
}

/// Median wall time of `f` over `reps` repetitions, each repetition batching
/// enough calls to stay well above timer resolution.
fn median_time_ns(reps: usize, mut f: impl FnMut()) -> f64 {
    // Warm up and estimate a single-call duration.
    f();
    let t0 = Instant::now();
    f();
    let once = t0.elapsed().as_nanos().max(1) as f64;
    let inner = ((1_000_00.0 / once).ceil() as usize).clamp(1, 10_000);
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t = Instant::now();
        for _ in 0..inner {
            f();
        }
        samples.push(t.elapsed().as_nanos() as f64 / inner as f64);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    samples[samples.len() / 2]
}

/// Cheap deterministic fill; the benchmark only needs non-trivial data.
fn lcg_fill(data: &mut [f64], mut state: u64) {
    for v in data {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        *v = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.sizes.len() < 2 {
        return Err(CliError::Usage("need at least two sizes".to_string()));
    }
    let rank = config.rank.max(1);
    let leaf = 2 * rank;
    let mut points = Vec::new();
    let mut param_counts = Vec::new();

    for &d in &config.sizes {
        if d % leaf != 0 || (d / leaf) & (d / leaf - 1) != 0 {
            return Err(CliError::Usage(format!(
                "size {d} is not a power-of-two multiple of the leaf size {leaf}"
            )));
        }
        let depth = (d / leaf).trailing_zeros() as usize;
        let tree = ClusterTree::balanced(d, depth)?;
        let hss = Hss::random(tree, rank, config.seed, 1.0)?;
        param_counts.push((d as f64, hss.param_count() as f64));
        let mut x = vec![0.0; d];
        lcg_fill(&mut x, 0x9E3779B97F4A7C15 ^ d as u64);
        let mut sink = 0.0f64;
        let hss_ns = median_time_ns(config.reps, || {
            let y = hss.matvec(&x).unwrap();
            sink += y[0];
        });
        points.push(BenchPoint {
            d,
            structure: "hss",
            median_ns: hss_ns,
            reps: config.reps,
        });
        std::hint::black_box(sink);

        let mut dense = Mat::zeros(d, d);
        lcg_fill(dense.data_mut(), d as u64);
        let mut sink = 0.0f64;
        let dense_ns = median_time_ns(config.reps, || {
            let y = dense.matvec(&x).unwrap();
            sink += y[0];
        });
        points.push(BenchPoint {
            d,
            structure: "dense",
            median_ns: dense_ns,
            reps: config.reps,
        });
        std::hint::black_box(sink);
    }

    let fit_exponent = |structure: &str| -> f64 {
        let xs: Vec<f64> = points
            .iter()
            .filter(|p| p.structure == structure)
            .map(|p| (p.d as f64).ln())
            .collect();
        let ys: Vec<f64> = points
            .iter()
            .filter(|p| p.structure == structure)
            .map(|p| p.median_ns.ln())
            .collect();
        linear_fit(&xs, &ys).0
    };
    let hss_exponent = fit_exponent("hss");
    let dense_exponent = fit_exponent("dense");
    let pxs: Vec<f64> = param_counts.iter().map(|(d, _)| d.ln()).collect();
    let pys: Vec<f64> = param_counts.iter().map(|(_, c)| c.ln()).collect();
    let param_exponent = linear_fit(&pxs, &pys).0;

    let report = BenchReport {
        points,
        hss_exponent,
        dense_exponent,
        param_exponent,
    };
    write_outputs(config, &report)?;
    Ok(report)
}

fn write_outputs(config: &BenchConfig, report: &BenchReport) -> Result<()> {
    std::fs::create_dir_all(&config.out)?;
    let mut csv = std::fs::File::create(config.out.join("bench_matvec.csv"))?;
    writeln!(csv, "d,structure,median_ns,reps")?;
    for p in &report.points {
        writeln!(csv, "{},{},{},{}", p.d, p.structure, p.median_ns, p.reps)?;
    }
    let collect = |structure: &str| -> Vec<(f64, f64)> {
        report
            .points
            .iter()
            .filter(|p| p.structure == structure)
            .map(|p| (p.d as f64, p.median_ns))
            .collect()
    };
    let svg = render_line_chart(
        &[
            Series {
                name: format!("hss (exp {:.2})", report.hss_exponent),
                points: collect("hss"),
            },
            Series {
                name: format!("dense (exp {:.2})", report.dense_exponent),
                points: collect("dense"),
            },
        ],
        &PlotOptions {
            title: "matvec wall time".to_string(),
            x_label: "d".to_string(),
            y_label: "median ns".to_string(),
            log_x: true,
            log_y: true,
        },
    )?;
    std::fs::write(config.out.join("bench_matvec.svg"), svg)?;
    Ok(())
}
