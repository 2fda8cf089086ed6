//! Library façade of the experiment runner; `main.rs` is a thin argument
//! parser over these functions so tests can drive everything in-process.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;

pub use commands::{cmd_eval, cmd_gen, cmd_train};
pub use error::{CliError, Result};

use crate::config::PlotConfig;
use crate::plot::{read_wide_csv, render_line_chart, PlotOptions};

/// Renders a wide CSV (x column + one column per series) into an SVG chart.
pub fn cmd_plot(config: &PlotConfig) -> Result<()> {
    let (x_label, series) = read_wide_csv(&config.input)?;
    let opts = PlotOptions {
        title: config.title.clone(),
        x_label: if config.x_label.is_empty() {
            x_label
        } else {
            config.x_label.clone()
        },
        y_label: config.y_label.clone(),
        log_x: config.log_x,
        log_y: config.log_y,
    };
    let svg = render_line_chart(&series, &opts)?;
    if let Some(parent) = config.output.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&config.output, svg)?;
    Ok(())
}
