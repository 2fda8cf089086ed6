use clap::{Parser, Subcommand};
use hsspde_cli::config::{
    dump_config, load_config, BenchConfig, DataEfficiencyConfig, Equation, EvalConfig,
    ExactRecoveryConfig, GenConfig, KernelRankConfig, PlotConfig, TrainCmdConfig,
};
use hsspde_cli::error::{CliError, Result};
use hsspde_cli::experiments::{
    bench::run_bench, data_efficiency::run_data_efficiency, exact_recovery::run_exact_recovery,
    kernel_rank::run_kernel_rank,
};
use hsspde_cli::{cmd_eval, cmd_gen, cmd_plot, cmd_train};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hsspde",
    about = "Structured-matrix neural PDE solver toolkit: data generation, training, evaluation and benchmarks",
    version
)]
struct Cli {
    /// JSON experiment config; flags override individual fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Global seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Print the resolved config as JSON and exit.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it to disk.
    Gen {
        #[arg(long, value_enum)]
        equation: Option<Equation>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
    },
    /// Train a model on a generated dataset.
    Train {
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Evaluate a trained model (relative L2, or rollout trajectory error).
    Eval {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train-size sweep against the parameter-matched dense baseline.
    DataEfficiency,
    /// Operator recovery from few Gaussian samples, with a control run.
    ExactRecovery,
    /// Epsilon-rank growth of admissible kernel blocks.
    KernelRankDecay,
    /// Structured vs dense matvec timing scaling.
    BenchMatvec,
    /// Render a wide CSV as an SVG line chart.
    Plot {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        log_x: bool,
        #[arg(long)]
        log_y: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Gen {
            equation,
            n_train,
            n_test,
        } => {
            let mut cfg: GenConfig = load_config(cli.config.as_deref())?;
            if let Some(e) = equation {
                cfg.equation = *e;
            }
            if let Some(n) = n_train {
                cfg.n_train = *n;
            }
            if let Some(n) = n_test {
                cfg.n_test = *n;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let s = cmd_gen(&cfg)?;
            println!(
                "generated {} samples of {} -> {} (shape {:?}); {}: {:.3e} (pass)",
                s.n,
                s.equation,
                cfg.out.display(),
                s.shape,
                s.check_name,
                s.check_value
            );
        }
        Command::Train { dataset } => {
            let mut cfg: TrainCmdConfig = load_config(cli.config.as_deref())?;
            if let Some(d) = dataset {
                cfg.dataset = d.clone();
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let outcome = cmd_train(&cfg)?;
            println!(
                "trained {} parameters, final train loss {:.3e}{}; model -> {}",
                outcome.param_count,
                outcome.report.final_train_loss,
                outcome
                    .residual_scale
                    .map(|s| format!(", residual scale {s:.4e}"))
                    .unwrap_or_default(),
                cfg.out.join("model").display()
            );
        }
        Command::Eval { dataset, model } => {
            let mut cfg: EvalConfig = load_config(cli.config.as_deref())?;
            if let Some(d) = dataset {
                cfg.dataset = d.clone();
            }
            if let Some(m) = model {
                cfg.model = m.clone();
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let outcome = cmd_eval(&cfg)?;
            println!(
                "evaluated {} samples: {} = {:.6e}",
                outcome.n_samples,
                outcome.report.metric,
                outcome.report.aggregate()
            );
        }
        Command::DataEfficiency => {
            let mut cfg: DataEfficiencyConfig = load_config(cli.config.as_deref())?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let result = run_data_efficiency(&cfg)?;
            println!(
                "sweep complete ({} points, hss {} vs dense {} params):",
                result.points.len(),
                result.hss_params,
                result.dense_params
            );
            for p in &result.points {
                println!(
                    "  n={:<5} {:<6} rel_l2={:.4e} ({:.1}s)",
                    p.n_train, p.model, p.rel_l2, p.wall_s
                );
            }
        }
        Command::ExactRecovery => {
            let mut cfg: ExactRecoveryConfig = load_config(cli.config.as_deref())?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let r = run_exact_recovery(&cfg)?;
            println!(
                "recovery: n={} train_mse={:.3e} heldout_rel_l2={:.3e} sup={:.3e} |alpha-1|={:.3e}",
                r.main.n_train,
                r.main.final_train_mse,
                r.main.heldout_rel_l2,
                r.main.heldout_sup_rel,
                r.main.alpha_dev
            );
            println!(
                "control:  n={} heldout_rel_l2={:.3e}",
                r.control.n_train, r.control.heldout_rel_l2
            );
        }
        Command::KernelRankDecay => {
            let mut cfg: KernelRankConfig = load_config(cli.config.as_deref())?;
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let r = run_kernel_rank(&cfg)?;
            println!(
                "{} admissible blocks ({} touching pairs excluded): mean slope {:.3} ranks per decade, mean R2 {:.4}, max rank ratio {:.2}",
                r.admissible_count, r.rejected_touching, r.mean_slope, r.mean_r2, r.max_rank_ratio
            );
        }
        Command::BenchMatvec => {
            let mut cfg: BenchConfig = load_config(cli.config.as_deref())?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            let r = run_bench(&cfg)?;
            for p in &r.points {
                println!("  d={:<6} {:<6} median {:>12.0} ns", p.d, p.structure, p.median_ns);
            }
            println!(
                "fitted exponents: hss {:.3}, dense {:.3}, params {:.3}",
                r.hss_exponent, r.dense_exponent, r.param_exponent
            );
        }
        Command::Plot {
            input,
            output,
            log_x,
            log_y,
        } => {
            let mut cfg: PlotConfig = load_config(cli.config.as_deref())?;
            if let Some(i) = input {
                cfg.input = i.clone();
            }
            if let Some(o) = output {
                cfg.output = o.clone();
            }
            if *log_x {
                cfg.log_x = true;
            }
            if *log_y {
                cfg.log_y = true;
            }
            if cli.dump_config {
                println!("{}", dump_config(&cfg)?);
                return Ok(());
            }
            cmd_plot(&cfg)?;
            println!("wrote {}", cfg.output.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
