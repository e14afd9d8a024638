//! Command-line front end for the Monte Carlo runner: `run` executes one
//! config, `sweep` re-runs it along an SNR or RF-chain axis, and `figure`
//! expands a built-in experiment preset. All output goes through the CSV
//! emitter, so bytes depend only on the effective config.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hybridprec::harness::{
    self, ExperimentConfig, OutputFormat, ResultRow, SweepAxis,
};
use hybridprec::{Error, Result};

#[derive(Parser)]
#[command(
    name = "hybridprec",
    version,
    about = "Hybrid precoding Monte Carlo experiments",
    after_help = "Set HYBRIDPREC_LOG=info (or debug, trace) for progress logging on stderr."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by the config file (or the defaults)
    Run {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the config once per axis value and concatenate the results
    Sweep {
        /// Axis to vary: 'snr' or 'n_rf' (n_rf sets both sides' chain counts)
        #[arg(long, value_name = "snr|n_rf")]
        axis: String,
        /// Comma-separated axis values, e.g. --values=-10,-5,0
        #[arg(long, value_name = "V1,V2,...", allow_hyphen_values = true)]
        values: String,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run a built-in experiment preset reproducing a reference figure
    Figure {
        /// Preset number
        #[arg(value_name = "4|5|6|7|8|9")]
        number: u8,
        #[command(flatten)]
        common: CommonOpts,
    },
}

impl Command {
    fn common(&self) -> &CommonOpts {
        match self {
            Command::Run { common } => common,
            Command::Sweep { common, .. } => common,
            Command::Figure { common, .. } => common,
        }
    }
}

#[derive(Args)]
struct CommonOpts {
    /// Config file with flat 'key = value' lines; omitted keys keep defaults
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the master seed
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Override the channel realization count
    #[arg(long, value_name = "N")]
    realizations: Option<usize>,
    /// Worker thread count (default: one per CPU)
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory (created if missing; default: current directory)
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_name = "csv|plot-script", default_value = "csv")]
    format: String,
    /// Override the receive-side mode
    #[arg(long, value_name = "hybrid|optimal-digital")]
    combiner: Option<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("HYBRIDPREC_LOG", "warn"),
    )
    .init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let common = cli.command.common();
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(Error::Config("worker count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot configure {n} workers: {e}")))?;
    }
    let format: OutputFormat = common.format.parse()?;
    let out_dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.clone(),
        source,
    })?;

    let started = Instant::now();
    let (rows, stem) = match &cli.command {
        Command::Run { common } => {
            let cfg = load_config(common)?;
            log::info!(
                "run: {}x{} arrays, {} streams, {} realizations",
                cfg.n_t,
                cfg.n_r,
                cfg.n_s,
                cfg.realizations
            );
            (harness::run_experiment(&cfg)?, "results".to_string())
        }
        Command::Sweep {
            axis,
            values,
            common,
        } => {
            let cfg = load_config(common)?;
            let axis: SweepAxis = axis.parse()?;
            let values = parse_values(values)?;
            log::info!("sweep over {axis}: {} points", values.len());
            (harness::sweep(&cfg, axis, &values)?, format!("sweep-{axis}"))
        }
        Command::Figure { number, common } => {
            let mut configs = harness::figure_preset(*number)?;
            for cfg in &mut configs {
                apply_overrides(cfg, common)?;
                cfg.validate()?;
            }
            log::info!("figure {number}: {} configs", configs.len());
            let mut rows: Vec<ResultRow> = Vec::new();
            for cfg in &configs {
                rows.extend(harness::run_experiment(cfg)?);
            }
            (rows, format!("figure{number}"))
        }
    };
    log::info!(
        "{} result rows in {:.1}s",
        rows.len(),
        started.elapsed().as_secs_f64()
    );

    let written = harness::emit(&rows, format, &out_dir.join(format!("{stem}.csv")))?;
    for path in &written {
        println!("{}", path.display());
    }
    Ok(())
}

fn load_config(common: &CommonOpts) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
            harness::parse_config(&text)?
        }
        None => ExperimentConfig::default(),
    };
    apply_overrides(&mut cfg, common)?;
    cfg.validate()?;
    Ok(cfg)
}

fn apply_overrides(cfg: &mut ExperimentConfig, common: &CommonOpts) -> Result<()> {
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(realizations) = common.realizations {
        cfg.realizations = realizations;
    }
    if let Some(combiner) = &common.combiner {
        cfg.combiner_mode = combiner.parse()?;
    }
    Ok(())
}

fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse sweep value '{}'", v.trim())))
        })
        .collect()
}
