use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use snowcast::config::{ExperimentConfig, RunMode};
use snowcast::experiment::{self, write_parameters, write_report, write_series};
use snowcast_core::validate_parameters;

/// Snowpack and runoff simulation with ensemble data assimilation.
#[derive(Parser)]
#[command(name = "snowcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Open-loop simulation with the configured parameters.
    Run(Common),
    /// Synthetic twin: truth, open loop, SWE-only and joint runs.
    Twin(Common),
    /// Filter over the observation files named in the configuration.
    Assimilate(Common),
    /// Recompute the metrics report from a twin output directory.
    Metrics(Common),
    /// Check configuration, parameters, forcing and observation files.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment TOML; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    mode: Option<RunMode>,
    #[arg(long)]
    n_ensemble: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(mode) = self.mode {
            cfg.mode = mode;
        }
        if let Some(n) = self.n_ensemble {
            cfg.n_ensemble = n;
        }
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_out(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))
}

fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(c) => {
            let cfg = c.config()?;
            let rows = experiment::run_open_loop(&cfg)?;
            create_out(&cfg)?;
            let path = cfg.output.join("open_loop.csv");
            write_series(&path, &rows)?;
            println!("{} days written to {}", rows.len(), path.display());
        }
        Command::Twin(c) => {
            let cfg = c.config()?;
            let out = experiment::run_twin(&cfg)?;
            experiment::write_twin(&cfg.output, &out)?;
            print!("{}", out.report.to_table());
            println!(
                "max residual {:.3e} in; outputs in {}",
                out.max_residual,
                cfg.output.display()
            );
        }
        Command::Assimilate(c) => {
            let cfg = c.config()?;
            if cfg.mode == RunMode::OpenLoop {
                bail!("assimilate needs --mode swe-only or --mode joint");
            }
            let run = experiment::assimilate(&cfg, cfg.mode)?;
            create_out(&cfg)?;
            let stem = cfg.mode.name().replace('-', "_");
            let path = cfg.output.join(format!("{stem}.csv"));
            write_series(&path, &run.rows)?;
            if !run.parameters.is_empty() {
                write_parameters(&cfg.output.join(format!("{stem}_parameters.csv")), &run.parameters)?;
            }
            println!("{} days written to {}", run.rows.len(), path.display());
        }
        Command::Metrics(c) => {
            let dir = match (&c.out, &c.config) {
                (Some(out), _) => out.clone(),
                (None, Some(_)) => c.config()?.output,
                (None, None) => bail!("metrics needs --out <twin output directory>"),
            };
            let report = experiment::metrics_from_dir(&dir)?;
            write_report(&dir, &report)?;
            print!("{}", report.to_table());
        }
        Command::Validate(c) => {
            let cfg = c.config()?;
            let basin = cfg.load_basin()?;
            let params = cfg.load_parameters(&basin)?;
            let violations = validate_parameters(&params);
            if !violations.is_empty() {
                for v in &violations {
                    eprintln!("{v}");
                }
                bail!("{} parameter problem(s)", violations.len());
            }
            let forcing = experiment::nominal_forcing(&cfg, &basin)?;
            for f in &forcing {
                f.validate(basin.n_hru())?;
            }
            let dates: Vec<_> = forcing.iter().map(|f| f.date).collect();
            if let Some(p) = &cfg.swe_observations {
                snowcast::io::load_swe_observations(p, &basin, &dates)?;
            }
            if let Some(p) = &cfg.flow_observations {
                snowcast::io::load_flow_observations(p, &dates)?;
            }
            println!(
                "ok: {} HRUs, {} days from {}",
                basin.n_hru(),
                forcing.len(),
                dates.first().map(|d| d.to_string()).unwrap_or_default()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
