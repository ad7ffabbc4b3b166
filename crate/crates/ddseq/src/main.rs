use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ddseq::output::{write_all, write_stiffness};
use ddseq::{run_experiment, ExperimentConfig, ExperimentOutput};

#[derive(Parser)]
#[command(
    name = "ddseq",
    version,
    about = "BDDC + recycled PCG on sequences of Poisson systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write the stiffness matrix in Matrix Market format.
        #[arg(long)]
        matrix: bool,
    },
    /// Run one experiment per value of a single key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `key=v1,v2,...`
        #[arg(long)]
        vary: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn print_row(label: &str, o: &ExperimentOutput) {
    let s = &o.summary;
    let ritz = s
        .ritz_converged_at
        .map_or_else(|| "not reached".to_string(), |k| k.to_string());
    println!(
        "{label:<28} iters {:<14} time {}  step1 {} ({:.3e} s)  coarse {}  ritz {}",
        s.iterations_cell,
        s.time_cell(),
        s.step1_iters,
        s.step1_time_s,
        o.coarse.coarse_order,
        ritz
    );
}

fn run_one(cfg: &ExperimentConfig, out: &Path, label: &str) -> Result<bool> {
    let o = run_experiment(cfg)?;
    write_all(&o, out)?;
    print_row(label, &o);
    Ok(o.summary.all_converged)
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            matrix,
        } => {
            let cfg = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let o = run_experiment(&cfg)?;
            write_all(&o, &out)?;
            if matrix {
                write_stiffness(&o, &out.join("stiffness.mtx"))?;
            }
            print_row(&config.display().to_string(), &o);
            Ok(o.summary.all_converged)
        }
        Command::Sweep { config, vary, out } => {
            let base = ExperimentConfig::from_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let Some((key, values)) = vary.split_once('=') else {
                bail!("--vary expects key=v1,v2,...");
            };
            let mut ok = true;
            for value in values.split(',').map(str::trim) {
                let mut cfg = base.clone();
                cfg.set(key.trim(), value)?;
                cfg.validate()?;
                let label = format!("{}={}", key.trim(), value);
                ok &= run_one(&cfg, &out.join(&label), &label)?;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ddseq: some steps did not converge");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("ddseq: {e:#}");
            ExitCode::FAILURE
        }
    }
}
