use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gkpsim::{run_command, ConfigBuilder, RunManifest};

#[derive(Parser)]
#[command(name = "gkpsim", version, about = "Cat generation, GKP breeding and RHG threshold experiments")]
struct Cli {
    /// Flat dotted-key TOML config; unspecified keys keep their defaults.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// `section.key=value` overrides, applied after the file and the environment.
    #[arg(long = "set", global = true)]
    overrides: Vec<String>,
    /// Shorthand for `--set run.out_dir=...`.
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Worker threads (0: all cores). Outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// PhANTM runs with cat fits: cat_runs.csv and photon_hist.csv.
    Phantm,
    /// Click statistics of a fixed cat against the anti-squeezing gate strength.
    Stats,
    /// Adaptive breeding of ideal squeezed cats.
    Breed,
    /// Full generate-fit-breed pipeline: gkp_samples.csv.
    Gkp,
    /// Logical error rates from GKP samples or a Gaussian source: qec_rates.csv.
    QecRate,
    /// Threshold crossing with bootstrap interval from a qec_rates.csv.
    Threshold,
    /// Correctable/uncorrectable boundaries for Gaussian-spread noise.
    Sweep,
    /// Plot data for one figure: 2d, 3b, 4, 5, 6, 9 or 10.
    ReproduceFigure { figure: String },
    /// Re-run the command and config recorded in a manifest.
    Replay { manifest: PathBuf },
}

fn run(cli: Cli) -> gkpsim::Result<RunManifest> {
    let (words, mut builder) = match &cli.command {
        Command::Replay { manifest } => {
            let m = RunManifest::read(manifest)?;
            let mut b = ConfigBuilder::default();
            b.merge_str(&m.config)?;
            (m.command_words(), b)
        }
        cmd => {
            let mut b = ConfigBuilder::default();
            if let Some(p) = &cli.config {
                b.merge_file(p)?;
            }
            b.merge_env(std::env::vars())?;
            let words = match cmd {
                Command::Phantm => vec!["phantm".to_string()],
                Command::Stats => vec!["stats".into()],
                Command::Breed => vec!["breed".into()],
                Command::Gkp => vec!["gkp".into()],
                Command::QecRate => vec!["qec-rate".into()],
                Command::Threshold => vec!["threshold".into()],
                Command::Sweep => vec!["sweep".into()],
                Command::ReproduceFigure { figure } => vec!["reproduce-figure".into(), figure.clone()],
                Command::Replay { .. } => unreachable!(),
            };
            (words, b)
        }
    };
    builder.merge_overrides(&cli.overrides)?;
    if let Some(d) = &cli.out_dir {
        builder.set("run.out_dir", toml::Value::String(d.clone()))?;
    }
    if let Some(t) = cli.threads {
        builder.set("run.threads", toml::Value::Integer(t as i64))?;
    }
    let cfg = builder.build()?;
    set_threads(cfg.run.threads as usize)?;
    run_command(&words, &cfg)
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> gkpsim::Result<()> {
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| gkpsim::HarnessError::Config(e.to_string()))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> gkpsim::Result<()> {
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(m) => {
            for (stage, file) in &m.outputs {
                println!("{stage}: {file}");
            }
            println!("manifest {}", m.manifest_hash);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
