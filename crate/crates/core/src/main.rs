use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use floodopt::io::{load_config, map, optimize, simulate, RunConfig};
use floodopt::{Error, Result};

/// Shallow-water flood simulation and dam placement.
#[derive(Parser)]
#[command(name = "floodopt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one flood and record the gauge, mass balance and snapshots.
    Simulate(Common),
    /// Ascend V_A from the configured starts.
    Optimize(Common),
    /// Sample V_A over the search region.
    Map(Common),
    /// Check a configuration and print it with all defaults filled in.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress the summary on stdout.
    #[arg(long)]
    quiet: bool,
}

fn out_dir(cfg: &RunConfig, c: &Common) -> PathBuf {
    c.out.clone().unwrap_or_else(|| cfg.output_dir.clone())
}

fn report(quiet: bool, text: &str, out: &Path) {
    if !quiet {
        print!("{text}");
        println!("output_dir = {}", out.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let (Command::Simulate(c) | Command::Optimize(c) | Command::Map(c) | Command::Validate(c)) = &cli.command;
    if let Some(n) = c.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("--threads {n}: {e}")))?;
    }
    let cfg = load_config(&c.config)?;
    match &cli.command {
        Command::Validate(c) => {
            if !c.quiet {
                print!("{}", cfg.dump()?);
            }
        }
        Command::Simulate(c) => {
            let out = out_dir(&cfg, c);
            let o = simulate(&cfg, &out)?;
            report(c.quiet, &o.summary(), &out);
        }
        Command::Optimize(c) => {
            let out = out_dir(&cfg, c);
            let o = optimize(&cfg, &out)?;
            report(c.quiet, &o.summary(), &out);
        }
        Command::Map(c) => {
            let out = out_dir(&cfg, c);
            let s = map(&cfg, &out)?;
            let ok: Vec<_> = s.iter().filter_map(|s| s.value.as_ref().ok().map(|v| (*v, s.x, s.y))).collect();
            let mut text = format!("samples = {}\nfailed = {}\n", s.len(), s.len() - ok.len());
            if let Some((v, x, y)) = ok.iter().copied().reduce(|a, b| if b.0 > a.0 { b } else { a }) {
                text += &format!("best_x_d = {x}\nbest_y_d = {y}\nbest_V_A_m3 = {v:e}\n");
            }
            report(c.quiet, &text, &out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("floodopt: {e}");
            ExitCode::from(e.category().exit_code() as u8)
        }
    }
}
