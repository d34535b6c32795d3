use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ffdlab_cli::config::Suite;
use ffdlab_cli::{parse_config, suites, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "ffdlab",
    version,
    about = "Fractional fast diffusion: simulations and verification suites"
)]
struct Cli {
    /// TOML configuration; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the `[measure]` data and dump the trajectory.
    Simulate,
    /// Run check suites; the positional name and `--suite` replace `suites`.
    Verify {
        name: Option<String>,
        #[arg(long = "suite")]
        suite: Vec<String>,
    },
    /// Solve the backward dual problem and check its identities.
    Dual,
    /// Smoothing fits over a range of `m` or `σ`.
    Sweep,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(CliError::io(path.display().to_string()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Command::Verify { name, suite } = &cli.command {
        let names: Vec<&String> = name.iter().chain(suite).collect();
        if !names.is_empty() {
            cfg.suites = names.into_iter().map(|n| Suite::parse(n)).collect::<Result<_, _>>()?;
            cfg.validate()?;
        }
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.display().to_string();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = load(cli)?;
    let out = PathBuf::from(&cfg.output.dir);
    suites::prepare_output(&cfg, &out)?;
    let (label, reports) = match cli.command {
        Command::Simulate => ("simulate", suites::simulate(&cfg, &out)?),
        Command::Verify { .. } => ("verify", suites::verify(&cfg, cli.threads)?),
        Command::Dual => ("dual", suites::dual(&cfg, &out)?),
        Command::Sweep => ("sweep", suites::sweep(&cfg, &out, cli.threads)?),
    };
    let summary = suites::write_reports(&out, label, &reports)?;
    print!("{summary}");
    Ok(reports.iter().all(|r| r.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
