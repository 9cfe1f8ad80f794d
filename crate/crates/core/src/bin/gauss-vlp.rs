use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gauss_vlp::harness::{run, Command, RunConfig};

#[derive(Parser)]
#[command(name = "gauss-vlp", about = "Variable-exponent Gaussian harmonic analysis checks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run config; missing keys take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Exponent name from the registry (overrides the config).
    #[arg(long, global = true)]
    spec: Option<String>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run the maximal experiment even when prerequisites fail.
    #[arg(long, global = true)]
    force: bool,
    /// Write the report here and the JSON summary next to it.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    CheckExponent,
    Measure,
    Norm,
    Riesz,
    KernelVerify,
    Maximal,
    Bench,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::CheckExponent => Command::CheckExponent,
            Cmd::Measure => Command::Measure,
            Cmd::Norm => Command::Norm,
            Cmd::Riesz => Command::Riesz,
            Cmd::KernelVerify => Command::KernelVerify,
            Cmd::Maximal => Command::Maximal,
            Cmd::Bench => Command::Bench,
        }
    }
}

fn apply_overrides(cli: &Cli, cfg: &mut RunConfig) {
    if let Some(s) = &cli.spec {
        cfg.exponent.specs = vec![s.clone()];
        cfg.norm.spec = s.clone();
        cfg.maximal.spec = s.clone();
        cfg.bench.specs = vec![s.clone()];
    }
    if let Some(d) = cli.dim {
        cfg.exponent.dim = d;
        cfg.measure.fit_dim = d;
        cfg.norm.dim = d;
        cfg.maximal.dim = d;
        cfg.bench.dims = vec![d];
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.force |= cli.force;
    if cli.output.is_some() {
        cfg.output = cli.output.clone();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig::default(),
    };
    apply_overrides(&cli, &mut cfg);
    let out = match run(cli.command.into(), &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", out.text);
    if let Some(path) = &cfg.output {
        if let Err(e) = out.write(path) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if out.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
