use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use heatlab::field::DomainSpec;
use heatlab_experiments::config::{load_config, RunConfig, Scenario};
use heatlab_experiments::output::{write_all, Manifest};
use heatlab_experiments::scenarios;

#[derive(Parser)]
#[command(name = "heatlab", version, about = "Heat kernel experiments for higher-order elliptic operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sharp Gaussian constants and the infimum identity
    Constants(Common),
    /// Spectral heat kernel samples and the exponent fit
    Kernel(Common),
    /// Finsler distances, d_M convergence and the distance ablation
    Distance(Common),
    /// Form bounds, Kato norms and the Miyadera integral for V₋
    Kato(Common),
    /// Twisted-form lower bounds and the growth fit
    Twist(Common),
    /// End-to-end Gaussian bound verdict
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `[output] dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (scenario, common) = match cli.command {
        Command::Constants(c) => (Scenario::Constants, c),
        Command::Kernel(c) => (Scenario::Kernel, c),
        Command::Distance(c) => (Scenario::Distance, c),
        Command::Kato(c) => (Scenario::Kato, c),
        Command::Twist(c) => (Scenario::Twist, c),
        Command::Verify(c) => (Scenario::Verify, c),
    };
    match run(scenario, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(scenario: Scenario, common: Common) -> Result<(), Box<dyn std::error::Error>> {
    let (mut cfg, text) = match &common.config {
        Some(path) => (load_config(path)?, std::fs::read_to_string(path)?),
        None if scenario == Scenario::Constants => {
            let dom = DomainSpec::interval(0.0, 1.0);
            (RunConfig::new(scenario, 1, dom, vec![16]), String::new())
        }
        None => return Err(format!("`{scenario}` needs --config").into()),
    };
    cfg.scenario = scenario;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let dir = common
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(scenario.name()));
    let start = Instant::now();
    let outputs = scenarios::run(&cfg)?;
    let manifest = Manifest {
        scenario: scenario.name(),
        config_text: &text,
        seed: cfg.seed,
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    write_all(&dir, &outputs, &manifest)?;
    print!("{}", outputs.verdict);
    println!("wrote {}", dir.display());
    Ok(())
}
