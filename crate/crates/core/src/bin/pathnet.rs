use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathnet::harness::{run_scenario, ExperimentConfig, OutputFormat, Scenario};

#[derive(Parser)]
#[command(name = "pathnet", version, about = "Seeded multipath MTL experiment sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named by --scenario (or by the config file).
    Solve {
        #[arg(long)]
        scenario: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    #[command(name = "fig2_n")]
    Fig2N(RunArgs),
    #[command(name = "fig2_tbar")]
    Fig2Tbar(RunArgs),
    #[command(name = "fig2_k")]
    Fig2K(RunArgs),
    #[command(name = "fig3_clustering")]
    Fig3Clustering(RunArgs),
    #[command(name = "fig6_samples")]
    Fig6Samples(RunArgs),
    #[command(name = "fig6_tasks")]
    Fig6Tasks(RunArgs),
    Fairness(RunArgs),
    Adversarial(RunArgs),
    Transfer(RunArgs),
    #[command(name = "bound_shape")]
    BoundShape(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value config file; built-in defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

fn build(scenario: Option<Scenario>, run: RunArgs) -> pathnet::Result<ExperimentConfig> {
    let mut cfg = match (&run.config, scenario) {
        (Some(path), sc) => {
            let cfg = ExperimentConfig::from_file(path)?;
            if let Some(sc) = sc.filter(|&sc| sc != cfg.scenario) {
                return Err(pathnet::Error::InvalidArgument(format!(
                    "config is for {} but {} was requested",
                    cfg.scenario, sc
                )));
            }
            cfg
        }
        (None, Some(sc)) => ExperimentConfig::defaults(sc),
        (None, None) => {
            return Err(pathnet::Error::InvalidArgument("give --scenario or --config".into()));
        }
    };
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    if let Some(r) = run.reps {
        cfg.reps = r;
    }
    if let Some(o) = run.out {
        cfg.out_path = Some(o);
    }
    if let Some(f) = run.format {
        cfg.format = f.parse::<OutputFormat>()?;
    }
    if run.threads.is_some() {
        cfg.threads = run.threads;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (scenario, run) = match cli.command {
        Command::Solve { scenario, run } => match scenario.map(|s| s.parse::<Scenario>()).transpose() {
            Ok(sc) => (sc, run),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        Command::Fig2N(a) => (Some(Scenario::Fig2N), a),
        Command::Fig2Tbar(a) => (Some(Scenario::Fig2Tbar), a),
        Command::Fig2K(a) => (Some(Scenario::Fig2K), a),
        Command::Fig3Clustering(a) => (Some(Scenario::Fig3Clustering), a),
        Command::Fig6Samples(a) => (Some(Scenario::Fig6Samples), a),
        Command::Fig6Tasks(a) => (Some(Scenario::Fig6Tasks), a),
        Command::Fairness(a) => (Some(Scenario::Fairness), a),
        Command::Adversarial(a) => (Some(Scenario::Adversarial), a),
        Command::Transfer(a) => (Some(Scenario::Transfer), a),
        Command::BoundShape(a) => (Some(Scenario::BoundShape), a),
    };
    let cfg = match build(scenario, run) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run_scenario(&cfg) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
