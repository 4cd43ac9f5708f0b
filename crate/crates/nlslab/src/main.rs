use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlslab::config::{parse_config, ExperimentKind};
use nlslab::error::{HarnessError, EXIT_ACCEPTANCE, EXIT_PASS};
use nlslab::experiments::run_experiment;
use nlslab::report::{collect_manifests, render_report};

#[derive(Parser)]
#[command(
    name = "nlslab",
    version,
    about = "Decay and scattering experiments for defocusing NLS"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    LinearDecay(RunArgs),
    NonlinearDecay(RunArgs),
    L6Decay(RunArgs),
    PcEnergy(RunArgs),
    Morawetz(RunArgs),
    ScatteringRate(RunArgs),
    SpacetimeTail(RunArgs),
    Duhamel(RunArgs),
    Ensemble(RunArgs),
    AmplitudeSweep(RunArgs),
    ConvergenceGate(RunArgs),
    /// Summarize finished runs as markdown on stdout.
    Report {
        /// Glob matching run directories or manifest files.
        #[arg(long)]
        runs: String,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for ensembles and sweeps.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<i32, HarnessError> {
    let text = fs::read_to_string(&args.config).map_err(|e| HarnessError::io(&args.config, e))?;
    let mut config = parse_config(&text)?;
    if config.kind != kind {
        return Err(HarnessError::Config(vec![format!(
            "kind: config declares '{}' but the '{}' subcommand was used",
            config.kind, kind
        )]));
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| HarnessError::Config(vec![format!("jobs: {e}")]))?;
    }
    let out = args
        .out
        .unwrap_or_else(|| PathBuf::from(&config.output_dir));
    let outcome = run_experiment(&config, &out)?;
    let m = &outcome.manifest;
    println!("{} -> {}", m.run_id, outcome.dir.display());
    for v in &m.verdicts {
        println!(
            "  {} {}: measured {} expected {}",
            if v.pass { "pass" } else { "FAIL" },
            v.name,
            v.measured,
            v.expected
        );
    }
    Ok(if m.passed { EXIT_PASS } else { EXIT_ACCEPTANCE })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    use ExperimentKind as K;
    let result = match cli.command {
        Command::Report { runs } => collect_manifests(&runs).map(|(found, missing)| {
            print!("{}", render_report(&found, &missing));
            EXIT_PASS
        }),
        Command::LinearDecay(a) => run(K::LinearDecay, a),
        Command::NonlinearDecay(a) => run(K::NonlinearDecay, a),
        Command::L6Decay(a) => run(K::L6Decay, a),
        Command::PcEnergy(a) => run(K::PcEnergy, a),
        Command::Morawetz(a) => run(K::Morawetz, a),
        Command::ScatteringRate(a) => run(K::ScatteringRate, a),
        Command::SpacetimeTail(a) => run(K::SpacetimeTail, a),
        Command::Duhamel(a) => run(K::Duhamel, a),
        Command::Ensemble(a) => run(K::Ensemble, a),
        Command::AmplitudeSweep(a) => run(K::AmplitudeSweep, a),
        Command::ConvergenceGate(a) => run(K::ConvergenceGate, a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
