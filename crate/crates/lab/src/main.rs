use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nonadiabatic_lab::{compare, resolve_output_dir, run, ExperimentConfig, ExperimentKind, LabError, LabResult, GATE_FAILURE, MANIFEST_FILE};

#[derive(Parser)]
#[command(name = "nalab", version, about = "Run non-adiabatic transition experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transition amplitude against ε with an exponential fit.
    LzSweep(RunArgs),
    /// Transition history in the optimal superadiabatic basis.
    ErfProfile(RunArgs),
    /// Superadiabatic error scaling and optimal truncation.
    SuperadiabaticScan(RunArgs),
    /// Decay rate from the complex crossing.
    DecayRate(RunArgs),
    /// Stationary Born-Oppenheimer transmission against ε.
    BoTransmit(RunArgs),
    /// Transmitted wave packet against its Gaussian prediction.
    BoPacket(RunArgs),
    /// Column-wise relative differences between two runs.
    Compare {
        /// Manifest file or run directory.
        left: PathBuf,
        right: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Rerun at half the tolerance and compare amplitudes.
    #[arg(long)]
    self_check: bool,
}

fn manifest_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(MANIFEST_FILE)
    } else {
        p.to_path_buf()
    }
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> LabResult<i32> {
    let cfg = ExperimentConfig::load(&args.config)?;
    if cfg.experiment != kind {
        return Err(LabError::ConfigInvalid(format!("config is for {} but {kind} was requested", cfg.experiment)));
    }
    let dir = resolve_output_dir(&cfg, args.out.as_deref());
    let self_check = args.self_check || cfg.self_check;
    let go = || run(&cfg, &dir, self_check);
    let manifest = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| LabError::ConfigInvalid(format!("--threads {n}: {e}")))?
            .install(go)?,
        None => go()?,
    };
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    for g in &manifest.gates {
        let state = if g.passed { "pass" } else if g.required { "FAIL" } else { "info" };
        println!("{state:4} {:32} {:.6e} (threshold {:.3e})", g.name, g.value, g.threshold);
    }
    println!("{} in {:.1} s -> {}", cfg.experiment, manifest.total_seconds, dir.display());
    Ok(if manifest.passed { 0 } else { GATE_FAILURE })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compare { left, right } => compare(&manifest_path(left), &manifest_path(right)).map(|r| {
            println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            0
        }),
        Command::LzSweep(a) => run_experiment(ExperimentKind::LzSweep, a),
        Command::ErfProfile(a) => run_experiment(ExperimentKind::ErfProfile, a),
        Command::SuperadiabaticScan(a) => run_experiment(ExperimentKind::SuperadiabaticScan, a),
        Command::DecayRate(a) => run_experiment(ExperimentKind::DecayRate, a),
        Command::BoTransmit(a) => run_experiment(ExperimentKind::BoTransmit, a),
        Command::BoPacket(a) => run_experiment(ExperimentKind::BoPacket, a),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
