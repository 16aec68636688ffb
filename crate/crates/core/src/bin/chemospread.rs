use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chemospread::harness::commands::{
    cmd_run, cmd_sweep, cmd_theory, cmd_verify, exit_code, output_dir, write_sweep_csv, TheoryInputs, EXIT_NUMERICAL,
    EXIT_OK, EXIT_VERDICT,
};
use chemospread::harness::RunConfig;
use chemospread::model::Termination;
use chemospread::Error;

#[derive(Parser)]
#[command(name = "chemospread", version, about = "Spreading speeds of the chemotaxis system with logistic source")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `initial.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one configuration and write its artifacts.
    Run(Common),
    /// Run every point of the configured parameter lattice.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print the closed-form constants for given inputs.
    Theory(TheoryArgs),
    /// Re-check a finished run from its snapshots.
    Verify {
        /// Directory written by `run`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TheoryArgs {
    /// Take `a`, `dim`, `lambda`, `mu` and `eps` from a run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long = "big-m", default_value_t = 1.0)]
    big_m: f64,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
}

fn load(common: &Common) -> Result<RunConfig, Error> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.initial.seed = seed;
    }
    Ok(config)
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code(err)
}

fn run(common: &Common) -> i32 {
    let config = match load(common) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let dir = output_dir(&config, common.out.as_deref());
    match cmd_run(&config, &dir) {
        Ok(art) => {
            for w in &art.outcome.record.warnings {
                eprintln!("warning: {w}");
            }
            if let Termination::StepFailure { t, message } = &art.outcome.record.termination {
                eprintln!("error: integration stopped after t = {t}: {message}");
                return EXIT_NUMERICAL;
            }
            for f in &art.outcome.fits {
                match &f.fit {
                    Some(fit) => println!("front {} @ {}: speed {:.6}", f.direction, f.threshold, fit.speed),
                    None => println!("front {} @ {}: {}", f.direction, f.threshold, f.error.as_deref().unwrap_or("")),
                }
            }
            if let Some(r) = &art.report {
                for c in &r.clauses {
                    println!("{:?}: {}", c.status, c.name);
                }
            }
            println!("artifacts in {}", dir.display());
            EXIT_OK
        }
        Err(e) => fail(&e),
    }
}

fn sweep(common: &Common, jobs: usize) -> i32 {
    let config = match load(common) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let rows = match cmd_sweep(&config, jobs) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let result = match common.out.as_deref().or(config.output.dir.as_deref()) {
        Some(dir) => std::fs::create_dir_all(dir)
            .map_err(Error::from)
            .and_then(|_| std::fs::File::create(dir.join("sweep.csv")).map_err(Error::from))
            .and_then(|f| write_sweep_csv(&rows, f)),
        None => write_sweep_csv(&rows, std::io::stdout().lock()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => fail(&e),
    }
}

fn theory(args: &TheoryArgs) -> i32 {
    let base = match &args.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => Some(c),
            Err(e) => return fail(&e),
        },
        None => None,
    };
    let inputs = TheoryInputs {
        a: args.a.or(base.as_ref().map(|c| c.params.a)).unwrap_or(1.0),
        dim: args.dim.or(base.as_ref().map(|c| c.params.dim)).unwrap_or(1),
        eps: args.eps.or(base.as_ref().map(|c| c.analysis.eps)).unwrap_or(0.5),
        eta: args.eta,
        big_m: args.big_m,
        lambda: args.lambda.or(base.as_ref().map(|c| c.params.lambda)).unwrap_or(1.0),
        mu: args.mu.or(base.as_ref().map(|c| c.params.mu)).unwrap_or(1.0),
    };
    let report = match cmd_theory(&inputs) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(dir) = &args.out {
        let written = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(dir.join("theory.json"), format!("{text}\n")));
        if let Err(e) = written {
            return fail(&e.into());
        }
    }
    EXIT_OK
}

fn verify(dir: &Path) -> i32 {
    match cmd_verify(dir) {
        Ok(report) => {
            for c in &report.clauses {
                println!("{:?}: {} ({})", c.status, c.name, c.detail);
            }
            if report.passed() {
                println!("verdict: pass");
                EXIT_OK
            } else {
                println!("verdict: fail");
                EXIT_VERDICT
            }
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Run(common) => run(common),
        Command::Sweep { common, jobs } => sweep(common, *jobs),
        Command::Theory(args) => theory(args),
        Command::Verify { out } => verify(out),
    };
    ExitCode::from(code as u8)
}
