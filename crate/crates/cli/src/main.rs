use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use replicator_lab::{load_config, run, thread_cap, validate, CliError, Overrides, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "replicator-lab", version, about = "Stochastic replicator dynamics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named by --kind or the config's `kind` field.
    Run {
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print config diagnostics as a JSON list without running anything.
    Validate {
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// One trajectory, written as CSV.
    Simulate(Flags),
    /// Independent seeded runs with summary statistics.
    Ensemble(Flags),
    /// Iterated elimination of dominated strategies.
    Eliminate(Flags),
    /// Strict Nash equilibria.
    Equilibria(Flags),
    /// Extinction of dominated strategies against the erfc bound.
    Extinction(Flags),
    /// Monte Carlo estimate of stochastic asymptotic stability.
    Stability(Flags),
    /// Evaluate the erfc extinction bound.
    Bound(Flags),
    /// Sampled Lyapunov certificate near a strict equilibrium.
    Lyapunov(Flags),
    /// Compare the analytic generator with a short-time Monte Carlo estimate.
    GeneratorProbe(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Game file or inline JSON object.
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    /// Constant noise coefficient for every strategy.
    #[arg(long)]
    eta: Option<f64>,
    /// Learning rate for every player.
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    integrator: Option<String>,
    #[arg(long)]
    record_stride: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override any config field: `--set params.delta=0.05`.
    #[arg(long = "set", value_name = "PATH=JSON")]
    set: Vec<String>,
}

impl Flags {
    fn overrides(self, kind: Option<String>) -> (Option<PathBuf>, Overrides) {
        let o = Overrides {
            kind,
            game: self.game,
            variant: self.variant,
            eta: self.eta,
            rate: self.rate,
            seed: self.seed,
            horizon: self.horizon,
            dt: self.dt,
            integrator: self.integrator,
            record_stride: self.record_stride,
            runs: self.runs,
            output_dir: self.output_dir,
            set: self.set,
        };
        (self.config, o)
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("replicator-lab: {err}");
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    match thread_cap(std::env::var("REPLICATOR_LAB_THREADS").ok().as_deref()) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("replicator-lab: cannot size worker pool: {e}");
            }
        }
        Ok(None) => {}
        Err(e) => return fail(&e),
    }

    let (kind, flags) = match cli.command {
        Command::Validate { kind, flags } => {
            let (path, overrides) = flags.overrides(kind);
            let config = match load_config(path.as_deref(), &overrides) {
                Ok(c) => c,
                Err(CliError::Config(diags)) => {
                    println!("{}", serde_json::to_string(&diags).unwrap());
                    return ExitCode::from(EXIT_CONFIG);
                }
                Err(e) => return fail(&e),
            };
            let diags = validate(&config);
            println!("{}", serde_json::to_string(&diags).unwrap());
            return if diags.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CONFIG) };
        }
        Command::Run { kind, flags } => (kind, flags),
        Command::Simulate(f) => (Some("simulate".into()), f),
        Command::Ensemble(f) => (Some("ensemble".into()), f),
        Command::Eliminate(f) => (Some("eliminate".into()), f),
        Command::Equilibria(f) => (Some("equilibria".into()), f),
        Command::Extinction(f) => (Some("extinction".into()), f),
        Command::Stability(f) => (Some("stability".into()), f),
        Command::Bound(f) => (Some("bound".into()), f),
        Command::Lyapunov(f) => (Some("lyapunov".into()), f),
        Command::GeneratorProbe(f) => (Some("generator-probe".into()), f),
    };

    let (path, overrides) = flags.overrides(kind);
    match run(path.as_deref(), &overrides) {
        Ok(line) => {
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
