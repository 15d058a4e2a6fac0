use std::io::{ErrorKind, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bcsep::exec::init_thread_pool;
use bcsep::harness::oracle::{run_oracle, OracleAlphabet};
use bcsep::harness::output::aggregate_csv;
use bcsep::harness::{preset, run_experiment, write_outputs, ExperimentSpec, PRESET_NAMES};
use bcsep::{Error, Execution};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bcsep", version, about = "Blind channel separation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed; overrides the seed of the experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = one per core, 1 = run sequentially).
    #[arg(long, global = true, env = "THREADS")]
    threads: Option<usize>,

    /// Directory for CSV tables and plot scripts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the number of trials per SNR.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run a built-in experiment.
    Demo {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESET_NAMES))]
        name: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Print the preset as TOML instead of running it.
        #[arg(long)]
        print_config: bool,
    },
    /// Check exact-alphabet separation on random generator sets.
    Oracle {
        #[arg(long, default_value_t = 100)]
        instances: usize,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

/// Writes to stdout; a closed reader is not an error.
fn emit(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != ErrorKind::BrokenPipe => Err(Failure::Runtime(e.to_string())),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let exec = match cli.threads {
        Some(1) => Execution::Sequential,
        Some(n) => {
            init_thread_pool(n).map_err(Failure::Runtime)?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    match &cli.command {
        Command::Run { config, trials } => {
            let mut spec = ExperimentSpec::from_path(config).map_err(|e| Failure::Config(e.to_string()))?;
            let stem = config
                .file_stem()
                .map_or_else(|| "experiment".to_string(), |s| s.to_string_lossy().into_owned());
            override_spec(&mut spec, cli, *trials)?;
            run_one(&stem, &spec, exec)
        }
        Command::Demo {
            name,
            trials,
            print_config,
        } => {
            let list = preset(name).ok_or_else(|| Failure::Config(format!("unknown preset {name}")))?;
            for (stem, mut spec) in list {
                override_spec(&mut spec, cli, *trials)?;
                if *print_config {
                    emit(&format!("# {stem}\n{}\n", spec.to_toml_string()))?;
                } else {
                    run_one(&stem, &spec, exec)?;
                }
            }
            Ok(())
        }
        Command::Oracle { instances } => {
            let seed = cli.seed.unwrap_or(0);
            let mut all_ok = true;
            emit("k,alphabet,instances,recovered,min_cosine\n")?;
            for k in [2, 3] {
                for alphabet in OracleAlphabet::ALL {
                    let r = run_oracle(k, alphabet, *instances, seed)?;
                    all_ok &= r.recovered == r.instances;
                    emit(&format!("{},{},{},{},{:.12}\n", r.k, alphabet.name(), r.instances, r.recovered, r.min_cosine))?;
                }
            }
            if all_ok {
                Ok(())
            } else {
                Err(Failure::Runtime("some generator sets were not recovered".into()))
            }
        }
    }
}

fn override_spec(spec: &mut ExperimentSpec, cli: &Cli, trials: Option<usize>) -> Result<(), Failure> {
    if let Some(seed) = cli.seed {
        spec.experiment.seed = seed;
    }
    if let Some(t) = trials {
        spec.experiment.trials = t;
    }
    if let Some(out) = &cli.out {
        spec.experiment.output = Some(out.clone());
    }
    spec.validate()?;
    Ok(())
}

fn run_one(stem: &str, spec: &ExperimentSpec, exec: Execution) -> Result<(), Failure> {
    for w in spec.warnings() {
        eprintln!("warning: {w}");
    }
    let outcome = run_experiment(spec, exec)?;
    emit(&aggregate_csv(&outcome.table, spec.experiment.report_timing))?;
    if let Some(dir) = &spec.experiment.output {
        let written = write_outputs(dir, stem, stem, &outcome, spec.experiment.report_timing)?;
        for path in written {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}
