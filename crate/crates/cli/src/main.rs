use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde_json::Value;

use sdr_hebb::datagen::{self, GaussianSpec};
use sdr_hebb::harness::{self, ExperimentKind, ExperimentSpec, SweepTable};
use sdr_hebb::Error;

#[derive(Parser)]
#[command(name = "sdr-hebb", version, about = "RBM vs backprop experiments on sparse data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one synthetic dataset and write it as CSV + JSON sidecar.
    Gen(GenArgs),
    /// LR and RBM on original vs bit-flipped binarized MNIST.
    MnistFlip(RunArgs),
    /// LR on a dense and on a high-dimensional sparse dataset.
    DenseVsSparse(RunArgs),
    /// LR and RBM over a sparsity axis.
    Sweep(RunArgs),
    /// LR and RBM over dimensionality × sparsity, with RBM − LR differences.
    Surface(RunArgs),
    /// MLP and RBM with equal hidden layers.
    MlpVsRbm(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: out/<experiment>]
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    reps: Option<usize>,
    /// JSON experiment spec; any subset of fields overrides the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out/gen")]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 5000)]
    dim: usize,
    #[arg(long, default_value_t = 0.95)]
    sparsity: f64,
    #[arg(long, default_value_t = harness::DEFAULT_COVARIANCE_SCALE)]
    covariance_scale: f64,
}

enum Failure {
    Config(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(base), Value::Object(patch)) => {
            for (key, value) in patch {
                match base.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        base.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

fn resolve_spec(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::defaults(kind);
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
        let patch: Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        let mut value = serde_json::to_value(&spec).expect("spec serializes");
        merge(&mut value, patch);
        spec = serde_json::from_value(value)
            .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        if spec.experiment != kind {
            return Err(Failure::Config(format!(
                "config is for {}, not {}",
                spec.experiment, kind
            )));
        }
    }
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if let Some(reps) = args.reps {
        spec.repetitions = reps;
    }
    spec.validate()?;
    Ok(spec)
}

fn print_table(table: &SweepTable) {
    println!(
        "{:<14} {:>6} {:>8} {:>4} {:>16} {:>16}",
        "model", "dim", "sparsity", "n", "train % (std)", "test % (std)"
    );
    for r in &table.rows {
        println!(
            "{:<14} {:>6} {:>8.3} {:>4} {:>9.2} ({:>4.2}) {:>9.2} ({:>4.2})",
            r.model,
            r.dimensionality,
            r.sparsity,
            r.n,
            100.0 * r.mean_train,
            100.0 * r.std_train,
            100.0 * r.mean_test,
            100.0 * r.std_test
        );
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> Result<(), Failure> {
    let spec = resolve_spec(kind, &args)?;
    let out = args
        .out
        .unwrap_or_else(|| Path::new("out").join(kind.name()));
    info!(
        "{}: {} cells x {} repetitions, {} job(s)",
        kind,
        spec.cells().len(),
        spec.repetitions,
        args.jobs
    );
    let output = harness::run_experiment(&spec, args.jobs, &|done, total| {
        info!("completed {done}/{total}");
    })?;
    harness::emit(&output.spec, &output.results, &output.table, &output.surface, &out)?;
    print_table(&output.table);
    info!("wrote {}", out.display());
    Ok(())
}

fn generate(args: GenArgs) -> Result<(), Failure> {
    let spec = GaussianSpec::standard(args.samples, args.dim, args.covariance_scale, args.seed);
    let data = datagen::prepare(&spec, args.sparsity)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::Data(format!("cannot create {}: {e}", args.out.display())))?;
    let path = args.out.join("dataset.csv");
    datagen::write_csv(&data, &path)?;
    info!("wrote {} rows to {}", data.n_samples(), path.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Gen(args) => generate(args),
        Command::MnistFlip(args) => run(ExperimentKind::MnistFlip, args),
        Command::DenseVsSparse(args) => run(ExperimentKind::DenseVsSparse, args),
        Command::Sweep(args) => run(ExperimentKind::SparsitySweep, args),
        Command::Surface(args) => run(ExperimentKind::Surface3d, args),
        Command::MlpVsRbm(args) => run(ExperimentKind::MlpVsRbm, args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
