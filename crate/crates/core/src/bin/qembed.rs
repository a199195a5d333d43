use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qembed::cli::{
    cmd_eval, cmd_gram, cmd_moons_sweep, cmd_train, Approach, DatasetKind, ExperimentSpec, GramStage, MethodArg,
    NoiseArg, SweepSpec, PARAMS_FILE,
};
use qembed::optim::TrainConfig;

#[derive(Parser, Debug)]
#[command(name = "qembed", version, about = "Train and evaluate trainable quantum embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train embedding parameters and write train_record.json and params.json.
    Train(Common),
    /// Score trained parameters on the test split and write metrics.json.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Parameters to evaluate (defaults to <out>/params.json).
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Write the overlap matrix of the training points as CSV.
    Gram {
        #[command(flatten)]
        common: Common,
        /// Trained parameters, required unless --before is given.
        #[arg(long)]
        params: Option<PathBuf>,
        /// Use the randomly initialized parameters instead of trained ones.
        #[arg(long)]
        before: bool,
    },
    /// Moons small-sample study over several training sizes.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Training points per class, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = qembed::cli::DEFAULT_SWEEP_REPEATS)]
        repeats: usize,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum, default_value = "iris")]
    dataset: DatasetKind,
    /// Defaults to implicit for iris and moons, explicit for circles.
    #[arg(long, value_enum)]
    approach: Option<Approach>,
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseArg,
    #[arg(long, default_value_t = qembed::overlap::DEFAULT_SHOTS)]
    shots: u64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 10 for iris, 15 for circles, 25 for moons.
    #[arg(long)]
    train_per_class: Option<usize>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Iris CSV (4 measurements + species); the bundled table is used otherwise.
    #[arg(long)]
    iris_csv: Option<PathBuf>,
    /// Gaussian noise added to generated circles/moons coordinates.
    #[arg(long, default_value_t = qembed::cli::DEFAULT_DATA_NOISE)]
    data_noise: f64,
    /// Inner-circle radius for the circles dataset.
    #[arg(long, default_value_t = qembed::cli::DEFAULT_CIRCLES_FACTOR)]
    circles_factor: f64,
    /// Record wall-clock training time in train_record.json.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn spec(&self) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(self.dataset, &self.out);
        if let Some(a) = self.approach {
            spec.approach = a;
        }
        if let Some(n) = self.train_per_class {
            spec.train_per_class = n;
        }
        spec.train = TrainConfig { epochs: self.epochs, learning_rate: self.lr, seed: self.seed, ..TrainConfig::default() };
        spec.method = self.method.into();
        spec.shots = self.shots;
        spec.noise = self.noise.device();
        spec.iris_csv = self.iris_csv.clone();
        spec.data_noise = self.data_noise;
        spec.circles_factor = self.circles_factor;
        spec.record_timing = self.timing;
        spec
    }
}

fn run(cli: Cli) -> qembed::Result<()> {
    match cli.command {
        Command::Train(common) => {
            let rec = cmd_train(&common.spec())?;
            println!(
                "trained {} epochs: cost {:.6} -> {:.6}; wrote {}",
                rec.config.epochs,
                rec.initial_cost(),
                rec.final_cost(),
                common.out.display()
            );
        }
        Command::Eval { common, params } => {
            let params = params.unwrap_or_else(|| common.out.join(PARAMS_FILE));
            let report = cmd_eval(&common.spec(), &params)?;
            println!("accuracy {:.4} ({}/{})", report.accuracy, report.correct, report.test_count);
        }
        Command::Gram { common, params, before } => {
            let stage = if before { GramStage::Before } else { GramStage::After };
            let params = params.or_else(|| (!before).then(|| common.out.join(PARAMS_FILE)));
            let gram = cmd_gram(&common.spec(), params.as_deref(), stage)?;
            println!("wrote {}x{} gram matrix to {}", gram.len(), gram.len(), common.out.display());
        }
        Command::Sweep { common, sizes, repeats } => {
            let spec = SweepSpec {
                sizes,
                repeats,
                seed: common.seed,
                train: TrainConfig { epochs: common.epochs, learning_rate: common.lr, ..TrainConfig::default() },
                data_noise: common.data_noise,
                out_dir: common.out.clone(),
            };
            for row in cmd_moons_sweep(&spec)? {
                println!("{:>3} {:<8} {:.4} ± {:.4}", row.size, row.approach, row.mean_accuracy, row.stddev);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let usage = matches!(e, qembed::Error::InvalidArgument(_) | qembed::Error::UnknownDevice(_));
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}
