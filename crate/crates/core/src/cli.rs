//! Experiment commands behind the `qembed` binary.
//!
//! Each command takes an [`ExperimentSpec`], writes its artifacts into the
//! spec's output directory and returns the in-memory result. One user seed
//! fans out into independent streams (parameter init, data generation,
//! splitting, measurement sampling) via [`derive_seed`].

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{builtin_iris, load_iris, make_circles, make_moons, split, LabeledDataset, SplitSpec};
use crate::embedding::EmbeddingParams;
use crate::error::{Error, Result};
use crate::noise::{builtin_noise_model, Device};
use crate::objectives::{classifying_vector, LabelSubspace, Model};
use crate::optim::{train, Objective, TrainConfig, TrainRecord};
use crate::overlap::{gram_matrix, GramMatrix, OverlapKind, OverlapMethod, DEFAULT_SHOTS};
use crate::seed::{derive_seed, tag};

pub const TRAIN_RECORD_FILE: &str = "train_record.json";
pub const PARAMS_FILE: &str = "params.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_RUNS_FILE: &str = "sweep_runs.csv";

/// Held-out points per class for the generated datasets.
pub const GENERATED_TEST_PER_CLASS: usize = 50;
/// Points per class generated for the moons study (test set + training pool).
pub const MOONS_PER_CLASS: usize = 100;
pub const DEFAULT_DATA_NOISE: f64 = 0.1;
pub const DEFAULT_CIRCLES_FACTOR: f64 = 0.5;
pub const DEFAULT_SWEEP_REPEATS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Iris,
    Circles,
    Moons,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Implicit,
    Explicit,
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Approach::Implicit => "implicit",
            Approach::Explicit => "explicit",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Exact,
    Swap,
    Inversion,
}

impl From<MethodArg> for OverlapKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => OverlapKind::Exact,
            MethodArg::Swap => OverlapKind::SwapTest,
            MethodArg::Inversion => OverlapKind::InversionTest,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NoiseArg {
    None,
    Melbourne,
    Yorktown,
    Bogota,
    Rome,
}

impl NoiseArg {
    pub fn device(self) -> Option<Device> {
        match self {
            NoiseArg::None => None,
            NoiseArg::Melbourne => Some(Device::Melbourne),
            NoiseArg::Yorktown => Some(Device::Yorktown),
            NoiseArg::Bogota => Some(Device::Bogota),
            NoiseArg::Rome => Some(Device::Rome),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramStage {
    Before,
    After,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub dataset: DatasetKind,
    pub approach: Approach,
    pub train: TrainConfig,
    pub train_per_class: usize,
    pub method: OverlapKind,
    pub shots: u64,
    pub noise: Option<Device>,
    pub out_dir: PathBuf,
    /// Iris table to load instead of the bundled copy.
    pub iris_csv: Option<PathBuf>,
    pub data_noise: f64,
    pub circles_factor: f64,
    /// Store wall-clock time in the train record (breaks byte-reproducibility).
    pub record_timing: bool,
}

impl ExperimentSpec {
    /// Defaults of the reference experiment for `dataset`.
    pub fn new(dataset: DatasetKind, out_dir: impl Into<PathBuf>) -> Self {
        let (approach, train_per_class) = match dataset {
            DatasetKind::Iris => (Approach::Implicit, 10),
            DatasetKind::Circles => (Approach::Explicit, 15),
            DatasetKind::Moons => (Approach::Implicit, 25),
        };
        Self {
            dataset,
            approach,
            train: TrainConfig::default(),
            train_per_class,
            method: OverlapKind::Exact,
            shots: DEFAULT_SHOTS,
            noise: None,
            out_dir: out_dir.into(),
            iris_csv: None,
            data_noise: DEFAULT_DATA_NOISE,
            circles_factor: DEFAULT_CIRCLES_FACTOR,
            record_timing: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.train.seed
    }

    pub fn name(&self) -> String {
        format!("{:?}-{}", self.dataset, self.approach).to_lowercase()
    }

    pub fn overlap_method(&self) -> Result<OverlapMethod> {
        let noise = self.noise.map(builtin_noise_model);
        if self.method == OverlapKind::Exact {
            if noise.is_some() {
                return Err(Error::invalid("noise emulation needs --method swap or inversion"));
            }
            return Ok(OverlapMethod::exact());
        }
        OverlapMethod::sampled(self.method, self.shots, derive_seed(self.seed(), &[tag::EVAL]), noise)
    }

    fn split_seed(&self) -> u64 {
        derive_seed(self.seed(), &[tag::SPLIT])
    }
}

/// Train and test sets for `spec`.
pub fn prepare_data(spec: &ExperimentSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let seed = spec.seed();
    let split_spec = SplitSpec { per_class_train: spec.train_per_class, seed: spec.split_seed() };
    match spec.dataset {
        DatasetKind::Iris => {
            let iris = match &spec.iris_csv {
                Some(path) => load_iris(path)?,
                None => builtin_iris(),
            };
            split(&iris, split_spec)
        }
        DatasetKind::Circles => {
            let gen = |n, t| make_circles(n, spec.data_noise, spec.circles_factor, derive_seed(seed, &[t]));
            let train = gen(spec.train_per_class, tag::DATA)?;
            let test = gen(GENERATED_TEST_PER_CLASS, tag::TEST_DATA)?.rescaled(train.scaling)?;
            Ok((train, test))
        }
        DatasetKind::Moons => {
            let (pool, test) = moons_pool_and_test(spec.data_noise, seed)?;
            let (train, _) = split(&pool, split_spec)?;
            Ok((train, test))
        }
    }
}

/// The fixed 50-per-class moons test set and the remaining training pool.
pub fn moons_pool_and_test(noise_sd: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let data = make_moons(MOONS_PER_CLASS, noise_sd, derive_seed(seed, &[tag::DATA]))?;
    let held_out = SplitSpec {
        per_class_train: MOONS_PER_CLASS - GENERATED_TEST_PER_CLASS,
        seed: derive_seed(seed, &[tag::TEST_DATA]),
    };
    split(&data, held_out)
}

/// Label subspaces for `n_classes` classes of a 2-qubit embedding.
pub fn default_subspaces(n_classes: usize) -> Result<Vec<LabelSubspace>> {
    let bases: &[&[&str]] = match n_classes {
        2 => &[&["00"], &["11"]],
        3 => &[&["00"], &["01"], &["10"]],
        4 => &[&["00"], &["01"], &["10"], &["11"]],
        _ => return Err(Error::invalid(format!("explicit approach supports 2 to 4 classes, got {n_classes}"))),
    };
    bases.iter().enumerate().map(|(i, b)| LabelSubspace::new(i, b)).collect()
}

pub fn objective_for(approach: Approach, n_classes: usize) -> Result<Objective> {
    Ok(match approach {
        Approach::Implicit => Objective::Implicit,
        Approach::Explicit => Objective::Explicit(default_subspaces(n_classes)?),
    })
}

pub fn model_for(approach: Approach, train_set: &LabeledDataset) -> Result<Model> {
    Ok(match approach {
        Approach::Implicit => Model::Implicit(train_set.ensembles()?),
        Approach::Explicit => Model::Explicit(default_subspaces(train_set.n_classes())?),
    })
}

pub fn train_model(
    approach: Approach,
    train_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<TrainRecord> {
    let objective = objective_for(approach, train_set.n_classes())?;
    train(&objective, &train_set.ensembles()?, config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub experiment: String,
    pub dataset: DatasetKind,
    pub approach: Approach,
    pub method: OverlapKind,
    pub shots: Option<u64>,
    pub noise: Option<String>,
    pub accuracy: f64,
    pub correct: usize,
    pub test_count: usize,
    pub per_class_accuracy: Vec<f64>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<usize>>,
    pub seed: u64,
    pub split_seed: u64,
    pub eval_seed: Option<u64>,
    pub train_record: Option<String>,
}

/// Confusion-matrix summary of predictions on `test`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub confusion: Vec<Vec<usize>>,
}

impl Evaluation {
    pub fn correct(&self) -> usize {
        (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum()
    }

    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.confusion
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                if n == 0 {
                    0.0
                } else {
                    row[i] as f64 / n as f64
                }
            })
            .collect()
    }
}

/// Classifies every test point; sampled methods use a per-point seed.
pub fn evaluate(
    params: &EmbeddingParams,
    model: &Model,
    test: &LabeledDataset,
    method: &OverlapMethod,
) -> Result<Evaluation> {
    method.validate()?;
    let n_classes = model.n_classes();
    let predictions: Vec<usize> = test
        .points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let m = method.with_seed(derive_seed(method.seed, &[i as u64]));
            Ok(classifying_vector(&p.features, params, model, &m)?.argmax())
        })
        .collect::<Result<_>>()?;
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (p, &pred) in test.points.iter().zip(&predictions) {
        if p.label >= n_classes {
            return Err(Error::Dataset(format!("test label {} unseen in training", p.label)));
        }
        confusion[p.label][pred] += 1;
    }
    Ok(Evaluation { confusion })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_params(path: &Path) -> Result<EmbeddingParams> {
    let text = fs::read_to_string(path)?;
    if let Ok(p) = serde_json::from_str::<EmbeddingParams>(&text) {
        return Ok(p);
    }
    // also accept a full train record
    let record: TrainRecord = serde_json::from_str(&text)?;
    Ok(record.final_params)
}

/// Trains on the spec's training split; writes the record, the parameters
/// and both data splits.
pub fn cmd_train(spec: &ExperimentSpec) -> Result<TrainRecord> {
    let (train_set, test_set) = prepare_data(spec)?;
    let mut record = train_model(spec.approach, &train_set, &spec.train)?;
    if !spec.record_timing {
        record.wall_time_s = None;
    }
    fs::create_dir_all(&spec.out_dir)?;
    write_json(&spec.out_dir.join(TRAIN_RECORD_FILE), &record)?;
    write_json(&spec.out_dir.join(PARAMS_FILE), &record.final_params)?;
    train_set.write_csv(BufWriter::new(File::create(spec.out_dir.join("train_data.csv"))?))?;
    test_set.write_csv(BufWriter::new(File::create(spec.out_dir.join("test_data.csv"))?))?;
    Ok(record)
}

/// Test accuracy of trained parameters under the spec's method and noise.
pub fn cmd_eval(spec: &ExperimentSpec, params_path: &Path) -> Result<MetricsReport> {
    let method = spec.overlap_method()?;
    let params = read_params(params_path)?;
    let (train_set, test_set) = prepare_data(spec)?;
    let model = model_for(spec.approach, &train_set)?;
    let eval = evaluate(&params, &model, &test_set, &method)?;
    let record_path = params_path.with_file_name(TRAIN_RECORD_FILE);
    let report = MetricsReport {
        experiment: spec.name(),
        dataset: spec.dataset,
        approach: spec.approach,
        method: spec.method,
        shots: (!method.is_exact()).then_some(method.shots),
        noise: spec.noise.map(|d| d.name().to_string()),
        accuracy: eval.accuracy(),
        correct: eval.correct(),
        test_count: eval.total(),
        per_class_accuracy: eval.per_class_accuracy(),
        confusion: eval.confusion,
        seed: spec.seed(),
        split_seed: spec.split_seed(),
        eval_seed: (!method.is_exact()).then_some(method.seed),
        train_record: record_path.exists().then(|| record_path.display().to_string()),
    };
    fs::create_dir_all(&spec.out_dir)?;
    write_json(&spec.out_dir.join(METRICS_FILE), &report)?;
    Ok(report)
}

/// Gram matrix of the training points, with the initial parameters
/// (`Before`) or with trained ones loaded from `params_path` (`After`).
pub fn cmd_gram(spec: &ExperimentSpec, params_path: Option<&Path>, stage: GramStage) -> Result<GramMatrix> {
    let params = match (stage, params_path) {
        (GramStage::Before, _) => EmbeddingParams::random(spec.seed()),
        (GramStage::After, Some(path)) => read_params(path)?,
        (GramStage::After, None) => return Err(Error::invalid("--params is required for the after-training gram")),
    };
    let (train_set, _) = prepare_data(spec)?;
    let method = spec.overlap_method()?;
    let gram = gram_matrix(&train_set.labeled_features(), &params, &method)?;
    let name = match stage {
        GramStage::Before => "gram_before.csv",
        GramStage::After => "gram_after.csv",
    };
    fs::create_dir_all(&spec.out_dir)?;
    let mut w = BufWriter::new(File::create(spec.out_dir.join(name))?);
    gram.write_csv(&mut w)?;
    w.flush()?;
    Ok(gram)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub train: TrainConfig,
    pub data_noise: f64,
    pub out_dir: PathBuf,
}

impl SweepSpec {
    pub fn new(sizes: Vec<usize>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            sizes,
            repeats: DEFAULT_SWEEP_REPEATS,
            seed: 0,
            train: TrainConfig::default(),
            data_noise: DEFAULT_DATA_NOISE,
            out_dir: out_dir.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub size: usize,
    pub approach: Approach,
    pub mean_accuracy: f64,
    pub stddev: f64,
    pub accuracies: Vec<f64>,
}

fn mean_and_stddev(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Small-sample study on moons: for each training size, `repeats` random
/// subsets of the training pool are trained under both approaches (same
/// subset and initial parameters for the pair) and scored exactly on the
/// fixed test set.
pub fn cmd_moons_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    if spec.sizes.is_empty() {
        return Err(Error::invalid("sweep needs at least one training size"));
    }
    let pool_size = MOONS_PER_CLASS - GENERATED_TEST_PER_CLASS;
    if let Some(&bad) = spec.sizes.iter().find(|&&s| s == 0 || s >= pool_size) {
        return Err(Error::invalid(format!("training size {bad} must be in 1..{pool_size}")));
    }
    spec.train.validate()?;
    let (pool, test) = moons_pool_and_test(spec.data_noise, spec.seed)?;
    let approaches = [Approach::Implicit, Approach::Explicit];

    let cells: Vec<(usize, Approach, usize)> = spec
        .sizes
        .iter()
        .flat_map(|&size| approaches.iter().flat_map(move |&a| (0..spec.repeats).map(move |r| (size, a, r))))
        .collect();
    let accuracies: Vec<f64> = cells
        .par_iter()
        .map(|&(size, approach, repeat)| {
            let cell_seed = derive_seed(spec.seed, &[tag::SWEEP, size as u64, repeat as u64]);
            let (train_set, _) = split(&pool, SplitSpec { per_class_train: size, seed: cell_seed })?;
            let config = TrainConfig { seed: derive_seed(cell_seed, &[tag::INIT]), ..spec.train.clone() };
            let record = train_model(approach, &train_set, &config)?;
            let model = model_for(approach, &train_set)?;
            Ok(evaluate(&record.final_params, &model, &test, &OverlapMethod::exact())?.accuracy())
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = cells
        .chunks(spec.repeats)
        .zip(accuracies.chunks(spec.repeats))
        .map(|(cell, accs)| {
            let (mean, sd) = mean_and_stddev(accs);
            SweepRow { size: cell[0].0, approach: cell[0].1, mean_accuracy: mean, stddev: sd, accuracies: accs.to_vec() }
        })
        .collect();

    fs::create_dir_all(&spec.out_dir)?;
    let mut w = BufWriter::new(File::create(spec.out_dir.join(SWEEP_FILE))?);
    writeln!(w, "size,approach,mean_accuracy,stddev")?;
    for r in &rows {
        writeln!(w, "{},{},{:.6},{:.6}", r.size, r.approach, r.mean_accuracy, r.stddev)?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(spec.out_dir.join(SWEEP_RUNS_FILE))?);
    writeln!(w, "size,approach,repeat,accuracy")?;
    for r in &rows {
        for (i, a) in r.accuracies.iter().enumerate() {
            writeln!(w, "{},{},{i},{a:.6}", r.size, r.approach)?;
        }
    }
    w.flush()?;
    Ok(rows)
}
