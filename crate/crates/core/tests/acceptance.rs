use std::f64::consts::{PI, TAU};
use std::path::Path;
use std::process::{Command, ExitCode};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use qembed::cli::{
    cmd_moons_sweep, evaluate, model_for, prepare_data, train_model, Approach, DatasetKind, ExperimentSpec, SweepSpec,
};
use qembed::noise::{builtin_noise_model, Device};
use qembed::objectives::{
    binary_subspaces, explicit_cost_from_states, generic_cost, implicit_cost, implicit_cost_from_states,
    implicit_vector_from_states, LabelSubspace,
};
use qembed::optim::gradient_fd;
use qembed::overlap::{gram_matrix, inversion_test_exact_p00, overlap_exact, swap_test_exact_p0};
use qembed::{embed, ClassEnsemble, EmbeddingParams, FeatureVector, OverlapKind, OverlapMethod, Statevector};

type Matrix = Vec<Vec<Complex64>>;

struct Report {
    failures: usize,
}

impl Report {
    fn record(&mut self, n: usize, title: &str, pass: bool, detail: String) {
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {n:>2}. {title}: {detail}");
        if !pass {
            self.failures += 1;
        }
    }
}

fn random_feature(rng: &mut ChaCha8Rng) -> FeatureVector {
    FeatureVector::new(rng.random_range(0.0..PI), rng.random_range(0.0..PI)).unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> EmbeddingParams {
    let t: Vec<f64> = (0..qembed::embedding::PARAM_COUNT).map(|_| rng.random_range(0.0..TAU)).collect();
    EmbeddingParams::new(&t).unwrap()
}

fn random_states(rng: &mut ChaCha8Rng, n_classes: usize, params: &EmbeddingParams) -> Vec<Vec<Statevector>> {
    (0..n_classes)
        .map(|_| {
            let n = rng.random_range(3..=6);
            (0..n).map(|_| embed(&random_feature(rng), params)).collect()
        })
        .collect()
}

fn density(states: &[Statevector]) -> Matrix {
    let d = states[0].dim();
    let mut rho = vec![vec![Complex64::new(0.0, 0.0); d]; d];
    for s in states {
        let a = s.amplitudes();
        for i in 0..d {
            for j in 0..d {
                rho[i][j] += a[i] * a[j].conj() / states.len() as f64;
            }
        }
    }
    rho
}

fn sub(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect()).collect()
}

fn trace_product(a: &Matrix, b: &Matrix) -> f64 {
    let d = a.len();
    let mut t = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            t += a[i][k] * b[k][i];
        }
    }
    t.re
}

/// Diagonal observable with the given entries.
fn diag(entries: &[f64]) -> Matrix {
    let d = entries.len();
    (0..d)
        .map(|i| (0..d).map(|j| Complex64::new(if i == j { entries[i] } else { 0.0 }, 0.0)).collect())
        .collect()
}

fn criterion_1(r: &mut Report) {
    let mut rng = qembed::seed::rng(101);
    let mut worst_generic = 0.0f64;
    let mut worst_matrix = 0.0f64;
    for k in 0..20 {
        let l = if k % 2 == 0 { 2 } else { 3 };
        let params = random_params(&mut rng);
        let states = random_states(&mut rng, l, &params);
        let per_class: Vec<Vec<_>> = states
            .iter()
            .map(|members| members.iter().map(|s| implicit_vector_from_states(s, &states).unwrap()).collect())
            .collect();
        let generic = generic_cost(&per_class).unwrap();
        let implicit = implicit_cost_from_states(&states).unwrap();
        worst_generic = worst_generic.max((generic - implicit).abs());
        if l == 2 {
            let d = sub(&density(&states[0]), &density(&states[1]));
            let closed = 1.0 - 0.5 * trace_product(&d, &d);
            worst_matrix = worst_matrix.max((implicit - closed).abs());
        }
    }
    r.record(
        1,
        "cost identities",
        worst_generic <= 1e-10 && worst_matrix <= 1e-12,
        format!("max |generic - implicit| = {worst_generic:.2e}, max |implicit - trace form| = {worst_matrix:.2e}"),
    );
}

fn criterion_2(r: &mut Report) {
    let mut rng = qembed::seed::rng(202);
    let z2 = diag(&[1.0, 0.0, 0.0, -1.0]);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let params = random_params(&mut rng);
        let states = random_states(&mut rng, 2, &params);
        let cost = explicit_cost_from_states(&states, &binary_subspaces()).unwrap();
        let closed =
            1.0 - 0.5 * (trace_product(&density(&states[0]), &z2) - trace_product(&density(&states[1]), &z2));
        worst = worst.max((cost - closed).abs());
    }
    let z1 = diag(&[1.0, -1.0]);
    let subspaces = vec![LabelSubspace::new(0, &["0"]).unwrap(), LabelSubspace::new(1, &["1"]).unwrap()];
    let mut worst_1q = 0.0f64;
    for _ in 0..20 {
        let classes: Vec<Vec<Statevector>> = (0..2)
            .map(|_| {
                (0..rng.random_range(3..=6))
                    .map(|_| {
                        let (theta, phi) = (rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
                        Statevector::from_amplitudes(vec![
                            Complex64::new((theta / 2.0).cos(), 0.0),
                            Complex64::from_polar((theta / 2.0).sin(), phi),
                        ])
                        .unwrap()
                    })
                    .collect()
            })
            .collect();
        let cost = explicit_cost_from_states(&classes, &subspaces).unwrap();
        let d = sub(&density(&classes[0]), &density(&classes[1]));
        worst_1q = worst_1q.max((cost - (1.0 - 0.5 * trace_product(&z1, &d))).abs());
    }
    r.record(
        2,
        "explicit cost identity",
        worst <= 1e-12 && worst_1q <= 1e-12,
        format!("max deviation 2-qubit {worst:.2e}, 1-qubit {worst_1q:.2e}"),
    );
}

fn criterion_3(r: &mut Report) {
    let mut rng = qembed::seed::rng(303);
    let (mut swap, mut inv) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let (a, b, params) = (random_feature(&mut rng), random_feature(&mut rng), random_params(&mut rng));
        let f = overlap_exact(&a, &b, &params);
        swap = swap.max((2.0 * swap_test_exact_p0(&a, &b, &params) - 1.0 - f).abs());
        inv = inv.max((inversion_test_exact_p00(&a, &b, &params) - f).abs());
    }
    r.record(
        3,
        "overlap circuits match fidelity",
        swap <= 1e-10 && inv <= 1e-10,
        format!("max |2P(0)-1-F| = {swap:.2e}, max |P(00)-F| = {inv:.2e}"),
    );
}

fn test_accuracy(spec: &ExperimentSpec, method: &OverlapMethod) -> f64 {
    let (train_set, test_set) = prepare_data(spec).unwrap();
    let record = train_model(spec.approach, &train_set, &spec.train).unwrap();
    let model = model_for(spec.approach, &train_set).unwrap();
    evaluate(&record.final_params, &model, &test_set, method).unwrap().accuracy()
}

fn reproduction(r: &mut Report, n: usize, title: &str, dataset: DatasetKind, threshold: f64) {
    let accs: Vec<f64> = (0..3u64)
        .map(|seed| {
            let mut spec = ExperimentSpec::new(dataset, std::env::temp_dir());
            spec.train.seed = seed;
            test_accuracy(&spec, &OverlapMethod::exact())
        })
        .collect();
    let hits = accs.iter().filter(|&&a| a >= threshold).count();
    r.record(
        n,
        title,
        hits >= 2,
        format!("test accuracy by seed 0/1/2 = {accs:.3?}, {hits}/3 at or above {threshold}"),
    );
}

fn criterion_6(r: &mut Report) {
    let spec = ExperimentSpec::new(DatasetKind::Iris, std::env::temp_dir());
    let (train_set, _) = prepare_data(&spec).unwrap();
    let record = train_model(spec.approach, &train_set, &spec.train).unwrap();
    let gram = gram_matrix(&train_set.labeled_features(), &record.final_params, &OverlapMethod::exact()).unwrap();
    let (w, a, b) = (gram.block_mean(0, 0).unwrap(), gram.block_mean(0, 1).unwrap(), gram.block_mean(0, 2).unwrap());
    r.record(
        6,
        "gram structure after iris training",
        w - a >= 0.2 && w - b >= 0.2,
        format!("within class 0 = {w:.3}, 0 vs 1 = {a:.3}, 0 vs 2 = {b:.3}"),
    );
}

fn criterion_7(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let rows = cmd_moons_sweep(&SweepSpec::new(vec![5, 25], dir.path())).unwrap();
    let mean = |size, approach| rows.iter().find(|r| r.size == size && r.approach == approach).unwrap().mean_accuracy;
    let (i5, e5) = (mean(5, Approach::Implicit), mean(5, Approach::Explicit));
    let (i25, e25) = (mean(25, Approach::Implicit), mean(25, Approach::Explicit));
    r.record(
        7,
        "moons small-sample ordering",
        i5 > e5 && i25 >= 0.85 && e25 >= 0.85,
        format!("size 5 implicit {i5:.3} vs explicit {e5:.3}; size 25 implicit {i25:.3}, explicit {e25:.3}"),
    );
}

fn criterion_8(r: &mut Report) {
    let spec = ExperimentSpec::new(DatasetKind::Iris, std::env::temp_dir());
    let (train_set, test_set) = prepare_data(&spec).unwrap();
    let record = train_model(spec.approach, &train_set, &spec.train).unwrap();
    let model = model_for(spec.approach, &train_set).unwrap();
    let melbourne = builtin_noise_model(Device::Melbourne);
    let acc = |kind: OverlapKind, noisy: bool| {
        let noise = noisy.then(|| melbourne.clone());
        let method = OverlapMethod::sampled(kind, spec.shots, 8, noise).unwrap();
        evaluate(&record.final_params, &model, &test_set, &method).unwrap().accuracy()
    };
    let (swap_clean, swap_noisy) = (acc(OverlapKind::SwapTest, false), acc(OverlapKind::SwapTest, true));
    let (inv_clean, inv_noisy) = (acc(OverlapKind::InversionTest, false), acc(OverlapKind::InversionTest, true));
    let swap_drop = swap_clean - swap_noisy;
    let inv_change = (inv_clean - inv_noisy).abs();
    r.record(
        8,
        "noise directionality under melbourne",
        swap_drop >= 0.2 && inv_change <= 0.07,
        format!(
            "swap {swap_clean:.3} -> {swap_noisy:.3} (drop {swap_drop:.3}), inversion {inv_clean:.3} -> {inv_noisy:.3}"
        ),
    );
}

fn criterion_9(r: &mut Report) {
    let mut rng = qembed::seed::rng(909);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let ensembles: Vec<ClassEnsemble> = (0..3)
            .map(|c| ClassEnsemble::new(c, (0..4).map(|_| random_feature(&mut rng)).collect()).unwrap())
            .collect();
        let params = random_params(&mut rng);
        let cost = |t: &[f64]| implicit_cost(&ensembles, &EmbeddingParams::new(t)?);
        let coarse = gradient_fd(cost, params.as_slice(), 1e-3).unwrap();
        let fine = gradient_fd(cost, params.as_slice(), 1e-4).unwrap();
        for (a, b) in coarse.iter().zip(&fine) {
            worst = worst.max((a - b).abs());
        }
    }
    r.record(9, "finite-difference gradients", worst <= 1e-4, format!("max |g(1e-3) - g(1e-4)| = {worst:.2e}"));
}

fn run_cli(args: &[&str], out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_qembed"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
        .status;
    assert!(status.success(), "qembed {args:?} failed");
}

fn same_tree(a: &Path, b: &Path) -> bool {
    let mut names: Vec<_> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    !names.is_empty()
        && names
            .iter()
            .all(|n| std::fs::read(a.join(n)).ok() == std::fs::read(b.join(n)).ok())
}

fn criterion_10(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        ("train", vec!["train", "--dataset", "iris", "--seed", "3"]),
        ("sweep", vec!["sweep", "--seed", "3", "--sizes", "5", "--repeats", "2", "--epochs", "20"]),
    ];
    let mut results = Vec::new();
    for (name, args) in &runs {
        let (a, b) = (dir.path().join(format!("{name}-a")), dir.path().join(format!("{name}-b")));
        run_cli(args, &a);
        run_cli(args, &b);
        results.push((name, same_tree(&a, &b)));
    }
    r.record(
        10,
        "byte-identical reruns",
        results.iter().all(|(_, ok)| *ok),
        results.iter().map(|(n, ok)| format!("{n} {}", if *ok { "identical" } else { "differs" })).collect::<Vec<_>>().join(", "),
    );
}

fn main() -> ExitCode {
    let mut r = Report { failures: 0 };
    criterion_1(&mut r);
    criterion_2(&mut r);
    criterion_3(&mut r);
    reproduction(&mut r, 4, "iris implicit reproduction", DatasetKind::Iris, 0.85);
    reproduction(&mut r, 5, "circles explicit reproduction", DatasetKind::Circles, 0.90);
    criterion_6(&mut r);
    criterion_7(&mut r);
    criterion_8(&mut r);
    criterion_9(&mut r);
    criterion_10(&mut r);
    println!("{} of 10 criteria passed", 10 - r.failures);
    // QEMBED_ACCEPTANCE_STRICT=1 turns failed criteria into a failing exit status
    let strict = std::env::var("QEMBED_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if r.failures == 0 || !strict {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
