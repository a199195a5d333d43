//! Overlap estimation between embedded states.
//!
//! Three routes to `|<Φ(x1)|Φ(x2)>|^2`: the exact inner product, the SWAP
//! test (ancilla q0, embeddings on q1q2 and q3q4, one controlled SWAP per
//! qubit pair) and the inversion test (`Φ(x2)† Φ(x1)|00>`, read `00`).

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{embed, embedding_circuit, embedding_circuit_on, EmbeddingParams, FeatureVector};
use crate::error::{Error, Result};
use crate::noise::{noisy_sample, NoiseModel};
use crate::seed::derive_seed;
use crate::sim::{fidelity, run_circuit, sample_counts, CountsTable, Gate};

pub const SWAP_TEST_QUBITS: usize = 5;
pub const INVERSION_TEST_QUBITS: usize = 2;
pub const DEFAULT_SHOTS: u64 = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapKind {
    Exact,
    SwapTest,
    InversionTest,
}

/// How overlaps are obtained. `shots` and `seed` are ignored for
/// [`OverlapKind::Exact`], as is `noise`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapMethod {
    pub kind: OverlapKind,
    pub shots: u64,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
}

impl OverlapMethod {
    pub fn exact() -> Self {
        Self { kind: OverlapKind::Exact, shots: 0, seed: 0, noise: None }
    }

    pub fn sampled(kind: OverlapKind, shots: u64, seed: u64, noise: Option<NoiseModel>) -> Result<Self> {
        let m = Self { kind, shots, seed, noise };
        m.validate()?;
        Ok(m)
    }

    pub fn swap_test(shots: u64, seed: u64) -> Result<Self> {
        Self::sampled(OverlapKind::SwapTest, shots, seed, None)
    }

    pub fn inversion_test(shots: u64, seed: u64) -> Result<Self> {
        Self::sampled(OverlapKind::InversionTest, shots, seed, None)
    }

    pub fn with_noise(mut self, noise: Option<NoiseModel>) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != OverlapKind::Exact && self.shots == 0 {
            return Err(Error::invalid("sampled overlap methods need shots >= 1"));
        }
        if let Some(n) = &self.noise {
            n.validate()?;
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        self.kind == OverlapKind::Exact
    }
}

pub fn overlap_exact(x1: &FeatureVector, x2: &FeatureVector, params: &EmbeddingParams) -> f64 {
    fidelity(&embed(x1, params), &embed(x2, params)).expect("both embeddings are 2-qubit")
}

pub fn swap_test_circuit(x1: &FeatureVector, x2: &FeatureVector, params: &EmbeddingParams) -> Vec<Gate> {
    let mut gates = vec![Gate::H { qubit: 0 }];
    gates.extend(embedding_circuit_on(x1, params, 1));
    gates.extend(embedding_circuit_on(x2, params, 3));
    gates.push(Gate::Cswap { control: 0, a: 1, b: 3 });
    gates.push(Gate::Cswap { control: 0, a: 2, b: 4 });
    gates.push(Gate::H { qubit: 0 });
    gates
}

pub fn inversion_test_circuit(x1: &FeatureVector, x2: &FeatureVector, params: &EmbeddingParams) -> Vec<Gate> {
    let mut gates = embedding_circuit(x1, params);
    gates.extend(embedding_circuit(x2, params).iter().rev().map(Gate::inverse));
    gates
}

/// Ancilla `P(0)` of the SWAP test, computed from the exact output state.
pub fn swap_test_exact_p0(x1: &FeatureVector, x2: &FeatureVector, params: &EmbeddingParams) -> f64 {
    let s = run_circuit(SWAP_TEST_QUBITS, &swap_test_circuit(x1, x2, params)).expect("valid circuit");
    let half = s.dim() / 2;
    s.probabilities()[..half].iter().sum()
}

/// `P(00)` of the inversion test, computed from the exact output state.
pub fn inversion_test_exact_p00(x1: &FeatureVector, x2: &FeatureVector, params: &EmbeddingParams) -> f64 {
    let s = run_circuit(INVERSION_TEST_QUBITS, &inversion_test_circuit(x1, x2, params)).expect("valid circuit");
    s.probabilities()[0]
}

fn sample(circuit: &[Gate], n_qubits: usize, shots: u64, seed: u64, noise: Option<&NoiseModel>) -> Result<CountsTable> {
    match noise {
        Some(model) => noisy_sample(circuit, n_qubits, model, shots, seed),
        None => sample_counts(&run_circuit(n_qubits, circuit)?, shots, seed),
    }
}

/// SWAP-test estimate `2 P̂(ancilla = 0) - 1`, clipped to `[0, 1]`.
pub fn swap_test(
    x1: &FeatureVector,
    x2: &FeatureVector,
    params: &EmbeddingParams,
    shots: u64,
    seed: u64,
    noise: Option<&NoiseModel>,
) -> Result<f64> {
    let counts = sample(&swap_test_circuit(x1, x2, params), SWAP_TEST_QUBITS, shots, seed, noise)?;
    Ok((2.0 * counts.marginal_zero(0) - 1.0).clamp(0.0, 1.0))
}

/// Inversion-test estimate `P̂(00)`.
pub fn inversion_test(
    x1: &FeatureVector,
    x2: &FeatureVector,
    params: &EmbeddingParams,
    shots: u64,
    seed: u64,
    noise: Option<&NoiseModel>,
) -> Result<f64> {
    let counts = sample(&inversion_test_circuit(x1, x2, params), INVERSION_TEST_QUBITS, shots, seed, noise)?;
    Ok(counts.frequency("00").clamp(0.0, 1.0))
}

/// One overlap by `method`, sampling with `method.seed` as given.
pub fn estimate_overlap(
    x1: &FeatureVector,
    x2: &FeatureVector,
    params: &EmbeddingParams,
    method: &OverlapMethod,
) -> Result<f64> {
    method.validate()?;
    let noise = method.noise.as_ref();
    match method.kind {
        OverlapKind::Exact => Ok(overlap_exact(x1, x2, params)),
        OverlapKind::SwapTest => swap_test(x1, x2, params, method.shots, method.seed, noise),
        OverlapKind::InversionTest => inversion_test(x1, x2, params, method.shots, method.seed, noise),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    pub values: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Mean of entries with row label `a` and column label `b`, excluding the
    /// diagonal when `a == b`.
    pub fn block_mean(&self, a: usize, b: usize) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, &li) in self.labels.iter().enumerate() {
            for (j, &lj) in self.labels.iter().enumerate() {
                if li == a && lj == b && i != j {
                    sum += self.values[i][j];
                    n += 1;
                }
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Header `label,0,1,...`, then one row per point: its label followed by
    /// the overlaps at 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = (0..self.len()).map(|i| i.to_string()).collect();
        writeln!(w, "label,{}", header.join(","))?;
        for (row, label) in self.values.iter().zip(&self.labels) {
            let cells: Vec<String> = row.iter().map(|&v| format_sig9(v)).collect();
            writeln!(w, "{label},{}", cells.join(","))?;
        }
        Ok(())
    }
}

pub fn format_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.8}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 20) as usize;
    format!("{v:.decimals$}")
}

/// Pairwise overlaps of `data`, rows grouped by class (stable within class).
///
/// Sampled entries use a seed derived from `(method.seed, i, j)` so the
/// result does not depend on evaluation order.
pub fn gram_matrix(
    data: &[(FeatureVector, usize)],
    params: &EmbeddingParams,
    method: &OverlapMethod,
) -> Result<GramMatrix> {
    if data.is_empty() {
        return Err(Error::invalid("gram matrix needs at least one point"));
    }
    method.validate()?;
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.sort_by_key(|&i| data[i].1);
    let points: Vec<FeatureVector> = order.iter().map(|&i| data[i].0).collect();
    let labels: Vec<usize> = order.iter().map(|&i| data[i].1).collect();
    let n = points.len();

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries: Vec<f64> = if method.is_exact() {
        let states: Vec<_> = points.iter().map(|x| embed(x, params)).collect();
        pairs
            .iter()
            .map(|&(i, j)| fidelity(&states[i], &states[j]))
            .collect::<Result<_>>()?
    } else {
        pairs
            .par_iter()
            .map(|&(i, j)| {
                let m = method.with_seed(derive_seed(method.seed, &[i as u64, j as u64]));
                estimate_overlap(&points[i], &points[j], params, &m)
            })
            .collect::<Result<_>>()?
    };

    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(entries) {
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(GramMatrix { values, labels })
}
