//! The trainable 2-qubit embedding circuit.
//!
//! One unit is a feature layer `RY(x1) q0, RY(x2) q1` followed by a
//! parameter layer `RX(t1) q0, RX(t2) q1, CNOT, RZ(t3) q0, CNOT, RY(t4) q0,
//! RY(t5) q1`. The unit is repeated four times and a final feature layer
//! closes the circuit, for 38 gates and 20 trainable angles.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Gate, Statevector};

pub const N_QUBITS: usize = 2;
pub const UNIT_REPETITIONS: usize = 4;
pub const PARAMS_PER_UNIT: usize = 5;
pub const PARAM_COUNT: usize = UNIT_REPETITIONS * PARAMS_PER_UNIT;
pub const GATES_PER_UNIT: usize = 9;
pub const EMBEDDING_GATE_COUNT: usize = UNIT_REPETITIONS * GATES_PER_UNIT + 2;

pub fn param_count() -> usize {
    PARAM_COUNT
}

/// A preprocessed 2-dimensional input, in radians.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct FeatureVector([f64; 2]);

impl FeatureVector {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1.is_finite() && x2.is_finite()) {
            return Err(Error::invalid(format!("non-finite feature ({x1}, {x2})")));
        }
        Ok(Self([x1, x2]))
    }

    pub fn from_slice(x: &[f64]) -> Result<Self> {
        match *x {
            [x1, x2] => Self::new(x1, x2),
            _ => Err(Error::invalid(format!(
                "feature vector needs 2 entries, got {}",
                x.len()
            ))),
        }
    }

    pub fn values(&self) -> [f64; 2] {
        self.0
    }
}

impl TryFrom<[f64; 2]> for FeatureVector {
    type Error = Error;

    fn try_from(x: [f64; 2]) -> Result<Self> {
        Self::new(x[0], x[1])
    }
}

impl From<FeatureVector> for [f64; 2] {
    fn from(x: FeatureVector) -> Self {
        x.0
    }
}

/// The 20 rotation angles, laid out unit by unit (5 per unit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingParams([f64; PARAM_COUNT]);

impl EmbeddingParams {
    pub fn new(thetas: &[f64]) -> Result<Self> {
        let arr: [f64; PARAM_COUNT] = thetas.try_into().map_err(|_| Error::ParamCount {
            expected: PARAM_COUNT,
            got: thetas.len(),
        })?;
        if let Some(bad) = arr.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("non-finite parameter {bad}")));
        }
        Ok(Self(arr))
    }

    pub fn zeros() -> Self {
        Self([0.0; PARAM_COUNT])
    }

    /// Each angle uniform on `[0, 2π)`.
    pub fn random(seed: u64) -> Self {
        let mut rng = crate::seed::rng(seed);
        Self(std::array::from_fn(|_| rng.random_range(0.0..TAU)))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn unit(&self, rep: usize) -> &[f64] {
        &self.0[rep * PARAMS_PER_UNIT..(rep + 1) * PARAMS_PER_UNIT]
    }
}

impl TryFrom<Vec<f64>> for EmbeddingParams {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(&v)
    }
}

impl From<EmbeddingParams> for Vec<f64> {
    fn from(p: EmbeddingParams) -> Self {
        p.0.to_vec()
    }
}

fn feature_layer(x: &FeatureVector) -> [Gate; 2] {
    let [x1, x2] = x.values();
    [
        Gate::Ry { qubit: 0, angle: x1 },
        Gate::Ry { qubit: 1, angle: x2 },
    ]
}

pub fn unit_circuit(x: &FeatureVector, layer_thetas: &[f64]) -> Result<Vec<Gate>> {
    let &[t1, t2, t3, t4, t5] = layer_thetas else {
        return Err(Error::ParamCount {
            expected: PARAMS_PER_UNIT,
            got: layer_thetas.len(),
        });
    };
    let [f1, f2] = feature_layer(x);
    Ok(vec![
        f1,
        f2,
        Gate::Rx { qubit: 0, angle: t1 },
        Gate::Rx { qubit: 1, angle: t2 },
        Gate::Cnot { control: 0, target: 1 },
        Gate::Rz { qubit: 0, angle: t3 },
        Gate::Cnot { control: 0, target: 1 },
        Gate::Ry { qubit: 0, angle: t4 },
        Gate::Ry { qubit: 1, angle: t5 },
    ])
}

/// Full gate list for `Φ(x, θ)` on qubits 0 and 1.
pub fn embedding_circuit(x: &FeatureVector, params: &EmbeddingParams) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(EMBEDDING_GATE_COUNT);
    for rep in 0..UNIT_REPETITIONS {
        gates.extend(unit_circuit(x, params.unit(rep)).expect("unit slice has 5 entries"));
    }
    gates.extend(feature_layer(x));
    gates
}

/// Same circuit with every qubit index shifted by `offset`.
pub fn embedding_circuit_on(x: &FeatureVector, params: &EmbeddingParams, offset: usize) -> Vec<Gate> {
    embedding_circuit(x, params)
        .into_iter()
        .map(|g| shift(g, offset))
        .collect()
}

fn shift(g: Gate, k: usize) -> Gate {
    match g {
        Gate::Rx { qubit, angle } => Gate::Rx { qubit: qubit + k, angle },
        Gate::Ry { qubit, angle } => Gate::Ry { qubit: qubit + k, angle },
        Gate::Rz { qubit, angle } => Gate::Rz { qubit: qubit + k, angle },
        Gate::H { qubit } => Gate::H { qubit: qubit + k },
        Gate::X { qubit } => Gate::X { qubit: qubit + k },
        Gate::Cnot { control, target } => Gate::Cnot { control: control + k, target: target + k },
        Gate::Cswap { control, a, b } => Gate::Cswap { control: control + k, a: a + k, b: b + k },
    }
}

pub fn embed(x: &FeatureVector, params: &EmbeddingParams) -> Statevector {
    let mut s = Statevector::zero(N_QUBITS).expect("2 qubits is in range");
    s.apply_all(&embedding_circuit(x, params))
        .expect("embedding gates target qubits 0 and 1");
    s
}
