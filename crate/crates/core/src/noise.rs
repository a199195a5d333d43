//! Monte Carlo emulation of device noise.
//!
//! Each gate fires a depolarizing event with its class error probability;
//! an event places an independent, uniformly chosen X, Y or Z on every qubit
//! the gate touches. Each measured bit then flips with the readout error.
//! A controlled SWAP is charged as its 38-CNOT decomposition.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{run_circuit, sample_counts, CountsTable, Gate, GateKind, Pauli, Sampler, Statevector};

/// CNOTs in the decomposition of one controlled SWAP.
pub const CSWAP_CNOT_COUNT: f64 = 38.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Device {
    Melbourne,
    Yorktown,
    Bogota,
    Rome,
}

impl Device {
    pub const ALL: [Device; 4] = [Device::Melbourne, Device::Yorktown, Device::Bogota, Device::Rome];

    pub fn name(self) -> &'static str {
        match self {
            Device::Melbourne => "melbourne",
            Device::Yorktown => "yorktown",
            Device::Bogota => "bogota",
            Device::Rome => "rome",
        }
    }
}

impl fmt::Display for Device {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Device {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Device::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownDevice(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub device_name: String,
    pub u1_error: f64,
    pub u2_error: f64,
    pub u3_error: f64,
    pub readout_error: f64,
    pub cnot_error: f64,
}

impl NoiseModel {
    pub fn new(
        device_name: impl Into<String>,
        u1_error: f64,
        u2_error: f64,
        u3_error: f64,
        readout_error: f64,
        cnot_error: f64,
    ) -> Result<Self> {
        let m = Self {
            device_name: device_name.into(),
            u1_error,
            u2_error,
            u3_error,
            readout_error,
            cnot_error,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn noiseless() -> Self {
        Self::new("noiseless", 0.0, 0.0, 0.0, 0.0, 0.0).expect("zero rates are valid")
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("u1_error", self.u1_error),
            ("u2_error", self.u2_error),
            ("u3_error", self.u3_error),
            ("readout_error", self.readout_error),
            ("cnot_error", self.cnot_error),
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} is not in [0, 1)")));
            }
        }
        Ok(())
    }

    /// Every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            format!("{}x{factor}", self.device_name),
            self.u1_error * factor,
            self.u2_error * factor,
            self.u3_error * factor,
            self.readout_error * factor,
            self.cnot_error * factor,
        )
    }

    pub fn is_noiseless(&self) -> bool {
        self.readout_error == 0.0 && GateKind::ALL.iter().all(|&k| gate_error_rate(self, k) == 0.0)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Published averages for the four emulated backends.
pub fn builtin_noise_model(device: Device) -> NoiseModel {
    let (u1, u2, u3, readout, cnot) = match device {
        Device::Melbourne => (0.0, 0.00115, 0.00229, 0.06597, 0.03157),
        Device::Yorktown => (0.0, 0.00084, 0.00168, 0.03494, 0.02024),
        Device::Bogota => (0.0, 0.00031, 0.00062, 0.03702, 0.01171),
        Device::Rome => (0.0, 0.00035, 0.00071, 0.02397, 0.01344),
    };
    NoiseModel::new(device.name(), u1, u2, u3, readout, cnot).expect("table rates are valid")
}

pub fn builtin_noise_model_by_name(name: &str) -> Result<NoiseModel> {
    Ok(builtin_noise_model(name.parse()?))
}

/// Depolarizing probability charged to one application of `kind`.
///
/// RZ is a virtual frame change (u1). H, RX, RY and X are single-pulse
/// rotations (u2); u3 is carried on the model but no gate here maps to it.
pub fn gate_error_rate(model: &NoiseModel, kind: GateKind) -> f64 {
    match kind {
        GateKind::Rz => model.u1_error,
        GateKind::H | GateKind::Rx | GateKind::Ry | GateKind::X => model.u2_error,
        GateKind::Cnot => model.cnot_error,
        GateKind::Cswap => (CSWAP_CNOT_COUNT * model.cnot_error).min(1.0),
    }
}

/// Error probability and channel width for every gate kind.
pub fn gate_error_map(model: &NoiseModel) -> HashMap<GateKind, (f64, usize)> {
    GateKind::ALL
        .iter()
        .map(|&k| (k, (gate_error_rate(model, k), k.arity())))
        .collect()
}

const PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

/// (gate index, qubit, pauli index)
type Event = (u16, u8, u8);

struct NoisyGate {
    index: usize,
    p: f64,
    qubits: Vec<usize>,
}

/// Samples `shots` noisy trajectories of `circuit` started from `|0...0>`.
///
/// Trajectories that share an error pattern share a final distribution, so
/// distinct patterns are simulated once, resuming from the noiseless prefix
/// state just before their first event. With an all-zero model this reduces
/// to [`sample_counts`] on the ideal output with the same seed.
pub fn noisy_sample(
    circuit: &[Gate],
    n_qubits: usize,
    model: &NoiseModel,
    shots: u64,
    seed: u64,
) -> Result<CountsTable> {
    model.validate()?;
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    if circuit.len() > u16::MAX as usize {
        return Err(Error::invalid("circuit too long for noise emulation"));
    }
    if model.is_noiseless() {
        return sample_counts(&run_circuit(n_qubits, circuit)?, shots, seed);
    }

    // prefix[k] is the ideal state before gate k
    let mut prefix = Vec::with_capacity(circuit.len() + 1);
    let mut s = Statevector::zero(n_qubits)?;
    prefix.push(s.clone());
    for g in circuit {
        s.apply(g)?;
        prefix.push(s.clone());
    }
    let ideal = Sampler::new(&s.probabilities());

    let noisy_gates: Vec<NoisyGate> = circuit
        .iter()
        .enumerate()
        .filter_map(|(index, g)| {
            let p = gate_error_rate(model, g.kind());
            (p > 0.0).then(|| NoisyGate { index, p, qubits: g.qubits() })
        })
        .collect();

    let mut rng = crate::seed::rng(seed);
    let mut cache: HashMap<Vec<Event>, Sampler> = HashMap::new();
    let mut tallies = vec![0u64; 1 << n_qubits];
    let mut events: Vec<Event> = Vec::new();

    for _ in 0..shots {
        events.clear();
        for ng in &noisy_gates {
            if rng.random::<f64>() < ng.p {
                for &q in &ng.qubits {
                    events.push((ng.index as u16, q as u8, rng.random_range(0..3u8)));
                }
            }
        }
        let outcome = if events.is_empty() {
            ideal.draw(&mut rng)
        } else {
            if !cache.contains_key(&events) {
                let sampler = Sampler::new(&trajectory(circuit, &prefix, &events)?.probabilities());
                cache.insert(events.clone(), sampler);
            }
            cache[&events].draw(&mut rng)
        };
        tallies[apply_readout(outcome, n_qubits, model.readout_error, &mut rng)] += 1;
    }
    Ok(CountsTable::from_indices(n_qubits, &tallies))
}

fn trajectory(circuit: &[Gate], prefix: &[Statevector], events: &[Event]) -> Result<Statevector> {
    let first = events[0].0 as usize;
    let mut s = prefix[first].clone();
    let mut pending = events.iter().peekable();
    for (k, g) in circuit.iter().enumerate().skip(first) {
        s.apply(g)?;
        while let Some(&&(gate, qubit, pauli)) = pending.peek() {
            if gate as usize != k {
                break;
            }
            s.apply_pauli(qubit as usize, PAULIS[pauli as usize])?;
            pending.next();
        }
    }
    Ok(s)
}

fn apply_readout<R: Rng + ?Sized>(outcome: usize, n_qubits: usize, p: f64, rng: &mut R) -> usize {
    if p == 0.0 {
        return outcome;
    }
    (0..n_qubits).fold(outcome, |acc, q| {
        if rng.random::<f64>() < p {
            acc ^ (1 << (n_qubits - 1 - q))
        } else {
            acc
        }
    })
}
