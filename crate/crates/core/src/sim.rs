//! Dense statevector simulation.
//!
//! Conventions: qubit 0 is the most significant bit of a basis index, so the
//! bitstring of index `k` on `n` qubits is `k` written in binary with `n`
//! digits, qubit 0 first. Rotations are `R_P(a) = exp(-i a P / 2)`. Global
//! phase is never normalized.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 10;
pub const NORM_TOLERANCE: f64 = 1e-10;

type Matrix2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    H,
    X,
    Cnot,
    Cswap,
}

impl GateKind {
    pub const ALL: [GateKind; 7] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::H,
        GateKind::X,
        GateKind::Cnot,
        GateKind::Cswap,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            GateKind::Cswap => 3,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    H { qubit: usize },
    X { qubit: usize },
    Cnot { control: usize, target: usize },
    /// Swaps `a` and `b` when `control` is set.
    Cswap { control: usize, a: usize, b: usize },
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::H { .. } => GateKind::H,
            Gate::X { .. } => GateKind::X,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Cswap { .. } => GateKind::Cswap,
        }
    }

    /// Qubits the gate acts on, in (control, target...) order.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::H { qubit }
            | Gate::X { qubit } => vec![qubit],
            Gate::Cnot { control, target } => vec![control, target],
            Gate::Cswap { control, a, b } => vec![control, a, b],
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            g => g,
        }
    }

    fn matrix(&self) -> Option<Matrix2> {
        let m = match *self {
            Gate::Rx { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let ms = Complex64::new(0.0, -s);
                [[c.into(), ms], [ms, c.into()]]
            }
            Gate::Ry { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                [[c.into(), (-s).into()], [s.into(), c.into()]]
            }
            Gate::Rz { angle, .. } => {
                let half = angle / 2.0;
                [
                    [Complex64::from_polar(1.0, -half), ZERO],
                    [ZERO, Complex64::from_polar(1.0, half)],
                ]
            }
            Gate::H { .. } => {
                let r = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
                [[r, r], [r, -r]]
            }
            Gate::X { .. } => [[ZERO, ONE], [ONE, ZERO]],
            Gate::Cnot { .. } | Gate::Cswap { .. } => return None,
        };
        Some(m)
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        let fail = |reason: String| Error::InvalidTargets {
            gate: format!("{:?}", self.kind()),
            reason,
        };
        if let Some(&q) = qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(fail(format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(fail(format!("qubit {q} repeated")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rx { qubit, angle } => write!(f, "RX({angle}) q{qubit}"),
            Gate::Ry { qubit, angle } => write!(f, "RY({angle}) q{qubit}"),
            Gate::Rz { qubit, angle } => write!(f, "RZ({angle}) q{qubit}"),
            Gate::H { qubit } => write!(f, "H q{qubit}"),
            Gate::X { qubit } => write!(f, "X q{qubit}"),
            Gate::Cnot { control, target } => write!(f, "CNOT q{control}->q{target}"),
            Gate::Cswap { control, a, b } => write!(f, "CSWAP q{control}: q{a}<->q{b}"),
        }
    }
}

/// Non-identity single-qubit Pauli, used for noise insertion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::QubitCount(n_qubits));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::invalid(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amps[0] = ZERO;
        s.amps[index] = ONE;
        Ok(s)
    }

    /// Wraps caller-supplied amplitudes; the length must be a power of two and
    /// the vector normalized within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {len} is not a power of two >= 2"
            )));
        }
        let n_qubits = len.trailing_zeros() as usize;
        if n_qubits > MAX_QUBITS {
            return Err(Error::QubitCount(n_qubits));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Self { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        match *gate {
            Gate::Cnot { control, target } => {
                let (c, t) = (self.bit(control), self.bit(target));
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & t == 0 {
                        self.amps.swap(i, i | t);
                    }
                }
            }
            Gate::Cswap { control, a, b } => {
                let (c, ba, bb) = (self.bit(control), self.bit(a), self.bit(b));
                for i in 0..self.amps.len() {
                    if i & c != 0 && i & ba != 0 && i & bb == 0 {
                        self.amps.swap(i, i ^ ba ^ bb);
                    }
                }
            }
            _ => {
                let m = gate.matrix().expect("single-qubit gate has a matrix");
                self.apply_single(gate.qubits()[0], &m);
            }
        }
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        gates.into_iter().try_for_each(|g| self.apply(g))
    }

    pub fn apply_pauli(&mut self, qubit: usize, pauli: Pauli) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::InvalidTargets {
                gate: format!("{pauli:?}"),
                reason: format!("qubit {qubit} out of range for {} qubits", self.n_qubits),
            });
        }
        let bit = self.bit(qubit);
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            match pauli {
                Pauli::X => self.amps.swap(i, j),
                Pauli::Y => {
                    // Y = [[0, -i], [i, 0]]
                    let (a0, a1) = (self.amps[i], self.amps[j]);
                    self.amps[i] = Complex64::new(a1.im, -a1.re);
                    self.amps[j] = Complex64::new(-a0.im, a0.re);
                }
                Pauli::Z => self.amps[j] = -self.amps[j],
            }
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: &Matrix2) {
        let bit = self.bit(qubit);
        for i in 0..self.amps.len() {
            if i & bit != 0 {
                continue;
            }
            let j = i | bit;
            let (a0, a1) = (self.amps[i], self.amps[j]);
            self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
            self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}

pub fn zero_state(n_qubits: usize) -> Result<Statevector> {
    Statevector::zero(n_qubits)
}

pub fn apply_gate(state: &Statevector, gate: &Gate) -> Result<Statevector> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// Runs `gates` on `|0...0>`.
pub fn run_circuit(n_qubits: usize, gates: &[Gate]) -> Result<Statevector> {
    let mut s = Statevector::zero(n_qubits)?;
    s.apply_all(gates)?;
    Ok(s)
}

/// `|<a|b>|^2`, exactly symmetric in its arguments.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

pub fn basis_probabilities(state: &Statevector) -> Vec<f64> {
    state.probabilities()
}

pub fn bitstring(index: usize, n_qubits: usize) -> String {
    format!("{index:0n_qubits$b}")
}

pub fn parse_bitstring(bits: &str, n_qubits: usize) -> Result<usize> {
    if bits.len() != n_qubits || !bits.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::invalid(format!(
            "{bits:?} is not a {n_qubits}-qubit bitstring"
        )));
    }
    Ok(usize::from_str_radix(bits, 2).expect("validated binary digits"))
}

/// Measurement tallies keyed by bitstring (qubit 0 first).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub n_qubits: usize,
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

impl CountsTable {
    pub(crate) fn from_indices(n_qubits: usize, tallies: &[u64]) -> Self {
        let counts: BTreeMap<String, u64> = tallies
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (bitstring(k, n_qubits), c))
            .collect();
        Self {
            n_qubits,
            shots: tallies.iter().sum(),
            counts,
        }
    }

    pub fn get(&self, bits: &str) -> u64 {
        self.counts.get(bits).copied().unwrap_or(0)
    }

    pub fn frequency(&self, bits: &str) -> f64 {
        self.get(bits) as f64 / self.shots as f64
    }

    /// Fraction of shots in which `qubit` read 0.
    pub fn marginal_zero(&self, qubit: usize) -> f64 {
        let zeros: u64 = self
            .counts
            .iter()
            .filter(|(bits, _)| bits.as_bytes()[qubit] == b'0')
            .map(|(_, &c)| c)
            .sum();
        zeros as f64 / self.shots as f64
    }
}

/// Cumulative distribution for repeated inverse-transform sampling.
pub(crate) struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        // Scale by the total so rounding in the norm never leaves a gap at the top.
        let total = *self.cdf.last().expect("nonempty distribution");
        let u = rng.random::<f64>() * total;
        self.cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1)
    }
}

pub fn sample_counts(state: &Statevector, shots: u64, seed: u64) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::invalid("shots must be at least 1"));
    }
    let sampler = Sampler::new(&state.probabilities());
    let mut rng = crate::seed::rng(seed);
    let mut tallies = vec![0u64; state.dim()];
    for _ in 0..shots {
        tallies[sampler.draw(&mut rng)] += 1;
    }
    Ok(CountsTable::from_indices(state.n_qubits, &tallies))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    fn amps_close(s: &Statevector, expected: &[(f64, f64)]) {
        for (a, &(re, im)) in s.amplitudes().iter().zip(expected) {
            assert!(close(*a, Complex64::new(re, im)), "{a} vs {re}+{im}i");
        }
    }

    #[test]
    fn zero_state_bounds() {
        amps_close(&zero_state(1).unwrap(), &[(1.0, 0.0), (0.0, 0.0)]);
        amps_close(&zero_state(2).unwrap(), &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert!(matches!(zero_state(11), Err(Error::QubitCount(11))));
        assert!(zero_state(0).is_err());
        assert_eq!(zero_state(10).unwrap().dim(), 1024);
    }

    #[test]
    fn single_qubit_gates() {
        let z = zero_state(1).unwrap();
        let plus = apply_gate(&z, &Gate::H { qubit: 0 }).unwrap();
        amps_close(&plus, &[(FRAC_1_SQRT_2, 0.0), (FRAC_1_SQRT_2, 0.0)]);
        let one = apply_gate(&z, &Gate::Ry { qubit: 0, angle: PI }).unwrap();
        assert!(one.amplitudes()[0].norm() < 1e-15);
        assert!((one.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
        let rx = apply_gate(&z, &Gate::Rx { qubit: 0, angle: PI }).unwrap();
        amps_close(&rx, &[(0.0, 0.0), (0.0, -1.0)]);
        let rz = apply_gate(&plus, &Gate::Rz { qubit: 0, angle: PI }).unwrap();
        amps_close(&rz, &[(0.0, -FRAC_1_SQRT_2), (0.0, FRAC_1_SQRT_2)]);
    }

    #[test]
    fn cnot_truth_table() {
        let cnot = Gate::Cnot { control: 0, target: 1 };
        for (input, output) in [(0b00, 0b00), (0b01, 0b01), (0b10, 0b11), (0b11, 0b10)] {
            let s = apply_gate(&Statevector::basis(2, input).unwrap(), &cnot).unwrap();
            assert_eq!(s, Statevector::basis(2, output).unwrap());
        }
    }

    #[test]
    fn cswap_truth_table() {
        let g = Gate::Cswap { control: 0, a: 1, b: 2 };
        for input in 0..8usize {
            let expected = if input & 0b100 != 0 {
                (input & 0b100) | ((input & 0b010) >> 1) | ((input & 0b001) << 1)
            } else {
                input
            };
            let s = apply_gate(&Statevector::basis(3, input).unwrap(), &g).unwrap();
            assert_eq!(s, Statevector::basis(3, expected).unwrap(), "input {input:03b}");
        }
    }

    #[test]
    fn qubit_zero_is_most_significant() {
        let s = apply_gate(&zero_state(3).unwrap(), &Gate::X { qubit: 0 }).unwrap();
        assert_eq!(s, Statevector::basis(3, 0b100).unwrap());
        assert_eq!(bitstring(0b100, 3), "100");
    }

    #[test]
    fn rejects_bad_targets() {
        let s = zero_state(2).unwrap();
        assert!(apply_gate(&s, &Gate::H { qubit: 2 }).is_err());
        assert!(apply_gate(&s, &Gate::Cnot { control: 1, target: 1 }).is_err());
        let s3 = zero_state(3).unwrap();
        assert!(apply_gate(&s3, &Gate::Cswap { control: 0, a: 2, b: 2 }).is_err());
    }

    #[test]
    fn inverse_undoes_gate() {
        let gates = [
            Gate::Rx { qubit: 0, angle: 0.7 },
            Gate::Ry { qubit: 1, angle: -1.3 },
            Gate::Rz { qubit: 0, angle: 2.1 },
            Gate::H { qubit: 1 },
            Gate::Cnot { control: 1, target: 0 },
        ];
        let mut s = zero_state(2).unwrap();
        s.apply(&Gate::H { qubit: 0 }).unwrap();
        let start = s.clone();
        s.apply_all(&gates).unwrap();
        for g in gates.iter().rev() {
            s.apply(&g.inverse()).unwrap();
        }
        for (a, b) in s.amplitudes().iter().zip(start.amplitudes()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn fidelity_examples() {
        let z = zero_state(1).unwrap();
        let one = Statevector::basis(1, 1).unwrap();
        let plus = apply_gate(&z, &Gate::H { qubit: 0 }).unwrap();
        assert_eq!(fidelity(&z, &z).unwrap(), 1.0);
        assert_eq!(fidelity(&z, &one).unwrap(), 0.0);
        assert!((fidelity(&z, &plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            fidelity(&z, &zero_state(2).unwrap()),
            Err(Error::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn probabilities_examples() {
        let z = zero_state(1).unwrap();
        assert_eq!(basis_probabilities(&z), vec![1.0, 0.0]);
        for g in [Gate::H { qubit: 0 }, Gate::Ry { qubit: 0, angle: PI / 2.0 }] {
            let p = basis_probabilities(&apply_gate(&z, &g).unwrap());
            assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn sampling_examples() {
        let z = zero_state(1).unwrap();
        let c = sample_counts(&z, 100, 42).unwrap();
        assert_eq!(c.counts, BTreeMap::from([("0".to_string(), 100)]));
        let one = Statevector::basis(1, 1).unwrap();
        assert_eq!(sample_counts(&one, 7, 3).unwrap().get("1"), 7);
        let plus = apply_gate(&z, &Gate::H { qubit: 0 }).unwrap();
        let c = sample_counts(&plus, 8192, 1).unwrap();
        assert!((c.frequency("0") - 0.5).abs() < 0.02);
        assert_eq!(c, sample_counts(&plus, 8192, 1).unwrap());
        assert!(sample_counts(&plus, 0, 1).is_err());
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(Statevector::from_amplitudes(vec![ONE, ZERO, ZERO]).is_err());
        assert!(Statevector::from_amplitudes(vec![ONE, ONE]).is_err());
        let s = Statevector::from_amplitudes(vec![ZERO, ONE]).unwrap();
        assert_eq!(s.n_qubits(), 1);
    }

    #[test]
    fn pauli_y_matches_definition() {
        let mut s = zero_state(1).unwrap();
        s.apply_pauli(0, Pauli::Y).unwrap();
        amps_close(&s, &[(0.0, 0.0), (0.0, 1.0)]);
        s.apply_pauli(0, Pauli::Y).unwrap();
        amps_close(&s, &[(1.0, 0.0), (0.0, 0.0)]);
    }
}
