//! Classifying vectors and training costs.
//!
//! A point is classified by a length-`L` vector `f` with one likelihood per
//! class and assigned the argmax. Two constructions are provided:
//!
//! * implicit: `f_i(x) = Tr(|x><x| σ_i)`, the mean overlap of `x` with the
//!   embedded training points of class `i`;
//! * explicit: `f_i(x)` is the probability that measuring `|x>` lands in the
//!   computational-basis subspace assigned to class `i`.
//!
//! The generic cost averages `‖f(x) - y‖₁` per class and then over classes.
//! With implicit vectors it reduces to
//! `1 - (1/L) Σ Tr σ_i² + (2/L) Σ_{i<j} Tr σ_i σ_j`, which is what
//! [`implicit_cost`] evaluates directly.

use std::collections::HashSet;

use crate::embedding::{embed, EmbeddingParams, FeatureVector};
use crate::error::{Error, Result};
use crate::noise::noisy_sample;
use crate::overlap::{estimate_overlap, OverlapMethod};
use crate::seed::derive_seed;
use crate::sim::{fidelity, parse_bitstring, run_circuit, sample_counts, Statevector};

/// Slack allowed above 1 on classifying-vector entries.
pub const ENTRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyingVector(Vec<f64>);

impl ClassifyingVector {
    pub fn new(f: Vec<f64>) -> Result<Self> {
        if let Some(bad) = f.iter().find(|v| !(0.0..=1.0 + ENTRY_TOLERANCE).contains(*v)) {
            return Err(Error::invalid(format!("classifying-vector entry {bad} outside [0, 1]")));
        }
        Ok(Self(f))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// `‖f - y‖₁` against the one-hot vector of `label`.
    pub fn l1_distance_to_label(&self, label: usize) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &f)| (f - if i == label { 1.0 } else { 0.0 }).abs())
            .sum()
    }
}

/// One-hot label vector of length `n_classes`.
pub fn label_vector(class_id: usize, n_classes: usize) -> Result<Vec<f64>> {
    if class_id >= n_classes {
        return Err(Error::invalid(format!("class {class_id} out of range for {n_classes} classes")));
    }
    Ok((0..n_classes).map(|i| if i == class_id { 1.0 } else { 0.0 }).collect())
}

/// The training points of one class.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassEnsemble {
    pub class_id: usize,
    members: Vec<FeatureVector>,
}

impl ClassEnsemble {
    pub fn new(class_id: usize, members: Vec<FeatureVector>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyEnsemble(class_id));
        }
        Ok(Self { class_id, members })
    }

    pub fn members(&self) -> &[FeatureVector] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn embedded(&self, params: &EmbeddingParams) -> Vec<Statevector> {
        self.members.iter().map(|x| embed(x, params)).collect()
    }
}

/// Ensembles must be listed in class order `0..L`.
pub fn check_ensembles(ensembles: &[ClassEnsemble]) -> Result<()> {
    for (i, e) in ensembles.iter().enumerate() {
        if e.class_id != i {
            return Err(Error::invalid(format!(
                "ensemble {i} carries class id {}; expected classes 0..{}",
                e.class_id,
                ensembles.len()
            )));
        }
        if e.is_empty() {
            return Err(Error::EmptyEnsemble(i));
        }
    }
    Ok(())
}

/// A span of computational basis states assigned to one class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSubspace {
    pub class_id: usize,
    pub n_qubits: usize,
    basis_states: Vec<String>,
    indices: Vec<usize>,
}

impl LabelSubspace {
    pub fn new<S: AsRef<str>>(class_id: usize, basis_states: &[S]) -> Result<Self> {
        let first = basis_states
            .first()
            .ok_or_else(|| Error::invalid(format!("subspace for class {class_id} is empty")))?;
        let n_qubits = first.as_ref().len();
        let mut indices = Vec::with_capacity(basis_states.len());
        for b in basis_states {
            let k = parse_bitstring(b.as_ref(), n_qubits)?;
            if indices.contains(&k) {
                return Err(Error::invalid(format!("basis state {} repeated", b.as_ref())));
            }
            indices.push(k);
        }
        Ok(Self {
            class_id,
            n_qubits,
            basis_states: basis_states.iter().map(|b| b.as_ref().to_string()).collect(),
            indices,
        })
    }

    pub fn basis_states(&self) -> &[String] {
        &self.basis_states
    }

    /// Probability mass of the subspace under a basis distribution.
    pub fn weight(&self, probabilities: &[f64]) -> f64 {
        self.indices.iter().map(|&k| probabilities[k]).sum()
    }
}

/// The `{|00>}, {|11>}` assignment used for binary problems.
pub fn binary_subspaces() -> Vec<LabelSubspace> {
    vec![
        LabelSubspace::new(0, &["00"]).expect("valid bitstring"),
        LabelSubspace::new(1, &["11"]).expect("valid bitstring"),
    ]
}

/// Subspaces must be in class order, share a width, and be disjoint.
pub fn check_subspaces(subspaces: &[LabelSubspace], n_qubits: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, s) in subspaces.iter().enumerate() {
        if s.class_id != i {
            return Err(Error::invalid(format!("subspace {i} carries class id {}", s.class_id)));
        }
        if s.n_qubits != n_qubits {
            return Err(Error::DimensionMismatch(s.n_qubits, n_qubits));
        }
        for &k in &s.indices {
            if !seen.insert(k) {
                return Err(Error::invalid(format!("subspaces overlap at {}", s.basis_states[0])));
            }
        }
    }
    Ok(())
}

/// Mean overlap of `state` with each class's embedded states.
pub fn implicit_vector_from_states(state: &Statevector, class_states: &[Vec<Statevector>]) -> Result<ClassifyingVector> {
    let f = class_states
        .iter()
        .map(|members| {
            let total = members.iter().map(|m| fidelity(state, m)).sum::<Result<f64>>()?;
            Ok(total / members.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    ClassifyingVector::new(f)
}

pub fn implicit_classifying_vector(
    x: &FeatureVector,
    params: &EmbeddingParams,
    ensembles: &[ClassEnsemble],
    method: &OverlapMethod,
) -> Result<ClassifyingVector> {
    check_ensembles(ensembles)?;
    if method.is_exact() {
        let class_states: Vec<_> = ensembles.iter().map(|e| e.embedded(params)).collect();
        return implicit_vector_from_states(&embed(x, params), &class_states);
    }
    let mut f = Vec::with_capacity(ensembles.len());
    for e in ensembles {
        let mut total = 0.0;
        for (j, member) in e.members().iter().enumerate() {
            let m = method.with_seed(derive_seed(method.seed, &[e.class_id as u64, j as u64]));
            total += estimate_overlap(x, member, params, &m)?;
        }
        f.push(total / e.len() as f64);
    }
    ClassifyingVector::new(f)
}

pub fn explicit_vector_from_probabilities(probabilities: &[f64], subspaces: &[LabelSubspace]) -> Result<ClassifyingVector> {
    ClassifyingVector::new(subspaces.iter().map(|s| s.weight(probabilities)).collect())
}

pub fn explicit_classifying_vector(
    x: &FeatureVector,
    params: &EmbeddingParams,
    subspaces: &[LabelSubspace],
) -> Result<ClassifyingVector> {
    check_subspaces(subspaces, crate::embedding::N_QUBITS)?;
    explicit_vector_from_probabilities(&embed(x, params).probabilities(), subspaces)
}

/// Explicit vector from measured frequencies of the embedding circuit.
pub fn explicit_classifying_vector_sampled(
    x: &FeatureVector,
    params: &EmbeddingParams,
    subspaces: &[LabelSubspace],
    method: &OverlapMethod,
) -> Result<ClassifyingVector> {
    check_subspaces(subspaces, crate::embedding::N_QUBITS)?;
    method.validate()?;
    if method.is_exact() {
        return explicit_classifying_vector(x, params, subspaces);
    }
    let circuit = crate::embedding::embedding_circuit(x, params);
    let n = crate::embedding::N_QUBITS;
    let counts = match &method.noise {
        Some(model) => noisy_sample(&circuit, n, model, method.shots, method.seed)?,
        None => sample_counts(&run_circuit(n, &circuit)?, method.shots, method.seed)?,
    };
    let freqs: Vec<f64> = (0..1usize << n)
        .map(|k| counts.frequency(&crate::sim::bitstring(k, n)))
        .collect();
    explicit_vector_from_probabilities(&freqs, subspaces)
}

/// Mean per-class L1 distance between classifying vectors and one-hot labels.
///
/// `per_class[i]` holds the vectors of the training points of class `i`.
pub fn generic_cost(per_class: &[Vec<ClassifyingVector>]) -> Result<f64> {
    let n_classes = per_class.len();
    if n_classes == 0 {
        return Err(Error::invalid("cost needs at least one class"));
    }
    let mut total = 0.0;
    for (label, vectors) in per_class.iter().enumerate() {
        if vectors.is_empty() {
            return Err(Error::EmptyEnsemble(label));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != n_classes) {
            return Err(Error::invalid(format!("vector of length {} for {n_classes} classes", v.len())));
        }
        let class_sum: f64 = vectors.iter().map(|v| v.l1_distance_to_label(label)).sum();
        total += class_sum / vectors.len() as f64;
    }
    Ok(total / n_classes as f64)
}

/// Sums in ascending order so the result does not depend on input order.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `Tr(σ_i σ_j)` for all class pairs.
pub fn ensemble_overlaps(class_states: &[Vec<Statevector>]) -> Result<Vec<Vec<f64>>> {
    let l = class_states.len();
    let mut t = vec![vec![0.0; l]; l];
    for i in 0..l {
        for j in i..l {
            let (a, b) = (&class_states[i], &class_states[j]);
            let mut terms = Vec::with_capacity(a.len() * b.len());
            for sa in a {
                for sb in b {
                    terms.push(fidelity(sa, sb)?);
                }
            }
            let v = sorted_sum(terms) / (a.len() * b.len()) as f64;
            t[i][j] = v;
            t[j][i] = v;
        }
    }
    Ok(t)
}

pub fn implicit_cost_from_states(class_states: &[Vec<Statevector>]) -> Result<f64> {
    let l = class_states.len();
    if l < 2 {
        return Err(Error::invalid("implicit cost needs at least 2 classes"));
    }
    if let Some(i) = class_states.iter().position(|c| c.is_empty()) {
        return Err(Error::EmptyEnsemble(i));
    }
    let t = ensemble_overlaps(class_states)?;
    let lf = l as f64;
    let purity: f64 = (0..l).map(|i| t[i][i]).sum();
    let cross: f64 = (0..l).flat_map(|i| (i + 1..l).map(move |j| (i, j))).map(|(i, j)| t[i][j]).sum();
    Ok(1.0 - purity / lf + 2.0 * cross / lf)
}

pub fn implicit_cost(ensembles: &[ClassEnsemble], params: &EmbeddingParams) -> Result<f64> {
    check_ensembles(ensembles)?;
    let states: Vec<_> = ensembles.iter().map(|e| e.embedded(params)).collect();
    implicit_cost_from_states(&states)
}

pub fn explicit_cost_from_states(class_states: &[Vec<Statevector>], subspaces: &[LabelSubspace]) -> Result<f64> {
    if class_states.len() < 2 {
        return Err(Error::invalid("explicit cost needs at least 2 classes"));
    }
    if class_states.len() != subspaces.len() {
        return Err(Error::invalid(format!(
            "{} classes but {} subspaces",
            class_states.len(),
            subspaces.len()
        )));
    }
    let n_qubits = class_states
        .iter()
        .flatten()
        .next()
        .map(Statevector::n_qubits)
        .ok_or(Error::EmptyEnsemble(0))?;
    check_subspaces(subspaces, n_qubits)?;
    let per_class = class_states
        .iter()
        .map(|states| {
            states
                .iter()
                .map(|s| explicit_vector_from_probabilities(&s.probabilities(), subspaces))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    generic_cost(&per_class)
}

pub fn explicit_cost(ensembles: &[ClassEnsemble], params: &EmbeddingParams, subspaces: &[LabelSubspace]) -> Result<f64> {
    check_ensembles(ensembles)?;
    let states: Vec<_> = ensembles.iter().map(|e| e.embedded(params)).collect();
    explicit_cost_from_states(&states, subspaces)
}

/// What a trained embedding is read out against.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Implicit(Vec<ClassEnsemble>),
    Explicit(Vec<LabelSubspace>),
}

impl Model {
    pub fn n_classes(&self) -> usize {
        match self {
            Model::Implicit(e) => e.len(),
            Model::Explicit(s) => s.len(),
        }
    }
}

pub fn classifying_vector(
    x: &FeatureVector,
    params: &EmbeddingParams,
    model: &Model,
    method: &OverlapMethod,
) -> Result<ClassifyingVector> {
    match model {
        Model::Implicit(ensembles) => implicit_classifying_vector(x, params, ensembles, method),
        Model::Explicit(subspaces) => explicit_classifying_vector_sampled(x, params, subspaces, method),
    }
}

pub fn predict(x: &FeatureVector, params: &EmbeddingParams, model: &Model, method: &OverlapMethod) -> Result<usize> {
    Ok(classifying_vector(x, params, model, method)?.argmax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fv(a: f64, b: f64) -> FeatureVector {
        FeatureVector::new(a, b).unwrap()
    }

    fn cv(v: &[f64]) -> ClassifyingVector {
        ClassifyingVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(cv(&[0.9, 0.1, 0.2]).argmax(), 0);
        assert_eq!(cv(&[0.4, 0.4]).argmax(), 0);
        assert_eq!(cv(&[0.1, 0.4, 0.4]).argmax(), 1);
        assert!(ClassifyingVector::new(vec![1.1]).is_err());
    }

    #[test]
    fn generic_cost_examples() {
        let perfect = vec![vec![cv(&[1.0, 0.0])], vec![cv(&[0.0, 1.0])]];
        assert_eq!(generic_cost(&perfect).unwrap(), 0.0);
        let half = vec![vec![cv(&[0.5, 0.5]); 3], vec![cv(&[0.5, 0.5]); 2]];
        assert_eq!(generic_cost(&half).unwrap(), 1.0);
        assert!(generic_cost(&[vec![], vec![cv(&[0.0, 1.0])]]).is_err());
    }

    #[test]
    fn label_vectors() {
        assert_eq!(label_vector(1, 3).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(label_vector(3, 3).is_err());
    }

    #[test]
    fn implicit_vector_limits() {
        let p = EmbeddingParams::random(6);
        let x = fv(1.0, 0.5);
        let ensembles = vec![
            ClassEnsemble::new(0, vec![x]).unwrap(),
            ClassEnsemble::new(1, vec![x]).unwrap(),
        ];
        let f = implicit_classifying_vector(&x, &p, &ensembles, &OverlapMethod::exact()).unwrap();
        for v in f.values() {
            assert!((v - 1.0).abs() < 1e-12);
        }

        // zero params: (0,0) -> |00>, (π,0) -> |10>, (0,π) -> |01>
        let z = EmbeddingParams::zeros();
        let ensembles = vec![
            ClassEnsemble::new(0, vec![fv(PI, 0.0)]).unwrap(),
            ClassEnsemble::new(1, vec![fv(0.0, PI)]).unwrap(),
        ];
        let f = implicit_classifying_vector(&fv(0.0, 0.0), &z, &ensembles, &OverlapMethod::exact()).unwrap();
        assert!(f.values().iter().all(|v| v.abs() < 1e-20));
    }

    #[test]
    fn ensembles_must_be_ordered_and_nonempty() {
        assert!(matches!(ClassEnsemble::new(0, vec![]), Err(Error::EmptyEnsemble(0))));
        let e = vec![ClassEnsemble::new(1, vec![fv(0.0, 0.0)]).unwrap()];
        assert!(check_ensembles(&e).is_err());
    }

    #[test]
    fn explicit_vector_examples() {
        let z = EmbeddingParams::zeros();
        let f = explicit_classifying_vector(&fv(0.0, 0.0), &z, &binary_subspaces()).unwrap();
        assert_eq!(f.values(), &[1.0, 0.0]);

        let p = EmbeddingParams::random(21);
        let full = vec![
            LabelSubspace::new(0, &["00", "01"]).unwrap(),
            LabelSubspace::new(1, &["10"]).unwrap(),
            LabelSubspace::new(2, &["11"]).unwrap(),
        ];
        let f = explicit_classifying_vector(&fv(0.4, 2.0), &p, &full).unwrap();
        assert!((f.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subspace_validation() {
        assert!(LabelSubspace::new(0, &["0x"]).is_err());
        assert!(LabelSubspace::new(0, &["00", "00"]).is_err());
        assert!(LabelSubspace::new::<&str>(0, &[]).is_err());
        let overlapping = vec![
            LabelSubspace::new(0, &["00", "01"]).unwrap(),
            LabelSubspace::new(1, &["01"]).unwrap(),
        ];
        assert!(check_subspaces(&overlapping, 2).is_err());
        let wrong_width = vec![LabelSubspace::new(0, &["0"]).unwrap()];
        assert!(check_subspaces(&wrong_width, 2).is_err());
    }

    #[test]
    fn implicit_cost_examples() {
        // Identical states everywhere: every trace is 1, so C = L - 1.
        let s = Statevector::zero(2).unwrap();
        for l in 2..=4 {
            let classes = vec![vec![s.clone(); 2]; l];
            let c = implicit_cost_from_states(&classes).unwrap();
            assert!((c - (l as f64 - 1.0)).abs() < 1e-12, "L={l}: {c}");
        }
        // Two pure orthogonal classes: C = 0.
        let classes = vec![vec![Statevector::basis(2, 0).unwrap()], vec![Statevector::basis(2, 3).unwrap()]];
        assert!(implicit_cost_from_states(&classes).unwrap().abs() < 1e-15);
        assert!(implicit_cost_from_states(&classes[..1]).is_err());
    }

    #[test]
    fn explicit_cost_examples() {
        let (s00, s11) = (Statevector::basis(2, 0).unwrap(), Statevector::basis(2, 3).unwrap());
        let sub = binary_subspaces();
        let good = vec![vec![s00.clone(); 3], vec![s11.clone(); 2]];
        assert!(explicit_cost_from_states(&good, &sub).unwrap().abs() < 1e-15);
        let swapped = vec![vec![s11; 3], vec![s00; 2]];
        assert!((explicit_cost_from_states(&swapped, &sub).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn predict_uses_argmax() {
        let z = EmbeddingParams::zeros();
        let model = Model::Explicit(binary_subspaces());
        assert_eq!(predict(&fv(0.0, 0.0), &z, &model, &OverlapMethod::exact()).unwrap(), 0);
        // (π, π) -> |11>
        assert_eq!(predict(&fv(PI, PI), &z, &model, &OverlapMethod::exact()).unwrap(), 1);
        let sampled = OverlapMethod::inversion_test(512, 3).unwrap();
        assert_eq!(predict(&fv(PI, PI), &z, &model, &sampled).unwrap(), 1);
    }

    #[test]
    fn shuffling_within_class_is_exact() {
        let p = EmbeddingParams::random(13);
        let a: Vec<_> = [(0.1, 0.2), (1.5, 2.5), (2.0, 0.7)].iter().map(|&(x, y)| fv(x, y)).collect();
        let b: Vec<_> = [(3.0, 0.1), (0.4, 2.9)].iter().map(|&(x, y)| fv(x, y)).collect();
        let mut a_rev = a.clone();
        a_rev.reverse();
        let c1 = implicit_cost(&[ClassEnsemble::new(0, a).unwrap(), ClassEnsemble::new(1, b.clone()).unwrap()], &p).unwrap();
        let c2 = implicit_cost(&[ClassEnsemble::new(0, a_rev).unwrap(), ClassEnsemble::new(1, b).unwrap()], &p).unwrap();
        assert_eq!(c1, c2);
    }
}
