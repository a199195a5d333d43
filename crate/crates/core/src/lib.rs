//! Trainable 2-qubit quantum embeddings for supervised classification.
//!
//! Feature vectors are mapped to pure states by a repeated parameterized
//! circuit. Training pulls same-class states together, either implicitly
//! (class ensembles separate from each other) or explicitly (each class is
//! steered into a fixed computational-basis subspace). Prediction takes the
//! argmax of a per-class overlap vector, estimated exactly, by SWAP test or
//! by inversion test, optionally under emulated device noise.

pub mod cli;
pub mod datasets;
pub mod embedding;
mod error;
pub mod noise;
pub mod objectives;
pub mod optim;
pub mod overlap;
pub mod seed;
pub mod sim;

pub use embedding::{embed, EmbeddingParams, FeatureVector};
pub use error::{Error, Result};
pub use noise::NoiseModel;
pub use objectives::{ClassEnsemble, ClassifyingVector, LabelSubspace, Model};
pub use optim::{TrainConfig, TrainRecord};
pub use overlap::{GramMatrix, OverlapKind, OverlapMethod};
pub use sim::{Gate, Statevector};
