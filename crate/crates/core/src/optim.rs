//! RMSprop training of the embedding parameters.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{embed, EmbeddingParams};
use crate::error::{Error, Result};
use crate::objectives::{
    check_ensembles, check_subspaces, explicit_cost_from_states, implicit_cost_from_states, ClassEnsemble,
    LabelSubspace,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub fd_step: f64,
    pub rmsprop_decay: f64,
    pub rmsprop_epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.01,
            fd_step: 1e-3,
            rmsprop_decay: 0.9,
            rmsprop_epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return Err(Error::invalid(format!("fd step {} must be positive", self.fd_step)));
        }
        if !(self.rmsprop_decay > 0.0 && self.rmsprop_decay < 1.0) {
            return Err(Error::invalid(format!("decay {} must be in (0, 1)", self.rmsprop_decay)));
        }
        if self.rmsprop_epsilon.is_nan() || self.rmsprop_epsilon < 0.0 {
            return Err(Error::invalid("epsilon must be nonnegative"));
        }
        Ok(())
    }
}

/// Running average of squared gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub second_moment: Vec<f64>,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        Self { second_moment: vec![0.0; n_params] }
    }
}

/// Central differences `[C(θ + h e_k) - C(θ - h e_k)] / 2h`.
///
/// Components are evaluated in parallel and collected in index order.
pub fn gradient_fd<F>(cost_fn: F, params: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("finite-difference step {h} must be positive")));
    }
    (0..params.len())
        .into_par_iter()
        .map(|k| {
            let mut shifted = params.to_vec();
            shifted[k] = params[k] + h;
            let plus = cost_fn(&shifted)?;
            shifted[k] = params[k] - h;
            let minus = cost_fn(&shifted)?;
            if !(plus.is_finite() && minus.is_finite()) {
                return Err(Error::invalid(format!("non-finite cost around parameter {k}")));
            }
            Ok((plus - minus) / (2.0 * h))
        })
        .collect()
}

/// `s ← ρ s + (1-ρ) g²`, `θ ← θ - lr g / (√s + ε)`.
pub fn rmsprop_step(params: &mut [f64], grads: &[f64], state: &mut OptimizerState, config: &TrainConfig) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.second_moment.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.second_moment.len()
        )));
    }
    let rho = config.rmsprop_decay;
    for ((theta, &g), s) in params.iter_mut().zip(grads).zip(state.second_moment.iter_mut()) {
        *s = rho * *s + (1.0 - rho) * g * g;
        *theta -= config.learning_rate * g / (s.sqrt() + config.rmsprop_epsilon);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Objective {
    Implicit,
    Explicit(Vec<LabelSubspace>),
}

impl Objective {
    /// Cost of `training` under `params`.
    pub fn cost(&self, training: &[ClassEnsemble], params: &EmbeddingParams) -> Result<f64> {
        let states: Vec<Vec<_>> = training
            .iter()
            .map(|e| e.members().iter().map(|x| embed(x, params)).collect())
            .collect();
        match self {
            Objective::Implicit => implicit_cost_from_states(&states),
            Objective::Explicit(subspaces) => explicit_cost_from_states(&states, subspaces),
        }
    }

    fn validate(&self, training: &[ClassEnsemble]) -> Result<()> {
        check_ensembles(training)?;
        if training.len() < 2 {
            return Err(Error::invalid("training needs at least 2 classes"));
        }
        if let Objective::Explicit(subspaces) = self {
            check_subspaces(subspaces, crate::embedding::N_QUBITS)?;
            if subspaces.len() != training.len() {
                return Err(Error::invalid(format!(
                    "{} classes but {} subspaces",
                    training.len(),
                    subspaces.len()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    /// Cost before training, then after every epoch.
    pub cost_history: Vec<f64>,
    pub final_params: EmbeddingParams,
    pub config: TrainConfig,
    /// Left empty when timing is not recorded, keeping records reproducible.
    pub wall_time_s: Option<f64>,
}

impl TrainRecord {
    pub fn initial_cost(&self) -> f64 {
        self.cost_history[0]
    }

    pub fn final_cost(&self) -> f64 {
        *self.cost_history.last().expect("history includes the initial cost")
    }
}

/// Full-batch RMSprop from parameters drawn with `config.seed`.
pub fn train(objective: &Objective, training: &[ClassEnsemble], config: &TrainConfig) -> Result<TrainRecord> {
    train_from(objective, training, config, EmbeddingParams::random(config.seed))
}

pub fn train_from(
    objective: &Objective,
    training: &[ClassEnsemble],
    config: &TrainConfig,
    init: EmbeddingParams,
) -> Result<TrainRecord> {
    config.validate()?;
    objective.validate(training)?;
    let start = Instant::now();

    let cost_at = |theta: &[f64]| objective.cost(training, &EmbeddingParams::new(theta)?);
    let mut params = init;
    let mut state = OptimizerState::new(params.as_slice().len());
    let mut history = Vec::with_capacity(config.epochs + 1);
    let initial = objective.cost(training, &params)?;
    if !initial.is_finite() {
        return Err(Error::NonFiniteCost { epoch: 0 });
    }
    history.push(initial);

    for epoch in 1..=config.epochs {
        let grads = gradient_fd(cost_at, params.as_slice(), config.fd_step)
            .map_err(|_| Error::NonFiniteCost { epoch })?;
        rmsprop_step(params.as_mut_slice(), &grads, &mut state, config)?;
        let cost = objective.cost(training, &params)?;
        if !cost.is_finite() {
            return Err(Error::NonFiniteCost { epoch });
        }
        history.push(cost);
    }

    Ok(TrainRecord {
        cost_history: history,
        final_params: params,
        config: config.clone(),
        wall_time_s: Some(start.elapsed().as_secs_f64()),
    })
}
