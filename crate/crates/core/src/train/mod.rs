//! Negative sampling, the margin loss, Adam, the training loop, and
//! checkpoints.

mod adam;
mod checkpoint;
mod loss;
mod sampler;
mod trainer;

pub use adam::Adam;
pub use checkpoint::{check_compatible, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use loss::{batch_loss, sample_loss, BatchGraph};
pub use sampler::{query_weight, sample_entity_negatives, sample_time_negatives, time_negative_candidates};
pub use trainer::{build_sample, directed_statements, train, train_with, LogEntry, TrainOutcome};

use crate::data::{Statement, TimeIndex};
use crate::error::{Error, Result};
use crate::model::{Hyper, QueryPlan, Variant};
use crate::data::EntityId;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    /// Negatives per positive.
    pub negatives: usize,
    /// Time negatives per positive under the time-negative variant; they
    /// replace entity negatives. `None` means half of `negatives`.
    pub time_negatives: Option<usize>,
    pub lr: f64,
    pub batch: usize,
    pub steps: usize,
    pub gamma: f64,
    pub alpha: f64,
    /// Weight of the time smoothness penalty.
    pub beta: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Validation interval in steps; 0 disables validation.
    pub eval_every: usize,
    /// Evaluate on at most this many validation statements.
    pub valid_limit: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let hyper = Hyper::default();
        TrainConfig {
            dim: 400,
            negatives: 128,
            time_negatives: None,
            lr: 0.001,
            batch: 3000,
            steps: 10_000,
            gamma: hyper.gamma,
            alpha: hyper.alpha,
            beta: 0.0,
            variant: Variant::default(),
            seed: 0,
            eval_every: 1000,
            valid_limit: None,
        }
    }
}

impl TrainConfig {
    pub fn hyper(&self) -> Hyper {
        Hyper {
            gamma: self.gamma,
            alpha: self.alpha,
        }
    }

    /// Time negatives per positive actually used: 0 unless the variant
    /// enables them.
    pub fn resolved_time_negatives(&self) -> usize {
        if !self.variant.time_negatives {
            return 0;
        }
        self.time_negatives.unwrap_or(self.negatives / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.negatives == 0 {
            return bad("negatives must be at least 1");
        }
        if self.resolved_time_negatives() > self.negatives {
            return bad("time negatives cannot exceed negatives");
        }
        if self.batch == 0 {
            return bad("batch must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must lie in [0, 1]");
        }
        if !(self.gamma.is_finite() && self.beta >= 0.0 && self.beta.is_finite()) {
            return bad("gamma and beta must be finite, beta nonnegative");
        }
        Ok(())
    }
}

/// One positive with its negatives, read in the direction of `statement`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// The statement as queried: `(s, r, ?o)` where `r` may be an inverse.
    pub statement: Statement,
    pub plan: QueryPlan,
    pub negative_entities: Vec<EntityId>,
    pub negative_times: Vec<TimeIndex>,
    /// `1 / n_q`.
    pub weight: f64,
}

impl TrainingSample {
    pub fn num_negatives(&self) -> usize {
        self.negative_entities.len() + self.negative_times.len()
    }
}
