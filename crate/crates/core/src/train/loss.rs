use rayon::prelude::*;

use super::TrainingSample;
use crate::error::Result;
use crate::grad::{graph, GradientMap, NodeId, Tape};
use crate::model::{ParameterStore, QueryPlan, TimeConstraint};

/// Weighted margin loss of one sample recorded on `tape`:
/// `−w·[log σ(γ − D(o, b)) + (1/k) Σ log σ(D(o', b') − γ)]`.
/// Entity negatives share the query box; each time negative gets the box of
/// the query at the corrupted timestamp, scored against the true object.
pub fn sample_loss(tape: &mut Tape, store: &ParameterStore, sample: &TrainingSample) -> Result<NodeId> {
    let gamma = store.hyper.gamma;
    let answer = sample.statement.object;
    let b = graph::box_of_query(tape, store, &sample.plan)?;
    let d_pos = graph::entity_distance(tape, store, answer, b);
    let pos = tape.affine(d_pos, -1.0, gamma);
    let pos = tape.log_sigmoid(pos);

    let mut negs = Vec::with_capacity(sample.num_negatives());
    for &e in &sample.negative_entities {
        let d = graph::entity_distance(tape, store, e, b);
        let z = tape.affine(d, 1.0, -gamma);
        negs.push(tape.log_sigmoid(z));
    }
    for &t in &sample.negative_times {
        let plan = QueryPlan::new(sample.plan.subject, sample.plan.relation, TimeConstraint::At(t));
        let bt = graph::box_of_query(tape, store, &plan)?;
        let d = graph::entity_distance(tape, store, answer, bt);
        let z = tape.affine(d, 1.0, -gamma);
        negs.push(tape.log_sigmoid(z));
    }
    let total = if negs.is_empty() {
        pos
    } else {
        let k = negs.len() as f64;
        let sum = tape.sum(negs);
        let mean = tape.affine(sum, 1.0 / k, 0.0);
        tape.sum(vec![pos, mean])
    };
    Ok(tape.affine(total, -sample.weight, 0.0))
}

/// The loss of one batch: one tape per sample plus one for the smoothness
/// penalty.
#[derive(Debug, Clone)]
pub struct BatchGraph {
    samples: Vec<(Tape, NodeId)>,
    smoothness: Option<(Tape, NodeId)>,
    beta: f64,
}

/// Records the batch loss: the mean sample loss, plus `β·Λ(T)` if any
/// sample is temporal.
pub fn batch_loss(batch: &[TrainingSample], store: &ParameterStore, beta: f64) -> Result<BatchGraph> {
    assert!(!batch.is_empty(), "empty batch");
    let samples = batch
        .par_iter()
        .map(|sample| {
            let mut tape = Tape::new();
            let root = sample_loss(&mut tape, store, sample)?;
            Ok((tape, root))
        })
        .collect::<Result<Vec<_>>>()?;
    let temporal = batch.iter().any(|s| s.statement.scope.is_temporal());
    let smoothness = if temporal && beta > 0.0 {
        let mut tape = Tape::new();
        graph::smoothness(&mut tape, store).map(|root| (tape, root))
    } else {
        None
    };
    Ok(BatchGraph {
        samples,
        smoothness,
        beta,
    })
}

impl BatchGraph {
    /// Mean sample loss, without the penalty.
    pub fn data_loss(&self) -> f64 {
        let sum: f64 = self.samples.iter().map(|(t, root)| t.scalar(*root)).sum();
        sum / self.samples.len() as f64
    }

    /// `Λ(T)` when it is part of the loss.
    pub fn smoothness(&self) -> Option<f64> {
        self.smoothness.as_ref().map(|(t, root)| t.scalar(*root))
    }

    pub fn loss(&self) -> f64 {
        self.data_loss() + self.smoothness().map_or(0.0, |l| self.beta * l)
    }

    /// Gradient of [`BatchGraph::loss`]. Per-sample gradients are computed
    /// in parallel and summed in batch order.
    pub fn backward(&self) -> Result<GradientMap> {
        let parts = self
            .samples
            .par_iter()
            .map(|(t, root)| t.backward(*root))
            .collect::<Result<Vec<_>>>()?;
        let mut grads = GradientMap::default();
        let w = 1.0 / self.samples.len() as f64;
        for g in &parts {
            grads.accumulate(g, w);
        }
        if let Some((t, root)) = &self.smoothness {
            grads.accumulate(&t.backward(*root)?, self.beta);
        }
        Ok(grads)
    }

    /// Recomputes the loss at `store` with the same samples.
    pub fn replay(&self, store: &ParameterStore) -> f64 {
        let sum: f64 = self.samples.iter().map(|(t, root)| t.replay(store, *root)[0]).sum();
        let data = sum / self.samples.len() as f64;
        data + self
            .smoothness
            .as_ref()
            .map_or(0.0, |(t, root)| self.beta * t.replay(store, *root)[0])
    }
}
