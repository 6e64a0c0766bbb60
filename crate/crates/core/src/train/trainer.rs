use rand::seq::SliceRandom;
use rand::Rng;

use super::{
    batch_loss, query_weight, sample_entity_negatives, sample_time_negatives, Adam, TrainConfig,
    TrainingSample,
};
use crate::data::{Statement, TemporalKB};
use crate::error::{Error, Result};
use crate::eval::{eval_link_prediction, LinkOptions};
use crate::model::{ParameterStore, QueryPlan};
use crate::rng::{stream, Stream};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub step: usize,
    /// Mean batch loss since the previous entry.
    pub loss: f64,
    /// `Λ(T)` of the current parameters.
    pub smoothness: f64,
    pub valid_mrr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the best validation MRR, or the final ones when no
    /// validation ran.
    pub params: ParameterStore,
    /// Batch loss of every step.
    pub losses: Vec<f64>,
    pub log: Vec<LogEntry>,
    pub best_step: Option<usize>,
}

/// Every training statement in both directions: `(s, r, o)` and
/// `(o, r⁻¹, s)`.
pub fn directed_statements(kb: &TemporalKB) -> Vec<Statement> {
    kb.train
        .iter()
        .flat_map(|s| {
            [
                *s,
                Statement {
                    subject: s.object,
                    relation: kb.inverse(s.relation),
                    object: s.subject,
                    scope: s.scope,
                },
            ]
        })
        .collect()
}

/// Draws the query timestamps, negatives and weight for one directed
/// statement.
pub fn build_sample(stmt: &Statement, kb: &TemporalKB, config: &TrainConfig, rng: &mut impl Rng) -> Result<TrainingSample> {
    let plan = QueryPlan::for_training(stmt, stmt.subject, stmt.relation, config.variant.sample_interval, rng);
    let m = config.resolved_time_negatives();
    let negative_times = if m > 0 && stmt.scope.is_temporal() {
        sample_time_negatives(stmt, m, kb, rng).unwrap_or_default()
    } else {
        Vec::new()
    };
    let k = config.negatives - negative_times.len();
    let negative_entities = sample_entity_negatives(stmt, &plan.time, k, kb, rng)?;
    Ok(TrainingSample {
        statement: *stmt,
        plan,
        negative_entities,
        negative_times,
        weight: query_weight(stmt, &plan.time, kb),
    })
}

pub fn train(kb: &TemporalKB, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with(kb, config, |_| {})
}

/// Trains from scratch, calling `on_log` for each log entry as it is made.
pub fn train_with(kb: &TemporalKB, config: &TrainConfig, mut on_log: impl FnMut(&LogEntry)) -> Result<TrainOutcome> {
    config.validate()?;
    if kb.train.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let mut params = ParameterStore::initialized(
        config.dim,
        kb.num_entities(),
        kb.num_model_relations(),
        kb.num_times(),
        config.variant,
        config.hyper(),
        &mut stream(config.seed, Stream::Init),
    );
    let mut rng = stream(config.seed, Stream::Training);
    let examples = directed_statements(kb);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let valid_end = config.valid_limit.map_or(kb.valid.len(), |n| n.min(kb.valid.len()));
    let valid = &kb.valid[..valid_end];
    let link_opts = LinkOptions::default();

    let mut adam = Adam::new(&params, config.lr);
    let mut losses = Vec::with_capacity(config.steps);
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, ParameterStore)> = None;
    let mut since_log = (0.0, 0usize);

    for step in 1..=config.steps {
        let mut batch = Vec::with_capacity(config.batch);
        for _ in 0..config.batch {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            batch.push(build_sample(&examples[order[cursor]], kb, config, &mut rng)?);
            cursor += 1;
        }
        let graph = batch_loss(&batch, &params, config.beta)?;
        let loss = graph.loss();
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        let grads = graph.backward()?;
        adam.step(&mut params, &grads);
        params.clamp_offsets();
        losses.push(loss);
        since_log.0 += loss;
        since_log.1 += 1;

        let due = (config.eval_every > 0 && step % config.eval_every == 0) || step == config.steps;
        if due {
            let valid_mrr = if valid.is_empty() {
                None
            } else {
                Some(eval_link_prediction(&params, kb, valid, &link_opts).overall.mrr)
            };
            let entry = LogEntry {
                step,
                loss: since_log.0 / since_log.1 as f64,
                smoothness: params.time_smoothness(),
                valid_mrr,
            };
            log::info!(
                "step {step} loss {:.6} valid_mrr {}",
                entry.loss,
                valid_mrr.map_or("-".to_string(), |m| format!("{m:.4}"))
            );
            on_log(&entry);
            log.push(entry);
            since_log = (0.0, 0);
            if let Some(mrr) = valid_mrr {
                if best.as_ref().map_or(true, |(b, ..)| mrr > *b) {
                    best = Some((mrr, step, params.clone()));
                }
            }
        }
    }
    let (params, best_step) = match best {
        Some((_, step, p)) => (p, Some(step)),
        None => (params, None),
    };
    Ok(TrainOutcome {
        params,
        losses,
        log,
        best_step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SyntheticConfig, SyntheticDataset};
    use crate::model::Variant;

    fn small_kb() -> TemporalKB {
        let config = SyntheticConfig {
            seed: 3,
            entities: 20,
            relations: 3,
            axis_len: 15,
            rules: 12,
            origin: 2000,
        };
        SyntheticDataset::generate(&config).unwrap().to_kb().unwrap()
    }

    fn config() -> TrainConfig {
        TrainConfig {
            dim: 8,
            negatives: 4,
            lr: 0.05,
            batch: 8,
            steps: 30,
            gamma: 6.0,
            eval_every: 10,
            valid_limit: Some(10),
            seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn same_seed_same_run() {
        let kb = small_kb();
        let a = train(&kb, &config()).unwrap();
        let b = train(&kb, &config()).unwrap();
        assert_eq!(a.losses, b.losses);
        assert_eq!(a.params, b.params);
        assert_eq!(a.log, b.log);
        let mut other = config();
        other.seed = 6;
        assert_ne!(train(&kb, &other).unwrap().losses, a.losses);
    }

    #[test]
    fn log_cadence_and_offsets() {
        let kb = small_kb();
        let mut seen = Vec::new();
        let out = train_with(&kb, &config(), |e| seen.push(e.step)).unwrap();
        assert_eq!(seen, vec![10, 20, 30]);
        assert!(out.log.iter().all(|e| e.valid_mrr.is_some()));
        assert!(out.best_step.is_some());
        assert!(out.params.relation_offset.iter().all(|&o| o >= 0.0));
        assert!(out.params.time_offset.iter().all(|&o| o >= 0.0));
    }

    #[test]
    fn samples_respect_the_variant() {
        let kb = small_kb();
        let mut cfg = config();
        cfg.variant = Variant::parse("si,tns").unwrap();
        let mut rng = stream(1, Stream::Training);
        for stmt in directed_statements(&kb) {
            let s = build_sample(&stmt, &kb, &cfg, &mut rng).unwrap();
            assert_eq!(s.num_negatives(), cfg.negatives);
            if let crate::data::TimeScope::Closed(a, b) = stmt.scope {
                let ts: Vec<_> = s.plan.time.timestamps().collect();
                assert_eq!(ts.len(), 2);
                assert!(ts.iter().all(|t| (a..=b).contains(t)));
            }
            if !stmt.scope.is_temporal() {
                assert!(s.negative_times.is_empty());
            }
            assert!(s.weight > 0.0 && s.weight <= 1.0);
        }
    }

    #[test]
    fn invalid_configs() {
        let kb = small_kb();
        for bad in [
            TrainConfig { negatives: 0, ..config() },
            TrainConfig { dim: 0, ..config() },
            TrainConfig { alpha: 1.5, ..config() },
            TrainConfig {
                variant: Variant::parse("tns").unwrap(),
                time_negatives: Some(9),
                ..config()
            },
        ] {
            assert!(matches!(train(&kb, &bad), Err(Error::InvalidConfig(_))));
        }
    }
}
