//! The model forward pass recorded on a tape. Each builder mirrors the
//! corresponding method on `ParameterStore`.

use super::{NodeId, Tape};
use crate::data::{EntityId, RelationId, TimeIndex};
use crate::error::{Error, Result};
use crate::model::{Block, ParamSlot, ParameterStore, Projector, QueryPlan, TimeConstraint};

/// A box whose center and offset live on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TapeBox {
    pub center: NodeId,
    pub offset: NodeId,
}

fn project(tape: &mut Tape, store: &ParameterStore, subject: EntityId, by: NodeId) -> NodeId {
    let e = tape.param(store, ParamSlot::new(Block::Entity, subject));
    match store.variant.projector {
        Projector::Translation => tape.add(e, by),
        Projector::Multiplicative => tape.mul(e, by),
    }
}

pub fn project_relation(tape: &mut Tape, store: &ParameterStore, subject: EntityId, relation: RelationId) -> TapeBox {
    let r = tape.param(store, ParamSlot::new(Block::Relation, relation));
    let offset = tape.param(store, ParamSlot::new(Block::RelationOffset, relation));
    TapeBox {
        center: project(tape, store, subject, r),
        offset,
    }
}

pub fn project_time(tape: &mut Tape, store: &ParameterStore, subject: EntityId, t: TimeIndex) -> TapeBox {
    let tv = tape.param(store, ParamSlot::new(Block::Time, t));
    let offset = tape.param(store, ParamSlot::new(Block::TimeOffset, t));
    TapeBox {
        center: project(tape, store, subject, tv),
        offset,
    }
}

pub fn relation_time_point(tape: &mut Tape, store: &ParameterStore, relation: RelationId, t: TimeIndex) -> NodeId {
    let r = tape.param(store, ParamSlot::new(Block::Relation, relation));
    let tv = tape.param(store, ParamSlot::new(Block::Time, t));
    tape.add(r, tv)
}

pub fn intersect(tape: &mut Tape, store: &ParameterStore, boxes: &[TapeBox], extra_centers: &[NodeId]) -> Result<TapeBox> {
    if boxes.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    let att = tape.param(store, ParamSlot::matrix(Block::Attention));
    let centers: Vec<NodeId> = boxes
        .iter()
        .map(|b| b.center)
        .chain(extra_centers.iter().copied())
        .collect();
    let logits: Vec<NodeId> = centers.iter().map(|&c| tape.mat_vec(att, c)).collect();
    let center = tape.softmax_pool(logits, centers);

    let min = tape.min_pool(boxes.iter().map(|b| b.offset).collect());
    let w_in = tape.param(store, ParamSlot::matrix(Block::DeepSetsIn));
    let w_hid = tape.param(store, ParamSlot::matrix(Block::DeepSetsHidden));
    let w_out = tape.param(store, ParamSlot::matrix(Block::DeepSetsOut));
    let mut hidden = Vec::with_capacity(boxes.len());
    for b in boxes {
        let h = tape.mat_vec(w_in, b.offset);
        let h = tape.relu(h);
        let g = tape.mat_vec(w_hid, h);
        hidden.push(tape.relu(g));
    }
    let pooled = tape.mean(hidden);
    let z = tape.mat_vec(w_out, pooled);
    let gate = tape.sigmoid(z);
    let offset = tape.mul(min, gate);
    Ok(TapeBox { center, offset })
}

pub fn box_of_query(tape: &mut Tape, store: &ParameterStore, plan: &QueryPlan) -> Result<TapeBox> {
    let relation_box = project_relation(tape, store, plan.subject, plan.relation);
    if plan.time == TimeConstraint::None {
        return Ok(relation_box);
    }
    let mut boxes = vec![relation_box];
    let mut extra = Vec::new();
    for t in plan.time.timestamps() {
        boxes.push(project_time(tape, store, plan.subject, t));
        if store.variant.relation_time_point {
            extra.push(relation_time_point(tape, store, plan.relation, t));
        }
    }
    intersect(tape, store, &boxes, &extra)
}

/// Distance from entity `e` to `b`, a scalar node.
pub fn entity_distance(tape: &mut Tape, store: &ParameterStore, e: EntityId, b: TapeBox) -> NodeId {
    let point = tape.param(store, ParamSlot::new(Block::Entity, e));
    tape.box_distance(point, b.center, b.offset, store.hyper.alpha)
}

/// Smoothness penalty over the time embeddings, or `None` when fewer than
/// two timestamps exist.
pub fn smoothness(tape: &mut Tape, store: &ParameterStore) -> Option<NodeId> {
    let n = store.num_times;
    if n < 2 {
        return None;
    }
    let rows: Vec<NodeId> = (0..n)
        .map(|i| tape.param(store, ParamSlot::new(Block::Time, i)))
        .collect();
    let terms: Vec<NodeId> = rows
        .windows(2)
        .map(|w| {
            let diff = tape.sub(w[1], w[0]);
            let sq = tape.mul(diff, diff);
            tape.sum_elements(sq)
        })
        .collect();
    let total = tape.sum(terms);
    Some(tape.affine(total, 1.0 / (n - 1) as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Hyper, Variant};
    use crate::rng::{stream, Stream};

    fn variants() -> Vec<Variant> {
        (0..16).map(|c| Variant::from_code(c).unwrap()).collect()
    }

    #[test]
    fn tape_forward_matches_pure_forward() {
        for variant in variants() {
            let mut rng = stream(11, Stream::Init);
            let store = ParameterStore::initialized(6, 5, 4, 7, variant, Hyper::default(), &mut rng);
            for time in [
                TimeConstraint::None,
                TimeConstraint::At(3),
                TimeConstraint::Between(1, 5),
                TimeConstraint::Between(2, 2),
            ] {
                let plan = QueryPlan::new(2, 3, time);
                let pure = store.box_of_query(&plan).unwrap();
                let mut tape = Tape::new();
                let b = box_of_query(&mut tape, &store, &plan).unwrap();
                for j in 0..6 {
                    assert!((tape.value(b.center)[j] - pure.center[j]).abs() <= 1e-12);
                    assert!((tape.value(b.offset)[j] - pure.offset[j]).abs() <= 1e-12);
                }
                for e in 0..5 {
                    let d = entity_distance(&mut tape, &store, e, b);
                    let want = crate::model::distance(store.entity_row(e), &pure, store.hyper.alpha).total;
                    assert!((tape.scalar(d) - want).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn smoothness_matches_store() {
        let mut rng = stream(2, Stream::Init);
        let store = ParameterStore::initialized(3, 2, 2, 6, Variant::default(), Hyper::default(), &mut rng);
        let mut tape = Tape::new();
        let root = smoothness(&mut tape, &store).unwrap();
        assert!((tape.scalar(root) - store.time_smoothness()).abs() < 1e-12);
        let one = ParameterStore::zeros(3, 2, 2, 1, Variant::default(), Hyper::default());
        assert!(smoothness(&mut Tape::new(), &one).is_none());
    }

    #[test]
    fn smoothness_gradient_formula() {
        let mut rng = stream(4, Stream::Init);
        let store = ParameterStore::initialized(3, 2, 2, 6, Variant::default(), Hyper::default(), &mut rng);
        let mut tape = Tape::new();
        let root = smoothness(&mut tape, &store).unwrap();
        let grads = tape.backward(root).unwrap();
        let n = store.num_times;
        let c = 2.0 / (n - 1) as f64;
        let row = |i: usize| store.slot(ParamSlot::new(Block::Time, i));
        for i in 0..n {
            let g = grads.get(ParamSlot::new(Block::Time, i)).unwrap();
            for j in 0..3 {
                let mut want = 0.0;
                if i > 0 {
                    want += row(i)[j] - row(i - 1)[j];
                }
                if i + 1 < n {
                    want += row(i)[j] - row(i + 1)[j];
                }
                assert!((g[j] - c * want).abs() < 1e-12, "row {i} dim {j}");
            }
        }
    }

    #[test]
    fn gradients_are_sparse() {
        let mut rng = stream(8, Stream::Init);
        let store = ParameterStore::initialized(4, 10, 6, 9, Variant::default(), Hyper::default(), &mut rng);
        let mut tape = Tape::new();
        let b = box_of_query(&mut tape, &store, &QueryPlan::new(1, 2, TimeConstraint::At(4))).unwrap();
        let d = entity_distance(&mut tape, &store, 7, b);
        let grads = tape.backward(d).unwrap();
        let slots: Vec<ParamSlot> = grads.slots().collect();
        let expected = [
            ParamSlot::new(Block::Entity, 1),
            ParamSlot::new(Block::Entity, 7),
            ParamSlot::new(Block::Relation, 2),
            ParamSlot::new(Block::RelationOffset, 2),
            ParamSlot::new(Block::Time, 4),
            ParamSlot::new(Block::TimeOffset, 4),
            ParamSlot::matrix(Block::Attention),
            ParamSlot::matrix(Block::DeepSetsIn),
            ParamSlot::matrix(Block::DeepSetsHidden),
            ParamSlot::matrix(Block::DeepSetsOut),
        ];
        assert_eq!(slots, expected);
    }
}
