use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::GradientMap;
use crate::model::{Block, ParamSlot, ParameterStore};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub eps: f64,
    pub samples: usize,
    /// Relative error above which a coordinate counts as a failure.
    pub tolerance: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            eps: 1e-5,
            samples: 200,
            tolerance: 1e-4,
        }
    }
}

/// One checked coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSample {
    pub slot: ParamSlot,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
    /// The one-sided differences disagree: a non-differentiable point
    /// lies within `eps`.
    pub kink: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FdReport {
    pub samples: Vec<FdSample>,
}

impl FdReport {
    fn smooth(&self) -> impl Iterator<Item = &FdSample> {
        self.samples.iter().filter(|s| !s.kink)
    }

    /// Largest relative error over coordinates not flagged as kinks.
    pub fn max_rel_error(&self) -> f64 {
        self.smooth().fold(0.0, |m, s| m.max(s.rel_error))
    }

    pub fn kinks(&self) -> usize {
        self.samples.iter().filter(|s| s.kink).count()
    }

    pub fn failures(&self, tolerance: f64) -> usize {
        self.smooth().filter(|s| s.rel_error > tolerance).count()
    }

    /// Checked count and worst relative error per block.
    pub fn by_block(&self) -> BTreeMap<Block, (usize, f64)> {
        let mut out = BTreeMap::new();
        for s in self.smooth() {
            let e: &mut (usize, f64) = out.entry(s.slot.block).or_default();
            e.0 += 1;
            e.1 = e.1.max(s.rel_error);
        }
        out
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `grads` against central differences of `loss` at `params`.
/// Coordinates are drawn round-robin over the blocks present in `grads` so
/// that every parameter class is exercised. A coordinate whose one-sided
/// differences disagree and whose central difference misses the analytic
/// value is reported as a kink rather than an error.
pub fn finite_diff_check(
    loss: impl Fn(&ParameterStore) -> f64,
    params: &ParameterStore,
    grads: &GradientMap,
    opts: &FdOptions,
    rng: &mut impl Rng,
) -> FdReport {
    let mut by_block: BTreeMap<Block, Vec<ParamSlot>> = BTreeMap::new();
    for slot in grads.slots() {
        by_block.entry(slot.block).or_default().push(slot);
    }
    let classes: Vec<&Vec<ParamSlot>> = by_block.values().collect();
    let mut report = FdReport::default();
    if classes.is_empty() {
        return report;
    }
    let base = loss(params);
    let mut probe = params.clone();
    for k in 0..opts.samples {
        let slot = *classes[k % classes.len()].choose(rng).expect("non-empty class");
        let index = rng.gen_range(0..params.row_len(slot.block));
        let x = params.slot(slot)[index];
        probe.slot_mut(slot)[index] = x + opts.eps;
        let plus = loss(&probe);
        probe.slot_mut(slot)[index] = x - opts.eps;
        let minus = loss(&probe);
        probe.slot_mut(slot)[index] = x;

        let numeric = (plus - minus) / (2.0 * opts.eps);
        let analytic = grads.get(slot).map_or(0.0, |g| g[index]);
        let rel_error = relative_error(analytic, numeric);
        let forward = (plus - base) / opts.eps;
        let backward = (base - minus) / opts.eps;
        let kink = rel_error > opts.tolerance && relative_error(forward, backward) > opts.tolerance.max(1e-2);
        report.samples.push(FdSample {
            slot,
            index,
            analytic,
            numeric,
            rel_error,
            kink,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grad::{Tape, graph};
    use crate::model::{Hyper, Variant};
    use crate::rng::{stream, Stream};

    fn tiny(dim: usize) -> ParameterStore {
        ParameterStore::zeros(dim, 2, 2, 2, Variant::default(), Hyper::default())
    }

    fn distance_tape(store: &ParameterStore, alpha: f64) -> (Tape, usize) {
        let mut tape = Tape::new();
        let p = tape.param(store, ParamSlot::new(Block::Entity, 0));
        let c = tape.param(store, ParamSlot::new(Block::Entity, 1));
        let o = tape.param(store, ParamSlot::new(Block::RelationOffset, 0));
        let d = tape.box_distance(p, c, o, alpha);
        (tape, d)
    }

    #[test]
    fn l1_toy() {
        // a zero-width box turns the distance into |x - c|₁
        let mut store = tiny(2);
        store.entity[..2].copy_from_slice(&[2.0, -1.0]);
        let (tape, root) = distance_tape(&store, 0.3);
        assert_eq!(tape.scalar(root), 3.0);
        let g = tape.backward(root).unwrap();
        assert_eq!(g.get(ParamSlot::new(Block::Entity, 0)).unwrap(), &[1.0, -1.0]);
        assert_eq!(g.get(ParamSlot::new(Block::Entity, 1)).unwrap(), &[-1.0, 1.0]);
    }

    #[test]
    fn log_sigmoid_toy() {
        let mut store = tiny(1);
        store.entity[0] = 0.7;
        let mut tape = Tape::new();
        let x = tape.param(&store, ParamSlot::new(Block::Entity, 0));
        let y = tape.affine(x, -1.0, 2.0);
        let root = tape.log_sigmoid(y);
        let g = tape.backward(root).unwrap();
        // d/dx log σ(2 − x) = −σ(x − 2)
        let want = -1.0 / (1.0 + (-(0.7f64 - 2.0)).exp());
        assert!((g.get(ParamSlot::new(Block::Entity, 0)).unwrap()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn linear_toy_is_exact() {
        let mut rng = stream(3, Stream::Init);
        let store = ParameterStore::initialized(5, 2, 2, 2, Variant::default(), Hyper::default(), &mut rng);
        let mut tape = Tape::new();
        let x = tape.param(&store, ParamSlot::new(Block::Entity, 1));
        let a = tape.constant(vec![0.5, -2.0, 3.0, 1.25, -0.75]);
        let ax = tape.mul(a, x);
        let s = tape.sum_elements(ax);
        let root = tape.affine(s, 2.0, 1.0);
        let grads = tape.backward(root).unwrap();
        let opts = FdOptions {
            eps: 1e-3,
            samples: 20,
            tolerance: 1e-10,
        };
        let report = finite_diff_check(|p| tape.replay(p, root)[0], &store, &grads, &opts, &mut rng);
        assert!(report.max_rel_error() < 1e-10, "{}", report.max_rel_error());
        assert_eq!(report.kinks(), 0);
    }

    #[test]
    fn boundary_point_is_a_kink() {
        let mut store = tiny(1);
        store.entity[0] = 1.0; // point on the upper face
        store.entity[1] = 0.0;
        store.relation_offset[0] = 1.0;
        let (tape, root) = distance_tape(&store, 0.5);
        let grads = tape.backward(root).unwrap();
        // the derivative at the face itself is taken as 0
        assert_eq!(grads.get(ParamSlot::new(Block::Entity, 0)).unwrap(), &[0.0]);
        let mut rng = stream(1, Stream::Init);
        let opts = FdOptions {
            eps: 1e-6,
            samples: 9,
            tolerance: 1e-4,
        };
        let report = finite_diff_check(|p| tape.replay(p, root)[0], &store, &grads, &opts, &mut rng);
        assert!(report.kinks() > 0);
        assert_eq!(report.failures(1e-4), 0);
    }

    #[test]
    fn distance_gradients_all_regions() {
        let mut rng = stream(21, Stream::Init);
        for _ in 0..50 {
            let mut store = tiny(4);
            for v in store.entity.iter_mut() {
                *v = rng.gen_range(-3.0..3.0);
            }
            for v in store.relation_offset.iter_mut() {
                *v = rng.gen_range(0.1..2.0);
            }
            let (tape, root) = distance_tape(&store, 0.3);
            let grads = tape.backward(root).unwrap();
            let opts = FdOptions {
                eps: 1e-6,
                samples: 12,
                tolerance: 1e-6,
            };
            let report = finite_diff_check(|p| tape.replay(p, root)[0], &store, &grads, &opts, &mut rng);
            assert_eq!(report.failures(1e-6), 0, "{report:?}");
        }
    }

    #[test]
    fn model_graph_gradients() {
        use crate::model::{QueryPlan, TimeConstraint};
        for code in 0..16 {
            let variant = Variant::from_code(code).unwrap();
            let mut rng = stream(100 + code as u64, Stream::Init);
            let hyper = Hyper {
                gamma: 6.0,
                alpha: 0.2,
            };
            let store = ParameterStore::initialized(5, 6, 4, 5, variant, hyper, &mut rng);
            let mut tape = Tape::new();
            let plan = QueryPlan::new(0, 1, TimeConstraint::Between(1, 3));
            let b = graph::box_of_query(&mut tape, &store, &plan).unwrap();
            let dp = graph::entity_distance(&mut tape, &store, 2, b);
            let dn = graph::entity_distance(&mut tape, &store, 4, b);
            let pos = tape.affine(dp, -1.0, hyper.gamma);
            let pos = tape.log_sigmoid(pos);
            let neg = tape.affine(dn, 1.0, -hyper.gamma);
            let neg = tape.log_sigmoid(neg);
            let sum = tape.sum(vec![pos, neg]);
            let root = tape.affine(sum, -1.0, 0.0);
            let grads = tape.backward(root).unwrap();
            let opts = FdOptions {
                eps: 1e-4,
                samples: 90,
                tolerance: 1e-4,
            };
            let report = finite_diff_check(|p| tape.replay(p, root)[0], &store, &grads, &opts, &mut rng);
            assert_eq!(report.failures(1e-4), 0, "variant {variant}: {report:?}");
            assert!(report.kinks() * 10 <= report.samples.len());
            assert_eq!(report.by_block().len(), grads.slots().map(|s| s.block).collect::<std::collections::BTreeSet<_>>().len());
        }
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let store = tiny(3);
        let mut tape = Tape::new();
        let x = tape.param(&store, ParamSlot::new(Block::Entity, 0));
        assert!(matches!(tape.backward(x), Err(crate::Error::NonScalarRoot(3))));
    }

    #[test]
    fn replay_is_bit_exact() {
        let mut rng = stream(9, Stream::Init);
        let store = ParameterStore::initialized(4, 4, 4, 4, Variant::parse("tr").unwrap(), Hyper::default(), &mut rng);
        let mut tape = Tape::new();
        let plan = crate::model::QueryPlan::new(1, 2, crate::model::TimeConstraint::Between(0, 3));
        let b = graph::box_of_query(&mut tape, &store, &plan).unwrap();
        let d = graph::entity_distance(&mut tape, &store, 3, b);
        assert_eq!(tape.replay(&store, d)[0].to_bits(), tape.scalar(d).to_bits());
    }
}
