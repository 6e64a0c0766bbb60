use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::boxes::{distance_parts, mat_vec};
use crate::model::{log_sigmoid, sigmoid, ParamSlot, ParameterStore};

/// Index of a node on a [`Tape`].
pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Param(ParamSlot),
    Constant,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Relu(NodeId),
    Sigmoid(NodeId),
    LogSigmoid(NodeId),
    /// `scale·x + shift`, elementwise.
    Affine {
        input: NodeId,
        scale: f64,
        shift: f64,
    },
    /// Row-major `d × d` matrix times a vector.
    MatVec {
        matrix: NodeId,
        vector: NodeId,
    },
    /// Per-dimension softmax over `logits`, used to average `values`.
    Softmax {
        logits: Vec<NodeId>,
        values: Vec<NodeId>,
    },
    MinPool(Vec<NodeId>),
    Mean(Vec<NodeId>),
    Sum(Vec<NodeId>),
    /// Sum of the elements of one vector.
    SumElements(NodeId),
    /// `α·d_in + d_out` between a point and a box, a scalar.
    BoxDistance {
        point: NodeId,
        center: NodeId,
        offset: NodeId,
        alpha: f64,
    },
}

/// A reverse-mode tape over vector-valued nodes. Scalars are vectors of
/// length one. Parameter leaves are deduplicated by slot.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    ops: Vec<Op>,
    values: Vec<Vec<f64>>,
    leaves: BTreeMap<ParamSlot, NodeId>,
}

fn softmax_weights(logits: &[&[f64]], j: usize) -> Vec<f64> {
    let max = logits.iter().map(|a| a[j]).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|a| (a[j] - max).exp()).collect();
    let norm: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / norm).collect()
}

fn zip_with(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// Forward value of a non-leaf op.
fn eval_derived(op: &Op, values: &[Vec<f64>]) -> Vec<f64> {
    let v = |id: NodeId| values[id].as_slice();
    match op {
        Op::Param(_) | Op::Constant => unreachable!("leaves are not evaluated"),
        Op::Add(a, b) => zip_with(v(*a), v(*b), |x, y| x + y),
        Op::Sub(a, b) => zip_with(v(*a), v(*b), |x, y| x - y),
        Op::Mul(a, b) => zip_with(v(*a), v(*b), |x, y| x * y),
        Op::Relu(a) => v(*a).iter().map(|x| x.max(0.0)).collect(),
        Op::Sigmoid(a) => v(*a).iter().map(|&x| sigmoid(x)).collect(),
        Op::LogSigmoid(a) => v(*a).iter().map(|&x| log_sigmoid(x)).collect(),
        Op::Affine {
            input,
            scale,
            shift,
        } => v(*input).iter().map(|x| scale * x + shift).collect(),
        Op::MatVec { matrix, vector } => mat_vec(v(*matrix), v(*vector)),
        Op::Softmax { logits, values: vals } => {
            let logits: Vec<&[f64]> = logits.iter().map(|&id| v(id)).collect();
            let centers: Vec<&[f64]> = vals.iter().map(|&id| v(id)).collect();
            (0..centers[0].len())
                .map(|j| {
                    softmax_weights(&logits, j)
                        .iter()
                        .zip(&centers)
                        .map(|(p, c)| p * c[j])
                        .sum()
                })
                .collect()
        }
        Op::MinPool(inputs) => {
            let mut min = v(inputs[0]).to_vec();
            for &id in &inputs[1..] {
                for (m, &x) in min.iter_mut().zip(v(id)) {
                    if x < *m {
                        *m = x;
                    }
                }
            }
            min
        }
        Op::Mean(inputs) | Op::Sum(inputs) => {
            let mut out = vec![0.0; v(inputs[0]).len()];
            for &id in inputs {
                for (o, x) in out.iter_mut().zip(v(id)) {
                    *o += x;
                }
            }
            if let Op::Mean(_) = op {
                let n = inputs.len() as f64;
                for o in out.iter_mut() {
                    *o /= n;
                }
            }
            out
        }
        Op::SumElements(a) => vec![v(*a).iter().sum()],
        Op::BoxDistance {
            point,
            center,
            offset,
            alpha,
        } => vec![distance_parts(v(*point), v(*center), v(*offset), *alpha).total],
    }
}

fn accumulate(adj: &mut [Vec<f64>], len: usize, id: NodeId, g: impl Iterator<Item = f64>) {
    if adj[id].is_empty() {
        adj[id] = vec![0.0; len];
    }
    for (a, x) in adj[id].iter_mut().zip(g) {
        *a += x;
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.values[id]
    }

    /// Value of a scalar node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        self.values[id][0]
    }

    /// Leaf reading `slot` from `store`; recorded once per slot.
    pub fn param(&mut self, store: &ParameterStore, slot: ParamSlot) -> NodeId {
        if let Some(&id) = self.leaves.get(&slot) {
            return id;
        }
        self.ops.push(Op::Param(slot));
        self.values.push(store.slot(slot).to_vec());
        let id = self.ops.len() - 1;
        self.leaves.insert(slot, id);
        id
    }

    /// A leaf that carries no gradient.
    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.ops.push(Op::Constant);
        self.values.push(value);
        self.ops.len() - 1
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.derived(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.derived(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.derived(Op::Mul(a, b))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.derived(Op::Relu(a))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.derived(Op::Sigmoid(a))
    }

    pub fn log_sigmoid(&mut self, a: NodeId) -> NodeId {
        self.derived(Op::LogSigmoid(a))
    }

    pub fn affine(&mut self, input: NodeId, scale: f64, shift: f64) -> NodeId {
        self.derived(Op::Affine {
            input,
            scale,
            shift,
        })
    }

    pub fn mat_vec(&mut self, matrix: NodeId, vector: NodeId) -> NodeId {
        self.derived(Op::MatVec { matrix, vector })
    }

    pub fn softmax_pool(&mut self, logits: Vec<NodeId>, values: Vec<NodeId>) -> NodeId {
        assert_eq!(logits.len(), values.len());
        assert!(!values.is_empty());
        self.derived(Op::Softmax { logits, values })
    }

    pub fn min_pool(&mut self, inputs: Vec<NodeId>) -> NodeId {
        assert!(!inputs.is_empty());
        self.derived(Op::MinPool(inputs))
    }

    pub fn mean(&mut self, inputs: Vec<NodeId>) -> NodeId {
        assert!(!inputs.is_empty());
        self.derived(Op::Mean(inputs))
    }

    pub fn sum(&mut self, inputs: Vec<NodeId>) -> NodeId {
        assert!(!inputs.is_empty());
        self.derived(Op::Sum(inputs))
    }

    pub fn sum_elements(&mut self, a: NodeId) -> NodeId {
        self.derived(Op::SumElements(a))
    }

    pub fn box_distance(&mut self, point: NodeId, center: NodeId, offset: NodeId, alpha: f64) -> NodeId {
        self.derived(Op::BoxDistance {
            point,
            center,
            offset,
            alpha,
        })
    }

    fn derived(&mut self, op: Op) -> NodeId {
        let value = eval_derived(&op, &self.values);
        self.ops.push(op);
        self.values.push(value);
        self.ops.len() - 1
    }

    /// Recomputes every node from `store` and returns the value of `root`.
    /// Uses the same arithmetic as recording, so the result is bit-identical
    /// when `store` is unchanged.
    pub fn replay(&self, store: &ParameterStore, root: NodeId) -> Vec<f64> {
        let mut values: Vec<Vec<f64>> = Vec::with_capacity(root + 1);
        for (id, op) in self.ops[..=root].iter().enumerate() {
            let value = match op {
                Op::Constant => self.values[id].clone(),
                Op::Param(slot) => store.slot(*slot).to_vec(),
                other => eval_derived(other, &values),
            };
            values.push(value);
        }
        values.pop().unwrap_or_default()
    }

    /// Gradient of the scalar `root` with respect to every parameter leaf.
    pub fn backward(&self, root: NodeId) -> Result<GradientMap> {
        if self.values[root].len() != 1 {
            return Err(Error::NonScalarRoot(self.values[root].len()));
        }
        let mut adj: Vec<Vec<f64>> = vec![Vec::new(); root + 1];
        adj[root] = vec![1.0];
        let mut grads = GradientMap::default();
        for id in (0..=root).rev() {
            if adj[id].is_empty() {
                continue;
            }
            let g = std::mem::take(&mut adj[id]);
            let val = |n: NodeId| self.values[n].as_slice();
            let len = |n: NodeId| self.values[n].len();
            match &self.ops[id] {
                Op::Param(slot) => {
                    grads.entries.insert(*slot, g);
                }
                Op::Constant => {}
                Op::Add(a, b) => {
                    accumulate(&mut adj, len(*a), *a, g.iter().copied());
                    accumulate(&mut adj, len(*b), *b, g.iter().copied());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, len(*a), *a, g.iter().copied());
                    accumulate(&mut adj, len(*b), *b, g.iter().map(|x| -x));
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (val(*a), val(*b));
                    accumulate(&mut adj, len(*a), *a, g.iter().zip(vb).map(|(g, y)| g * y));
                    accumulate(&mut adj, len(*b), *b, g.iter().zip(va).map(|(g, x)| g * x));
                }
                Op::Relu(a) => {
                    let va = val(*a);
                    accumulate(&mut adj, len(*a), *a, g.iter().zip(va).map(|(g, &x)| g * ind(x > 0.0)));
                }
                Op::Sigmoid(a) => {
                    let y = val(id);
                    accumulate(&mut adj, len(*a), *a, g.iter().zip(y).map(|(g, y)| g * y * (1.0 - y)));
                }
                Op::LogSigmoid(a) => {
                    let va = val(*a);
                    accumulate(&mut adj, len(*a), *a, g.iter().zip(va).map(|(g, &x)| g * sigmoid(-x)));
                }
                Op::Affine { input, scale, .. } => {
                    accumulate(&mut adj, len(*input), *input, g.iter().map(|g| g * scale));
                }
                Op::MatVec { matrix, vector } => {
                    let (w, x) = (val(*matrix), val(*vector));
                    let d = x.len();
                    let dw: Vec<f64> = (0..d * d).map(|k| g[k / d] * x[k % d]).collect();
                    let dx: Vec<f64> = (0..d)
                        .map(|j| (0..d).map(|i| g[i] * w[i * d + j]).sum())
                        .collect();
                    accumulate(&mut adj, d * d, *matrix, dw.into_iter());
                    accumulate(&mut adj, d, *vector, dx.into_iter());
                }
                Op::Softmax { logits, values } => {
                    let ls: Vec<&[f64]> = logits.iter().map(|&n| val(n)).collect();
                    let cs: Vec<&[f64]> = values.iter().map(|&n| val(n)).collect();
                    let out = val(id);
                    let d = out.len();
                    let n = cs.len();
                    let mut dl = vec![vec![0.0; d]; n];
                    let mut dc = vec![vec![0.0; d]; n];
                    for j in 0..d {
                        let p = softmax_weights(&ls, j);
                        for i in 0..n {
                            dc[i][j] = g[j] * p[i];
                            dl[i][j] = p[i] * g[j] * (cs[i][j] - out[j]);
                        }
                    }
                    for i in 0..n {
                        accumulate(&mut adj, d, values[i], dc[i].iter().copied());
                        accumulate(&mut adj, d, logits[i], dl[i].iter().copied());
                    }
                }
                Op::MinPool(inputs) => {
                    let d = g.len();
                    let mut owner = vec![0usize; d];
                    let mut min = val(inputs[0]).to_vec();
                    for (k, &n) in inputs.iter().enumerate().skip(1) {
                        for j in 0..d {
                            if val(n)[j] < min[j] {
                                min[j] = val(n)[j];
                                owner[j] = k;
                            }
                        }
                    }
                    for (k, &n) in inputs.iter().enumerate() {
                        let gk = (0..d).map(|j| if owner[j] == k { g[j] } else { 0.0 });
                        accumulate(&mut adj, d, n, gk);
                    }
                }
                Op::Mean(inputs) => {
                    let scale = 1.0 / inputs.len() as f64;
                    for &n in inputs {
                        accumulate(&mut adj, len(n), n, g.iter().map(|g| g * scale));
                    }
                }
                Op::Sum(inputs) => {
                    for &n in inputs {
                        accumulate(&mut adj, len(n), n, g.iter().copied());
                    }
                }
                Op::SumElements(a) => {
                    let l = len(*a);
                    accumulate(&mut adj, l, *a, std::iter::repeat(g[0]).take(l));
                }
                Op::BoxDistance {
                    point,
                    center,
                    offset,
                    alpha,
                } => {
                    let (ps, cs, os) = (val(*point), val(*center), val(*offset));
                    let d = ps.len();
                    let (mut gp, mut gc, mut go) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
                    for j in 0..d {
                        let (p, c, o) = (ps[j], cs[j], os[j]);
                        let (lo, hi) = (c - o, c + o);
                        let q = lo.max(p);
                        let s = sign(c - hi.min(q));
                        let g_hi = -ind(p > hi) - alpha * s * ind(hi < q);
                        let g_lo = ind(lo > p) - alpha * s * ind(q < hi) * ind(lo > p);
                        let g_p = ind(p > hi) - ind(lo > p) - alpha * s * ind(q < hi) * ind(p > lo);
                        gp[j] = g[0] * g_p;
                        gc[j] = g[0] * (alpha * s + g_hi + g_lo);
                        go[j] = g[0] * (g_hi - g_lo);
                    }
                    accumulate(&mut adj, d, *point, gp.into_iter());
                    accumulate(&mut adj, d, *center, gc.into_iter());
                    accumulate(&mut adj, d, *offset, go.into_iter());
                }
            }
        }
        for (&slot, &id) in &self.leaves {
            if id <= root {
                grads
                    .entries
                    .entry(slot)
                    .or_insert_with(|| vec![0.0; self.values[id].len()]);
            }
        }
        Ok(grads)
    }
}

/// Gradient per touched parameter row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradientMap {
    entries: BTreeMap<ParamSlot, Vec<f64>>,
}

impl GradientMap {
    pub fn get(&self, slot: ParamSlot) -> Option<&[f64]> {
        self.entries.get(&slot).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ParamSlot, &Vec<f64>)> {
        self.entries.iter()
    }

    pub fn slots(&self) -> impl Iterator<Item = ParamSlot> + '_ {
        self.entries.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `self += weight · other`.
    pub fn accumulate(&mut self, other: &GradientMap, weight: f64) {
        for (slot, g) in &other.entries {
            let dst = self
                .entries
                .entry(*slot)
                .or_insert_with(|| vec![0.0; g.len()]);
            for (a, b) in dst.iter_mut().zip(g) {
                *a += weight * b;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .values()
            .flatten()
            .fold(0.0, |m: f64, x| m.max(x.abs()))
    }
}
