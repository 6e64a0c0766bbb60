use super::{ParameterStore, Projector, QueryPlan, TimeConstraint};
use crate::data::{EntityId, RelationId, TimeIndex};
use crate::error::{Error, Result};

/// An axis-aligned box given by its center and nonnegative half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxEmbedding {
    pub center: Vec<f64>,
    pub offset: Vec<f64>,
}

impl BoxEmbedding {
    pub fn new(center: Vec<f64>, offset: Vec<f64>) -> Self {
        assert_eq!(center.len(), offset.len());
        BoxEmbedding { center, offset }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Bottom-left corner.
    pub fn lower(&self) -> Vec<f64> {
        self.center.iter().zip(&self.offset).map(|(c, o)| c - o).collect()
    }

    /// Top-right corner.
    pub fn upper(&self) -> Vec<f64> {
        self.center.iter().zip(&self.offset).map(|(c, o)| c + o).collect()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.center.iter().zip(&self.offset))
            .all(|(p, (c, o))| c - o <= *p && *p <= c + o)
    }
}

/// Point-to-box distance split into its two parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    /// L1 distance from the point to the box surface (0 inside).
    pub outside: f64,
    /// L1 distance from the center to the point's projection onto the box.
    pub inside: f64,
    /// `α·inside + outside`.
    pub total: f64,
}

pub fn distance(point: &[f64], b: &BoxEmbedding, alpha: f64) -> Distance {
    distance_parts(point, &b.center, &b.offset, alpha)
}

pub(crate) fn distance_parts(point: &[f64], center: &[f64], offset: &[f64], alpha: f64) -> Distance {
    let (mut outside, mut inside) = (0.0, 0.0);
    for ((&p, &c), &o) in point.iter().zip(center).zip(offset) {
        let (lo, hi) = (c - o, c + o);
        outside += (p - hi).max(0.0) + (lo - p).max(0.0);
        inside += (c - hi.min(lo.max(p))).abs();
    }
    Distance {
        outside,
        inside,
        total: alpha * inside + outside,
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow for large `|x|`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `log σ(γ − D(point, box))`; higher is better.
pub fn score(point: &[f64], b: &BoxEmbedding, gamma: f64, alpha: f64) -> f64 {
    log_sigmoid(gamma - distance(point, b, alpha).total)
}

pub(crate) fn mat_vec(matrix: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    debug_assert_eq!(matrix.len(), d * d);
    matrix
        .chunks_exact(d)
        .map(|row| row.iter().zip(v).map(|(w, x)| w * x).sum())
        .collect()
}

impl ParameterStore {
    fn project(&self, subject: EntityId, by: &[f64]) -> Vec<f64> {
        let e = self.entity_row(subject);
        match self.variant.projector {
            Projector::Translation => e.iter().zip(by).map(|(a, b)| a + b).collect(),
            Projector::Multiplicative => e.iter().zip(by).map(|(a, b)| a * b).collect(),
        }
    }

    fn row<'a>(&'a self, block: &'a [f64], i: usize) -> &'a [f64] {
        &block[i * self.dim..(i + 1) * self.dim]
    }

    /// Box of the objects related to `subject` by `relation`, ignoring time.
    pub fn project_relation(&self, subject: EntityId, relation: RelationId) -> BoxEmbedding {
        BoxEmbedding {
            center: self.project(subject, self.row(&self.relation, relation)),
            offset: self.row(&self.relation_offset, relation).to_vec(),
        }
    }

    /// Box of the objects co-occurring with `subject` at timestamp `t`.
    pub fn project_time(&self, subject: EntityId, t: TimeIndex) -> BoxEmbedding {
        BoxEmbedding {
            center: self.project(subject, self.row(&self.time, t)),
            offset: self.row(&self.time_offset, t).to_vec(),
        }
    }

    /// The point `r + t` used by the relation-time variant.
    pub fn relation_time_point(&self, relation: RelationId, t: TimeIndex) -> Vec<f64> {
        self.row(&self.relation, relation)
            .iter()
            .zip(self.row(&self.time, t))
            .map(|(a, b)| a + b)
            .collect()
    }

    /// Intersection of `boxes`. The center is a per-dimension softmax
    /// attention over the box centers and `extra_centers`; the offset is the
    /// elementwise minimum offset scaled by a sigmoid gate computed by a
    /// DeepSets network over the offsets.
    pub fn intersect(&self, boxes: &[BoxEmbedding], extra_centers: &[Vec<f64>]) -> Result<BoxEmbedding> {
        if boxes.is_empty() {
            return Err(Error::EmptyIntersection);
        }
        let d = self.dim;
        let centers: Vec<&[f64]> = boxes
            .iter()
            .map(|b| b.center.as_slice())
            .chain(extra_centers.iter().map(Vec::as_slice))
            .collect();
        let logits: Vec<Vec<f64>> = centers.iter().map(|c| mat_vec(&self.attention, c)).collect();
        let mut center = vec![0.0; d];
        for j in 0..d {
            let max = logits.iter().map(|a| a[j]).fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logits.iter().map(|a| (a[j] - max).exp()).collect();
            let norm: f64 = weights.iter().sum();
            center[j] = weights
                .iter()
                .zip(&centers)
                .map(|(w, c)| (w / norm) * c[j])
                .sum();
        }

        let mut min = boxes[0].offset.clone();
        for b in &boxes[1..] {
            for (m, o) in min.iter_mut().zip(&b.offset) {
                if *o < *m {
                    *m = *o;
                }
            }
        }
        let mut pooled = vec![0.0; d];
        for b in boxes {
            let h: Vec<f64> = mat_vec(&self.deepsets_in, &b.offset)
                .into_iter()
                .map(|x| x.max(0.0))
                .collect();
            let g = mat_vec(&self.deepsets_hidden, &h);
            for (p, x) in pooled.iter_mut().zip(g) {
                *p += x.max(0.0);
            }
        }
        let n = boxes.len() as f64;
        for p in pooled.iter_mut() {
            *p /= n;
        }
        let gate = mat_vec(&self.deepsets_out, &pooled);
        let offset = min.iter().zip(gate).map(|(m, z)| m * sigmoid(z)).collect();
        Ok(BoxEmbedding { center, offset })
    }

    /// Answer box of a query: the relation box alone for atemporal queries,
    /// otherwise its intersection with one time box per timestamp.
    pub fn box_of_query(&self, plan: &QueryPlan) -> Result<BoxEmbedding> {
        let relation_box = self.project_relation(plan.subject, plan.relation);
        if plan.time == TimeConstraint::None {
            return Ok(relation_box);
        }
        let mut boxes = vec![relation_box];
        let mut extra = Vec::new();
        for t in plan.time.timestamps() {
            boxes.push(self.project_time(plan.subject, t));
            if self.variant.relation_time_point {
                extra.push(self.relation_time_point(plan.relation, t));
            }
        }
        self.intersect(&boxes, &extra)
    }

    /// Score of every entity as the answer to `b`.
    pub fn score_all(&self, b: &BoxEmbedding) -> Vec<f64> {
        let (gamma, alpha) = (self.hyper.gamma, self.hyper.alpha);
        self.entity
            .chunks_exact(self.dim)
            .map(|e| score(e, b, gamma, alpha))
            .collect()
    }
}
