use rand::Rng;

use crate::data::{EntityId, RelationId, Statement, TimeIndex, TimeScope};

/// Time constraints of a query: none, one timestamp, or a sub-interval
/// given by its two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeConstraint {
    None,
    At(TimeIndex),
    Between(TimeIndex, TimeIndex),
}

impl TimeConstraint {
    pub fn timestamps(&self) -> impl Iterator<Item = TimeIndex> {
        let (a, b) = match *self {
            TimeConstraint::None => (None, None),
            TimeConstraint::At(t) => (Some(t), None),
            TimeConstraint::Between(s, e) => (Some(s), Some(e)),
        };
        a.into_iter().chain(b)
    }

    pub fn len(&self) -> usize {
        match self {
            TimeConstraint::None => 0,
            TimeConstraint::At(_) => 1,
            TimeConstraint::Between(..) => 2,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A query `(s, r, ?o, time)` ready to be turned into an answer box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QueryPlan {
    pub subject: EntityId,
    pub relation: RelationId,
    pub time: TimeConstraint,
}

impl QueryPlan {
    pub fn new(subject: EntityId, relation: RelationId, time: TimeConstraint) -> Self {
        QueryPlan {
            subject,
            relation,
            time,
        }
    }

    /// Training query for a statement, read in the direction given by
    /// `subject`/`relation`. Half-open intervals use their known endpoint; a
    /// closed interval contributes one uniformly drawn year, or with
    /// `sample_interval` an ordered pair drawn with replacement.
    pub fn for_training(
        stmt: &Statement,
        subject: EntityId,
        relation: RelationId,
        sample_interval: bool,
        rng: &mut impl Rng,
    ) -> Self {
        let time = match stmt.scope {
            TimeScope::NoTime => TimeConstraint::None,
            TimeScope::Instant(t) | TimeScope::RightOpen(t) | TimeScope::LeftOpen(t) => {
                TimeConstraint::At(t)
            }
            TimeScope::Closed(a, b) if sample_interval => {
                let (x, y) = (rng.gen_range(a..=b), rng.gen_range(a..=b));
                TimeConstraint::Between(x.min(y), x.max(y))
            }
            TimeScope::Closed(a, b) => TimeConstraint::At(rng.gen_range(a..=b)),
        };
        QueryPlan::new(subject, relation, time)
    }
}
