use std::collections::{BTreeMap, HashMap};

use super::{EntityId, RelationId, Statement, TimeIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }

    pub fn parse(name: &str) -> Option<Split> {
        match name.trim() {
            "train" => Some(Split::Train),
            "valid" => Some(Split::Valid),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// A set of splits, stored as bits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SplitMask(u8);

impl SplitMask {
    pub const TRAIN: SplitMask = SplitMask(1);
    pub const TRAIN_VALID: SplitMask = SplitMask(0b011);
    pub const ALL: SplitMask = SplitMask(0b111);

    pub fn of(split: Split) -> SplitMask {
        SplitMask(1 << split as u8)
    }

    pub fn with(self, split: Split) -> SplitMask {
        SplitMask(self.0 | SplitMask::of(split).0)
    }

    pub fn intersects(self, other: SplitMask) -> bool {
        self.0 & other.0 != 0
    }

    pub fn contains(self, split: Split) -> bool {
        self.intersects(SplitMask::of(split))
    }

    /// Parses a comma-separated list such as `train,valid`.
    pub fn parse(list: &str) -> Option<SplitMask> {
        let mut mask = SplitMask::default();
        for part in list.split(',').filter(|p| !p.trim().is_empty()) {
            mask = mask.with(Split::parse(part)?);
        }
        (mask.0 != 0).then_some(mask)
    }

    pub fn names(self) -> String {
        Split::ALL
            .iter()
            .filter(|s| self.contains(**s))
            .map(|s| s.name())
            .collect::<Vec<_>>()
            .join(",")
    }
}

type Answers = BTreeMap<EntityId, SplitMask>;

/// Known answers per query key, tagged with the splits asserting them.
///
/// Keys use model relation ids, so every statement is indexed in both
/// directions: `(s, r) -> o` and `(o, r + |R|) -> s`.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    atemporal: HashMap<(EntityId, RelationId), Answers>,
    timed: HashMap<(EntityId, RelationId, TimeIndex), Answers>,
}

fn matching(answers: Option<&Answers>, splits: SplitMask) -> impl Iterator<Item = EntityId> + '_ {
    answers
        .into_iter()
        .flat_map(|m| m.iter())
        .filter(move |(_, mask)| mask.intersects(splits))
        .map(|(e, _)| *e)
}

impl FilterIndex {
    pub(crate) fn insert(&mut self, stmt: &Statement, num_relations: usize, split: Split) {
        let inverse = stmt.relation + num_relations;
        for (head, rel, tail) in [
            (stmt.subject, stmt.relation, stmt.object),
            (stmt.object, inverse, stmt.subject),
        ] {
            let slot = self.atemporal.entry((head, rel)).or_default().entry(tail).or_default();
            *slot = slot.with(split);
            if let Some(times) = stmt.scope.discretize() {
                for t in times {
                    let slot = self.timed.entry((head, rel, t)).or_default().entry(tail).or_default();
                    *slot = slot.with(split);
                }
            }
        }
    }

    /// Objects asserted for `(s, r)` under any scope in `splits`.
    pub fn atemporal_answers(
        &self,
        subject: EntityId,
        relation: RelationId,
        splits: SplitMask,
    ) -> impl Iterator<Item = EntityId> + '_ {
        matching(self.atemporal.get(&(subject, relation)), splits)
    }

    /// Objects asserted for `(s, r)` at timestamp `t` in `splits`.
    pub fn timed_answers(
        &self,
        subject: EntityId,
        relation: RelationId,
        t: TimeIndex,
        splits: SplitMask,
    ) -> impl Iterator<Item = EntityId> + '_ {
        matching(self.timed.get(&(subject, relation, t)), splits)
    }

    pub fn holds(
        &self,
        subject: EntityId,
        relation: RelationId,
        object: EntityId,
        splits: SplitMask,
    ) -> bool {
        self.atemporal
            .get(&(subject, relation))
            .and_then(|m| m.get(&object))
            .is_some_and(|mask| mask.intersects(splits))
    }

    pub fn holds_at(
        &self,
        subject: EntityId,
        relation: RelationId,
        object: EntityId,
        t: TimeIndex,
        splits: SplitMask,
    ) -> bool {
        self.timed
            .get(&(subject, relation, t))
            .and_then(|m| m.get(&object))
            .is_some_and(|mask| mask.intersects(splits))
    }
}
