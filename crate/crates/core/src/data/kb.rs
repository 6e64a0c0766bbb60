use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use super::filter::{FilterIndex, Split};
use super::parse::{read_statements, ParseOptions, RawStatement};
use super::{EntityId, RelationId, ScopeKind, Statement, TimeIndex, TimeScope};
use crate::error::{Error, Result};

/// Label to id mapping; ids are assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Consecutive years `origin ..= origin + len - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeAxis {
    pub origin: i32,
    pub len: usize,
}

impl TimeAxis {
    pub fn spanning(first: i32, last: i32) -> TimeAxis {
        assert!(first <= last, "empty year span {first}..={last}");
        TimeAxis {
            origin: first,
            len: (last - first) as usize + 1,
        }
    }

    pub fn last_year(&self) -> i32 {
        self.origin + self.len as i32 - 1
    }

    pub fn year(&self, t: TimeIndex) -> i32 {
        self.origin + t as i32
    }

    /// Index of `year`, or `None` when it is off the axis.
    pub fn index(&self, year: i32) -> Option<TimeIndex> {
        (self.len > 0 && year >= self.origin && year <= self.last_year())
            .then(|| (year - self.origin) as usize)
    }

    /// Index of `year` after clamping it onto the axis.
    pub fn clamp(&self, year: i32) -> TimeIndex {
        assert!(self.len > 0, "cannot clamp onto an empty axis");
        (year.clamp(self.origin, self.last_year()) - self.origin) as usize
    }
}

/// Per-kind statement counts of one split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScopeCounts {
    pub by_kind: BTreeMap<ScopeKind, usize>,
}

impl ScopeCounts {
    pub fn from_scopes<T: Copy>(scopes: impl IntoIterator<Item = TimeScope<T>>) -> Self {
        let mut by_kind = BTreeMap::new();
        for kind in ScopeKind::ALL {
            by_kind.insert(kind, 0);
        }
        for scope in scopes {
            *by_kind.entry(scope.kind()).or_default() += 1;
        }
        ScopeCounts { by_kind }
    }

    pub fn total(&self) -> usize {
        self.by_kind.values().sum()
    }

    pub fn get(&self, kind: ScopeKind) -> usize {
        self.by_kind.get(&kind).copied().unwrap_or(0)
    }
}

/// Dataset summary in the usual statistics-table layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetStats {
    pub entities: usize,
    pub relations: usize,
    pub first_year: Option<i32>,
    pub last_year: Option<i32>,
    pub splits: Vec<(Split, ScopeCounts)>,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "#entities\t{}", self.entities)?;
        writeln!(f, "#relations\t{}", self.relations)?;
        match (self.first_year, self.last_year) {
            (Some(a), Some(b)) => writeln!(f, "time period\t[{a}, {b}]")?,
            _ => writeln!(f, "time period\t-")?,
        }
        for (split, counts) in &self.splits {
            let rows = [
                ("#all", counts.total()),
                ("#time instant", counts.get(ScopeKind::Instant)),
                ("#start time only", counts.get(ScopeKind::RightOpen)),
                ("#end time only", counts.get(ScopeKind::LeftOpen)),
                ("#full time interval", counts.get(ScopeKind::Closed)),
                ("#no time", counts.get(ScopeKind::NoTime)),
            ];
            for (name, n) in rows {
                writeln!(f, "{}\t{}\t{}", split.name(), name, n)?;
            }
        }
        Ok(())
    }
}

/// An indexed temporal knowledge base. Immutable after construction.
#[derive(Debug, Clone)]
pub struct TemporalKB {
    pub entities: Vocab,
    pub relations: Vocab,
    pub axis: TimeAxis,
    pub train: Vec<Statement>,
    pub valid: Vec<Statement>,
    pub test: Vec<Statement>,
    pub filter: FilterIndex,
}

impl TemporalKB {
    /// Indexes raw statements. The axis spans the training years; scopes in
    /// the other splits are clamped onto it.
    pub fn from_raw(
        train: &[RawStatement],
        valid: &[RawStatement],
        test: &[RawStatement],
    ) -> Result<TemporalKB> {
        if train.is_empty() {
            return Err(Error::EmptyTraining);
        }
        let years = train.iter().flat_map(|s| s.scope.endpoints());
        let (first, last) = years.fold((None, None), |(lo, hi): (Option<i32>, Option<i32>), y| {
            (Some(lo.map_or(y, |l| l.min(y))), Some(hi.map_or(y, |h| h.max(y))))
        });
        let axis = match (first, last) {
            (Some(a), Some(b)) => TimeAxis::spanning(a, b),
            _ => {
                let other_temporal = valid.iter().chain(test).any(|s| s.scope.is_temporal());
                if other_temporal {
                    return Err(Error::InvalidConfig(
                        "training split has no timestamps but valid/test do".into(),
                    ));
                }
                TimeAxis { origin: 0, len: 0 }
            }
        };

        let mut entities = Vocab::default();
        let mut relations = Vocab::default();
        let mut index_split = |raw: &[RawStatement]| -> (Vec<Statement>, usize, usize) {
            let stmts = raw
                .iter()
                .map(|s| Statement {
                    subject: entities.intern(&s.subject),
                    relation: relations.intern(&s.relation),
                    object: entities.intern(&s.object),
                    scope: s.scope.map(|y| axis.clamp(y)),
                })
                .collect();
            (stmts, entities.len(), relations.len())
        };
        let (train, train_entities, train_relations) = index_split(train);
        let (valid, ..) = index_split(valid);
        let (test, ..) = index_split(test);
        if entities.len() > train_entities || relations.len() > train_relations {
            log::warn!(
                "{} entities and {} relations appear only outside the training split",
                entities.len() - train_entities,
                relations.len() - train_relations
            );
        }

        let mut kb = TemporalKB {
            entities,
            relations,
            axis,
            train,
            valid,
            test,
            filter: FilterIndex::default(),
        };
        let num_relations = kb.num_relations();
        let mut filter = FilterIndex::default();
        for split in Split::ALL {
            for stmt in kb.split(split) {
                filter.insert(stmt, num_relations, split);
            }
        }
        kb.filter = filter;
        Ok(kb)
    }

    pub fn load(train: &Path, valid: &Path, test: &Path, opts: &ParseOptions) -> Result<TemporalKB> {
        let train = read_statements(train, opts)?;
        let valid = read_statements(valid, opts)?;
        let test = read_statements(test, opts)?;
        TemporalKB::from_raw(&train, &valid, &test)
    }

    /// Loads `train`, `valid` and `test` from a directory; each may carry a
    /// `.txt` or `.tsv` extension.
    pub fn load_dir(dir: &Path, opts: &ParseOptions) -> Result<TemporalKB> {
        let [train, valid, test] = Split::ALL.map(|s| split_path(dir, s));
        TemporalKB::load(&train?, &valid?, &test?, opts)
    }

    pub fn split(&self, split: Split) -> &[Statement] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    /// Relations as they appear in the data.
    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    /// Relations seen by the model: each relation plus its inverse.
    pub fn num_model_relations(&self) -> usize {
        2 * self.relations.len()
    }

    pub fn inverse(&self, relation: RelationId) -> RelationId {
        let n = self.num_relations();
        if relation < n {
            relation + n
        } else {
            relation - n
        }
    }

    pub fn num_times(&self) -> usize {
        self.axis.len
    }

    /// Entity or relation label of a model relation, with `^-1` marking inverses.
    pub fn relation_label(&self, relation: RelationId) -> String {
        let n = self.num_relations();
        if relation < n {
            self.relations.label(relation).to_string()
        } else {
            format!("{}^-1", self.relations.label(relation - n))
        }
    }

    pub fn entity_id(&self, label: &str) -> Result<EntityId> {
        self.entities.get(label).ok_or_else(|| Error::UnknownLabel {
            kind: "entity",
            label: label.to_string(),
        })
    }

    pub fn relation_id(&self, label: &str) -> Result<RelationId> {
        if let Some(base) = label.strip_suffix("^-1") {
            if let Some(r) = self.relations.get(base) {
                return Ok(r + self.num_relations());
            }
        }
        self.relations.get(label).ok_or_else(|| Error::UnknownLabel {
            kind: "relation",
            label: label.to_string(),
        })
    }

    /// Entities that occur in the training split.
    pub fn training_entities(&self) -> HashSet<EntityId> {
        self.train.iter().flat_map(|s| [s.subject, s.object]).collect()
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            entities: self.num_entities(),
            relations: self.num_relations(),
            first_year: (self.axis.len > 0).then_some(self.axis.origin),
            last_year: (self.axis.len > 0).then(|| self.axis.last_year()),
            splits: Split::ALL
                .iter()
                .map(|&s| (s, ScopeCounts::from_scopes(self.split(s).iter().map(|st| st.scope))))
                .collect(),
        }
    }
}

fn split_path(dir: &Path, split: Split) -> Result<PathBuf> {
    let name = split.name();
    for candidate in [format!("{name}.txt"), format!("{name}.tsv"), name.to_string()] {
        let path = dir.join(candidate);
        if path.is_file() {
            return Ok(path);
        }
    }
    Err(Error::io(
        dir.join(format!("{name}.txt")),
        std::io::Error::new(std::io::ErrorKind::NotFound, "split file not found"),
    ))
}
