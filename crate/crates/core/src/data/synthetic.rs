//! Seeded generator for small temporal KBs with a known ground truth.
//!
//! Each rule is a `(subject, relation)` pair whose object changes over time:
//! the axis is cut into consecutive segments (with occasional gaps) and every
//! segment gets one object. A planted fact is then published as several
//! statements of different kinds (the closed interval, a start-only and an
//! end-only view, a sampled instant, an atemporal view) which are scattered
//! over the three splits.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use super::kb::TemporalKB;
use super::parse::RawStatement;
use super::{Split, TimeScope};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub entities: usize,
    pub relations: usize,
    pub axis_len: usize,
    /// Number of `(subject, relation)` timelines.
    pub rules: usize,
    /// Calendar year of the first timestamp.
    pub origin: i32,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            entities: 50,
            relations: 5,
            axis_len: 40,
            rules: 100,
            origin: 1980,
        }
    }
}

/// One planted fact: `object` is the answer to `(subject, relation, ?o, y)`
/// for every year `y` in `first..=last`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlantedFact {
    pub subject: String,
    pub relation: String,
    pub object: String,
    pub first: i32,
    pub last: i32,
}

/// A row of the manifest table `s r o start end split`. Planted facts use the
/// split name `planted`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub statement: RawStatement,
    pub split: String,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub config: SyntheticConfig,
    pub facts: Vec<PlantedFact>,
    pub train: Vec<RawStatement>,
    pub valid: Vec<RawStatement>,
    pub test: Vec<RawStatement>,
}

const MIN_SEGMENT: usize = 3;
const MAX_SEGMENT: usize = 12;

impl SyntheticDataset {
    pub fn generate(config: &SyntheticConfig) -> Result<SyntheticDataset> {
        if config.entities < 2 || config.relations < 2 || config.axis_len < 2 {
            return Err(Error::Infeasible(
                "entities, relations and axis length must each be at least 2".into(),
            ));
        }
        if config.rules == 0 {
            return Err(Error::Infeasible("at least one rule is required".into()));
        }
        let capacity = config.entities * config.relations;
        if config.rules > capacity {
            return Err(Error::Infeasible(format!(
                "{} rules exceed the {} available (subject, relation) pairs",
                config.rules, capacity
            )));
        }

        let mut rng = stream(config.seed, Stream::Synthetic);
        let mut pairs: Vec<(usize, usize)> = (0..config.entities)
            .flat_map(|s| (0..config.relations).map(move |r| (s, r)))
            .collect();
        pairs.shuffle(&mut rng);
        pairs.truncate(config.rules);
        pairs.sort_unstable();

        let year = |t: usize| config.origin + t as i32;
        let entity = |e: usize| format!("e{e}");
        let relation = |r: usize| format!("r{r}");

        let mut facts = Vec::new();
        for &(s, r) in &pairs {
            let mut t = 0;
            let mut prev: Option<usize> = None;
            while t < config.axis_len {
                let len = rng.gen_range(MIN_SEGMENT..=MAX_SEGMENT);
                let end = (t + len - 1).min(config.axis_len - 1);
                // consecutive segments change object whenever another one exists
                let may_repeat = config.entities < 3;
                let object = loop {
                    let o = rng.gen_range(0..config.entities);
                    if o != s && (may_repeat || Some(o) != prev) {
                        break o;
                    }
                };
                facts.push(PlantedFact {
                    subject: entity(s),
                    relation: relation(r),
                    object: entity(object),
                    first: year(t),
                    last: year(end),
                });
                prev = Some(object);
                t = end + 1;
                if rng.gen_bool(0.2) {
                    let gap = rng.gen_range(1..=3);
                    if t + gap < config.axis_len {
                        t += gap;
                    }
                }
            }
        }

        // Publish each fact as several statements; the first statement of
        // the first and last fact of the first rule stays in training so
        // the training span covers the whole axis.
        let first_rule = (&facts[0].subject, &facts[0].relation);
        let last_of_first_rule = facts
            .iter()
            .rposition(|f| (&f.subject, &f.relation) == first_rule)
            .unwrap_or(0);

        let mut seen = BTreeSet::new();
        let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for (i, fact) in facts.iter().enumerate() {
            let (a, b) = (fact.first, fact.last);
            let mut scopes = vec![if a == b {
                TimeScope::Instant(a)
            } else {
                TimeScope::Closed(a, b)
            }];
            if rng.gen_bool(0.5) {
                scopes.push(TimeScope::RightOpen(a));
            }
            if rng.gen_bool(0.5) {
                scopes.push(TimeScope::LeftOpen(b));
            }
            if rng.gen_bool(0.8) {
                scopes.push(TimeScope::Instant(rng.gen_range(a..=b)));
            }
            if rng.gen_bool(0.3) {
                scopes.push(TimeScope::NoTime);
            }
            for (j, scope) in scopes.into_iter().enumerate() {
                let stmt = RawStatement::new(&fact.subject, &fact.relation, &fact.object, scope);
                let draw: f64 = rng.gen();
                if !seen.insert(stmt.clone()) {
                    continue;
                }
                let pinned = j == 0 && (i == 0 || i == last_of_first_rule);
                let split = if pinned || draw < 0.8 {
                    &mut train
                } else if draw < 0.9 {
                    &mut valid
                } else {
                    &mut test
                };
                split.push(stmt);
            }
        }

        Ok(SyntheticDataset {
            config: config.clone(),
            facts,
            train,
            valid,
            test,
        })
    }

    pub fn split(&self, split: Split) -> &[RawStatement] {
        match split {
            Split::Train => &self.train,
            Split::Valid => &self.valid,
            Split::Test => &self.test,
        }
    }

    pub fn to_kb(&self) -> Result<TemporalKB> {
        TemporalKB::from_raw(&self.train, &self.valid, &self.test)
    }

    /// Objects planted as valid for `(subject, relation)` in `year`.
    pub fn valid_objects(&self, subject: &str, relation: &str, year: i32) -> Vec<String> {
        self.facts
            .iter()
            .filter(|f| f.subject == subject && f.relation == relation)
            .filter(|f| (f.first..=f.last).contains(&year))
            .map(|f| f.object.clone())
            .collect()
    }

    pub fn manifest(&self) -> Vec<ManifestRow> {
        let planted = self.facts.iter().map(|f| ManifestRow {
            statement: RawStatement::new(
                &f.subject,
                &f.relation,
                &f.object,
                TimeScope::Closed(f.first, f.last),
            ),
            split: "planted".to_string(),
        });
        let emitted = Split::ALL.into_iter().flat_map(|split| {
            self.split(split).iter().map(move |s| ManifestRow {
                statement: s.clone(),
                split: split.name().to_string(),
            })
        });
        planted.chain(emitted).collect()
    }

    pub fn manifest_tsv(&self) -> String {
        let mut out = String::new();
        for row in self.manifest() {
            let line = row.statement.to_line("-");
            let _ = writeln!(out, "{line}\t{}", row.split);
        }
        out
    }

    /// Writes `train.txt`, `valid.txt`, `test.txt` and `manifest.tsv`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for split in Split::ALL {
            let mut text = String::new();
            for stmt in self.split(split) {
                text.push_str(&stmt.to_line("-"));
                text.push('\n');
            }
            let path = dir.join(format!("{}.txt", split.name()));
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        let path = dir.join("manifest.tsv");
        fs::write(&path, self.manifest_tsv()).map_err(|e| Error::io(&path, e))
    }
}
