use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::{EntityId, RelationId, ScopeKind, SplitMask, Statement, TemporalKB, TimeIndex, TimeScope, ValidityType};
use crate::model::{ParameterStore, QueryPlan, TimeConstraint};

/// Which side of a statement is hidden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// `(s, r, ?o)`
    Object,
    /// `(?s, r, o)`, asked as `(o, r⁻¹, ?s)`.
    Subject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkOptions {
    /// Splits whose statements are filtered out of the ranking.
    pub filter: SplitMask,
    /// Also rank subjects through the inverse relations.
    pub both_directions: bool,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions {
            filter: SplitMask::TRAIN_VALID,
            both_directions: true,
        }
    }
}

/// Filtered rank of `gold` for `(subject, relation, ?, time)`: one plus the
/// number of non-answer entities scoring at least as high as `gold`.
/// Entities known true for the same key in `filter` are skipped.
pub fn rank_entity(
    params: &ParameterStore,
    kb: &TemporalKB,
    subject: EntityId,
    relation: RelationId,
    time: Option<TimeIndex>,
    gold: EntityId,
    filter: SplitMask,
) -> usize {
    let plan = QueryPlan::new(subject, relation, time.map_or(TimeConstraint::None, TimeConstraint::At));
    let b = params
        .box_of_query(&plan)
        .expect("a query box always has at least one box");
    let scores = params.score_all(&b);
    let known: HashSet<EntityId> = match time {
        None => kb.filter.atemporal_answers(subject, relation, filter).collect(),
        Some(t) => kb.filter.timed_answers(subject, relation, t, filter).collect(),
    };
    rank_of(&scores, gold, |e| known.contains(&e))
}

pub(crate) fn rank_of(scores: &[f64], gold: EntityId, skip: impl Fn(EntityId) -> bool) -> usize {
    let g = scores[gold];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(e, &s)| e != gold && s >= g && !skip(e))
        .count()
}

/// Timestamps a statement is ranked at: none for atemporal statements, the
/// known endpoint for half-open ones, every year of a closed interval.
pub fn query_times(scope: &TimeScope) -> Vec<Option<TimeIndex>> {
    match scope.discretize() {
        None => vec![None],
        Some(range) => range.map(Some).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankResult {
    /// Position of the statement in the evaluated list.
    pub query: usize,
    pub direction: Direction,
    pub kind: ScopeKind,
    pub ranks: Vec<usize>,
    /// Mean of `ranks`.
    pub rank: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LinkMetrics {
    pub count: usize,
    pub mrr: f64,
    pub mr: f64,
    pub hits1: f64,
    pub hits3: f64,
    pub hits10: f64,
}

impl LinkMetrics {
    pub fn from_ranks(ranks: impl IntoIterator<Item = f64>) -> LinkMetrics {
        let mut m = LinkMetrics::default();
        for r in ranks {
            m.count += 1;
            m.mrr += 1.0 / r;
            m.mr += r;
            m.hits1 += f64::from(u8::from(r <= 1.0));
            m.hits3 += f64::from(u8::from(r <= 3.0));
            m.hits10 += f64::from(u8::from(r <= 10.0));
        }
        if m.count > 0 {
            let n = m.count as f64;
            m.mrr /= n;
            m.mr /= n;
            m.hits1 /= n;
            m.hits3 /= n;
            m.hits10 /= n;
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkPredReport {
    pub options: LinkOptions,
    pub overall: LinkMetrics,
    pub by_type: BTreeMap<ValidityType, LinkMetrics>,
    pub results: Vec<RankResult>,
}

fn directed(stmt: &Statement, direction: Direction, kb: &TemporalKB) -> (EntityId, RelationId, EntityId) {
    match direction {
        Direction::Object => (stmt.subject, stmt.relation, stmt.object),
        Direction::Subject => (stmt.object, kb.inverse(stmt.relation), stmt.subject),
    }
}

/// Ranks every statement (both directions by default) and aggregates the
/// averaged ranks overall and per validity type.
pub fn eval_link_prediction(
    params: &ParameterStore,
    kb: &TemporalKB,
    statements: &[Statement],
    opts: &LinkOptions,
) -> LinkPredReport {
    let directions: &[Direction] = if opts.both_directions {
        &[Direction::Object, Direction::Subject]
    } else {
        &[Direction::Object]
    };
    let jobs: Vec<(usize, Direction)> = (0..statements.len())
        .flat_map(|i| directions.iter().map(move |&d| (i, d)))
        .collect();
    let results: Vec<RankResult> = jobs
        .par_iter()
        .map(|&(i, direction)| {
            let stmt = &statements[i];
            let (s, r, o) = directed(stmt, direction, kb);
            let ranks: Vec<usize> = query_times(&stmt.scope)
                .into_iter()
                .map(|t| rank_entity(params, kb, s, r, t, o, opts.filter))
                .collect();
            let rank = ranks.iter().sum::<usize>() as f64 / ranks.len() as f64;
            RankResult {
                query: i,
                direction,
                kind: stmt.scope.kind(),
                ranks,
                rank,
            }
        })
        .collect();
    let overall = LinkMetrics::from_ranks(results.iter().map(|r| r.rank));
    let by_type = ValidityType::ALL
        .iter()
        .map(|&v| {
            let m = LinkMetrics::from_ranks(results.iter().filter(|r| r.kind.validity() == v).map(|r| r.rank));
            (v, m)
        })
        .collect();
    LinkPredReport {
        options: *opts,
        overall,
        by_type,
        results,
    }
}

impl LinkPredReport {
    /// `key=value` lines with the headline numbers.
    pub fn to_text(&self) -> String {
        let m = &self.overall;
        let mut out = String::new();
        let _ = writeln!(out, "filter={}", self.options.filter.names());
        let _ = writeln!(
            out,
            "directions={}",
            if self.options.both_directions { "object,subject" } else { "object" }
        );
        let _ = writeln!(out, "queries={}", m.count);
        let _ = writeln!(out, "mrr={:.6}", m.mrr);
        let _ = writeln!(out, "mr={:.6}", m.mr);
        let _ = writeln!(out, "hits@1={:.6}", m.hits1);
        let _ = writeln!(out, "hits@3={:.6}", m.hits3);
        let _ = writeln!(out, "hits@10={:.6}", m.hits10);
        out
    }

    /// Tab-separated breakdown by validity type.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("type\tcount\tmrr\tmr\thits@1\thits@3\thits@10\n");
        let rows = std::iter::once(("all", &self.overall))
            .chain(self.by_type.iter().map(|(v, m)| (v.name(), m)));
        for (name, m) in rows {
            let _ = writeln!(
                out,
                "{name}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                m.count, m.mrr, m.mr, m.hits1, m.hits3, m.hits10
            );
        }
        out
    }
}
