use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{EntityId, SplitMask, Statement, TemporalKB, TimeIndex, TimeScope};
use crate::error::{Error, Result};
use crate::model::TimeConstraint;

/// Answers known in training for the query key of `stmt` at `time`. For a
/// query with two timestamps an entity counts if it holds at either.
fn known_answers(stmt: &Statement, time: &TimeConstraint, kb: &TemporalKB) -> BTreeSet<EntityId> {
    let f = &kb.filter;
    let (s, r) = (stmt.subject, stmt.relation);
    let mut known: BTreeSet<EntityId> = match time {
        TimeConstraint::None => f.atemporal_answers(s, r, SplitMask::TRAIN).collect(),
        _ => time
            .timestamps()
            .flat_map(|t| f.timed_answers(s, r, t, SplitMask::TRAIN))
            .collect(),
    };
    known.insert(stmt.object);
    known
}

/// `k` distinct entities `o'` such that `(s, r, o')` is not a training
/// statement at the query's timestamps. Draws uniformly with rejection and,
/// after `100·k` rejections, falls back to a shuffle of the remaining
/// candidates.
pub fn sample_entity_negatives(
    stmt: &Statement,
    time: &TimeConstraint,
    k: usize,
    kb: &TemporalKB,
    rng: &mut impl Rng,
) -> Result<Vec<EntityId>> {
    let n = kb.num_entities();
    let known = known_answers(stmt, time, kb);
    let available = n - known.len();
    if k > available {
        return Err(Error::NotEnoughNegatives {
            requested: k,
            available,
        });
    }
    let mut chosen = Vec::with_capacity(k);
    let mut seen = BTreeSet::new();
    let mut rejections = 0;
    while chosen.len() < k && rejections < 100 * k {
        let e = rng.gen_range(0..n);
        if known.contains(&e) || !seen.insert(e) {
            rejections += 1;
        } else {
            chosen.push(e);
        }
    }
    if chosen.len() < k {
        let mut rest: Vec<EntityId> = (0..n)
            .filter(|e| !known.contains(e) && !seen.contains(e))
            .collect();
        rest.shuffle(rng);
        chosen.extend(rest.into_iter().take(k - chosen.len()));
    }
    Ok(chosen)
}

/// Timestamps that may corrupt `stmt`: not asserted for `(s, r, o)` in
/// training, and for half-open and closed scopes also outside the known
/// validity (before the start, after the end, or outside the interval).
pub fn time_negative_candidates(stmt: &Statement, kb: &TemporalKB) -> Vec<TimeIndex> {
    let allowed = |t: TimeIndex| match stmt.scope {
        TimeScope::NoTime => false,
        TimeScope::Instant(_) => true,
        TimeScope::RightOpen(st) => t < st,
        TimeScope::LeftOpen(et) => t > et,
        TimeScope::Closed(st, et) => t < st || t > et,
    };
    (0..kb.num_times())
        .filter(|&t| allowed(t))
        .filter(|&t| {
            !kb.filter
                .holds_at(stmt.subject, stmt.relation, stmt.object, t, SplitMask::TRAIN)
        })
        .collect()
}

/// `m` time negatives drawn uniformly with replacement, or `None` when no
/// timestamp qualifies and the caller should use entity negatives instead.
pub fn sample_time_negatives(
    stmt: &Statement,
    m: usize,
    kb: &TemporalKB,
    rng: &mut impl Rng,
) -> Option<Vec<TimeIndex>> {
    let candidates = time_negative_candidates(stmt, kb);
    if candidates.is_empty() {
        return None;
    }
    Some((0..m).map(|_| *candidates.choose(rng).unwrap()).collect())
}

/// `1 / n_q` where `n_q` counts the training answers of the query key. With
/// two timestamps only entities true at both count.
pub fn query_weight(stmt: &Statement, time: &TimeConstraint, kb: &TemporalKB) -> f64 {
    let f = &kb.filter;
    let (s, r) = (stmt.subject, stmt.relation);
    let n = match *time {
        TimeConstraint::None => f.atemporal_answers(s, r, SplitMask::TRAIN).count(),
        TimeConstraint::At(t) => f.timed_answers(s, r, t, SplitMask::TRAIN).count(),
        TimeConstraint::Between(a, b) => f
            .timed_answers(s, r, a, SplitMask::TRAIN)
            .filter(|&o| f.holds_at(s, r, o, b, SplitMask::TRAIN))
            .count(),
    };
    1.0 / n.max(1) as f64
}
