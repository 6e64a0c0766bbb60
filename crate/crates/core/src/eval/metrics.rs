use std::fmt;

use rand::Rng;

/// A closed range of whole years or timestamps, `lo ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: i64,
    pub hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Option<Interval> {
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn point(t: i64) -> Interval {
        Interval { lo: t, hi: t }
    }

    /// Number of time points, `hi − lo + 1`.
    pub fn duration(&self) -> i64 {
        self.hi - self.lo + 1
    }

    /// Points shared with `other`; 0 when disjoint.
    pub fn overlap(&self, other: &Interval) -> i64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo) + 1).max(0)
    }

    /// Length of the shortest interval covering both.
    pub fn hull(&self, other: &Interval) -> i64 {
        self.hi.max(other.hi) - self.lo.min(other.lo) + 1
    }

    /// `max(lo) − min(hi) + 1`: one more than the number of points strictly
    /// between two disjoint intervals.
    pub fn gap(&self, other: &Interval) -> i64 {
        self.lo.max(other.lo) - self.hi.min(other.hi) + 1
    }

    pub fn shift(&self, by: i64) -> Interval {
        Interval {
            lo: self.lo + by,
            hi: self.hi + by,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Generalized IOU: `|∩|/|∪| − |hull ∖ ∪|/|hull|`, in `(−1, 1]`.
pub fn giou(gold: Interval, pred: Interval) -> f64 {
    let inter = gold.overlap(&pred);
    let union = gold.duration() + pred.duration() - inter;
    let hull = gold.hull(&pred);
    inter as f64 / union as f64 - (hull - union) as f64 / hull as f64
}

/// `|∩|/|hull|` when overlapping, `1/|hull|` otherwise.
pub fn aeiou(gold: Interval, pred: Interval) -> f64 {
    let inter = gold.overlap(&pred);
    let hull = gold.hull(&pred);
    if inter > 0 {
        inter as f64 / hull as f64
    } else {
        1.0 / hull as f64
    }
}

/// Like [`aeiou`], but disjoint predictions are further divided by the gap.
pub fn gaeiou(gold: Interval, pred: Interval) -> f64 {
    let inter = gold.overlap(&pred);
    let hull = gold.hull(&pred);
    if inter > 0 {
        inter as f64 / hull as f64
    } else {
        // one division of an exact integer product, so equal products give
        // equal scores
        1.0 / (gold.gap(&pred) * hull) as f64
    }
}

pub type Metric = fn(Interval, Interval) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clause {
    /// Equal nonzero overlap: the smaller hull must score higher.
    Overlap,
    /// No overlap: the smaller `hull·gap` must score higher.
    Disjoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub clause: Clause,
    pub gold: Interval,
    pub pred1: Interval,
    pub pred2: Interval,
    pub score1: f64,
    pub score2: f64,
}

fn random_interval(rng: &mut impl Rng, lo: i64, hi: i64) -> Interval {
    let (a, b) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
    Interval { lo: a.min(b), hi: a.max(b) }
}

/// A prediction whose overlap with `gold` is exactly `inter`.
fn with_overlap(rng: &mut impl Rng, gold: Interval, inter: Interval, reach: i64) -> Interval {
    let lo = if inter.lo > gold.lo {
        inter.lo
    } else {
        gold.lo - rng.gen_range(0..=reach)
    };
    let hi = if inter.hi < gold.hi {
        inter.hi
    } else {
        gold.hi + rng.gen_range(0..=reach)
    };
    Interval { lo, hi }
}

fn disjoint_from(rng: &mut impl Rng, gold: Interval, reach: i64) -> Interval {
    if rng.gen_bool(0.5) {
        let hi = gold.lo - rng.gen_range(1..=reach);
        Interval {
            lo: hi - rng.gen_range(0..=reach),
            hi,
        }
    } else {
        let lo = gold.hi + rng.gen_range(1..=reach);
        Interval {
            lo,
            hi: lo + rng.gen_range(0..=reach),
        }
    }
}

/// Fuzzes `metric` against both clauses of the ordering property. Even
/// trials draw two predictions sharing the same overlap with the gold, odd
/// trials two disjoint predictions. A triple violates a clause when
/// `metric` ranks pred1 above pred2 and the clause's key does not, or the
/// other way round.
pub fn property_p_check(metric: Metric, trials: usize, rng: &mut impl Rng) -> Vec<Violation> {
    const SPAN: i64 = 60;
    const REACH: i64 = 25;
    let mut out = Vec::new();
    for trial in 0..trials {
        let gold = random_interval(rng, 0, SPAN);
        let (clause, pred1, pred2) = if trial % 2 == 0 {
            let inter = random_interval(rng, gold.lo, gold.hi);
            (
                Clause::Overlap,
                with_overlap(rng, gold, inter, REACH),
                with_overlap(rng, gold, inter, REACH),
            )
        } else {
            (
                Clause::Disjoint,
                disjoint_from(rng, gold, REACH),
                disjoint_from(rng, gold, REACH),
            )
        };
        let key = |p: &Interval| match clause {
            Clause::Overlap => gold.hull(p),
            Clause::Disjoint => gold.hull(p) * gold.gap(p),
        };
        let (score1, score2) = (metric(gold, pred1), metric(gold, pred2));
        if (score1 > score2) != (key(&pred1) < key(&pred2)) {
            out.push(Violation {
                clause,
                gold,
                pred1,
                pred2,
                score1,
                score2,
            });
        }
    }
    out
}
