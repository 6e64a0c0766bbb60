use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use super::{aeiou, gaeiou, giou, greedy_coalesce, Interval, Metric};
use crate::data::{EntityId, RelationId, Statement, TimeScope};
use crate::model::{score, ParameterStore, QueryPlan, TimeConstraint};
use crate::rng::{stream, Stream};

/// Score of `o` as the answer to `(s, r, ?, t)` for every timestamp `t`.
pub fn score_timeline(params: &ParameterStore, subject: EntityId, relation: RelationId, object: EntityId) -> Vec<f64> {
    let point = params.entity_row(object);
    (0..params.num_times)
        .map(|t| {
            let plan = QueryPlan::new(subject, relation, TimeConstraint::At(t));
            let b = params.box_of_query(&plan).expect("non-empty intersection");
            score(point, &b, params.hyper.gamma, params.hyper.alpha)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeOptions {
    /// Intervals predicted per statement.
    pub k: usize,
    /// Coalescing threshold.
    pub tau: f64,
    /// Seed of the random-interval baseline.
    pub seed: u64,
    /// Random intervals drawn per gold for the baseline.
    pub baseline_trials: usize,
}

impl Default for TimeOptions {
    fn default() -> Self {
        TimeOptions {
            k: 10,
            tau: 0.5,
            seed: 0,
            baseline_trials: 100,
        }
    }
}

/// Gold duration stratum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DurationBucket {
    Single,
    UpToFive,
    Longer,
}

impl DurationBucket {
    pub const ALL: [DurationBucket; 3] = [DurationBucket::Single, DurationBucket::UpToFive, DurationBucket::Longer];

    pub fn of(duration: i64) -> DurationBucket {
        match duration {
            ..=1 => DurationBucket::Single,
            2..=5 => DurationBucket::UpToFive,
            _ => DurationBucket::Longer,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DurationBucket::Single => "du=1",
            DurationBucket::UpToFive => "1<du<=5",
            DurationBucket::Longer => "du>5",
        }
    }
}

/// Means of the three metrics for the first and the best of the predicted
/// intervals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TimeMetrics {
    pub count: usize,
    pub giou1: f64,
    pub giou10: f64,
    pub aeiou1: f64,
    pub aeiou10: f64,
    pub gaeiou1: f64,
    pub gaeiou10: f64,
}

impl TimeMetrics {
    fn add(&mut self, p: &TimePrediction) {
        self.count += 1;
        self.giou1 += p.at1[0];
        self.aeiou1 += p.at1[1];
        self.gaeiou1 += p.at1[2];
        self.giou10 += p.at10[0];
        self.aeiou10 += p.at10[1];
        self.gaeiou10 += p.at10[2];
    }

    fn finish(mut self) -> Self {
        if self.count > 0 {
            let n = self.count as f64;
            for v in [
                &mut self.giou1,
                &mut self.giou10,
                &mut self.aeiou1,
                &mut self.aeiou10,
                &mut self.gaeiou1,
                &mut self.gaeiou10,
            ] {
                *v /= n;
            }
        }
        self
    }
}

/// Prediction for one gold interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePrediction {
    pub query: usize,
    pub gold: Interval,
    pub predicted: Vec<Interval>,
    /// gIOU, aeIOU, gaeIOU of the first interval.
    pub at1: [f64; 3],
    /// Best of each metric over all predicted intervals.
    pub at10: [f64; 3],
}

const METRICS: [Metric; 3] = [giou, aeiou, gaeiou];

impl TimePrediction {
    pub fn new(query: usize, gold: Interval, predicted: Vec<Interval>) -> TimePrediction {
        let mut at1 = [0.0; 3];
        let mut at10 = [f64::NEG_INFINITY; 3];
        for (i, m) in METRICS.iter().enumerate() {
            at1[i] = predicted.first().map_or(f64::NAN, |&p| m(gold, p));
            for &p in &predicted {
                at10[i] = at10[i].max(m(gold, p));
            }
        }
        TimePrediction {
            query,
            gold,
            predicted,
            at1,
            at10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimePredReport {
    pub options: TimeOptions,
    pub overall: TimeMetrics,
    pub by_bucket: BTreeMap<DurationBucket, TimeMetrics>,
    /// Half-open golds, which lack one endpoint.
    pub skipped_open: usize,
    pub skipped_atemporal: usize,
    /// Mean gaeIOU of one uniformly drawn interval on the same golds.
    pub random_gaeiou: f64,
    /// Mean of the best gaeIOU over `k` uniformly drawn intervals.
    pub random_gaeiou_at_k: f64,
    pub predictions: Vec<TimePrediction>,
}

/// Uniform random interval on `[0, len)`: two uniform endpoints, ordered.
pub fn random_interval(len: usize, rng: &mut impl Rng) -> Interval {
    let (a, b) = (rng.gen_range(0..len) as i64, rng.gen_range(0..len) as i64);
    Interval { lo: a.min(b), hi: a.max(b) }
}

/// Mean gaeIOU of the best of `k` random intervals over `golds`, averaged
/// over `trials` draws per gold.
pub fn random_baseline(golds: &[Interval], axis_len: usize, k: usize, trials: usize, rng: &mut impl Rng) -> f64 {
    if golds.is_empty() || axis_len == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for &gold in golds {
        let mut sum = 0.0;
        for _ in 0..trials {
            sum += (0..k)
                .map(|_| gaeiou(gold, random_interval(axis_len, rng)))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        total += sum / trials as f64;
    }
    total / golds.len() as f64
}

/// Predicts intervals for every closed or instant statement and scores them
/// against the gold. Half-open and atemporal statements are counted and
/// skipped.
pub fn eval_time_prediction(
    params: &ParameterStore,
    statements: &[Statement],
    opts: &TimeOptions,
) -> TimePredReport {
    let (mut skipped_open, mut skipped_atemporal) = (0, 0);
    let mut jobs = Vec::new();
    for (i, stmt) in statements.iter().enumerate() {
        let gold = match stmt.scope {
            TimeScope::Closed(a, b) => Interval::new(a as i64, b as i64).expect("ordered scope"),
            TimeScope::Instant(t) => Interval::point(t as i64),
            TimeScope::RightOpen(_) | TimeScope::LeftOpen(_) => {
                skipped_open += 1;
                continue;
            }
            TimeScope::NoTime => {
                skipped_atemporal += 1;
                continue;
            }
        };
        jobs.push((i, gold));
    }
    let predictions: Vec<TimePrediction> = jobs
        .par_iter()
        .map(|&(i, gold)| {
            let stmt = &statements[i];
            let timeline = score_timeline(params, stmt.subject, stmt.relation, stmt.object);
            TimePrediction::new(i, gold, greedy_coalesce(&timeline, opts.k, opts.tau))
        })
        .collect();

    let mut overall = TimeMetrics::default();
    let mut by_bucket: BTreeMap<DurationBucket, TimeMetrics> =
        DurationBucket::ALL.iter().map(|&b| (b, TimeMetrics::default())).collect();
    for p in &predictions {
        overall.add(p);
        by_bucket.get_mut(&DurationBucket::of(p.gold.duration())).unwrap().add(p);
    }
    let golds: Vec<Interval> = predictions.iter().map(|p| p.gold).collect();
    let mut rng = stream(opts.seed, Stream::Evaluation);
    let random_gaeiou = random_baseline(&golds, params.num_times, 1, opts.baseline_trials, &mut rng);
    let random_gaeiou_at_k = random_baseline(&golds, params.num_times, opts.k, opts.baseline_trials, &mut rng);
    TimePredReport {
        options: *opts,
        overall: overall.finish(),
        by_bucket: by_bucket.into_iter().map(|(b, m)| (b, m.finish())).collect(),
        skipped_open,
        skipped_atemporal,
        random_gaeiou,
        random_gaeiou_at_k,
        predictions,
    }
}

impl TimePredReport {
    pub fn to_text(&self) -> String {
        let m = &self.overall;
        let mut out = String::new();
        let _ = writeln!(out, "k={}", self.options.k);
        let _ = writeln!(out, "tau={}", self.options.tau);
        let _ = writeln!(out, "queries={}", m.count);
        let _ = writeln!(out, "skipped_open={}", self.skipped_open);
        let _ = writeln!(out, "skipped_no_time={}", self.skipped_atemporal);
        for (name, v) in [
            ("giou@1", m.giou1),
            ("giou@10", m.giou10),
            ("aeiou@1", m.aeiou1),
            ("aeiou@10", m.aeiou10),
            ("gaeiou@1", m.gaeiou1),
            ("gaeiou@10", m.gaeiou10),
            ("random_gaeiou", self.random_gaeiou),
            ("random_gaeiou@10", self.random_gaeiou_at_k),
        ] {
            let _ = writeln!(out, "{name}={v:.6}");
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bucket\tcount\tgiou@1\tgiou@10\taeiou@1\taeiou@10\tgaeiou@1\tgaeiou@10\n");
        let rows = std::iter::once(("all", &self.overall))
            .chain(self.by_bucket.iter().map(|(b, m)| (b.name(), m)));
        for (name, m) in rows {
            let _ = writeln!(
                out,
                "{name}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                m.count, m.giou1, m.giou10, m.aeiou1, m.aeiou10, m.gaeiou1, m.gaeiou10
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{distance, Hyper, Variant};

    #[test]
    fn exact_first_interval() {
        let gold = Interval::new(3, 6).unwrap();
        let p = TimePrediction::new(0, gold, vec![gold, Interval::point(9)]);
        assert_eq!(p.at1, [1.0, 1.0, 1.0]);
        assert_eq!(p.at10, [1.0, 1.0, 1.0]);
        let p = TimePrediction::new(0, gold, vec![Interval::point(9), Interval::new(4, 6).unwrap()]);
        for i in 0..3 {
            assert!(p.at10[i] >= p.at1[i]);
        }
    }

    #[test]
    fn buckets() {
        assert_eq!(DurationBucket::of(1), DurationBucket::Single);
        assert_eq!(DurationBucket::of(2), DurationBucket::UpToFive);
        assert_eq!(DurationBucket::of(5), DurationBucket::UpToFive);
        assert_eq!(DurationBucket::of(6), DurationBucket::Longer);
    }

    #[test]
    fn timeline_orders_by_distance() {
        let mut rng = stream(4, Stream::Init);
        let params = ParameterStore::initialized(5, 4, 2, 9, Variant::default(), Hyper::default(), &mut rng);
        let scores = score_timeline(&params, 0, 1, 2);
        assert_eq!(scores.len(), 9);
        let dists: Vec<f64> = (0..9)
            .map(|t| {
                let b = params.box_of_query(&QueryPlan::new(0, 1, TimeConstraint::At(t))).unwrap();
                distance(params.entity_row(2), &b, params.hyper.alpha).total
            })
            .collect();
        for a in 0..9 {
            for b in 0..9 {
                if dists[a] < dists[b] {
                    assert!(scores[a] >= scores[b]);
                }
            }
        }
    }

    #[test]
    fn report_skips_open_golds() {
        let mut rng = stream(4, Stream::Init);
        let params = ParameterStore::initialized(5, 4, 2, 9, Variant::default(), Hyper::default(), &mut rng);
        let st = |scope| Statement {
            subject: 0,
            relation: 0,
            object: 1,
            scope,
        };
        let stmts = [
            st(TimeScope::Closed(1, 4)),
            st(TimeScope::Instant(7)),
            st(TimeScope::RightOpen(2)),
            st(TimeScope::NoTime),
        ];
        let r = eval_time_prediction(&params, &stmts, &TimeOptions::default());
        assert_eq!((r.overall.count, r.skipped_open, r.skipped_atemporal), (2, 1, 1));
        assert!(r.predictions.iter().all(|p| (1..=9).contains(&p.predicted.len())));
        let m = r.overall;
        assert!(m.giou1 <= m.giou10 && m.aeiou1 <= m.aeiou10 && m.gaeiou1 <= m.gaeiou10);
        assert!(r.random_gaeiou > 0.0 && r.random_gaeiou < r.random_gaeiou_at_k);
        assert_eq!(r, eval_time_prediction(&params, &stmts, &TimeOptions::default()));
        assert!(r.to_text().contains("skipped_open=1\n"));
    }
}
