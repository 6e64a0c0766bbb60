//! Brute-force link prediction evaluator shared by the integration tests.
//! It sorts every candidate list and builds its own filter sets by scanning
//! the raw statements.
#![allow(dead_code)]

use time2box::data::{Statement, TemporalKB, TimeScope, ValidityType};
use time2box::eval::{eval_link_prediction, LinkMetrics, LinkOptions};
use time2box::model::{score, ParameterStore, QueryPlan, TimeConstraint};

pub struct Oracle {
    pub ranks: Vec<(ValidityType, f64)>,
}

fn covers(scope: &TimeScope, t: usize) -> bool {
    match *scope {
        TimeScope::NoTime => false,
        TimeScope::Instant(a) | TimeScope::RightOpen(a) | TimeScope::LeftOpen(a) => a == t,
        TimeScope::Closed(a, b) => a <= t && t <= b,
    }
}

pub fn brute_force(params: &ParameterStore, kb: &TemporalKB, statements: &[Statement], with_test: bool) -> Oracle {
    let mut known_pool: Vec<Statement> = kb.train.iter().chain(&kb.valid).copied().collect();
    if with_test {
        known_pool.extend(&kb.test);
    }
    let mut ranks = Vec::new();
    for st in statements {
        // object query then subject query, as (s, r, gold, reversed)
        for reversed in [false, true] {
            let (s, r, gold) = if reversed {
                (st.object, kb.inverse(st.relation), st.subject)
            } else {
                (st.subject, st.relation, st.object)
            };
            let times: Vec<Option<usize>> = match st.scope {
                TimeScope::Closed(a, b) => (a..=b).map(Some).collect(),
                TimeScope::Instant(a) | TimeScope::RightOpen(a) | TimeScope::LeftOpen(a) => vec![Some(a)],
                TimeScope::NoTime => vec![None],
            };
            let mut per_time = Vec::new();
            for t in times {
                let plan = QueryPlan::new(s, r, t.map_or(TimeConstraint::None, TimeConstraint::At));
                let b = params.box_of_query(&plan).unwrap();
                let scores: Vec<f64> = (0..kb.num_entities())
                    .map(|e| score(params.entity_row(e), &b, params.hyper.gamma, params.hyper.alpha))
                    .collect();
                let is_known = |e: usize| {
                    known_pool.iter().any(|k| {
                        let (ks, ko) = if reversed { (k.object, k.subject) } else { (k.subject, k.object) };
                        k.relation == st.relation
                            && ks == s
                            && ko == e
                            && t.map_or(true, |t| covers(&k.scope, t))
                    })
                };
                // descending score; on ties the gold goes last
                let mut order: Vec<usize> = (0..kb.num_entities()).collect();
                order.sort_by(|&x, &y| {
                    scores[y]
                        .partial_cmp(&scores[x])
                        .unwrap()
                        .then_with(|| (x == gold).cmp(&(y == gold)))
                });
                let kept: Vec<usize> = order.into_iter().filter(|&e| e == gold || !is_known(e)).collect();
                per_time.push(kept.iter().position(|&e| e == gold).unwrap() + 1);
            }
            let avg = per_time.iter().sum::<usize>() as f64 / per_time.len() as f64;
            ranks.push((st.scope.kind().validity(), avg));
        }
    }
    Oracle { ranks }
}

pub fn metrics(ranks: &[f64]) -> LinkMetrics {
    let n = ranks.len();
    if n == 0 {
        return LinkMetrics::default();
    }
    let mut mrr = 0.0;
    let mut mr = 0.0;
    for r in ranks {
        mrr += 1.0 / r;
        mr += r;
    }
    let hits = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n as f64;
    LinkMetrics {
        count: n,
        mrr: mrr / n as f64,
        mr: mr / n as f64,
        hits1: hits(1.0),
        hits3: hits(3.0),
        hits10: hits(10.0),
    }
}

/// Compares the evaluator with the brute-force route on the test split.
pub fn compare(params: &ParameterStore, kb: &TemporalKB, with_test: bool) -> Result<(), String> {
    let mut opts = LinkOptions::default();
    if with_test {
        opts.filter = time2box::data::SplitMask::ALL;
    }
    let report = eval_link_prediction(params, kb, &kb.test, &opts);
    let oracle = brute_force(params, kb, &kb.test, with_test);
    let got: Vec<f64> = report.results.iter().map(|r| r.rank).collect();
    let want: Vec<f64> = oracle.ranks.iter().map(|(_, r)| *r).collect();
    if got != want {
        return Err(format!("ranks differ: {got:?} vs {want:?}"));
    }
    if report.overall != metrics(&want) {
        return Err(format!("overall differs: {:?} vs {:?}", report.overall, metrics(&want)));
    }
    for v in ValidityType::ALL {
        let sub: Vec<f64> = oracle.ranks.iter().filter(|(k, _)| *k == v).map(|(_, r)| *r).collect();
        if report.by_type[&v] != metrics(&sub) {
            return Err(format!("{v:?} breakdown differs"));
        }
    }
    Ok(())
}

