//! Filtered link prediction, interval prediction by greedy coalescing, and
//! the interval metrics.

mod coalesce;
mod link;
mod metrics;
mod time;

pub use coalesce::{greedy_coalesce, softmax};
pub use link::{
    eval_link_prediction, query_times, rank_entity, Direction, LinkMetrics, LinkOptions, LinkPredReport, RankResult,
};
pub use metrics::{aeiou, gaeiou, giou, property_p_check, Clause, Interval, Metric, Violation};
pub use time::{
    eval_time_prediction, random_baseline, random_interval, score_timeline, DurationBucket, TimeMetrics, TimeOptions,
    TimePredReport, TimePrediction,
};
