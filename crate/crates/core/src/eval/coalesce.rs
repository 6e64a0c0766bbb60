use super::Interval;

/// Softmax of `scores`; `-∞` entries get probability 0. An all `-∞` input
/// gives the uniform distribution.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Turns per-timestamp scores into up to `k` disjoint intervals, best
/// first. Each interval grows from the most probable unused timestamp
/// (earliest on ties) toward its more probable free neighbor (left on ties)
/// while that neighbor keeps at least `tau` times the seed's probability.
pub fn greedy_coalesce(scores: &[f64], k: usize, tau: f64) -> Vec<Interval> {
    let p = softmax(scores);
    let n = p.len();
    let mut used = vec![false; n];
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let mut seed = None;
        for t in 0..n {
            if !used[t] && seed.map_or(true, |s: usize| p[t] > p[s]) {
                seed = Some(t);
            }
        }
        let Some(seed) = seed else { break };
        let threshold = tau * p[seed];
        let (mut lo, mut hi) = (seed, seed);
        loop {
            let left = (lo > 0 && !used[lo - 1]).then(|| p[lo - 1]);
            let right = (hi + 1 < n && !used[hi + 1]).then(|| p[hi + 1]);
            match (left, right) {
                (Some(l), r) if l >= threshold && r.map_or(true, |r| l >= r) => lo -= 1,
                (_, Some(r)) if r >= threshold => hi += 1,
                _ => break,
            }
        }
        used[lo..=hi].iter_mut().for_each(|u| *u = true);
        out.push(Interval {
            lo: lo as i64,
            hi: hi as i64,
        });
    }
    out
}
