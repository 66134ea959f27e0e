//! Plug-in estimates of the per-bin LP coefficients.
//!
//! Under the empirical measure the double integrals defining the error mass
//! `A_k` and the positive-rate mass `B_k` collapse to exact interval lengths:
//! sample `i` is accepted by every threshold `t <= l_i + cap`, so within bin
//! `k` it is accepted on a sub-interval of length
//! `clamp(l_i + cap - s_k, 0, width_k)` and rejected on the remainder.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_cost::CostModel;

pub type GroupId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub label: u8,
    pub group: Option<GroupId>,
}

impl ScoredSample {
    pub fn new(score: f64, label: u8) -> Self {
        Self {
            score,
            label,
            group: None,
        }
    }

    pub fn in_group(score: f64, label: u8, group: GroupId) -> Self {
        Self {
            score,
            label,
            group: Some(group),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WeightKind {
    /// `A_k`: mass of thresholds in bin `k` that misclassify.
    Error,
    /// `B_k`: mass of thresholds in bin `k` that accept.
    Positive,
    /// `B_k` restricted to samples with the given label.
    ConditionalPositive { label: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinWeights {
    pub kind: WeightKind,
    pub group: Option<GroupId>,
    pub edges: Vec<f64>,
    pub weights: Vec<f64>,
    pub sample_count: usize,
}

impl BinWeights {
    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    /// `Σ_k weights[k] * densities[k]`.
    pub fn dot(&self, densities: &[f64]) -> f64 {
        self.weights.iter().zip(densities).map(|(w, p)| w * p).sum()
    }
}

/// Length of `(lo, hi] ∩ (-inf, reach]`.
#[inline]
pub fn accepted_length(lo: f64, hi: f64, reach: f64) -> f64 {
    (reach.min(hi) - lo).max(0.0)
}

fn check_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Estimation(
            "bin edges must be strictly increasing with at least one bin".into(),
        ));
    }
    Ok(())
}

fn accumulate<'a>(
    samples: impl Iterator<Item = &'a ScoredSample>,
    edges: &[f64],
    cap: f64,
    per_sample: impl Fn(&ScoredSample, f64, f64) -> f64,
) -> (Vec<f64>, usize) {
    let mut sums = vec![0.0; edges.len() - 1];
    let mut n = 0usize;
    for s in samples {
        n += 1;
        let reach = s.score + cap;
        for (sum, w) in sums.iter_mut().zip(edges.windows(2)) {
            let width = w[1] - w[0];
            let accepted = accepted_length(w[0], w[1], reach);
            *sum += per_sample(s, accepted, width);
        }
    }
    if n > 0 {
        let inv = n as f64;
        sums.iter_mut().for_each(|v| *v /= inv);
    }
    (sums, n)
}

fn common_group(samples: &[ScoredSample]) -> Option<GroupId> {
    let first = samples.first()?.group;
    samples
        .iter()
        .all(|s| s.group == first)
        .then_some(first)
        .flatten()
}

/// Error-mass weights `A_k` over all `samples`.
pub fn compute_error_weights(
    samples: &[ScoredSample],
    edges: &[f64],
    cost: &CostModel,
) -> Result<BinWeights> {
    check_edges(edges)?;
    if samples.is_empty() {
        return Err(Error::Estimation(
            "cannot estimate error weights from an empty sample".into(),
        ));
    }
    let (weights, n) = accumulate(samples.iter(), edges, cost.cap(), |s, accepted, width| {
        if s.label == 1 {
            width - accepted
        } else {
            accepted
        }
    });
    Ok(BinWeights {
        kind: WeightKind::Error,
        group: common_group(samples),
        edges: edges.to_vec(),
        weights,
        sample_count: n,
    })
}

/// Positive-rate weights `B_k` over all `samples` (callers pass one group).
pub fn compute_positive_weights(
    samples: &[ScoredSample],
    edges: &[f64],
    cost: &CostModel,
) -> Result<BinWeights> {
    check_edges(edges)?;
    if samples.is_empty() {
        return Err(Error::Estimation(
            "cannot estimate positive weights for an empty group".into(),
        ));
    }
    let (weights, n) = accumulate(samples.iter(), edges, cost.cap(), |_, accepted, _| accepted);
    Ok(BinWeights {
        kind: WeightKind::Positive,
        group: common_group(samples),
        edges: edges.to_vec(),
        weights,
        sample_count: n,
    })
}

/// Positive-rate weights restricted to samples labelled `on_label`.
pub fn conditional_positive_weights(
    samples: &[ScoredSample],
    edges: &[f64],
    cost: &CostModel,
    on_label: u8,
) -> Result<BinWeights> {
    check_edges(edges)?;
    let (weights, n) = accumulate(
        samples.iter().filter(|s| s.label == on_label),
        edges,
        cost.cap(),
        |_, accepted, _| accepted,
    );
    if n == 0 {
        return Err(Error::Estimation(format!(
            "no samples with label {on_label} to condition on"
        )));
    }
    Ok(BinWeights {
        kind: WeightKind::ConditionalPositive { label: on_label },
        group: common_group(samples),
        edges: edges.to_vec(),
        weights,
        sample_count: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fico() -> CostModel {
        CostModel::fico_default()
    }

    /// Monte Carlo estimate of the error mass in `(lo, hi]`: average
    /// misclassification indicator over uniform thresholds, times width.
    fn mc_error(samples: &[ScoredSample], lo: f64, hi: f64, cap: f64, draws: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut errs = 0usize;
        for _ in 0..draws {
            let t = rng.random_range(lo..hi);
            for s in samples {
                let accept = s.score + cap >= t;
                if accept != (s.label == 1) {
                    errs += 1;
                }
            }
        }
        (hi - lo) * errs as f64 / (draws * samples.len()) as f64
    }

    #[test]
    fn error_weight_examples() {
        let edges = [0.1, 1.0];
        let w = compute_error_weights(&[ScoredSample::new(0.0, 1)], &edges, &fico()).unwrap();
        assert!((w.weights[0] - 0.9).abs() < 1e-12);
        let mc = mc_error(&[ScoredSample::new(0.0, 1)], 0.1, 1.0, 0.1, 100_000);
        assert!((mc - 0.9).abs() < 1e-3);

        let w = compute_error_weights(&[ScoredSample::new(0.0, 0)], &edges, &fico()).unwrap();
        assert_eq!(w.weights[0], 0.0);

        let pair = [ScoredSample::new(0.0, 0), ScoredSample::new(0.95, 0)];
        let w = compute_error_weights(&pair, &edges, &fico()).unwrap();
        assert!((w.weights[0] - 0.45).abs() < 1e-12);
        let mc = mc_error(&pair, 0.1, 1.0, 0.1, 100_000);
        assert!((mc - 0.45).abs() < 1e-3);
    }

    #[test]
    fn positive_weight_examples() {
        let cost = fico();
        let edges = vec![0.1, 0.4, 0.7, 1.0];
        // l = D - cap reaches every threshold.
        let w = compute_positive_weights(&[ScoredSample::new(0.9, 1)], &edges, &cost).unwrap();
        for b in &w.weights {
            assert!((b - 0.3).abs() < 1e-12);
        }
        // l = C reaches only t <= s_1.
        let w = compute_positive_weights(&[ScoredSample::new(0.0, 1)], &edges, &cost).unwrap();
        assert!(w.weights.iter().all(|b| *b == 0.0));
        // Reach at the midpoint of bin 2.
        let w = compute_positive_weights(&[ScoredSample::new(0.45, 0)], &edges, &cost).unwrap();
        assert!((w.weights[0] - 0.3).abs() < 1e-12);
        assert!((w.weights[1] - 0.15).abs() < 1e-12);
        assert_eq!(w.weights[2], 0.0);
        // Monte Carlo over the middle bin.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let hits = (0..100_000)
            .filter(|_| rng.random_range(0.4..0.7) <= 0.55)
            .count();
        assert!((0.3 * hits as f64 / 100_000.0 - 0.15).abs() < 3e-3);
    }

    #[test]
    fn conditional_weights() {
        let cost = fico();
        let edges = vec![0.1, 0.55, 1.0];
        let positives = [ScoredSample::new(0.3, 1), ScoredSample::new(0.7, 1)];
        let a = conditional_positive_weights(&positives, &edges, &cost, 1).unwrap();
        let b = compute_positive_weights(&positives, &edges, &cost).unwrap();
        assert_eq!(a.weights, b.weights);

        assert!(conditional_positive_weights(&positives, &edges, &cost, 0).is_err());

        let mixed = [ScoredSample::new(0.3, 1), ScoredSample::new(0.8, 0)];
        let cond = conditional_positive_weights(&mixed, &edges, &cost, 1).unwrap();
        let alone = compute_positive_weights(&mixed[..1], &edges, &cost).unwrap();
        assert_eq!(cond.weights, alone.weights);
        assert_eq!(cond.sample_count, 1);
    }

    #[test]
    fn empty_inputs() {
        let edges = [0.0, 1.0];
        assert!(compute_error_weights(&[], &edges, &fico()).is_err());
        assert!(compute_positive_weights(&[], &edges, &fico()).is_err());
        assert!(compute_error_weights(&[ScoredSample::new(0.0, 1)], &[1.0], &fico()).is_err());
    }

    #[test]
    fn group_tag_is_kept() {
        let s = [
            ScoredSample::in_group(0.2, 1, 4),
            ScoredSample::in_group(0.3, 0, 4),
        ];
        let w = compute_positive_weights(&s, &[0.1, 1.0], &fico()).unwrap();
        assert_eq!(w.group, Some(4));
    }
}
