//! Agent best responses to a threshold and the two fairness functionals of a
//! threshold distribution: expected outcome and expected best-response cost.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score_cost::CostModel;

/// Tolerance on the total probability mass of a piecewise density.
pub const MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawDistribution {
    Piecewise {
        edges: Vec<f64>,
        densities: Vec<f64>,
    },
    Dirac {
        t0: f64,
    },
}

/// Law of the random threshold `t`.
///
/// A piecewise density holds `densities[k]` (per score unit) on the bin
/// `(edges[k], edges[k + 1]]`; bins have equal width and the total mass is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub enum ThresholdDistribution {
    Piecewise {
        edges: Vec<f64>,
        densities: Vec<f64>,
    },
    Dirac {
        t0: f64,
    },
}

impl TryFrom<RawDistribution> for ThresholdDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw {
            RawDistribution::Piecewise { edges, densities } => Self::piecewise(edges, densities),
            RawDistribution::Dirac { t0 } => Self::dirac(t0),
        }
    }
}

impl From<ThresholdDistribution> for RawDistribution {
    fn from(d: ThresholdDistribution) -> Self {
        match d {
            ThresholdDistribution::Piecewise { edges, densities } => {
                RawDistribution::Piecewise { edges, densities }
            }
            ThresholdDistribution::Dirac { t0 } => RawDistribution::Dirac { t0 },
        }
    }
}

/// `k + 1` equally spaced edges on `[lower, upper]`.
pub fn uniform_edges(lower: f64, upper: f64, bins: usize) -> Result<Vec<f64>> {
    if bins == 0 {
        return Err(Error::Config("bin count K must be at least 1".into()));
    }
    if !(lower.is_finite() && upper.is_finite() && lower < upper) {
        return Err(Error::InvalidDistribution(format!(
            "empty threshold range ({lower}, {upper})"
        )));
    }
    let width = (upper - lower) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|k| lower + k as f64 * width).collect();
    edges.push(upper);
    Ok(edges)
}

impl ThresholdDistribution {
    pub fn dirac(t0: f64) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "threshold {t0} is not finite"
            )));
        }
        Ok(Self::Dirac { t0 })
    }

    pub fn piecewise(edges: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if densities.is_empty() || edges.len() != densities.len() + 1 {
            return Err(Error::InvalidDistribution(format!(
                "{} edges do not bound {} bins",
                edges.len(),
                densities.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidDistribution(
                "edges must be finite and strictly increasing".into(),
            ));
        }
        let span = edges[edges.len() - 1] - edges[0];
        let width = span / densities.len() as f64;
        if edges
            .windows(2)
            .any(|w| ((w[1] - w[0]) - width).abs() > 1e-9 * span.max(1.0))
        {
            return Err(Error::InvalidDistribution(
                "bins must have equal widths".into(),
            ));
        }
        if densities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "densities must be finite and non-negative".into(),
            ));
        }
        let mass: f64 = densities
            .iter()
            .zip(edges.windows(2))
            .map(|(p, w)| p * (w[1] - w[0]))
            .sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass {mass} is not 1"
            )));
        }
        Ok(Self::Piecewise { edges, densities })
    }

    /// Uniform density over `(lower, upper)` split into `bins` bins.
    pub fn uniform(lower: f64, upper: f64, bins: usize) -> Result<Self> {
        let edges = uniform_edges(lower, upper, bins)?;
        let p = 1.0 / (upper - lower);
        Self::piecewise(edges, vec![p; bins])
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self, Self::Dirac { .. })
    }

    /// Largest density value; infinite for a point mass.
    pub fn max_density(&self) -> f64 {
        match self {
            Self::Dirac { .. } => f64::INFINITY,
            Self::Piecewise { densities, .. } => densities.iter().copied().fold(0.0, f64::max),
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            Self::Dirac { .. } => 1.0,
            Self::Piecewise { edges, densities } => densities
                .iter()
                .zip(edges.windows(2))
                .map(|(p, w)| p * (w[1] - w[0]))
                .sum(),
        }
    }

    /// Probability mass of thresholds `t <= x`.
    pub fn mass_up_to(&self, x: f64) -> f64 {
        match self {
            Self::Dirac { t0 } => {
                if *t0 <= x {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Piecewise { edges, densities } => {
                // Exact values outside the support avoid rounding in flat tails.
                let first = densities.iter().position(|&p| p > 0.0).unwrap_or(0);
                let last = densities
                    .iter()
                    .rposition(|&p| p > 0.0)
                    .unwrap_or(densities.len() - 1);
                if x >= edges[last + 1] {
                    return 1.0;
                }
                if x <= edges[first] {
                    return 0.0;
                }
                densities
                    .iter()
                    .zip(edges.windows(2))
                    .map(|(p, w)| p * (x.min(w[1]) - w[0]).max(0.0))
                    .sum::<f64>()
                    .clamp(0.0, 1.0)
            }
        }
    }
}

/// Whether an agent at score `score` can profitably reach threshold `t`,
/// i.e. `t - cap <= score`. Shared by every decision rule so the boundary
/// convention is identical everywhere.
#[inline]
pub fn reaches(score: f64, t: f64, cap: f64) -> bool {
    t - cap <= score
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub new_score: f64,
    pub cost_paid: f64,
    pub outcome: u8,
}

/// Utility-maximizing response of an agent at `score` to a fixed threshold `t`.
pub fn best_respond(score: f64, t: f64, cost: &CostModel) -> BestResponse {
    if score >= t {
        BestResponse {
            new_score: score,
            cost_paid: 0.0,
            outcome: 1,
        }
    } else if reaches(score, t, cost.cap()) {
        BestResponse {
            new_score: t,
            cost_paid: cost.cost(t - score),
            outcome: 1,
        }
    } else {
        BestResponse {
            new_score: score,
            cost_paid: 0.0,
            outcome: 0,
        }
    }
}

/// Probability that an agent at `score` is accepted after best-responding to
/// a threshold drawn from `dist`.
pub fn expected_outcome(score: f64, dist: &ThresholdDistribution, cost: &CostModel) -> f64 {
    match dist {
        ThresholdDistribution::Dirac { t0 } => {
            if reaches(score, *t0, cost.cap()) {
                1.0
            } else {
                0.0
            }
        }
        _ => dist.mass_up_to(score + cost.cap()),
    }
}

/// Expected best-response cost `∫_{l}^{l + cap} g(t - l) p(t) dt`.
pub fn expected_brc(score: f64, dist: &ThresholdDistribution, cost: &CostModel) -> f64 {
    match dist {
        ThresholdDistribution::Dirac { t0 } => best_respond(score, *t0, cost).cost_paid,
        ThresholdDistribution::Piecewise { edges, densities } => {
            let reach = score + cost.cap();
            densities
                .iter()
                .zip(edges.windows(2))
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, w)| {
                    let v = score.max(w[0]);
                    let u = reach.min(w[1]);
                    if u > v {
                        p * cost.integral(score, v, u)
                    } else {
                        0.0
                    }
                })
                .sum()
        }
    }
}

/// Expected best-response cost for an arbitrary increasing cost shape `g`
/// with reach `cap`, by adaptive Simpson quadrature per bin overlap.
#[allow(dead_code)]
pub(crate) fn expected_brc_quadrature(
    score: f64,
    dist: &ThresholdDistribution,
    cap: f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    match dist {
        ThresholdDistribution::Dirac { t0 } => {
            if score < *t0 && reaches(score, *t0, cap) {
                g(t0 - score)
            } else {
                0.0
            }
        }
        ThresholdDistribution::Piecewise { edges, densities } => densities
            .iter()
            .zip(edges.windows(2))
            .map(|(p, w)| {
                let v = score.max(w[0]);
                let u = (score + cap).min(w[1]);
                if u > v && *p > 0.0 {
                    p * adaptive_simpson(&|t| g(t - score), v, u, 1e-9, 40)
                } else {
                    0.0
                }
            })
            .sum(),
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fico() -> CostModel {
        CostModel::fico_default()
    }

    /// Rectangle-rule integral of `h` over `[a, b]` with `n` midpoints.
    fn midpoint(h: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let dx = (b - a) / n as f64;
        (0..n).map(|i| h(a + (i as f64 + 0.5) * dx)).sum::<f64>() * dx
    }

    #[test]
    fn best_response_examples() {
        let r = best_respond(0.45, 0.5, &fico());
        assert_eq!(r.new_score, 0.5);
        assert!((r.cost_paid - 0.25).abs() < 1e-12);
        assert_eq!(r.outcome, 1);

        assert_eq!(
            best_respond(0.5, 0.5, &fico()),
            BestResponse {
                new_score: 0.5,
                cost_paid: 0.0,
                outcome: 1
            }
        );
        assert_eq!(
            best_respond(0.39, 0.5, &fico()),
            BestResponse {
                new_score: 0.39,
                cost_paid: 0.0,
                outcome: 0
            }
        );
    }

    #[test]
    fn best_response_beats_grid() {
        // Direct utility maximization over 10^4 candidate scores for the worked example.
        let cost = fico();
        let (l, t) = (0.45, 0.5);
        let best = (0..=10_000)
            .map(|i| l + 0.2 * i as f64 / 10_000.0)
            .map(|c| f64::from(u8::from(c >= t)) - cost.lambda() * cost.cost(c - l))
            .fold(f64::NEG_INFINITY, f64::max);
        let r = best_respond(l, t, &cost);
        let u = f64::from(r.outcome) - cost.lambda() * r.cost_paid;
        assert!(u >= best - 1e-12);
        assert!((u - 0.75).abs() < 1e-12);
    }

    #[test]
    fn outcome_examples() {
        let cost = fico();
        let uni = ThresholdDistribution::uniform(0.1, 1.0, 9).unwrap();
        assert!((expected_outcome(0.45, &uni, &cost) - 0.5).abs() < 1e-12);

        let d = ThresholdDistribution::dirac(0.5).unwrap();
        assert_eq!(expected_outcome(0.41, &d, &cost), 1.0);

        let pw = ThresholdDistribution::piecewise(
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            vec![0.0, 2.0, 2.0, 0.0],
        )
        .unwrap();
        let got = expected_outcome(0.275, &pw, &cost);
        let density = |t: f64| if (0.25..0.75).contains(&t) { 2.0 } else { 0.0 };
        let oracle = midpoint(density, 0.0, 0.375, 1_000_000);
        assert!((oracle - 0.25).abs() < 1e-6);
        assert!((got - 0.25).abs() < 1e-12);
    }

    #[test]
    fn brc_examples() {
        let cost = CostModel::new(2.0, 100.0, 2.0).unwrap();
        let d = ThresholdDistribution::dirac(0.7).unwrap();
        let at_edge = expected_brc(0.7 - cost.cap(), &d, &cost);
        assert!((at_edge - 1.0 / cost.lambda()).abs() < 1e-12);

        let uni = ThresholdDistribution::uniform(0.1, 1.0, 5).unwrap();
        assert_eq!(expected_brc(1.0, &uni, &cost), 0.0);
        assert_eq!(expected_brc(1.3, &uni, &cost), 0.0);

        let sq = CostModel::lawschool_default();
        let uni01 = ThresholdDistribution::uniform(0.0, 1.0, 4).unwrap();
        let got = expected_brc(0.0, &uni01, &sq);
        let oracle = midpoint(|t| t * t, 0.0, 1.0, 1_000_000);
        assert!((oracle - 1.0 / 3.0).abs() < 1e-9);
        assert!((got - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_fallback_agrees() {
        let cost = CostModel::new(1.5, 3.0, 2.5).unwrap();
        let dist = ThresholdDistribution::piecewise(
            vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            vec![0.5, 1.5, 0.0, 2.0, 1.0],
        )
        .unwrap();
        for i in 0..50 {
            let l = -0.5 + i as f64 * 0.03;
            let closed = expected_brc(l, &dist, &cost);
            let quad = expected_brc_quadrature(l, &dist, cost.cap(), |d| cost.cost(d));
            assert!((closed - quad).abs() < 1e-8, "l={l}: {closed} vs {quad}");
        }
    }

    #[test]
    fn dirac_jumps() {
        let cost = fico();
        let t0 = 0.6;
        let d = ThresholdDistribution::dirac(t0).unwrap();
        let at = t0 - cost.cap();
        let below = at - 1e-9;
        assert_eq!(
            expected_outcome(at, &d, &cost) - expected_outcome(below, &d, &cost),
            1.0
        );
        let jump = expected_brc(at, &d, &cost) - expected_brc(below, &d, &cost);
        assert!((jump - 1.0 / cost.lambda()).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(ThresholdDistribution::piecewise(vec![0.0, 1.0], vec![0.5]).is_err());
        assert!(ThresholdDistribution::piecewise(vec![0.0, 0.3, 1.0], vec![1.0, 1.0]).is_err());
        assert!(ThresholdDistribution::piecewise(vec![0.0, 0.5, 1.0], vec![-1.0, 3.0]).is_err());
        assert!(ThresholdDistribution::piecewise(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(ThresholdDistribution::dirac(f64::NAN).is_err());
        assert!(uniform_edges(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn json_layout() {
        let d = ThresholdDistribution::piecewise(vec![0.0, 0.5, 1.0], vec![0.4, 1.6]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&d).unwrap();
        assert_eq!(v["kind"], "piecewise");
        assert_eq!(v["edges"].as_array().unwrap().len(), 3);
        let back: ThresholdDistribution = serde_json::from_value(v).unwrap();
        assert_eq!(back, d);

        let v = serde_json::json!({"kind": "dirac", "t0": 0.3});
        let d: ThresholdDistribution = serde_json::from_value(v).unwrap();
        assert_eq!(d, ThresholdDistribution::Dirac { t0: 0.3 });

        let bad = serde_json::json!({"kind": "piecewise", "edges": [0.0, 1.0], "densities": [2.0]});
        assert!(serde_json::from_value::<ThresholdDistribution>(bad).is_err());
    }
}
