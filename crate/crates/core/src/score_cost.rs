//! Score models, power-family cost models and the density caps that
//! certify individual fairness of a randomized threshold.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margin added on both sides of data-derived score bounds so that the
/// extreme observations are strictly inside `[C, D]`.
pub const BOUNDS_MARGIN: f64 = 1e-9;

/// Closed score interval `[lower, upper]` containing every observed score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreBounds {
    pub lower: f64,
    pub upper: f64,
}

impl ScoreBounds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Config(format!(
                "score bounds must satisfy C < D, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Bounds taken from the min/max of `scores`, widened by [`BOUNDS_MARGIN`].
    pub fn from_scores<I: IntoIterator<Item = f64>>(scores: I) -> Result<Self> {
        let (lo, hi) = scores
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s), hi.max(s))
            });
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Estimation(
                "no finite scores to derive bounds from".into(),
            ));
        }
        Self::new(lo - BOUNDS_MARGIN, hi + BOUNDS_MARGIN)
    }

    pub fn contains(&self, score: f64) -> bool {
        (self.lower..=self.upper).contains(&score)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct CostParams {
    lambda: f64,
    alpha: f64,
    beta: f64,
}

/// Power-family manipulation cost `g(d) = alpha * d^beta` weighted by `lambda`
/// in the agent utility `gain - lambda * g(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostParams", into = "CostParams")]
pub struct CostModel {
    lambda: f64,
    alpha: f64,
    beta: f64,
    cap: f64,
    slope_bound: f64,
}

impl TryFrom<CostParams> for CostModel {
    type Error = Error;

    fn try_from(p: CostParams) -> Result<Self> {
        CostModel::new(p.lambda, p.alpha, p.beta)
    }
}

impl From<CostModel> for CostParams {
    fn from(c: CostModel) -> Self {
        CostParams {
            lambda: c.lambda,
            alpha: c.alpha,
            beta: c.beta,
        }
    }
}

impl CostModel {
    pub fn new(lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("alpha", alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidCostModel(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        // beta < 1 gives an unbounded slope at the origin.
        if !(beta.is_finite() && beta >= 1.0) {
            return Err(Error::InvalidCostModel(format!(
                "beta must be >= 1, got {beta}"
            )));
        }
        let cap = (1.0 / (alpha * lambda)).powf(1.0 / beta);
        let slope_bound = alpha * beta * cap.powf(beta - 1.0);
        Ok(Self {
            lambda,
            alpha,
            beta,
            cap,
            slope_bound,
        })
    }

    /// `lambda = 1, g(d) = 100 d^2`, the synthetic credit-score setting.
    pub fn fico_default() -> Self {
        Self::new(1.0, 100.0, 2.0).expect("valid constants")
    }

    /// `lambda = 1, g(d) = d^2`, the law-school setting.
    pub fn lawschool_default() -> Self {
        Self::new(1.0, 1.0, 2.0).expect("valid constants")
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Largest score gap an agent is willing to close: `g^{-1}(1 / lambda)`.
    pub fn cap(&self) -> f64 {
        self.cap
    }

    /// `max g'(d)` over `d in [0, cap]`.
    pub fn slope_bound(&self) -> f64 {
        self.slope_bound
    }

    /// `g(d)`; negative distances are not reachable and cost nothing here.
    pub fn cost(&self, d: f64) -> f64 {
        if d <= 0.0 {
            0.0
        } else {
            self.alpha * d.powf(self.beta)
        }
    }

    /// `∫_v^u g(t - origin) dt` for `origin <= v <= u`.
    pub fn integral(&self, origin: f64, v: f64, u: f64) -> f64 {
        let e = self.beta + 1.0;
        let hi = (u - origin).max(0.0).powf(e);
        let lo = (v - origin).max(0.0).powf(e);
        self.alpha * (hi - lo) / e
    }
}

/// Returns `g^{-1}(1 / lambda)` for the cost model.
pub fn cap_constant(cost: &CostModel) -> f64 {
    cost.cap()
}

/// Map from feature vectors to the scalar score `l(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum ScoreModel {
    /// The score is one raw feature.
    Coordinate { index: usize },
    /// `l(x) = w · x + b`.
    Linear { weights: Vec<f64>, intercept: f64 },
}

impl ScoreModel {
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        match self {
            ScoreModel::Coordinate { index } => features.get(*index).copied().ok_or_else(|| {
                Error::Config(format!(
                    "coordinate score index {index} out of range for {} features",
                    features.len()
                ))
            }),
            ScoreModel::Linear { weights, intercept } => {
                if weights.len() != features.len() {
                    return Err(Error::Config(format!(
                        "linear score expects {} features, got {}",
                        weights.len(),
                        features.len()
                    )));
                }
                Ok(weights
                    .iter()
                    .zip(features)
                    .map(|(w, x)| w * x)
                    .sum::<f64>()
                    + intercept)
            }
        }
    }

    /// `C_l`, the maximum Euclidean norm of the score gradient.
    pub fn gradient_bound(&self) -> f64 {
        match self {
            ScoreModel::Coordinate { .. } => 1.0,
            ScoreModel::Linear { weights, .. } => weights.iter().map(|w| w * w).sum::<f64>().sqrt(),
        }
    }
}

/// Cost and score model pair in the JSON config layout
/// `{"lambda", "alpha", "beta", "score": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    #[serde(flatten)]
    pub cost: CostModel,
    pub score: ScoreModel,
}

/// Lipschitz budgets for individual fairness w.r.t. best-response cost
/// (`mc`) and expected outcome (`mp`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FairnessBudget {
    pub mc: Option<f64>,
    pub mp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityCaps {
    pub brc: Option<f64>,
    pub outcome: Option<f64>,
    pub joint: f64,
}

/// Density caps `L_c`, `L_p` and their minimum for the supplied budgets.
pub fn density_cap_individual(
    budget: &FairnessBudget,
    cost: &CostModel,
    score: &ScoreModel,
) -> Result<DensityCaps> {
    let grad = score.gradient_bound();
    if !(grad.is_finite() && grad > 0.0) {
        return Err(Error::DegenerateScoreModel);
    }
    for (name, v) in [("M_c", budget.mc), ("M_p", budget.mp)] {
        if let Some(v) = v {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidBudget(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
    }
    let brc = budget.mc.map(|mc| {
        let via_gain = cost.lambda() * mc / grad;
        let via_slope = mc / (grad * cost.slope_bound() * cost.cap());
        via_gain.min(via_slope)
    });
    let outcome = budget.mp.map(|mp| mp / grad);
    let joint = match (brc, outcome) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) | (None, Some(a)) => a,
        (None, None) => {
            return Err(Error::InvalidBudget(
                "at least one of M_c, M_p is required".into(),
            ))
        }
    };
    Ok(DensityCaps {
        brc,
        outcome,
        joint,
    })
}
