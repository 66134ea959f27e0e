//! Fitting fair threshold distributions and sampling decisions from them.

use std::collections::BTreeMap;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    compute_error_weights, compute_positive_weights, conditional_positive_weights, BinWeights,
    GroupId, ScoredSample,
};
use crate::lp::{self, LpProblem, LpStatus};
use crate::response::{self, reaches, uniform_edges, ThresholdDistribution};
use crate::score_cost::{
    density_cap_individual, CostModel, FairnessBudget, ScoreBounds, ScoreModel,
};

/// How the density cap `L` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CapMode {
    /// Individual fairness w.r.t. best-response cost with constant `mc`.
    Brc {
        mc: f64,
    },
    /// Individual fairness w.r.t. expected outcome with constant `mp`.
    Outcome {
        mp: f64,
    },
    Joint {
        mc: f64,
        mp: f64,
    },
    /// Use `cap` as the density bound directly.
    Direct {
        cap: f64,
    },
}

impl CapMode {
    pub fn budget(&self) -> FairnessBudget {
        match *self {
            CapMode::Brc { mc } => FairnessBudget {
                mc: Some(mc),
                mp: None,
            },
            CapMode::Outcome { mp } => FairnessBudget {
                mc: None,
                mp: Some(mp),
            },
            CapMode::Joint { mc, mp } => FairnessBudget {
                mc: Some(mc),
                mp: Some(mp),
            },
            CapMode::Direct { .. } => FairnessBudget::default(),
        }
    }

    /// Density cap for one group's cost and score models.
    pub fn resolve(&self, cost: &CostModel, score: &ScoreModel) -> Result<f64> {
        match *self {
            CapMode::Direct { cap } => {
                if cap.is_finite() && cap > 0.0 {
                    Ok(cap)
                } else {
                    Err(Error::InvalidBudget(format!(
                        "density cap must be positive, got {cap}"
                    )))
                }
            }
            _ => Ok(density_cap_individual(&self.budget(), cost, score)?.joint),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GroupMode {
    #[default]
    None,
    Parity {
        omega: f64,
    },
    EqualOpportunity {
        omega: f64,
    },
    EqualizedOdds {
        omega: f64,
    },
}

impl GroupMode {
    pub fn omega(&self) -> Option<f64> {
        match *self {
            GroupMode::None => None,
            GroupMode::Parity { omega }
            | GroupMode::EqualOpportunity { omega }
            | GroupMode::EqualizedOdds { omega } => Some(omega),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GroupMode::None => "none",
            GroupMode::Parity { .. } => "parity",
            GroupMode::EqualOpportunity { .. } => "eqopp",
            GroupMode::EqualizedOdds { .. } => "eqodds",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSpec {
    pub bins: usize,
    pub cap: CapMode,
    pub group_mode: GroupMode,
}

impl FitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::Config("bin count K must be at least 1".into()));
        }
        if let Some(omega) = self.group_mode.omega() {
            if !(omega.is_finite() && omega >= 0.0) {
                return Err(Error::Config(format!("omega must be >= 0, got {omega}")));
            }
        }
        Ok(())
    }
}

/// Cost and score model for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModels {
    pub cost: CostModel,
    pub score: ScoreModel,
}

/// Models shared by all groups, with optional per-group overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupModelSet {
    pub default: GroupModels,
    #[serde(default)]
    pub per_group: BTreeMap<GroupId, GroupModels>,
}

impl GroupModelSet {
    pub fn shared(models: GroupModels) -> Self {
        Self {
            default: models,
            per_group: BTreeMap::new(),
        }
    }

    pub fn get(&self, group: Option<GroupId>) -> &GroupModels {
        group
            .and_then(|g| self.per_group.get(&g))
            .unwrap_or(&self.default)
    }
}

/// The threshold law applied to one group (or to everyone when `group` is `None`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPolicy {
    pub group: Option<GroupId>,
    pub cost: CostModel,
    pub score: ScoreModel,
    pub bounds: ScoreBounds,
    pub density_cap: Option<f64>,
    pub distribution: ThresholdDistribution,
}

impl GroupPolicy {
    pub fn expected_outcome(&self, score: f64) -> f64 {
        response::expected_outcome(score, &self.distribution, &self.cost)
    }

    pub fn expected_brc(&self, score: f64) -> f64 {
        response::expected_brc(score, &self.distribution, &self.cost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Lp,
    GridSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub method: FitMethod,
    pub bins: usize,
    pub cap_mode: Option<CapMode>,
    pub group_mode: GroupMode,
    /// Expected post-best-response error rate on the training split.
    pub objective: f64,
    pub lp_status: Option<LpStatus>,
    pub lp_iterations: Option<usize>,
    /// Achieved training-set gaps for each group-constraint row family.
    pub constraint_gaps: Vec<f64>,
    pub train_f1: Option<f64>,
    pub validation_f1: Option<f64>,
    pub selection_split: String,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairPolicy {
    pub groups: Vec<GroupPolicy>,
    pub budget: FairnessBudget,
    pub metadata: FitMetadata,
}

/// Everything the LP fit consumed, for audit dumps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitArtifacts {
    pub lp: LpProblem,
    pub weights: Vec<BinWeights>,
}

/// Decision rule applied to a sampled threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Accept iff the agent can reach the threshold: `l(x) + cap >= t`.
    #[default]
    BestResponse,
    /// Accept iff `l(x) >= t`, ignoring the agent's response.
    RawScore,
}

impl FairPolicy {
    pub fn is_per_group(&self) -> bool {
        self.groups.iter().any(|g| g.group.is_some())
    }

    pub fn component(&self, group: Option<GroupId>) -> Result<&GroupPolicy> {
        if let [only] = self.groups.as_slice() {
            if only.group.is_none() {
                return Ok(only);
            }
        }
        let g = group
            .ok_or_else(|| Error::Config("policy is per-group; a group id is required".into()))?;
        self.groups
            .iter()
            .find(|p| p.group == Some(g))
            .ok_or(Error::UnknownGroup(g))
    }

    pub fn score(&self, features: &[f64], group: Option<GroupId>) -> Result<f64> {
        self.component(group)?.score.score(features)
    }

    pub fn expected_outcome(&self, features: &[f64], group: Option<GroupId>) -> Result<f64> {
        let c = self.component(group)?;
        Ok(c.expected_outcome(c.score.score(features)?))
    }

    pub fn expected_brc(&self, features: &[f64], group: Option<GroupId>) -> Result<f64> {
        let c = self.component(group)?;
        Ok(c.expected_brc(c.score.score(features)?))
    }
}

/// Draws a threshold: a bin with probability proportional to its mass, then
/// a uniform offset inside it.
pub fn sample_threshold<R: Rng + ?Sized>(dist: &ThresholdDistribution, rng: &mut R) -> f64 {
    match dist {
        ThresholdDistribution::Dirac { t0 } => *t0,
        ThresholdDistribution::Piecewise { edges, densities } => {
            let masses: Vec<f64> = densities
                .iter()
                .zip(edges.windows(2))
                .map(|(p, w)| p * (w[1] - w[0]))
                .collect();
            let k = WeightedIndex::new(&masses)
                .expect("validated distribution has positive mass")
                .sample(rng);
            let eta: f64 = rng.random();
            edges[k] + eta * (edges[k + 1] - edges[k])
        }
    }
}

/// One randomized decision for a scored individual.
pub fn decide<R: Rng + ?Sized>(
    component: &GroupPolicy,
    score: f64,
    rule: DecisionRule,
    rng: &mut R,
) -> u8 {
    let t = sample_threshold(&component.distribution, rng);
    let accepted = match rule {
        DecisionRule::BestResponse => reaches(score, t, component.cost.cap()),
        DecisionRule::RawScore => score >= t,
    };
    u8::from(accepted)
}

/// Randomized decision for `features`, deterministic given `seed`.
pub fn predict(
    policy: &FairPolicy,
    features: &[f64],
    group: Option<GroupId>,
    seed: u64,
    rule: DecisionRule,
) -> Result<u8> {
    let c = policy.component(group)?;
    let score = c.score.score(features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(decide(c, score, rule, &mut rng))
}

/// Expected post-best-response error rate of `policy` on `samples`.
pub fn expected_error(policy: &FairPolicy, samples: &[ScoredSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Estimation("no samples".into()));
    }
    let mut total = 0.0;
    for s in samples {
        let accept = policy.component(s.group)?.expected_outcome(s.score);
        total += if s.label == 1 { 1.0 - accept } else { accept };
    }
    Ok(total / samples.len() as f64)
}

struct GroupSetup {
    bounds: ScoreBounds,
    edges: Vec<f64>,
    cap: f64,
    error: BinWeights,
}

fn setup_group(
    samples: &[ScoredSample],
    bins: usize,
    cap_mode: &CapMode,
    models: &GroupModels,
) -> Result<GroupSetup> {
    let bounds = ScoreBounds::from_scores(samples.iter().map(|s| s.score))?;
    let lo = bounds.lower + models.cost.cap();
    let width = bounds.upper - lo;
    if !(width > 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "manipulation reach {} covers the whole score range [{}, {}]",
            models.cost.cap(),
            bounds.lower,
            bounds.upper
        )));
    }
    let cap = cap_mode.resolve(&models.cost, &models.score)?;
    if cap * width < 1.0 - 1e-12 {
        return Err(Error::InfeasibleCap {
            cap,
            width,
            min_cap: 1.0 / width,
        });
    }
    let edges = uniform_edges(lo, bounds.upper, bins)?;
    let error = compute_error_weights(samples, &edges, &models.cost)?;
    Ok(GroupSetup {
        bounds,
        edges,
        cap,
        error,
    })
}

fn densities_from(x: &[f64], cap: f64, edges: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = x.iter().map(|v| v.clamp(0.0, cap)).collect();
    let mass: f64 = p
        .iter()
        .zip(edges.windows(2))
        .map(|(p, w)| p * (w[1] - w[0]))
        .sum();
    if (mass - 1.0).abs() > 1e-12 && mass > 0.0 {
        p.iter_mut().for_each(|v| *v = (*v / mass).min(cap));
    }
    p
}

fn lp_failure(status: LpStatus) -> Error {
    Error::LpStatus(status)
}

/// Optimal capped threshold density for a single population.
pub fn fit_individual(
    train: &[ScoredSample],
    spec: &FitSpec,
    cost: &CostModel,
    score: &ScoreModel,
) -> Result<FairPolicy> {
    fit_individual_with_artifacts(train, spec, cost, score).map(|(p, _)| p)
}

pub fn fit_individual_with_artifacts(
    train: &[ScoredSample],
    spec: &FitSpec,
    cost: &CostModel,
    score: &ScoreModel,
) -> Result<(FairPolicy, FitArtifacts)> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::Estimation("training set is empty".into()));
    }
    let models = GroupModels {
        cost: *cost,
        score: score.clone(),
    };
    let setup = setup_group(train, spec.bins, &spec.cap, &models)?;
    let widths: Vec<f64> = setup.edges.windows(2).map(|w| w[1] - w[0]).collect();
    let mut lp = LpProblem::new(setup.error.weights.clone(), vec![setup.cap; spec.bins]);
    lp.add_eq(widths, 1.0);

    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            let width = setup.bounds.upper - setup.edges[0];
            return Err(Error::InfeasibleCap {
                cap: setup.cap,
                width,
                min_cap: 1.0 / width,
            });
        }
        s => return Err(lp_failure(s)),
    }
    let densities = densities_from(&sol.x, setup.cap, &setup.edges);
    let objective = setup.error.dot(&densities);
    let distribution = ThresholdDistribution::piecewise(setup.edges.clone(), densities)?;
    let policy = FairPolicy {
        groups: vec![GroupPolicy {
            group: None,
            cost: *cost,
            score: score.clone(),
            bounds: setup.bounds,
            density_cap: Some(setup.cap),
            distribution,
        }],
        budget: spec.cap.budget(),
        metadata: FitMetadata {
            method: FitMethod::Lp,
            bins: spec.bins,
            cap_mode: Some(spec.cap),
            group_mode: GroupMode::None,
            objective,
            lp_status: Some(sol.status),
            lp_iterations: Some(sol.iterations),
            constraint_gaps: Vec::new(),
            train_f1: None,
            validation_f1: None,
            selection_split: "train".into(),
            seed: None,
        },
    };
    Ok((
        policy,
        FitArtifacts {
            lp,
            weights: vec![setup.error],
        },
    ))
}

fn split_by_group(samples: &[ScoredSample]) -> Result<BTreeMap<GroupId, Vec<ScoredSample>>> {
    let mut out: BTreeMap<GroupId, Vec<ScoredSample>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        let g = s
            .group
            .ok_or_else(|| Error::Estimation(format!("sample {i} has no group id")))?;
        out.entry(g).or_default().push(*s);
    }
    Ok(out)
}

/// Per-group threshold densities minimizing the population error subject to
/// per-group caps and pairwise group-fairness rows relaxed by `omega`.
pub fn fit_group(
    train: &[ScoredSample],
    spec: &FitSpec,
    models: &GroupModelSet,
) -> Result<FairPolicy> {
    fit_group_with_artifacts(train, spec, models).map(|(p, _)| p)
}

pub fn fit_group_with_artifacts(
    train: &[ScoredSample],
    spec: &FitSpec,
    models: &GroupModelSet,
) -> Result<(FairPolicy, FitArtifacts)> {
    spec.validate()?;
    if train.is_empty() {
        return Err(Error::Estimation("training set is empty".into()));
    }
    let by_group = split_by_group(train)?;
    let n_total = train.len() as f64;
    let k = spec.bins;

    let mut setups = Vec::new();
    let mut families: Vec<Vec<BinWeights>> = Vec::new();
    for (&g, samples) in &by_group {
        let m = models.get(Some(g));
        let setup = setup_group(samples, k, &spec.cap, m)?;
        let rows = match spec.group_mode {
            GroupMode::None => vec![],
            GroupMode::Parity { .. } => {
                vec![compute_positive_weights(samples, &setup.edges, &m.cost)?]
            }
            GroupMode::EqualOpportunity { .. } => {
                vec![conditional_positive_weights(
                    samples,
                    &setup.edges,
                    &m.cost,
                    1,
                )?]
            }
            GroupMode::EqualizedOdds { .. } => vec![
                conditional_positive_weights(samples, &setup.edges, &m.cost, 1)?,
                conditional_positive_weights(samples, &setup.edges, &m.cost, 0)?,
            ],
        };
        families.push(rows);
        setups.push((g, samples.len() as f64 / n_total, setup));
    }

    let n_groups = setups.len();
    let n_vars = n_groups * k;
    let mut objective = Vec::with_capacity(n_vars);
    let mut upper = Vec::with_capacity(n_vars);
    for (_, prior, s) in &setups {
        objective.extend(s.error.weights.iter().map(|a| a * prior));
        upper.extend(std::iter::repeat_n(s.cap, k));
    }
    let mut lp = LpProblem::new(objective, upper);
    for (gi, (_, _, s)) in setups.iter().enumerate() {
        let mut row = vec![0.0; n_vars];
        for (j, w) in s.edges.windows(2).enumerate() {
            row[gi * k + j] = w[1] - w[0];
        }
        lp.add_eq(row, 1.0);
    }
    let omega = spec.group_mode.omega().unwrap_or(f64::INFINITY);
    let n_families = families.first().map_or(0, Vec::len);
    for f in 0..n_families {
        for a in 0..n_groups {
            for b in (a + 1)..n_groups {
                let mut row = vec![0.0; n_vars];
                for j in 0..k {
                    row[a * k + j] = families[a][f].weights[j];
                    row[b * k + j] = -families[b][f].weights[j];
                }
                let neg: Vec<f64> = row.iter().map(|v| -v).collect();
                lp.add_le(row, omega);
                lp.add_le(neg, omega);
            }
        }
    }

    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::InfeasibleOmega { omega }),
        s => return Err(lp_failure(s)),
    }

    let mut groups = Vec::with_capacity(n_groups);
    let mut all_densities = Vec::with_capacity(n_groups);
    let mut objective_value = 0.0;
    for (gi, (g, prior, s)) in setups.iter().enumerate() {
        let densities = densities_from(&sol.x[gi * k..(gi + 1) * k], s.cap, &s.edges);
        objective_value += prior * s.error.dot(&densities);
        let m = models.get(Some(*g));
        groups.push(GroupPolicy {
            group: Some(*g),
            cost: m.cost,
            score: m.score.clone(),
            bounds: s.bounds,
            density_cap: Some(s.cap),
            distribution: ThresholdDistribution::piecewise(s.edges.clone(), densities.clone())?,
        });
        all_densities.push(densities);
    }
    let mut constraint_gaps = Vec::new();
    for f in 0..n_families {
        let mut worst = 0.0f64;
        for a in 0..n_groups {
            for b in (a + 1)..n_groups {
                let gap =
                    families[a][f].dot(&all_densities[a]) - families[b][f].dot(&all_densities[b]);
                worst = worst.max(gap.abs());
            }
        }
        constraint_gaps.push(worst);
    }

    let mut weights: Vec<BinWeights> = setups.into_iter().map(|(_, _, s)| s.error).collect();
    weights.extend(families.into_iter().flatten());
    let policy = FairPolicy {
        groups,
        budget: spec.cap.budget(),
        metadata: FitMetadata {
            method: FitMethod::Lp,
            bins: k,
            cap_mode: Some(spec.cap),
            group_mode: spec.group_mode,
            objective: objective_value,
            lp_status: Some(sol.status),
            lp_iterations: Some(sol.iterations),
            constraint_gaps,
            train_f1: None,
            validation_f1: None,
            selection_split: "train".into(),
            seed: None,
        },
    };
    Ok((policy, FitArtifacts { lp, weights }))
}

/// Confusion counts for threshold decisions, used by the grid search.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Tally {
    tp: f64,
    fp: f64,
    pos: f64,
    neg: f64,
}

impl Tally {
    fn add(&self, o: &Tally) -> Tally {
        Tally {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            pos: self.pos + o.pos,
            neg: self.neg + o.neg,
        }
    }

    fn macro_f1(&self) -> f64 {
        let fn_ = self.pos - self.tp;
        let tn = self.neg - self.fp;
        let f1 = |hit: f64, miss_a: f64, miss_b: f64| {
            let d = 2.0 * hit + miss_a + miss_b;
            if d > 0.0 {
                2.0 * hit / d
            } else {
                0.0
            }
        };
        0.5 * (f1(self.tp, self.fp, fn_) + f1(tn, fn_, self.fp))
    }

    fn error(&self) -> f64 {
        (self.pos - self.tp + self.fp) / (self.pos + self.neg)
    }

    fn acceptance(&self) -> f64 {
        (self.tp + self.fp) / (self.pos + self.neg)
    }

    fn tpr(&self) -> f64 {
        self.tp / self.pos
    }

    fn fpr(&self) -> f64 {
        self.fp / self.neg
    }
}

/// Sorted scores with suffix counts, so the tally for any threshold is a
/// binary search away.
struct SortedGroup {
    scores: Vec<f64>,
    suffix_pos: Vec<usize>,
    cap: f64,
}

impl SortedGroup {
    fn new(samples: &[ScoredSample], cap: f64) -> Self {
        let mut v: Vec<(f64, u8)> = samples.iter().map(|s| (s.score, s.label)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut suffix_pos = vec![0usize; v.len() + 1];
        for i in (0..v.len()).rev() {
            suffix_pos[i] = suffix_pos[i + 1] + usize::from(v[i].1 == 1);
        }
        Self {
            scores: v.into_iter().map(|(s, _)| s).collect(),
            suffix_pos,
            cap,
        }
    }

    fn tally(&self, t: f64) -> Tally {
        // Accepted iff reaches(l, t, cap), i.e. not (l < t - cap).
        let first = self.scores.partition_point(|&l| !reaches(l, t, self.cap));
        let accepted = self.scores.len() - first;
        let tp = self.suffix_pos[first];
        let pos = self.suffix_pos[0];
        Tally {
            tp: tp as f64,
            fp: (accepted - tp) as f64,
            pos: pos as f64,
            neg: (self.scores.len() - pos) as f64,
        }
    }
}

fn candidate_thresholds(
    samples: &[ScoredSample],
    cost: &CostModel,
    bins: usize,
) -> Result<Vec<f64>> {
    let bounds = ScoreBounds::from_scores(samples.iter().map(|s| s.score))?;
    let mut c: Vec<f64> = samples.iter().map(|s| s.score + cost.cap()).collect();
    let lo = bounds.lower + cost.cap();
    if lo < bounds.upper {
        c.extend(uniform_edges(lo, bounds.upper, bins.max(1))?);
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    Ok(c)
}

fn satisfies(mode: &GroupMode, a: &Tally, b: &Tally) -> bool {
    let tol = 1e-12;
    match *mode {
        GroupMode::None => true,
        GroupMode::Parity { omega } => (a.acceptance() - b.acceptance()).abs() <= omega + tol,
        GroupMode::EqualOpportunity { omega } => (a.tpr() - b.tpr()).abs() <= omega + tol,
        GroupMode::EqualizedOdds { omega } => {
            (a.tpr() - b.tpr()).abs().max((a.fpr() - b.fpr()).abs()) <= omega + tol
        }
    }
}

/// Deterministic threshold(s) maximizing training macro-F1 by exhaustive
/// search over every observed reach `l_i + cap` and the bin edges.
///
/// With `GroupMode::None` a single threshold is shared by everyone; any other
/// mode searches the Cartesian product of two per-group thresholds subject
/// to the mode's constraint on the training data. Ties go to the smaller
/// threshold(s).
pub fn fit_deterministic_baseline(
    train: &[ScoredSample],
    validation: &[ScoredSample],
    mode: GroupMode,
    bins: usize,
    models: &GroupModelSet,
) -> Result<FairPolicy> {
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Estimation(
            "baseline needs non-empty train and validation splits".into(),
        ));
    }
    let (groups, train_tally) = match mode {
        GroupMode::None => {
            let m = models.get(None);
            let sorted = SortedGroup::new(train, m.cost.cap());
            let mut best: Option<(f64, f64)> = None;
            for t in candidate_thresholds(train, &m.cost, bins)? {
                let f1 = sorted.tally(t).macro_f1();
                if best.is_none_or(|(b, _)| f1 > b) {
                    best = Some((f1, t));
                }
            }
            let (_, t) = best.expect("at least one candidate");
            let bounds = ScoreBounds::from_scores(train.iter().map(|s| s.score))?;
            let tally = sorted.tally(t);
            (
                vec![GroupPolicy {
                    group: None,
                    cost: m.cost,
                    score: m.score.clone(),
                    bounds,
                    density_cap: None,
                    distribution: ThresholdDistribution::dirac(t)?,
                }],
                tally,
            )
        }
        _ => {
            let by_group = split_by_group(train)?;
            if by_group.len() != 2 {
                return Err(Error::Config(format!(
                    "group baseline needs exactly two groups, found {}",
                    by_group.len()
                )));
            }
            let parts: Vec<(GroupId, &Vec<ScoredSample>)> =
                by_group.iter().map(|(g, s)| (*g, s)).collect();
            let mut prepared = Vec::new();
            for (g, s) in &parts {
                let m = models.get(Some(*g));
                let sorted = SortedGroup::new(s, m.cost.cap());
                let cands = candidate_thresholds(s, &m.cost, bins)?;
                let tallies: Vec<Tally> = cands.iter().map(|&t| sorted.tally(t)).collect();
                prepared.push((cands, tallies));
            }
            let (ca, ta) = &prepared[0];
            let (cb, tb) = &prepared[1];
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, a) in ta.iter().enumerate() {
                for (j, b) in tb.iter().enumerate() {
                    if !satisfies(&mode, a, b) {
                        continue;
                    }
                    let f1 = a.add(b).macro_f1();
                    if best.is_none_or(|(bf, _, _)| f1 > bf) {
                        best = Some((f1, i, j));
                    }
                }
            }
            let (_, i, j) = best.ok_or(Error::InfeasibleBaseline {
                omega: mode.omega().unwrap_or(0.0),
            })?;
            let mut groups = Vec::new();
            for ((g, s), t) in parts.iter().zip([ca[i], cb[j]]) {
                let m = models.get(Some(*g));
                groups.push(GroupPolicy {
                    group: Some(*g),
                    cost: m.cost,
                    score: m.score.clone(),
                    bounds: ScoreBounds::from_scores(s.iter().map(|x| x.score))?,
                    density_cap: None,
                    distribution: ThresholdDistribution::dirac(t)?,
                });
            }
            (groups, ta[i].add(&tb[j]))
        }
    };

    let mut policy = FairPolicy {
        groups,
        budget: FairnessBudget::default(),
        metadata: FitMetadata {
            method: FitMethod::GridSearch,
            bins,
            cap_mode: None,
            group_mode: mode,
            objective: train_tally.error(),
            lp_status: None,
            lp_iterations: None,
            constraint_gaps: Vec::new(),
            train_f1: Some(train_tally.macro_f1()),
            validation_f1: None,
            selection_split: "train".into(),
            seed: None,
        },
    };
    let mut val = Tally::default();
    for s in validation {
        let c = policy.component(s.group)?;
        let accepted = c.expected_outcome(s.score) >= 0.5;
        let is_pos = s.label == 1;
        val.pos += f64::from(u8::from(is_pos));
        val.neg += f64::from(u8::from(!is_pos));
        val.tp += f64::from(u8::from(accepted && is_pos));
        val.fp += f64::from(u8::from(accepted && !is_pos));
    }
    policy.metadata.validation_f1 = Some(val.macro_f1());
    Ok(policy)
}
