//! Seeded experiment runs: data preparation, fitting, evaluation and the
//! table sweeps.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    self, fit_score_model, read_lawschool, sample_fico, split, stream, stream_rng, FicoOptions,
    GroupCdfTable, SplitSpec, Splits, TabularDataset,
};
use crate::error::{Error, Result};
use crate::metrics::{
    disparity, if_ratio, if_ratio_subsampled, macro_f1, DisparityMode, FairnessReport, SeedMetrics,
    Summary,
};
use crate::policy::{
    decide, fit_deterministic_baseline, fit_group_with_artifacts, fit_individual_with_artifacts,
    CapMode, DecisionRule, FairPolicy, FitArtifacts, FitSpec, GroupMode, GroupModelSet,
    GroupModels,
};
use crate::score_cost::{CostModel, ScoreModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    FicoSynthetic {
        /// CDF table; the bundled table when absent.
        #[serde(default)]
        cdf_path: Option<PathBuf>,
        #[serde(default)]
        priors: Option<Vec<f64>>,
        #[serde(default)]
        options: FicoOptions,
    },
    Lawschool {
        path: PathBuf,
    },
}

impl DatasetSpec {
    pub fn fico() -> Self {
        DatasetSpec::FicoSynthetic {
            cdf_path: None,
            priors: None,
            options: FicoOptions::default(),
        }
    }

    pub fn default_cost(&self) -> CostModel {
        match self {
            DatasetSpec::FicoSynthetic { .. } => CostModel::fico_default(),
            DatasetSpec::Lawschool { .. } => CostModel::lawschool_default(),
        }
    }

    pub fn default_bins(&self) -> usize {
        match self {
            DatasetSpec::FicoSynthetic { .. } => 200,
            DatasetSpec::Lawschool { .. } => 80,
        }
    }
}

/// Everything needed to re-run an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub cost: CostModel,
    pub bins: usize,
    pub cap: CapMode,
    #[serde(default)]
    pub group_mode: GroupMode,
    /// Fit the grid-searched deterministic threshold(s) instead of the LP.
    #[serde(default)]
    pub deterministic: bool,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub decision: DecisionRule,
    #[serde(default)]
    pub if_subsample: Option<usize>,
    #[serde(default)]
    pub exclude_sensitive: bool,
}

impl RunConfig {
    pub fn new(dataset: DatasetSpec, cap: CapMode) -> Self {
        Self {
            cost: dataset.default_cost(),
            bins: dataset.default_bins(),
            dataset,
            cap,
            group_mode: GroupMode::None,
            deterministic: false,
            seeds: (0..5).collect(),
            decision: DecisionRule::BestResponse,
            if_subsample: None,
            exclude_sensitive: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        FitSpec {
            bins: self.bins,
            cap: self.cap,
            group_mode: self.group_mode,
        }
        .validate()?;
        if let CapMode::Direct { cap } = self.cap {
            if !(cap.is_finite() && cap > 0.0) {
                return Err(Error::Config(format!(
                    "density cap must be positive, got {cap}"
                )));
            }
        }
        if self.if_subsample.is_some_and(|m| m < 2) {
            return Err(Error::Config(
                "IF subsample must keep at least two rows".into(),
            ));
        }
        Ok(())
    }

    pub fn fit_spec(&self) -> FitSpec {
        FitSpec {
            bins: self.bins,
            cap: self.cap,
            group_mode: self.group_mode,
        }
    }
}

/// SHA-256 of the value's JSON encoding.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// A dataset source loaded once and re-split per seed.
pub enum Source {
    Fico {
        table: GroupCdfTable,
        options: FicoOptions,
    },
    Lawschool {
        data: TabularDataset,
    },
}

/// One seed's splits plus the score model fitted for it.
pub struct SeedData {
    pub splits: Splits,
    pub score: ScoreModel,
}

impl Source {
    pub fn load(spec: &DatasetSpec) -> Result<Self> {
        match spec {
            DatasetSpec::FicoSynthetic {
                cdf_path,
                priors,
                options,
            } => {
                let table = match cdf_path {
                    Some(p) => GroupCdfTable::from_path(p, priors.as_deref())?,
                    None => match priors {
                        Some(p) => {
                            GroupCdfTable::from_reader(data::DEFAULT_FICO_CDF.as_bytes(), Some(p))?
                        }
                        None => GroupCdfTable::bundled(),
                    },
                };
                Ok(Source::Fico {
                    table,
                    options: *options,
                })
            }
            DatasetSpec::Lawschool { path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| Error::data(path.display().to_string(), e.to_string()))?;
                Ok(Source::Lawschool {
                    data: read_lawschool(file)?,
                })
            }
        }
    }

    pub fn seed_data(&self, seed: u64) -> Result<SeedData> {
        match self {
            Source::Fico { table, options } => {
                let data = sample_fico(table, options, seed)?;
                Ok(SeedData {
                    splits: split(&data, &SplitSpec::new(seed))?,
                    score: ScoreModel::Coordinate { index: 0 },
                })
            }
            Source::Lawschool { data } => {
                let splits = split(data, &SplitSpec::new(seed))?;
                let score = fit_score_model(&splits.train)?;
                Ok(SeedData { splits, score })
            }
        }
    }
}

/// Which fit to run on a seed's data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Randomized { spec: FitSpec },
    Deterministic { group_mode: GroupMode, bins: usize },
}

impl Method {
    pub fn from_config(config: &RunConfig) -> Self {
        if config.deterministic {
            Method::Deterministic {
                group_mode: config.group_mode,
                bins: config.bins,
            }
        } else {
            Method::Randomized {
                spec: config.fit_spec(),
            }
        }
    }
}

pub fn fit_seed(
    data: &SeedData,
    cost: &CostModel,
    method: &Method,
    seed: u64,
) -> Result<(FairPolicy, Option<FitArtifacts>)> {
    let train = data.splits.train.scored(&data.score, true)?;
    let models = GroupModelSet::shared(GroupModels {
        cost: *cost,
        score: data.score.clone(),
    });
    let (mut policy, artifacts) = match method {
        Method::Deterministic { group_mode, bins } => {
            let validation = data.splits.validation.scored(&data.score, true)?;
            (
                fit_deterministic_baseline(&train, &validation, *group_mode, *bins, &models)?,
                None,
            )
        }
        Method::Randomized { spec } if spec.group_mode == GroupMode::None => {
            let (p, a) = fit_individual_with_artifacts(&train, spec, cost, &data.score)?;
            (p, Some(a))
        }
        Method::Randomized { spec } => {
            let (p, a) = fit_group_with_artifacts(&train, spec, &models)?;
            (p, Some(a))
        }
    };
    policy.metadata.seed = Some(seed);
    Ok((policy, artifacts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub decision: DecisionRule,
    pub if_subsample: Option<usize>,
    pub exclude_sensitive: bool,
}

impl From<&RunConfig> for EvalOptions {
    fn from(c: &RunConfig) -> Self {
        Self {
            decision: c.decision,
            if_subsample: c.if_subsample,
            exclude_sensitive: c.exclude_sensitive,
        }
    }
}

/// Decisions (Algorithm 2 draws) and per-row expectations on `data`.
pub struct Evaluation {
    pub predictions: Vec<u8>,
    pub expected_outcome: Vec<f64>,
    pub expected_brc: Vec<f64>,
}

pub fn score_rows(
    policy: &FairPolicy,
    data: &TabularDataset,
    seed: u64,
    rule: DecisionRule,
) -> Result<Evaluation> {
    let mut rng = stream_rng(seed, stream::PREDICT);
    let per_group = policy.is_per_group();
    let mut out = Evaluation {
        predictions: Vec::with_capacity(data.len()),
        expected_outcome: Vec::with_capacity(data.len()),
        expected_brc: Vec::with_capacity(data.len()),
    };
    for r in &data.rows {
        let c = policy.component(per_group.then_some(r.group))?;
        let score = c.score.score(&r.features)?;
        out.predictions.push(decide(c, score, rule, &mut rng));
        out.expected_outcome.push(c.expected_outcome(score));
        out.expected_brc.push(c.expected_brc(score));
    }
    Ok(out)
}

pub fn evaluate_seed(
    policy: &FairPolicy,
    test: &TabularDataset,
    seed: u64,
    opts: &EvalOptions,
) -> Result<SeedMetrics> {
    let ev = score_rows(policy, test, seed, opts.decision)?;
    let labels = test.labels();
    let features = test.distance_features(opts.exclude_sensitive);
    let ratio = |g: &[f64]| match opts.if_subsample {
        Some(m) => if_ratio_subsampled(
            g,
            &features,
            m,
            stream_rng(seed, stream::SUBSAMPLE).random(),
        ),
        None => if_ratio(g, &features),
    };
    let groups = test.groups();
    let mut distinct = groups.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let gap = |mode| -> Result<Option<f64>> {
        if distinct.len() == 2 {
            disparity(&ev.predictions, &groups, &labels, mode).map(Some)
        } else {
            Ok(None)
        }
    };
    Ok(SeedMetrics {
        seed,
        f1_macro: macro_f1(&ev.predictions, &labels)?,
        if_ratio_outcome: ratio(&ev.expected_outcome)?,
        if_ratio_brc: ratio(&ev.expected_brc)?,
        s_dp: gap(DisparityMode::Sdp)?,
        eo_dp: gap(DisparityMode::Eodp)?,
        ed_dp: gap(DisparityMode::Eddp)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFit {
    pub seed: u64,
    pub objective: f64,
    pub constraint_gaps: Vec<f64>,
    pub policy: FairPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub fits: Vec<SeedFit>,
    pub report: FairnessReport,
    pub note: String,
}

const SEED_NOTE: &str = "each seed drives data generation, the split and decision sampling";

/// Fits and evaluates `config` once per seed.
pub fn run(config: &RunConfig) -> Result<(RunReport, Vec<Option<FitArtifacts>>)> {
    config.validate()?;
    let source = Source::load(&config.dataset)?;
    let method = Method::from_config(config);
    let opts = EvalOptions::from(config);
    let results: Vec<(SeedFit, SeedMetrics, Option<FitArtifacts>)> = config
        .seeds
        .par_iter()
        .map(|&seed| {
            let data = source.seed_data(seed)?;
            let (policy, artifacts) = fit_seed(&data, &config.cost, &method, seed)?;
            let metrics = evaluate_seed(&policy, &data.splits.test, seed, &opts)?;
            Ok((
                SeedFit {
                    seed,
                    objective: policy.metadata.objective,
                    constraint_gaps: policy.metadata.constraint_gaps.clone(),
                    policy,
                },
                metrics,
                artifacts,
            ))
        })
        .collect::<Result<_>>()?;
    let mut fits = Vec::new();
    let mut metrics = Vec::new();
    let mut artifacts = Vec::new();
    for (f, m, a) in results {
        fits.push(f);
        metrics.push(m);
        artifacts.push(a);
    }
    Ok((
        RunReport {
            version: VERSION.into(),
            config_hash: config_hash(config)?,
            config: config.clone(),
            fits,
            report: FairnessReport::from_seeds(metrics),
            note: SEED_NOTE.into(),
        },
        artifacts,
    ))
}

/// Evaluates a saved policy on each seed's test split.
pub fn evaluate_policy(
    policy: &FairPolicy,
    dataset: &DatasetSpec,
    seeds: &[u64],
    opts: &EvalOptions,
) -> Result<FairnessReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let source = Source::load(dataset)?;
    let metrics = seeds
        .par_iter()
        .map(|&seed| {
            let data = source.seed_data(seed)?;
            evaluate_seed(policy, &data.splits.test, seed, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FairnessReport::from_seeds(metrics))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    FicoIf,
    LawIf,
    FicoSp,
    LawSp,
}

impl Target {
    pub fn name(&self) -> &'static str {
        match self {
            Target::FicoIf => "fico-if",
            Target::LawIf => "law-if",
            Target::FicoSp => "fico-sp",
            Target::LawSp => "law-sp",
        }
    }

    pub fn is_parity(&self) -> bool {
        matches!(self, Target::FicoSp | Target::LawSp)
    }

    pub fn is_lawschool(&self) -> bool {
        matches!(self, Target::LawIf | Target::LawSp)
    }

    /// Swept values: density caps for the IF targets, omegas for parity.
    pub fn sweep(&self) -> [f64; 4] {
        match self {
            Target::FicoIf => [1.0, 0.5, 0.25, 0.1],
            Target::LawIf => [1.0, 0.8, 0.4, 0.3],
            Target::FicoSp | Target::LawSp => [0.1, 0.08, 0.06, 0.04],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceOptions {
    pub target: Target,
    pub dataset: DatasetSpec,
    pub cost: CostModel,
    pub bins: usize,
    pub seeds: Vec<u64>,
    pub decision: DecisionRule,
    pub if_subsample: Option<usize>,
    pub exclude_sensitive: bool,
}

impl ReproduceOptions {
    /// Defaults for `target`; the law-school targets need the CSV path.
    pub fn new(target: Target, lawschool: Option<PathBuf>) -> Result<Self> {
        let dataset = if target.is_lawschool() {
            DatasetSpec::Lawschool {
                path: lawschool.ok_or_else(|| {
                    Error::Config(format!("{} needs --lawschool <csv>", target.name()))
                })?,
            }
        } else {
            DatasetSpec::fico()
        };
        Ok(Self {
            target,
            cost: dataset.default_cost(),
            bins: dataset.default_bins(),
            dataset,
            seeds: (0..5).collect(),
            decision: DecisionRule::BestResponse,
            if_subsample: None,
            exclude_sensitive: false,
        })
    }

    pub fn columns(&self) -> Vec<(String, Method)> {
        let t = self.target;
        let mut cols = Vec::with_capacity(5);
        let baseline_mode = if t.is_parity() {
            GroupMode::Parity {
                omega: t.sweep()[0],
            }
        } else {
            GroupMode::None
        };
        cols.push((
            "Deterministic".to_string(),
            Method::Deterministic {
                group_mode: baseline_mode,
                bins: self.bins,
            },
        ));
        for v in t.sweep() {
            let (label, spec) = if t.is_parity() {
                (
                    format!("Ω = {v}"),
                    FitSpec {
                        bins: self.bins,
                        cap: CapMode::Direct { cap: 1.0 },
                        group_mode: GroupMode::Parity { omega: v },
                    },
                )
            } else {
                (
                    format!("L_p = {v}"),
                    FitSpec {
                        bins: self.bins,
                        cap: CapMode::Direct { cap: v },
                        group_mode: GroupMode::None,
                    },
                )
            };
            cols.push((label, Method::Randomized { spec }));
        }
        cols
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnResult {
    pub label: String,
    pub method: Method,
    pub objective: Summary,
    pub constraint_gap: Option<Summary>,
    pub report: FairnessReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceReport {
    pub target: Target,
    pub version: String,
    pub config_hash: String,
    pub options: ReproduceOptions,
    pub columns: Vec<ColumnResult>,
    pub note: String,
}

pub fn reproduce(opts: &ReproduceOptions) -> Result<ReproduceReport> {
    if opts.seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let source = Source::load(&opts.dataset)?;
    let columns = opts.columns();
    let eval = EvalOptions {
        decision: opts.decision,
        if_subsample: opts.if_subsample,
        exclude_sensitive: opts.exclude_sensitive,
    };
    // per_seed[s][c] = (objective, worst gap, metrics)
    let per_seed: Vec<Vec<(f64, Option<f64>, SeedMetrics)>> = opts
        .seeds
        .par_iter()
        .map(|&seed| {
            let data = source.seed_data(seed)?;
            columns
                .iter()
                .map(|(_, method)| {
                    let (policy, _) = fit_seed(&data, &opts.cost, method, seed)?;
                    let m = evaluate_seed(&policy, &data.splits.test, seed, &eval)?;
                    let gap = policy
                        .metadata
                        .constraint_gaps
                        .iter()
                        .copied()
                        .reduce(f64::max);
                    Ok((policy.metadata.objective, gap, m))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let columns = columns
        .into_iter()
        .enumerate()
        .map(|(c, (label, method))| {
            let objs: Vec<f64> = per_seed.iter().map(|s| s[c].0).collect();
            let gaps: Option<Vec<f64>> = per_seed.iter().map(|s| s[c].1).collect();
            ColumnResult {
                label,
                method,
                objective: Summary::of(&objs),
                constraint_gap: gaps.map(|g| Summary::of(&g)),
                report: FairnessReport::from_seeds(
                    per_seed.iter().map(|s| s[c].2.clone()).collect(),
                ),
            }
        })
        .collect();
    Ok(ReproduceReport {
        target: opts.target,
        version: VERSION.into(),
        config_hash: config_hash(opts)?,
        options: opts.clone(),
        columns,
        note: SEED_NOTE.into(),
    })
}

fn cell(s: &Option<Summary>) -> String {
    s.map_or_else(|| "-".to_string(), |s| s.display(3))
}

fn write_table(out: &mut String, header: &[String], rows: &[(String, Vec<String>)]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for (name, cells) in rows {
        widths[0] = widths[0].max(name.chars().count());
        for (i, c) in cells.iter().enumerate() {
            widths[i + 1] = widths[i + 1].max(c.chars().count());
        }
    }
    let line = |out: &mut String, cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(out, header.iter().map(String::as_str).collect());
    let rule: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    let _ = writeln!(out, "{}", "-".repeat(rule));
    for (name, cells) in rows {
        let mut all = vec![name.as_str()];
        all.extend(cells.iter().map(String::as_str));
        line(out, all);
    }
}

/// Plain-text rendering in the published table layout, followed by the
/// IF ratio measured with respect to best-response cost.
const SPREAD_NOTE: &str = "mean ± std over seeds; each seed redraws the data, the split and the decision samples together";

pub fn render_reproduce(r: &ReproduceReport) -> String {
    let mut header = vec!["Method".to_string()];
    header.extend(r.columns.iter().map(|c| c.label.clone()));
    let pick = |f: &dyn Fn(&FairnessReport) -> Option<Summary>| -> Vec<String> {
        r.columns.iter().map(|c| cell(&f(&c.report))).collect()
    };
    let mut rows = vec![
        ("F1 score".to_string(), pick(&|x| Some(x.f1_macro))),
        ("IF ratio".to_string(), pick(&|x| Some(x.if_ratio_outcome))),
        ("S-DP".to_string(), pick(&|x| x.s_dp)),
    ];
    if !r.target.is_parity() {
        rows.push(("EO-DP".to_string(), pick(&|x| x.eo_dp)));
        rows.push(("ED-DP".to_string(), pick(&|x| x.ed_dp)));
    }
    let mut out = String::new();
    let seeds: Vec<String> = r.options.seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(
        out,
        "{} (seeds {}; version {}; config {})\n",
        r.target.name(),
        seeds.join(","),
        r.version,
        &r.config_hash[..12]
    );
    write_table(&mut out, &header, &rows);
    let _ = writeln!(out, "\nIF ratio w.r.t. best-response cost\n");
    write_table(
        &mut out,
        &header,
        &[(
            "IF ratio (BRC)".to_string(),
            pick(&|x| Some(x.if_ratio_brc)),
        )],
    );
    let _ = writeln!(out, "\nTraining objective (expected error)\n");
    let objs: Vec<String> = r.columns.iter().map(|c| c.objective.display(4)).collect();
    write_table(&mut out, &header, &[("Objective".to_string(), objs)]);
    let _ = writeln!(out, "\n{SPREAD_NOTE}");
    out
}

/// Plain-text rendering of a single report.
pub fn render_report(title: &str, report: &FairnessReport) -> String {
    let header = vec!["Metric".to_string(), title.to_string()];
    let rows = vec![
        ("F1 score".to_string(), vec![report.f1_macro.display(3)]),
        (
            "IF ratio".to_string(),
            vec![report.if_ratio_outcome.display(3)],
        ),
        (
            "IF ratio (BRC)".to_string(),
            vec![report.if_ratio_brc.display(3)],
        ),
        ("S-DP".to_string(), vec![cell(&report.s_dp)]),
        ("EO-DP".to_string(), vec![cell(&report.eo_dp)]),
        ("ED-DP".to_string(), vec![cell(&report.ed_dp)]),
    ];
    let mut out = String::new();
    write_table(&mut out, &header, &rows);
    let _ = writeln!(out, "\n{SPREAD_NOTE}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_is_stable() {
        let c = RunConfig::new(DatasetSpec::fico(), CapMode::Direct { cap: 1.0 });
        assert_eq!(config_hash(&c).unwrap(), config_hash(&c.clone()).unwrap());
        let mut d = c.clone();
        d.bins = 100;
        assert_ne!(config_hash(&c).unwrap(), config_hash(&d).unwrap());
    }

    #[test]
    fn law_targets_need_a_path() {
        assert!(matches!(
            ReproduceOptions::new(Target::LawSp, None),
            Err(Error::Config(_))
        ));
        let o = ReproduceOptions::new(Target::LawSp, Some("x.csv".into())).unwrap();
        let labels: Vec<String> = o.columns().into_iter().map(|(l, _)| l).collect();
        assert_eq!(
            labels,
            [
                "Deterministic",
                "Ω = 0.1",
                "Ω = 0.08",
                "Ω = 0.06",
                "Ω = 0.04"
            ]
        );
    }

    #[test]
    fn small_fico_run() {
        let mut c = RunConfig::new(
            DatasetSpec::FicoSynthetic {
                cdf_path: None,
                priors: None,
                options: FicoOptions {
                    n: 400,
                    ..Default::default()
                },
            },
            CapMode::Direct { cap: 1.0 },
        );
        c.seeds = vec![1, 2];
        let (r, a) = run(&c).unwrap();
        assert_eq!(r.fits.len(), 2);
        assert_eq!(a[0].as_ref().unwrap().lp.objective.len(), 200);
        assert!(r.report.if_ratio_outcome.mean <= 1.0 + 1e-9);
        let again = run(&c).unwrap().0;
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }
}
