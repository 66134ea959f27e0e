//! Datasets: synthetic credit scores drawn from per-group CDF tables, the
//! law-school records CSV, and seeded train/validation/test splits.

use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{GroupId, ScoredSample};
use crate::linalg::solve_dense;
use crate::score_cost::ScoreModel;

/// Bundled synthetic CDF table (groups `Black` and `White`, scores 0..100).
pub const DEFAULT_FICO_CDF: &str = include_str!("../data/fico_synthetic_cdf.csv");

/// Independent random streams derived from one master seed.
pub mod stream {
    pub const GENERATE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const PREDICT: u64 = 3;
    pub const SUBSAMPLE: u64 = 4;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCdf {
    pub name: String,
    pub scores: Vec<f64>,
    pub cdf: Vec<f64>,
    pub prior: f64,
}

impl GroupCdf {
    /// Inverse CDF with linear interpolation between knots.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= self.cdf[0] {
            return self.scores[0];
        }
        let k = self.cdf.partition_point(|&c| c < u).min(self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        if c1 <= c0 {
            return self.scores[k];
        }
        let f = (u - c0) / (c1 - c0);
        self.scores[k - 1] + f * (self.scores[k] - self.scores[k - 1])
    }

    /// Piecewise-linear CDF through the knots.
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x < self.scores[0] {
            return 0.0;
        }
        let k = self.scores.partition_point(|&s| s <= x);
        if k >= self.scores.len() {
            return 1.0;
        }
        let (s0, s1) = (self.scores[k - 1], self.scores[k]);
        self.cdf[k - 1] + (x - s0) / (s1 - s0) * (self.cdf[k] - self.cdf[k - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupCdfTable {
    pub groups: Vec<GroupCdf>,
}

impl GroupCdfTable {
    /// Parses a `group,score,cdf` CSV. Groups get ids in order of first
    /// appearance; priors default to uniform.
    pub fn from_reader<R: Read>(reader: R, priors: Option<&[f64]>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::data("header", format!("missing column {name:?}")))
        };
        let (gi, si, ci) = (col("group")?, col("score")?, col("cdf")?);
        let mut groups: Vec<GroupCdf> = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = r + 2;
            let num = |i: usize, name: &str| -> Result<f64> {
                let cell = rec.get(i).unwrap_or("");
                cell.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::data(
                            format!("row {line}, column {name}"),
                            format!("bad number {cell:?}"),
                        )
                    })
            };
            let name = rec.get(gi).unwrap_or("").to_string();
            let (score, cdf) = (num(si, "score")?, num(ci, "cdf")?);
            let g = match groups.iter().position(|g| g.name == name) {
                Some(i) => i,
                None => {
                    groups.push(GroupCdf {
                        name,
                        scores: vec![],
                        cdf: vec![],
                        prior: 0.0,
                    });
                    groups.len() - 1
                }
            };
            groups[g].scores.push(score);
            groups[g].cdf.push(cdf);
        }
        if groups.is_empty() {
            return Err(Error::data("table", "no rows"));
        }
        match priors {
            Some(p) if p.len() != groups.len() => {
                return Err(Error::data(
                    "priors",
                    format!("{} priors for {} groups", p.len(), groups.len()),
                ))
            }
            Some(p) => groups.iter_mut().zip(p).for_each(|(g, &p)| g.prior = p),
            None => {
                let p = 1.0 / groups.len() as f64;
                groups.iter_mut().for_each(|g| g.prior = p);
            }
        }
        let table = Self { groups };
        table.validate()?;
        Ok(table)
    }

    pub fn from_path(path: &Path, priors: Option<&[f64]>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?, priors)
    }

    pub fn bundled() -> Self {
        Self::from_reader(DEFAULT_FICO_CDF.as_bytes(), None).expect("bundled table is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.groups.iter().map(|g| g.prior).sum();
        if self.groups.iter().any(|g| !(g.prior >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::data(
                "priors",
                format!("priors must be non-negative and sum to 1, got {total}"),
            ));
        }
        for g in &self.groups {
            let loc = format!("group {}", g.name);
            if g.scores.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::data(loc, "scores must be strictly increasing"));
            }
            if g.cdf.windows(2).any(|w| w[1] < w[0])
                || g.cdf.iter().any(|c| !(0.0..=1.0).contains(c))
            {
                return Err(Error::data(
                    loc,
                    "cumulative values must be non-decreasing within [0, 1]",
                ));
            }
            if (g.cdf[g.cdf.len() - 1] - 1.0).abs() > 1e-6 {
                return Err(Error::data(loc, "cumulative values must end at 1"));
            }
        }
        Ok(())
    }

    /// Smallest and largest knot across groups.
    pub fn score_range(&self) -> (f64, f64) {
        let lo = self
            .groups
            .iter()
            .map(|g| g.scores[0])
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .groups
            .iter()
            .map(|g| g.scores[g.scores.len() - 1])
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub features: Vec<f64>,
    pub label: u8,
    pub group: GroupId,
    /// Regression target, when the source has one.
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    pub feature_names: Vec<String>,
    pub group_names: Vec<String>,
    /// Column of the sensitive attribute inside `features`, if present.
    pub sensitive_index: Option<usize>,
    pub rows: Vec<Row>,
}

impl TabularDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn groups(&self) -> Vec<GroupId> {
        self.rows.iter().map(|r| r.group).collect()
    }

    fn with_rows(&self, rows: Vec<Row>) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            group_names: self.group_names.clone(),
            sensitive_index: self.sensitive_index,
            rows,
        }
    }

    /// Scores every row; `grouped` tags samples with their group id.
    pub fn scored(&self, score: &ScoreModel, grouped: bool) -> Result<Vec<ScoredSample>> {
        self.rows
            .iter()
            .map(|r| {
                let s = score.score(&r.features)?;
                Ok(if grouped {
                    ScoredSample::in_group(s, r.label, r.group)
                } else {
                    ScoredSample::new(s, r.label)
                })
            })
            .collect()
    }

    /// Feature vectors for distance computations, optionally without the
    /// sensitive column.
    pub fn distance_features(&self, exclude_sensitive: bool) -> Vec<Vec<f64>> {
        let skip = if exclude_sensitive {
            self.sensitive_index
        } else {
            None
        };
        self.rows
            .iter()
            .map(|r| {
                r.features
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != skip)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            fractions: [0.6, 0.2, 0.2],
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.fractions.iter().sum();
        if self.fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must be non-negative and sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: TabularDataset,
    pub validation: TabularDataset,
    pub test: TabularDataset,
}

/// Seeded permutation, then contiguous slices at floor boundaries.
pub fn split(dataset: &TabularDataset, spec: &SplitSpec) -> Result<Splits> {
    spec.validate()?;
    if dataset.is_empty() {
        return Err(Error::data("dataset", "cannot split an empty dataset"));
    }
    let n = dataset.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream_rng(spec.seed, stream::SPLIT));
    let n_train = ((spec.fractions[0] * n as f64) + 1e-9).floor() as usize;
    let n_val = (((spec.fractions[1] * n as f64) + 1e-9).floor() as usize).min(n - n_train);
    let take =
        |ix: &[usize]| dataset.with_rows(ix.iter().map(|&i| dataset.rows[i].clone()).collect());
    Ok(Splits {
        train: take(&idx[..n_train]),
        validation: take(&idx[n_train..n_train + n_val]),
        test: take(&idx[n_train + n_val..]),
    })
}

/// Label rule `Pr{Y = 1 | κ} = sigmoid((κ_norm - center) / scale)` on the
/// range-normalized score, plus output scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FicoOptions {
    pub n: usize,
    pub label_center: f64,
    pub label_scale: f64,
    /// Emit scores rescaled to [0, 1] instead of the table's own units.
    #[serde(default)]
    pub normalize: bool,
}

impl Default for FicoOptions {
    fn default() -> Self {
        Self {
            n: 5000,
            label_center: 0.55,
            label_scale: 0.006,
            normalize: false,
        }
    }
}

pub fn qualification_probability(normalized: f64, opts: &FicoOptions) -> f64 {
    1.0 / (1.0 + (-(normalized - opts.label_center) / opts.label_scale).exp())
}

/// Draws `opts.n` rows with features `[κ, a]`.
pub fn sample_fico(table: &GroupCdfTable, opts: &FicoOptions, seed: u64) -> Result<TabularDataset> {
    table.validate()?;
    if opts.n == 0 {
        return Err(Error::Config("sample size must be at least 1".into()));
    }
    if !(opts.label_scale > 0.0) {
        return Err(Error::Config("label scale must be positive".into()));
    }
    let (lo, hi) = table.score_range();
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut rng = stream_rng(seed, stream::GENERATE);
    let priors: Vec<f64> = table.groups.iter().map(|g| g.prior).collect();
    let pick = rand::distr::weighted::WeightedIndex::new(&priors)
        .map_err(|e| Error::data("priors", e.to_string()))?;
    let rows = (0..opts.n)
        .map(|_| {
            let a = rand::distr::Distribution::sample(&pick, &mut rng);
            let kappa = table.groups[a].quantile(rng.random::<f64>());
            let norm = (kappa - lo) / span;
            let label = u8::from(rng.random::<f64>() < qualification_probability(norm, opts));
            let score = if opts.normalize { norm } else { kappa };
            Row {
                features: vec![score, a as f64],
                label,
                group: a as GroupId,
                target: None,
            }
        })
        .collect();
    Ok(TabularDataset {
        feature_names: vec!["score".into(), "group".into()],
        group_names: table.groups.iter().map(|g| g.name.clone()).collect(),
        sensitive_index: Some(1),
        rows,
    })
}

/// Feature columns of the law-school file, in output order.
pub const LAWSCHOOL_FEATURES: [&str; 10] = [
    "decile1b", "decile3", "lsat", "ugpa", "zfygpa", "fulltime", "fam_inc", "male", "racetxt",
    "tier",
];

fn find_column(headers: &csv::StringRecord, names: &[&str]) -> Result<usize> {
    headers
        .iter()
        .position(|h| names.contains(&h))
        .ok_or_else(|| Error::data("header", format!("missing column {:?}", names[0])))
}

/// Reads the law-school CSV. `racetxt` may be numeric ids or text labels
/// (text labels get ids in sorted order).
pub fn read_lawschool<R: Read>(reader: R) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let feat_idx: Vec<usize> = LAWSCHOOL_FEATURES
        .iter()
        .map(|n| find_column(&headers, &[n]))
        .collect::<Result<_>>()?;
    let target_idx = find_column(&headers, &["zgpa", "zgap"])?;
    let label_idx = find_column(&headers, &["pass_bar", "bar_pass"])?;
    let race_pos = LAWSCHOOL_FEATURES
        .iter()
        .position(|n| *n == "racetxt")
        .expect("listed");

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;
    let race_cells: Vec<&str> = records
        .iter()
        .map(|r| r.get(feat_idx[race_pos]).unwrap_or(""))
        .collect();
    let numeric_race = race_cells.iter().all(|c| c.parse::<f64>().is_ok());
    let mut race_names: Vec<String> = if numeric_race {
        Vec::new()
    } else {
        race_cells.iter().map(|c| c.to_string()).collect()
    };
    race_names.sort();
    race_names.dedup();

    let mut rows = Vec::with_capacity(records.len());
    let mut max_group = 0;
    for (r, rec) in records.iter().enumerate() {
        let line = r + 2;
        let num = |i: usize| -> Result<f64> {
            let cell = rec.get(i).unwrap_or("");
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::data(
                        format!("row {line}, column {}", &headers[i]),
                        if cell.is_empty() {
                            "missing value".to_string()
                        } else {
                            format!("cannot parse {cell:?}")
                        },
                    )
                })
        };
        let mut features = Vec::with_capacity(LAWSCHOOL_FEATURES.len());
        let mut group = 0;
        for (k, &i) in feat_idx.iter().enumerate() {
            if k == race_pos {
                let id = if numeric_race {
                    let v = num(i)?;
                    if v < 0.0 || v.fract() != 0.0 {
                        return Err(Error::data(
                            format!("row {line}, column racetxt"),
                            format!("group id must be a non-negative integer, got {v}"),
                        ));
                    }
                    v as GroupId
                } else {
                    race_names
                        .binary_search_by(|n| n.as_str().cmp(race_cells[r]))
                        .expect("collected") as GroupId
                };
                group = id;
                features.push(f64::from(id));
            } else {
                features.push(num(i)?);
            }
        }
        max_group = max_group.max(group);
        let label = match num(label_idx)? {
            1.0 => 1,
            0.0 => 0,
            v => {
                return Err(Error::data(
                    format!("row {line}, column {}", &headers[label_idx]),
                    format!("label must be 0 or 1, got {v}"),
                ))
            }
        };
        rows.push(Row {
            features,
            label,
            group,
            target: Some(num(target_idx)?),
        });
    }
    if rows.is_empty() {
        return Err(Error::data("table", "no rows"));
    }
    let group_names = if numeric_race {
        (0..=max_group).map(|g| g.to_string()).collect()
    } else {
        race_names
    };
    Ok(TabularDataset {
        feature_names: LAWSCHOOL_FEATURES.iter().map(|s| s.to_string()).collect(),
        group_names,
        sensitive_index: Some(race_pos),
        rows,
    })
}

/// Ordinary least squares with an intercept, solved through the normal
/// equations with a `1e-8` ridge on the diagonal.
pub fn fit_ols(features: &[Vec<f64>], targets: &[f64]) -> Result<(Vec<f64>, f64)> {
    if features.is_empty() || features.len() != targets.len() {
        return Err(Error::Estimation(
            "regression needs matching non-empty inputs".into(),
        ));
    }
    let d = features[0].len();
    let p = d + 1;
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (x, &y) in features.iter().zip(targets) {
        if x.len() != d {
            return Err(Error::Estimation("ragged feature rows".into()));
        }
        let row = |i: usize| if i < d { x[i] } else { 1.0 };
        for i in 0..p {
            let xi = row(i);
            xty[i] += xi * y;
            for j in 0..p {
                xtx[i][j] += xi * row(j);
            }
        }
    }
    for (i, r) in xtx.iter_mut().enumerate() {
        r[i] += 1e-8;
    }
    let beta = solve_dense(&xtx, &xty, 1e-9)
        .ok_or_else(|| Error::Estimation("normal equations are singular".into()))?;
    Ok((beta[..d].to_vec(), beta[d]))
}

/// Linear score model regressing the target on all features of `train`.
pub fn fit_score_model(train: &TabularDataset) -> Result<ScoreModel> {
    let targets: Vec<f64> = train
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            r.target
                .ok_or_else(|| Error::data(format!("row {i}"), "missing regression target"))
        })
        .collect::<Result<_>>()?;
    let x: Vec<Vec<f64>> = train.rows.iter().map(|r| r.features.clone()).collect();
    let (weights, intercept) = fit_ols(&x, &targets)?;
    Ok(ScoreModel::Linear { weights, intercept })
}

/// Loads the law-school CSV, splits it, and fits the score model on the
/// training split.
pub fn load_lawschool(path: &Path, spec: &SplitSpec) -> Result<(Splits, ScoreModel)> {
    let data = read_lawschool(std::fs::File::open(path)?)?;
    let splits = split(&data, spec)?;
    let model = fit_score_model(&splits.train)?;
    Ok((splits, model))
}
