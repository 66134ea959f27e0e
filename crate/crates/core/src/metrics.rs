//! Accuracy and fairness metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::GroupId;

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let d = 2 * tp + fp + fn_;
    if d == 0 {
        0.0
    } else {
        2.0 * tp as f64 / d as f64
    }
}

/// Unweighted mean of the F1 scores of classes 0 and 1.
///
/// A class absent from both predictions and labels scores 0.
pub fn macro_f1(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != labels.len() {
        return Err(Error::Metric(format!(
            "macro F1 needs equal non-empty inputs, got {} predictions and {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p == 1, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    if tp + fp + fn_ == 0 {
        log::warn!("class 1 absent from predictions and labels; its F1 counts as 0");
    }
    if tn + fp + fn_ == 0 {
        log::warn!("class 0 absent from predictions and labels; its F1 counts as 0");
    }
    Ok(0.5 * (f1(tp, fp, fn_) + f1(tn, fn_, fp)))
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_if_inputs(gammas: &[f64], features: &[Vec<f64>]) -> Result<()> {
    if gammas.len() < 2 || gammas.len() != features.len() {
        return Err(Error::Metric(format!(
            "IF ratio needs at least two rows with matching features, got {} values and {} rows",
            gammas.len(),
            features.len()
        )));
    }
    if let Some(i) = gammas.iter().position(|g| !g.is_finite()) {
        return Err(Error::Metric(format!("non-finite value at row {i}")));
    }
    Ok(())
}

fn pair_ratio(gi: f64, gj: f64, d: f64) -> f64 {
    let diff = (gi - gj).abs();
    if diff == 0.0 {
        0.0
    } else if d == 0.0 {
        f64::INFINITY
    } else {
        diff / d
    }
}

/// `max_{i != j} |γ_i - γ_j| / ‖x_i - x_j‖₂` over every pair.
pub fn if_ratio(gammas: &[f64], features: &[Vec<f64>]) -> Result<f64> {
    check_if_inputs(gammas, features)?;
    let n = gammas.len();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in (i + 1)..n {
                best = best.max(pair_ratio(
                    gammas[i],
                    gammas[j],
                    distance(&features[i], &features[j]),
                ));
            }
            best
        })
        .reduce(|| 0.0, f64::max))
}

/// IF ratio restricted to the first `m` rows of a seeded shuffle.
pub fn if_ratio_subsampled(
    gammas: &[f64],
    features: &[Vec<f64>],
    m: usize,
    seed: u64,
) -> Result<f64> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    check_if_inputs(gammas, features)?;
    if m >= gammas.len() {
        return if_ratio(gammas, features);
    }
    let mut idx: Vec<usize> = (0..gammas.len()).collect();
    idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(m.max(2));
    let g: Vec<f64> = idx.iter().map(|&i| gammas[i]).collect();
    let f: Vec<Vec<f64>> = idx.iter().map(|&i| features[i].clone()).collect();
    if_ratio(&g, &f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisparityMode {
    /// Gap in acceptance rates.
    Sdp,
    /// Gap in acceptance rates among positives.
    Eodp,
    /// Larger of the gaps among positives and among negatives.
    Eddp,
}

fn rate_gap(
    predictions: &[u8],
    groups: &[GroupId],
    labels: &[u8],
    ids: [GroupId; 2],
    on: Option<u8>,
) -> Result<f64> {
    let mut acc = [0usize; 2];
    let mut tot = [0usize; 2];
    for ((&p, &g), &y) in predictions.iter().zip(groups).zip(labels) {
        if on.is_some_and(|l| l != y) {
            continue;
        }
        let k = usize::from(g == ids[1]);
        tot[k] += 1;
        acc[k] += usize::from(p == 1);
    }
    for k in 0..2 {
        if tot[k] == 0 {
            let cell = match on {
                Some(l) => format!("group {} with label {l}", ids[k]),
                None => format!("group {}", ids[k]),
            };
            return Err(Error::Metric(format!("empty conditioning cell: {cell}")));
        }
    }
    Ok((acc[0] as f64 / tot[0] as f64 - acc[1] as f64 / tot[1] as f64).abs())
}

/// Empirical acceptance-rate gap between exactly two groups.
pub fn disparity(
    predictions: &[u8],
    groups: &[GroupId],
    labels: &[u8],
    mode: DisparityMode,
) -> Result<f64> {
    if predictions.len() != groups.len() || predictions.len() != labels.len() {
        return Err(Error::Metric(
            "predictions, groups and labels differ in length".into(),
        ));
    }
    let mut ids: Vec<GroupId> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let ids: [GroupId; 2] = ids.try_into().map_err(|v: Vec<GroupId>| {
        Error::Metric(format!(
            "disparity needs exactly two groups, found {}",
            v.len()
        ))
    })?;
    match mode {
        DisparityMode::Sdp => rate_gap(predictions, groups, labels, ids, None),
        DisparityMode::Eodp => rate_gap(predictions, groups, labels, ids, Some(1)),
        DisparityMode::Eddp => Ok(rate_gap(predictions, groups, labels, ids, Some(1))?
            .max(rate_gap(predictions, groups, labels, ids, Some(0))?)),
    }
}

/// Serializes infinite values as the strings `"inf"` / `"-inf"`.
pub mod serde_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(with = "serde_real")]
    pub mean: f64,
    #[serde(with = "serde_real")]
    pub std: f64,
}

impl Summary {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        if values.iter().any(|v| !v.is_finite()) {
            let all_same = values.windows(2).all(|w| w[0] == w[1]);
            return Self {
                mean: if all_same { values[0] } else { f64::INFINITY },
                std: if all_same { 0.0 } else { f64::INFINITY },
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }

    pub fn display(&self, digits: usize) -> String {
        fn fmt(v: f64, d: usize) -> String {
            if v.is_finite() {
                format!("{v:.d$}")
            } else {
                format!("{v}")
            }
        }
        format!("{} ± {}", fmt(self.mean, digits), fmt(self.std, digits))
    }
}

/// Metrics for one seed. Group disparities are `None` without two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub f1_macro: f64,
    #[serde(with = "serde_real")]
    pub if_ratio_outcome: f64,
    #[serde(with = "serde_real")]
    pub if_ratio_brc: f64,
    pub s_dp: Option<f64>,
    pub eo_dp: Option<f64>,
    pub ed_dp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub per_seed: Vec<SeedMetrics>,
    pub f1_macro: Summary,
    pub if_ratio_outcome: Summary,
    pub if_ratio_brc: Summary,
    pub s_dp: Option<Summary>,
    pub eo_dp: Option<Summary>,
    pub ed_dp: Option<Summary>,
}

impl FairnessReport {
    pub fn from_seeds(per_seed: Vec<SeedMetrics>) -> Self {
        let col =
            |f: fn(&SeedMetrics) -> f64| Summary::of(&per_seed.iter().map(f).collect::<Vec<_>>());
        let opt = |f: fn(&SeedMetrics) -> Option<f64>| {
            per_seed
                .iter()
                .map(f)
                .collect::<Option<Vec<f64>>>()
                .filter(|v| !v.is_empty())
                .map(|v| Summary::of(&v))
        };
        Self {
            f1_macro: col(|m| m.f1_macro),
            if_ratio_outcome: col(|m| m.if_ratio_outcome),
            if_ratio_brc: col(|m| m.if_ratio_brc),
            s_dp: opt(|m| m.s_dp),
            eo_dp: opt(|m| m.eo_dp),
            ed_dp: opt(|m| m.ed_dp),
            per_seed,
        }
    }
}
