//! C ABI for fairthresh.
//!
//! Every entry point returns an [`FtStatus`]; on failure the message is
//! available from [`ft_last_error`] until the next call on the same thread.
//! Objects are opaque handles released with their `_free` function. Strings
//! returned to the caller are released with [`ft_string_free`].
//!
//! # Safety
//!
//! Pointer arguments must be null or valid for the stated length; handles
//! must come from this library and must not be used after being freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fairthresh::estimation::ScoredSample;
use fairthresh::policy::{
    self, DecisionRule, FairPolicy, FitSpec, GroupMode, GroupModelSet, GroupModels,
};
use fairthresh::response::{self, ThresholdDistribution};
use fairthresh::score_cost::{cap_constant, CostModel, ScoreModel};
use fairthresh::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Infeasible = 3,
    Data = 4,
    Internal = 5,
}

/// A fitted policy.
pub struct FtPolicy {
    inner: FairPolicy,
}

/// A threshold distribution.
pub struct FtDistribution {
    inner: ThresholdDistribution,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &Error) -> FtStatus {
    match e {
        Error::InfeasibleCap { .. }
        | Error::InfeasibleOmega { .. }
        | Error::InfeasibleBaseline { .. }
        | Error::LpStatus(_) => FtStatus::Infeasible,
        Error::Data { .. } | Error::Csv(_) | Error::Io(_) | Error::Estimation(_) => FtStatus::Data,
        _ => FtStatus::InvalidArgument,
    }
}

struct Fail(FtStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

impl From<serde_json::Error> for Fail {
    fn from(e: serde_json::Error) -> Self {
        Fail(FtStatus::InvalidArgument, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(FtStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FtStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FtStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(FtStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn group_arg(group: i64) -> Result<Option<u32>, Fail> {
    match group {
        g if g < 0 => Ok(None),
        g => u32::try_from(g).map(Some).map_err(|_| {
            Fail(
                FtStatus::InvalidArgument,
                format!("group id {g} out of range"),
            )
        }),
    }
}

/// Message for the most recent failure on this thread; empty after success.
#[no_mangle]
pub extern "C" fn ft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Writes `g^{-1}(1 / lambda)` for `g(d) = alpha * d^beta`.
#[no_mangle]
pub unsafe extern "C" fn ft_cap_constant(
    lambda: f64,
    alpha: f64,
    beta: f64,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let cost = CostModel::new(lambda, alpha, beta)?;
        *out = cap_constant(&cost);
        Ok(())
    })
}

/// Parses a distribution from JSON (`{"kind": "piecewise", ...}` or
/// `{"kind": "dirac", "t0": ...}`).
#[no_mangle]
pub unsafe extern "C" fn ft_distribution_from_json(
    json: *const c_char,
    out: *mut *mut FtDistribution,
) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner: ThresholdDistribution = serde_json::from_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(FtDistribution { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ft_distribution_free(dist: *mut FtDistribution) {
    if !dist.is_null() {
        drop(Box::from_raw(dist));
    }
}

unsafe fn with_dist(
    dist: *const FtDistribution,
    lambda: f64,
    alpha: f64,
    beta: f64,
    out: *mut f64,
    f: fn(f64, &ThresholdDistribution, &CostModel) -> f64,
    score: f64,
) -> FtStatus {
    guard(|| {
        let d = dist.as_ref().ok_or_else(|| null("dist"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !score.is_finite() {
            return Err(Fail(
                FtStatus::InvalidArgument,
                "score must be finite".into(),
            ));
        }
        let cost = CostModel::new(lambda, alpha, beta)?;
        *out = f(score, &d.inner, &cost);
        Ok(())
    })
}

/// Probability of a positive decision at `score` after best response.
#[no_mangle]
pub unsafe extern "C" fn ft_distribution_expected_outcome(
    dist: *const FtDistribution,
    lambda: f64,
    alpha: f64,
    beta: f64,
    score: f64,
    out: *mut f64,
) -> FtStatus {
    with_dist(
        dist,
        lambda,
        alpha,
        beta,
        out,
        response::expected_outcome,
        score,
    )
}

/// Expected best-response cost at `score`.
#[no_mangle]
pub unsafe extern "C" fn ft_distribution_expected_brc(
    dist: *const FtDistribution,
    lambda: f64,
    alpha: f64,
    beta: f64,
    score: f64,
    out: *mut f64,
) -> FtStatus {
    with_dist(
        dist,
        lambda,
        alpha,
        beta,
        out,
        response::expected_brc,
        score,
    )
}

/// Fits a policy on precomputed scores. `groups` may be null when
/// `spec_json` has no group constraint. The fitted policy scores feature
/// vectors by their first coordinate.
#[no_mangle]
pub unsafe extern "C" fn ft_policy_fit(
    scores: *const f64,
    labels: *const u8,
    groups: *const u32,
    n: usize,
    spec_json: *const c_char,
    lambda: f64,
    alpha: f64,
    beta: f64,
    out: *mut *mut FtPolicy,
) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec: FitSpec = serde_json::from_str(str_arg(spec_json, "spec_json")?)?;
        let scores = slice_arg(scores, n, "scores")?;
        let labels = slice_arg(labels, n, "labels")?;
        let groups = if groups.is_null() {
            None
        } else {
            Some(slice_arg(groups, n, "groups")?)
        };
        if labels.iter().any(|&y| y > 1) {
            return Err(Fail(
                FtStatus::InvalidArgument,
                "labels must be 0 or 1".into(),
            ));
        }
        let samples: Vec<ScoredSample> = (0..n)
            .map(|i| match groups {
                Some(g) => ScoredSample::in_group(scores[i], labels[i], g[i]),
                None => ScoredSample::new(scores[i], labels[i]),
            })
            .collect();
        let cost = CostModel::new(lambda, alpha, beta)?;
        let score = ScoreModel::Coordinate { index: 0 };
        let inner = if spec.group_mode == GroupMode::None {
            policy::fit_individual(&samples, &spec, &cost, &score)?
        } else {
            if groups.is_none() {
                return Err(null("groups"));
            }
            policy::fit_group(
                &samples,
                &spec,
                &GroupModelSet::shared(GroupModels { cost, score }),
            )?
        };
        *out = Box::into_raw(Box::new(FtPolicy { inner }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ft_policy_from_json(
    json: *const c_char,
    out: *mut *mut FtPolicy,
) -> FtStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner: FairPolicy = serde_json::from_str(str_arg(json, "json")?)?;
        *out = Box::into_raw(Box::new(FtPolicy { inner }));
        Ok(())
    })
}

/// Serializes the policy; free the result with `ft_string_free`.
#[no_mangle]
pub unsafe extern "C" fn ft_policy_to_json(
    policy: *const FtPolicy,
    out: *mut *mut c_char,
) -> FtStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s = serde_json::to_string(&p.inner)?;
        *out = CString::new(s)
            .map_err(|e| Fail(FtStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// One randomized decision. Pass `group < 0` for policies without groups.
#[no_mangle]
pub unsafe extern "C" fn ft_policy_predict(
    policy: *const FtPolicy,
    features: *const f64,
    len: usize,
    group: i64,
    seed: u64,
    strict: bool,
    out: *mut u8,
) -> FtStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = slice_arg(features, len, "features")?;
        let rule = if strict {
            DecisionRule::RawScore
        } else {
            DecisionRule::BestResponse
        };
        *out = policy::predict(&p.inner, x, group_arg(group)?, seed, rule)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ft_policy_expected_outcome(
    policy: *const FtPolicy,
    features: *const f64,
    len: usize,
    group: i64,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p
            .inner
            .expected_outcome(slice_arg(features, len, "features")?, group_arg(group)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ft_policy_expected_brc(
    policy: *const FtPolicy,
    features: *const f64,
    len: usize,
    group: i64,
    out: *mut f64,
) -> FtStatus {
    guard(|| {
        let p = policy.as_ref().ok_or_else(|| null("policy"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = p
            .inner
            .expected_brc(slice_arg(features, len, "features")?, group_arg(group)?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ft_policy_free(policy: *mut FtPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ft_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
