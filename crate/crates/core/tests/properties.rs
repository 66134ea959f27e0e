mod common;

use proptest::prelude::*;

use fairthresh::data::{split, GroupCdfTable, Row, SplitSpec, TabularDataset};
use fairthresh::estimation::{compute_error_weights, compute_positive_weights, ScoredSample};
use fairthresh::lp::{brute_force_oracle, solve, LpProblem, LpStatus};
use fairthresh::metrics::{disparity, if_ratio, macro_f1, DisparityMode};
use fairthresh::policy::{
    expected_error, fit_group, fit_individual, CapMode, FitSpec, GroupMode, GroupModelSet,
    GroupModels,
};
use fairthresh::response::{best_respond, expected_brc, expected_outcome, ThresholdDistribution};
use fairthresh::score_cost::{density_cap_individual, CostModel, FairnessBudget, ScoreModel};

fn cost_strategy() -> impl Strategy<Value = CostModel> {
    (0.2f64..5.0, 0.5f64..200.0, 1.0f64..4.0).prop_map(|(l, a, b)| CostModel::new(l, a, b).unwrap())
}

fn dist_strategy() -> impl Strategy<Value = ThresholdDistribution> {
    (
        -5.0f64..5.0,
        0.5f64..10.0,
        prop::collection::vec(0.0f64..1.0, 1..30),
    )
        .prop_filter_map("needs positive mass", |(lo, width, raw)| {
            let k = raw.len();
            let w = width / k as f64;
            let mass: f64 = raw.iter().sum::<f64>() * w;
            if mass <= 1e-6 {
                return None;
            }
            let edges: Vec<f64> = (0..=k).map(|i| lo + width * i as f64 / k as f64).collect();
            let dens: Vec<f64> = raw.iter().map(|p| p / mass).collect();
            ThresholdDistribution::piecewise(edges, dens).ok()
        })
}

fn samples_strategy(grouped: bool) -> impl Strategy<Value = Vec<ScoredSample>> {
    prop::collection::vec((0.0f64..10.0, 0u8..2, 0u32..2), 8..60).prop_map(move |v| {
        v.into_iter()
            .map(|(s, y, g)| {
                if grouped {
                    ScoredSample::in_group(s, y, g)
                } else {
                    ScoredSample::new(s, y)
                }
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cap_constant_inverts_cost(c in cost_strategy()) {
        let v = c.cost(c.cap()) * c.lambda();
        prop_assert!((v - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn caps_monotone_and_linear(c in cost_strategy(), m1 in 0.01f64..5.0, m2 in 0.01f64..5.0) {
        let score = ScoreModel::Linear { weights: vec![0.3, -0.4], intercept: 1.0 };
        let (lo, hi) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
        let caps = |mc: f64, mp: f64| density_cap_individual(&FairnessBudget { mc: Some(mc), mp: Some(mp) }, &c, &score).unwrap();
        let (a, b) = (caps(lo, lo), caps(hi, hi));
        prop_assert!(a.brc.unwrap() <= b.brc.unwrap() + 1e-15);
        prop_assert!(a.brc.unwrap() > 0.0 && a.outcome.unwrap() > 0.0);
        let ratio = b.outcome.unwrap() / a.outcome.unwrap();
        prop_assert!((ratio - hi / lo).abs() <= 1e-9 * ratio);
    }

    #[test]
    fn linear_score_is_lipschitz(
        w in prop::collection::vec(-3.0f64..3.0, 3),
        x1 in prop::collection::vec(-10.0f64..10.0, 3),
        x2 in prop::collection::vec(-10.0f64..10.0, 3),
    ) {
        let m = ScoreModel::Linear { weights: w, intercept: 0.5 };
        let gap = (m.score(&x1).unwrap() - m.score(&x2).unwrap()).abs();
        let dist = x1.iter().zip(&x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(gap <= m.gradient_bound() * dist * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn outcome_monotone_and_lipschitz(d in dist_strategy(), c in cost_strategy(), pts in prop::collection::vec(-8.0f64..18.0, 2..40)) {
        let mut pts = pts;
        pts.sort_by(f64::total_cmp);
        let pmax = d.max_density();
        let ys: Vec<f64> = pts.iter().map(|&l| expected_outcome(l, &d, &c)).collect();
        for w in ys.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15);
        }
        for i in 0..pts.len() {
            prop_assert!((0.0..=1.0).contains(&ys[i]));
            for j in (i + 1)..pts.len() {
                prop_assert!((ys[i] - ys[j]).abs() <= pmax * (pts[i] - pts[j]).abs() + 1e-12);
            }
        }
    }

    #[test]
    fn brc_lipschitz(d in dist_strategy(), c in cost_strategy(), pts in prop::collection::vec(-8.0f64..18.0, 2..30)) {
        let pmax = d.max_density();
        let bound = (pmax / c.lambda()).max(pmax * c.slope_bound() * c.cap());
        let v: Vec<f64> = pts.iter().map(|&l| expected_brc(l, &d, &c)).collect();
        for i in 0..pts.len() {
            prop_assert!(v[i] >= 0.0 && v[i] <= 1.0 / c.lambda() + 1e-12);
            for j in (i + 1)..pts.len() {
                prop_assert!((v[i] - v[j]).abs() <= bound * (pts[i] - pts[j]).abs() + 1e-12);
            }
        }
    }

    #[test]
    fn best_response_beats_grid(l in -5.0f64..5.0, t in -5.0f64..5.0, c in cost_strategy()) {
        let utility = |from: f64, to: f64| -> f64 {
            let gain = if to >= t { 1.0 } else { 0.0 };
            let cost = if to >= from { c.cost(to - from) } else { f64::INFINITY };
            gain - c.lambda() * cost
        };
        let r = best_respond(l, t, &c);
        let u = utility(l, r.new_score);
        for k in 0..=1000 {
            let cand = l + 10.0 * k as f64 / 1000.0;
            prop_assert!(u >= utility(l, cand) - 1e-9);
        }
        prop_assert!(u >= utility(l, l) - 1e-12);
    }

    #[test]
    fn error_and_correct_mass_fill_each_bin(s in samples_strategy(false), c in cost_strategy(), k in 1usize..12) {
        let edges: Vec<f64> = (0..=k).map(|i| 1.0 + 9.0 * i as f64 / k as f64).collect();
        let a = compute_error_weights(&s, &edges, &c).unwrap();
        let flipped: Vec<ScoredSample> = s.iter().map(|x| ScoredSample::new(x.score, 1 - x.label)).collect();
        let b = compute_error_weights(&flipped, &edges, &c).unwrap();
        for (j, w) in edges.windows(2).enumerate() {
            prop_assert!((a.weights[j] + b.weights[j] - (w[1] - w[0])).abs() < 1e-12);
            prop_assert!(a.weights[j] >= 0.0 && a.weights[j] <= w[1] - w[0] + 1e-15);
        }
    }

    #[test]
    fn weights_are_additive(s in samples_strategy(false), cut in 1usize..7, c in cost_strategy()) {
        let edges = vec![1.0, 3.0, 5.5, 10.0];
        let cut = cut.min(s.len() - 1);
        let (a, b) = s.split_at(cut);
        let whole = compute_positive_weights(&s, &edges, &c).unwrap();
        let wa = compute_positive_weights(a, &edges, &c).unwrap();
        let wb = compute_positive_weights(b, &edges, &c).unwrap();
        let n = s.len() as f64;
        for j in 0..3 {
            let mix = (wa.weights[j] * a.len() as f64 + wb.weights[j] * b.len() as f64) / n;
            prop_assert!((mix - whole.weights[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn lp_matches_oracle(
        n in 1usize..6,
        seed_rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 6), 0..6),
        n_eq in 0usize..3,
        rhs in prop::collection::vec(-1.0f64..2.0, 6),
        obj in prop::collection::vec(-1.0f64..1.0, 6),
        ub in prop::collection::vec(0.2f64..3.0, 6),
        infinite in prop::collection::vec(any::<bool>(), 6),
    ) {
        let ub: Vec<f64> = ub[..n].iter().zip(&infinite).map(|(u, inf)| if *inf { f64::INFINITY } else { *u }).collect();
        let mut p = LpProblem::new(obj[..n].to_vec(), ub);
        for (i, r) in seed_rows.iter().enumerate() {
            if i < n_eq {
                p.add_eq(r[..n].to_vec(), rhs[i]);
            } else {
                p.add_le(r[..n].to_vec(), rhs[i]);
            }
        }
        let s = solve(&p).unwrap();
        let o = brute_force_oracle(&p).unwrap();
        prop_assert_eq!(s.status, o.status);
        if s.status == LpStatus::Optimal {
            prop_assert!((s.objective_value - o.objective_value).abs() <= 1e-6 * (1.0 + o.objective_value.abs()));
            prop_assert!(p.max_violation(&s.x) <= 1e-7);
            // Positive rescaling of the objective keeps x optimal.
            let mut scaled = p.clone();
            scaled.objective.iter_mut().for_each(|c| *c *= 3.5);
            let so = brute_force_oracle(&scaled).unwrap();
            prop_assert!((scaled.objective_at(&s.x) - so.objective_value).abs() <= 1e-6 * (1.0 + so.objective_value.abs()));
        }
    }

    #[test]
    fn individual_fit_contract(s in samples_strategy(false), cap in 0.15f64..3.0, k in 2usize..40) {
        let cost = CostModel::fico_default();
        let spec = FitSpec { bins: k, cap: CapMode::Direct { cap }, group_mode: GroupMode::None };
        let score = ScoreModel::Coordinate { index: 0 };
        match fit_individual(&s, &spec, &cost, &score) {
            Ok(p) => {
                let d = &p.groups[0].distribution;
                prop_assert!(d.max_density() <= cap + 1e-9);
                prop_assert!((d.total_mass() - 1.0).abs() <= 1e-9);
                prop_assert!((expected_error(&p, &s).unwrap() - p.metadata.objective).abs() <= 1e-9);
            }
            Err(fairthresh::Error::InfeasibleCap { min_cap, .. }) => prop_assert!(cap < min_cap),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn parity_fit_contract(s in samples_strategy(true), k in 4usize..24) {
        prop_assume!(s.iter().any(|x| x.group == Some(0)) && s.iter().any(|x| x.group == Some(1)));
        let cost = CostModel::fico_default();
        let models = GroupModelSet::shared(GroupModels { cost, score: ScoreModel::Coordinate { index: 0 } });
        let mut last = f64::NEG_INFINITY;
        for omega in [0.1, 0.06, 0.02, 0.0] {
            let spec = FitSpec { bins: k, cap: CapMode::Direct { cap: 5.0 }, group_mode: GroupMode::Parity { omega } };
            match fit_group(&s, &spec, &models) {
                Ok(p) => {
                    // Re-check the parity rows outside the solver.
                    let rates: Vec<f64> = [0u32, 1]
                        .iter()
                        .map(|&g| {
                            let members: Vec<&ScoredSample> = s.iter().filter(|x| x.group == Some(g)).collect();
                            let c = p.component(Some(g)).unwrap();
                            members.iter().map(|x| c.expected_outcome(x.score)).sum::<f64>() / members.len() as f64
                        })
                        .collect();
                    prop_assert!((rates[0] - rates[1]).abs() <= omega + 1e-7);
                    prop_assert!(p.metadata.objective >= last - 1e-9);
                    prop_assert!((expected_error(&p, &s).unwrap() - p.metadata.objective).abs() <= 1e-9);
                    last = p.metadata.objective;
                }
                Err(fairthresh::Error::InfeasibleOmega { .. }) => break,
                Err(e) => return Err(TestCaseError::fail(format!("unexpected error {e}"))),
            }
        }
    }

    #[test]
    fn if_ratio_scale_covariant(
        g in prop::collection::vec(0.0f64..1.0, 2..30),
        seed_x in prop::collection::vec(-5.0f64..5.0, 60),
        c in 0.1f64..10.0,
    ) {
        let x: Vec<Vec<f64>> = (0..g.len()).map(|i| vec![seed_x[2 * i], seed_x[2 * i + 1]]).collect();
        let xs: Vec<Vec<f64>> = x.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        let a = if_ratio(&g, &x).unwrap();
        let b = if_ratio(&g, &xs).unwrap();
        if a.is_finite() {
            prop_assert!((b * c - a).abs() <= 1e-9 * (1.0 + a));
        } else {
            prop_assert!(b.is_infinite());
        }
    }

    #[test]
    fn disparity_ranges(rows in prop::collection::vec((0u8..2, 0u32..2, 0u8..2), 4..80)) {
        let pred: Vec<u8> = rows.iter().map(|r| r.0).collect();
        let grp: Vec<u32> = rows.iter().map(|r| r.1).collect();
        let lab: Vec<u8> = rows.iter().map(|r| r.2).collect();
        let f1 = macro_f1(&pred, &lab).unwrap();
        prop_assert!((0.0..=1.0).contains(&f1));
        if let (Ok(eo), Ok(ed)) = (
            disparity(&pred, &grp, &lab, DisparityMode::Eodp),
            disparity(&pred, &grp, &lab, DisparityMode::Eddp),
        ) {
            prop_assert!(ed >= eo);
            prop_assert!((0.0..=1.0).contains(&ed));
        }
        if let Ok(sdp) = disparity(&pred, &grp, &lab, DisparityMode::Sdp) {
            prop_assert!((0.0..=1.0).contains(&sdp));
        }
    }

    #[test]
    fn split_is_a_partition(n in 1usize..200, seed in any::<u64>()) {
        let d = TabularDataset {
            feature_names: vec!["x".into()],
            group_names: vec!["0".into()],
            sensitive_index: None,
            rows: (0..n).map(|i| Row { features: vec![i as f64], label: 0, group: 0, target: None }).collect(),
        };
        let s = split(&d, &SplitSpec::new(seed)).unwrap();
        prop_assert_eq!(&s, &split(&d, &SplitSpec::new(seed)).unwrap());
        let mut ids: Vec<usize> = [&s.train, &s.validation, &s.test]
            .iter()
            .flat_map(|p| p.rows.iter().map(|r| r.features[0] as usize))
            .collect();
        ids.sort_unstable();
        prop_assert_eq!(ids, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(s.train.len(), (0.6 * n as f64 + 1e-9).floor() as usize);
    }
}

#[test]
fn inverse_cdf_passes_ks() {
    use fairthresh::data::{sample_fico, FicoOptions};
    let table = GroupCdfTable::bundled();
    let d = sample_fico(
        &table,
        &FicoOptions {
            n: 100_000,
            ..Default::default()
        },
        42,
    )
    .unwrap();
    for (g, cdf) in table.groups.iter().enumerate() {
        let mut xs: Vec<f64> = d
            .rows
            .iter()
            .filter(|r| r.group == g as u32)
            .map(|r| r.features[0])
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf.cdf_at(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value of the two-sided KS statistic.
        assert!(ks < 1.628 / n.sqrt(), "group {g}: {ks}");
    }
}

#[test]
fn ols_beats_zero_weight_model() {
    use fairthresh::data::{fit_score_model, read_lawschool};
    let data = read_lawschool(common::synthetic_lawschool_csv(800, 3).as_bytes()).unwrap();
    let model = fit_score_model(&data).unwrap();
    let y: Vec<f64> = data.rows.iter().map(|r| r.target.unwrap()).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let sse: f64 = data
        .rows
        .iter()
        .zip(&y)
        .map(|(r, t)| (model.score(&r.features).unwrap() - t).powi(2))
        .sum();
    let sse0: f64 = y.iter().map(|t| (t - mean).powi(2)).sum();
    assert!(sse <= sse0);
}
