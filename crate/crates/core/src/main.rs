use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use fairthresh::data::{sample_fico, FicoOptions, GroupCdfTable};
use fairthresh::experiment::{
    self, config_hash, evaluate_policy, render_report, render_reproduce, reproduce, DatasetSpec,
    EvalOptions, Method, ReproduceOptions, RunConfig, Source, Target, VERSION,
};
use fairthresh::policy::{predict, CapMode, DecisionRule, FairPolicy, GroupMode};
use fairthresh::score_cost::CostModel;
use fairthresh::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fairthresh",
    version,
    about = "Fair randomized thresholds for strategic classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a policy on one seed's training split.
    Fit {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the per-bin LP weights.
        #[arg(long)]
        dump_weights: bool,
        /// Also write the LP in JSON form.
        #[arg(long)]
        dump_lp: bool,
    },
    /// Fit and evaluate once per seed.
    Run {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate a saved policy on each seed's test split.
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Sample one decision for a feature vector.
    Predict {
        #[arg(long)]
        policy: PathBuf,
        /// Comma-separated feature values.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        features: Vec<f64>,
        /// Group id for per-group policies.
        #[arg(long)]
        group: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Accept iff l(x) >= t instead of l(x) + cap >= t.
        #[arg(long)]
        strict_alg2: bool,
    },
    /// Regenerate one of the result tables.
    Reproduce {
        #[arg(value_enum)]
        target: Target,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        lawschool: Option<PathBuf>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        strict_alg2: bool,
        #[arg(long)]
        if_subsample: Option<usize>,
        #[arg(long)]
        exclude_sensitive: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic credit-score dataset as CSV.
    Generate {
        #[arg(long)]
        fico_cdf: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupModeArg {
    None,
    Parity,
    Eqopp,
    Eqodds,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON run config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Law-school CSV; selects that dataset.
    #[arg(long)]
    lawschool: Option<PathBuf>,
    /// Credit-score CDF table (group,score,cdf).
    #[arg(long)]
    fico_cdf: Option<PathBuf>,
    /// Synthetic sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Rescale synthetic scores to [0, 1].
    #[arg(long)]
    normalize_scores: bool,
    /// Number of threshold bins K.
    #[arg(long)]
    bins: Option<usize>,
    /// Lipschitz budget for expected best-response cost.
    #[arg(long)]
    mc: Option<f64>,
    /// Lipschitz budget for expected outcome.
    #[arg(long)]
    mp: Option<f64>,
    /// Density cap L, overriding --mc/--mp.
    #[arg(long)]
    cap_l: Option<f64>,
    /// Group constraint tolerance.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, value_enum)]
    group_mode: Option<GroupModeArg>,
    /// Cost model g(d) = alpha * d^beta with benefit weight lambda.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Grid-searched deterministic threshold(s) instead of the LP.
    #[arg(long)]
    deterministic: bool,
    /// Comma-separated seeds (default 0,1,2,3,4).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Accept iff l(x) >= t when sampling decisions.
    #[arg(long)]
    strict_alg2: bool,
    /// Estimate the IF ratio on this many random test points.
    #[arg(long)]
    if_subsample: Option<usize>,
    /// Drop the sensitive attribute from IF distances.
    #[arg(long)]
    exclude_sensitive: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => serde_json::from_slice::<RunConfig>(&fs::read(p)?)?,
            None => {
                let dataset = match &self.lawschool {
                    Some(path) => DatasetSpec::Lawschool { path: path.clone() },
                    None => DatasetSpec::fico(),
                };
                RunConfig::new(dataset, CapMode::Direct { cap: 1.0 })
            }
        };
        if self.config.is_some() {
            if let Some(path) = &self.lawschool {
                c.dataset = DatasetSpec::Lawschool { path: path.clone() };
            }
        }
        if let DatasetSpec::FicoSynthetic {
            cdf_path, options, ..
        } = &mut c.dataset
        {
            if self.fico_cdf.is_some() {
                cdf_path.clone_from(&self.fico_cdf);
            }
            if let Some(n) = self.n {
                options.n = n;
            }
            options.normalize |= self.normalize_scores;
        }
        if let Some(b) = self.bins {
            c.bins = b;
        }
        if self.lambda.is_some() || self.alpha.is_some() || self.beta.is_some() {
            c.cost = CostModel::new(
                self.lambda.unwrap_or(c.cost.lambda()),
                self.alpha.unwrap_or(c.cost.alpha()),
                self.beta.unwrap_or(c.cost.beta()),
            )?;
        }
        c.cap = match (self.cap_l, self.mc, self.mp) {
            (Some(cap), _, _) => CapMode::Direct { cap },
            (None, Some(mc), Some(mp)) => CapMode::Joint { mc, mp },
            (None, Some(mc), None) => CapMode::Brc { mc },
            (None, None, Some(mp)) => CapMode::Outcome { mp },
            (None, None, None) => c.cap,
        };
        if let Some(mode) = self.group_mode {
            let omega = || {
                self.omega
                    .or(c.group_mode.omega())
                    .ok_or_else(|| Error::Config("--omega is required with this group mode".into()))
            };
            c.group_mode = match mode {
                GroupModeArg::None => GroupMode::None,
                GroupModeArg::Parity => GroupMode::Parity { omega: omega()? },
                GroupModeArg::Eqopp => GroupMode::EqualOpportunity { omega: omega()? },
                GroupModeArg::Eqodds => GroupMode::EqualizedOdds { omega: omega()? },
            };
        } else if let Some(omega) = self.omega {
            c.group_mode = match c.group_mode {
                GroupMode::None => GroupMode::Parity { omega },
                GroupMode::Parity { .. } => GroupMode::Parity { omega },
                GroupMode::EqualOpportunity { .. } => GroupMode::EqualOpportunity { omega },
                GroupMode::EqualizedOdds { .. } => GroupMode::EqualizedOdds { omega },
            };
        }
        c.deterministic |= self.deterministic;
        if let Some(s) = &self.seeds {
            c.seeds.clone_from(s);
        }
        if self.strict_alg2 {
            c.decision = DecisionRule::RawScore;
        }
        if self.if_subsample.is_some() {
            c.if_subsample = self.if_subsample;
        }
        c.exclude_sensitive |= self.exclude_sensitive;
        c.validate()?;
        Ok(c)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[derive(Serialize)]
struct Stamp<'a> {
    version: &'a str,
    config_hash: String,
    seeds: &'a [u64],
}

#[derive(Serialize)]
struct FitLog<'a> {
    version: &'a str,
    config_hash: String,
    seed: u64,
    lp_status: Option<fairthresh::lp::LpStatus>,
    lp_iterations: Option<usize>,
    objective: f64,
    constraint_gaps: &'a [f64],
}

fn cmd_fit(run: &RunArgs, seed: u64, dump_weights: bool, dump_lp: bool) -> Result<()> {
    let config = run.config()?;
    let source = Source::load(&config.dataset)?;
    let data = source.seed_data(seed)?;
    let (policy, artifacts) =
        experiment::fit_seed(&data, &config.cost, &Method::from_config(&config), seed)?;
    prepare_dir(&run.out)?;
    write_json(&run.out.join("config.json"), &config)?;
    write_json(&run.out.join("policy.json"), &policy)?;
    let log = FitLog {
        version: VERSION,
        config_hash: config_hash(&config)?,
        seed,
        lp_status: policy.metadata.lp_status,
        lp_iterations: policy.metadata.lp_iterations,
        objective: policy.metadata.objective,
        constraint_gaps: &policy.metadata.constraint_gaps,
    };
    write_json(&run.out.join("fit.json"), &log)?;
    if let Some(a) = &artifacts {
        if dump_weights {
            write_json(&run.out.join("weights.json"), &a.weights)?;
        }
        if dump_lp {
            write_json(&run.out.join("lp.json"), &a.lp)?;
        }
    } else if dump_weights || dump_lp {
        log::warn!("deterministic fits have no LP to dump");
    }
    println!(
        "fitted {} group(s); objective {:.6}; wrote {}",
        policy.groups.len(),
        policy.metadata.objective,
        run.out.join("policy.json").display()
    );
    Ok(())
}

fn cmd_run(run: &RunArgs) -> Result<()> {
    let config = run.config()?;
    let (report, _) = experiment::run(&config)?;
    prepare_dir(&run.out)?;
    write_json(&run.out.join("config.json"), &config)?;
    for f in &report.fits {
        write_json(
            &run.out.join(format!("policy-seed-{}.json", f.seed)),
            &f.policy,
        )?;
    }
    write_json(&run.out.join("report.json"), &report)?;
    write_json(
        &run.out.join("stamp.json"),
        &Stamp {
            version: VERSION,
            config_hash: report.config_hash.clone(),
            seeds: &config.seeds,
        },
    )?;
    let text = render_report("mean ± std", &report.report);
    fs::write(run.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_evaluate(policy_path: &Path, run: &RunArgs) -> Result<()> {
    let config = run.config()?;
    let policy: FairPolicy = serde_json::from_slice(&fs::read(policy_path)?)?;
    let report = evaluate_policy(
        &policy,
        &config.dataset,
        &config.seeds,
        &EvalOptions::from(&config),
    )?;
    prepare_dir(&run.out)?;
    #[derive(Serialize)]
    struct Evaluated<'a> {
        version: &'a str,
        config_hash: String,
        seeds: &'a [u64],
        report: &'a fairthresh::metrics::FairnessReport,
    }
    write_json(
        &run.out.join("report.json"),
        &Evaluated {
            version: VERSION,
            config_hash: config_hash(&config)?,
            seeds: &config.seeds,
            report: &report,
        },
    )?;
    let text = render_report("mean ± std", &report);
    fs::write(run.out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_predict(
    policy_path: &Path,
    features: &[f64],
    group: Option<u32>,
    seed: u64,
    strict: bool,
) -> Result<()> {
    let policy: FairPolicy = serde_json::from_slice(&fs::read(policy_path)?)?;
    let rule = if strict {
        DecisionRule::RawScore
    } else {
        DecisionRule::BestResponse
    };
    #[derive(Serialize)]
    struct Prediction {
        seed: u64,
        score: f64,
        decision: u8,
        expected_outcome: f64,
        expected_brc: f64,
    }
    let p = Prediction {
        seed,
        score: policy.score(features, group)?,
        decision: predict(&policy, features, group, seed, rule)?,
        expected_outcome: policy.expected_outcome(features, group)?,
        expected_brc: policy.expected_brc(features, group)?,
    };
    println!("{}", serde_json::to_string(&p)?);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_reproduce(
    target: Target,
    seeds: Option<Vec<u64>>,
    lawschool: Option<PathBuf>,
    bins: Option<usize>,
    strict: bool,
    if_subsample: Option<usize>,
    exclude_sensitive: bool,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut opts = ReproduceOptions::new(target, lawschool)?;
    if let Some(s) = seeds {
        opts.seeds = s;
    }
    if let Some(b) = bins {
        opts.bins = b;
    }
    if strict {
        opts.decision = DecisionRule::RawScore;
    }
    opts.if_subsample = if_subsample;
    opts.exclude_sensitive = exclude_sensitive;
    let report = reproduce(&opts)?;
    let text = render_reproduce(&report);
    let out = out.unwrap_or_else(|| PathBuf::from("out").join(target.name()));
    prepare_dir(&out)?;
    write_json(&out.join("config.json"), &opts)?;
    write_json(&out.join("report.json"), &report)?;
    fs::write(out.join("report.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_generate(cdf: Option<PathBuf>, n: usize, seed: u64, out: &Path) -> Result<()> {
    let table = match cdf {
        Some(p) => GroupCdfTable::from_path(&p, None)?,
        None => GroupCdfTable::bundled(),
    };
    let data = sample_fico(
        &table,
        &FicoOptions {
            n,
            ..Default::default()
        },
        seed,
    )?;
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["score", "group", "label"])?;
    for r in &data.rows {
        w.write_record([
            r.features[0].to_string(),
            r.group.to_string(),
            r.label.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit {
            run,
            seed,
            dump_weights,
            dump_lp,
        } => cmd_fit(&run, seed, dump_weights, dump_lp),
        Command::Run { run } => cmd_run(&run),
        Command::Evaluate { policy, run } => cmd_evaluate(&policy, &run),
        Command::Predict {
            policy,
            features,
            group,
            seed,
            strict_alg2,
        } => cmd_predict(&policy, &features, group, seed, strict_alg2),
        Command::Reproduce {
            target,
            seeds,
            lawschool,
            bins,
            strict_alg2,
            if_subsample,
            exclude_sensitive,
            out,
        } => cmd_reproduce(
            target,
            seeds,
            lawschool,
            bins,
            strict_alg2,
            if_subsample,
            exclude_sensitive,
            out,
        ),
        Command::Generate {
            fico_cdf,
            n,
            seed,
            out,
        } => cmd_generate(fico_cdf, n, seed, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
