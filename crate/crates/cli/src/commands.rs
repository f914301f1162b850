use std::path::PathBuf;

use balloc_core::analysis::{
    beta_schedule, dominance_test, fibonacci_base, quantile_target, two_phase_trials,
    weight_quantile_at, DEFAULT_C_PRIME, DKW_DELTA,
};
use balloc_core::experiment::{
    format_float, gaps_at, load_config_file, mean_gap_by_checkpoint, render, run_experiment,
    ExperimentConfig, Measurement, OutputFormat,
};
use balloc_core::potential::{
    check_drift_lemmas, random_zero_sum_state, Check, DriftVerdict, PotentialParams,
};
use balloc_core::{Error, ProcessSpec, Result, RngContract, WeightDistribution};
use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use crate::parse::{self, AlphaChoice, RuleName, StateSource};
use crate::Outcome;

#[derive(Args, Clone, Copy)]
pub struct Common {
    /// Base seed of the per-trial random streams.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print one JSON document instead of text.
    #[arg(long)]
    pub json: bool,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "BALLOC_WORKERS", default_value_t = 0)]
    pub workers: usize,
}

impl Common {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(vec![msg.into()])
}

fn print_json(value: &Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("JSON values serialise")
    );
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MeasureName {
    Gap,
    Potentials,
    Nu,
    LeftLayers,
}

impl From<MeasureName> for Measurement {
    fn from(m: MeasureName) -> Self {
        match m {
            MeasureName::Gap => Measurement::Gap,
            MeasureName::Potentials => Measurement::Potentials,
            MeasureName::Nu => Measurement::Nu,
            MeasureName::LeftLayers => Measurement::LeftLayers,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatName {
    Csv,
    Json,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// JSON experiment config; excludes the inline process flags.
    #[arg(long, conflicts_with_all = ["n", "d", "rule", "weights", "balls", "trials", "measure", "alpha"])]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, value_enum)]
    rule: Option<RuleName>,
    /// constant, exponential, uniform-two:LOW,HIGH or empirical:V1,V2,...
    #[arg(long, value_parser = parse::weights)]
    weights: Option<WeightDistribution>,
    /// Checkpoints in balls, comma separated.
    #[arg(long, value_delimiter = ',')]
    balls: Vec<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    measure: Vec<MeasureName>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<FormatName>,
    /// Write records here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn inline_config(a: &SimulateArgs) -> Result<ExperimentConfig> {
    let n =
        a.n.ok_or_else(|| usage("--n is required without --config"))?;
    if a.balls.is_empty() {
        return Err(usage("--balls is required without --config"));
    }
    let rule = a.rule.unwrap_or(RuleName::Greedy);
    let d = a.d.unwrap_or(if rule == RuleName::OneChoice {
        1.0
    } else {
        2.0
    });
    let spec = parse::spec(rule, d, a.weights.clone().unwrap_or_default())?;
    let mut measurements: Vec<Measurement> = a.measure.iter().map(|&m| m.into()).collect();
    measurements.push(Measurement::Gap);
    ExperimentConfig::new(
        spec,
        n,
        a.balls.clone(),
        a.trials.unwrap_or(1),
        a.common.seed(),
    )?
    .with_alpha(a.alpha)?
    .with_measurements(measurements)
}

pub fn simulate(a: SimulateArgs) -> Result<Outcome> {
    let mut config = match &a.config {
        Some(path) => {
            let mut c = load_config_file(path)?;
            if let Some(seed) = a.common.seed {
                c.seed = seed;
            }
            c
        }
        None => inline_config(&a)?,
    };
    if let Some(f) = a.format {
        config.output.format = match f {
            FormatName::Csv => OutputFormat::Csv,
            FormatName::Json => OutputFormat::Json,
        };
    }
    if a.output.is_some() {
        config.output.path = a.output.clone();
    }
    let results = run_experiment(&config, a.common.workers)?;
    let summary = mean_gap_by_checkpoint(&results);
    let path = config.output.path.clone();
    if let Some(p) = &path {
        balloc_core::experiment::emit(&results, config.output.format, p)?;
    }
    if a.common.json {
        let records: Value = match &path {
            Some(_) => Value::Null,
            None => serde_json::from_str(&render(&results, OutputFormat::Json)?)?,
        };
        print_json(&json!({
            "rule": config.spec.rule().name(),
            "n": config.n,
            "trials": config.trials,
            "seed": config.seed,
            "summary": summary
                .iter()
                .map(|(balls, gap)| json!({"balls": balls, "mean_gap": gap}))
                .collect::<Vec<_>>(),
            "output": path,
            "records": records,
        }));
    } else {
        if path.is_none() {
            print!("{}", render(&results, config.output.format)?);
        }
        let line: Vec<String> = summary
            .iter()
            .map(|(balls, gap)| format!("{balls}:{}", format_float(*gap)))
            .collect();
        eprintln!("mean gap per checkpoint (balls:gap) {}", line.join(" "));
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct DriftArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    #[arg(long, value_enum, default_value = "greedy")]
    rule: RuleName,
    #[arg(long, value_parser = parse::weights, default_value = "constant")]
    weights: WeightDistribution,
    /// `auto` derives α from ε, S and λ; a number fixes it.
    #[arg(long, value_parser = parse::alpha, default_value = "auto")]
    alpha: AlphaChoice,
    /// random:N or file:PATH (one vector per line).
    #[arg(long, value_parser = parse::states, default_value = "random:1000")]
    states: StateSource,
    /// Only print the summary.
    #[arg(long)]
    quiet: bool,
    #[command(flatten)]
    common: Common,
}

type Selector = fn(&DriftVerdict) -> Check;

const MANUAL_NOTE: &str = "manual α: lemma preconditions not guaranteed";

pub fn drift(a: DriftArgs) -> Result<Outcome> {
    let spec = parse::spec(a.rule, a.d, a.weights.clone())?;
    let params = match a.alpha {
        AlphaChoice::Auto => PotentialParams::derive(&spec)?,
        AlphaChoice::Manual(alpha) => PotentialParams::with_alpha(&spec, alpha)?,
    };
    let states: Vec<Vec<f64>> = match &a.states {
        StateSource::Random(count) => {
            spec.validate_bins(a.n)?;
            let contract = RngContract::new(a.common.seed());
            (0..*count as u64)
                .map(|i| random_zero_sum_state(a.n, &mut contract.stream(i)))
                .collect()
        }
        StateSource::File(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut vectors = parse::state_file(&text).map_err(usage)?;
            for v in &mut vectors {
                v.sort_by(|x, y| y.total_cmp(x));
            }
            vectors
        }
    };
    let verdicts = states
        .iter()
        .enumerate()
        .map(|(i, x)| {
            check_drift_lemmas(x, &spec, &params).map_err(|e| usage(format!("state {i}: {e}")))
        })
        .collect::<Result<Vec<DriftVerdict>>>()?;

    let count = |f: Selector, c: Check| verdicts.iter().filter(|v| f(v) == c).count();
    let failed = verdicts.iter().filter(|v| v.any_failed()).count();
    let checks: [(&str, Selector); 4] = [
        ("phi_increase", |v| v.phi_increase),
        ("psi_increase", |v| v.psi_increase),
        ("phi_decrease", |v| v.phi_decrease),
        ("psi_decrease", |v| v.psi_decrease),
    ];

    if a.common.json {
        let mut tallies = serde_json::Map::new();
        for (name, f) in &checks {
            tallies.insert(
                name.to_string(),
                json!({
                    "pass": count(*f, Check::Pass),
                    "fail": count(*f, Check::Fail),
                    "skipped": count(*f, Check::Skipped),
                }),
            );
        }
        let rows: Vec<Value> = verdicts
            .iter()
            .enumerate()
            .map(|(i, v)| {
                json!({
                    "state": i,
                    "n": states[i].len(),
                    "phi": v.phi,
                    "psi": v.psi,
                    "phi_drift": v.phi_drift,
                    "psi_drift": v.psi_drift,
                    "phi_increase": v.phi_increase.as_str(),
                    "psi_increase": v.psi_increase.as_str(),
                    "phi_decrease": v.phi_decrease.as_str(),
                    "psi_decrease": v.psi_decrease.as_str(),
                })
            })
            .collect();
        print_json(&json!({
            "rule": spec.rule().name(),
            "d": spec.rule().exponent(),
            "alpha": params.alpha,
            "epsilon": params.epsilon,
            "manual_alpha": params.is_manual(),
            "note": params.is_manual().then_some(MANUAL_NOTE),
            "states": verdicts.len(),
            "failed_states": failed,
            "checks": tallies,
            "verdicts": if a.quiet { Value::Null } else { Value::from(rows) },
        }));
    } else {
        println!(
            "{} d={} alpha={} epsilon={}",
            spec.rule().name(),
            spec.rule().exponent(),
            format_float(params.alpha),
            format_float(params.epsilon)
        );
        if params.is_manual() {
            println!("{MANUAL_NOTE}");
        }
        if !a.quiet {
            println!("state\tn\tphi_drift\tpsi_drift\tphi_inc\tpsi_inc\tphi_dec\tpsi_dec");
            for (i, v) in verdicts.iter().enumerate() {
                println!(
                    "{i}\t{}\t{:.6e}\t{:.6e}\t{}\t{}\t{}\t{}",
                    states[i].len(),
                    v.phi_drift,
                    v.psi_drift,
                    v.phi_increase.as_str(),
                    v.psi_increase.as_str(),
                    v.phi_decrease.as_str(),
                    v.psi_decrease.as_str()
                );
            }
        }
        for (name, f) in &checks {
            println!(
                "{name}: pass={} fail={} skipped={}",
                count(*f, Check::Pass),
                count(*f, Check::Fail),
                count(*f, Check::Skipped)
            );
        }
        println!("states={} failed={failed}", verdicts.len());
    }
    Ok(if failed == 0 {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

#[derive(Args)]
pub struct DominanceArgs {
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    #[arg(long, value_enum, default_value = "greedy")]
    rule: RuleName,
    /// Earlier time, in chain steps (n balls each).
    #[arg(long)]
    t_early: u64,
    /// Later time, in chain steps.
    #[arg(long)]
    t_late: u64,
    #[arg(long, default_value_t = 2000)]
    trials: u64,
    /// Failure probability of the DKW band.
    #[arg(long, default_value_t = DKW_DELTA)]
    delta: f64,
    #[command(flatten)]
    common: Common,
}

pub fn dominance(a: DominanceArgs) -> Result<Outcome> {
    if a.t_early > a.t_late {
        return Err(usage(format!(
            "--t-early ({}) must not exceed --t-late ({})",
            a.t_early, a.t_late
        )));
    }
    let spec = parse::spec(a.rule, a.d, WeightDistribution::Constant)?;
    let early = a.t_early * a.n as u64;
    let late = a.t_late * a.n as u64;
    let mut checkpoints = vec![early];
    if late > early {
        checkpoints.push(late);
    }
    let config = ExperimentConfig::new(spec, a.n, checkpoints, a.trials, a.common.seed())?;
    let results = run_experiment(&config, a.common.workers)?;
    let (g_early, g_late) = (gaps_at(&results, early), gaps_at(&results, late));
    let v = dominance_test(&g_early, &g_late, a.delta)?;
    let mean = |g: &[f64]| g.iter().sum::<f64>() / g.len() as f64;
    if a.common.json {
        print_json(&json!({
            "n": a.n,
            "t_early": a.t_early,
            "t_late": a.t_late,
            "trials": a.trials,
            "mean_gap_early": mean(&g_early),
            "mean_gap_late": mean(&g_late),
            "band": v.band,
            "worst_margin": v.worst_margin,
            "pass": v.pass,
        }));
    } else {
        println!(
            "mean gap: early={} late={}",
            format_float(mean(&g_early)),
            format_float(mean(&g_late))
        );
        println!(
            "band={} worst_margin={} {}",
            format_float(v.band),
            format_float(v.worst_margin),
            if v.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if v.pass { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Args)]
pub struct InductionArgs {
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    /// Black phase length, in chain steps.
    #[arg(long, default_value_t = 16)]
    t: u64,
    /// Red phase length, in chain steps.
    #[arg(long = "L")]
    l: u64,
    #[arg(long, default_value_t = 1)]
    ell: u32,
    #[arg(long, default_value_t = DEFAULT_C_PRIME)]
    c_prime: f64,
    /// L used for the β schedule (defaults to --L); must lie in [ℓ, n^(1/4)].
    #[arg(long = "schedule-L")]
    schedule_l: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[command(flatten)]
    common: Common,
}

const CLOSED_FORM_TOLERANCE: f64 = 1e-9;

pub fn induction(a: InductionArgs) -> Result<Outcome> {
    let schedule = beta_schedule(
        a.schedule_l.unwrap_or(a.l as f64),
        a.ell,
        a.c_prime,
        a.n as u64,
        a.d,
    )?;
    if a.d.fract() != 0.0 {
        return Err(usage("the two-phase experiment needs an integer d"));
    }
    let spec = ProcessSpec::greedy(a.d)?;
    let contract = RngContract::new(a.common.seed());
    let summary = in_pool(a.common.workers, || {
        two_phase_trials(&spec, a.n, a.t, a.l, a.trials, contract)
    })??;
    let closed_form_error = schedule.closed_form_error();
    let ok = summary.violating == 0 && closed_form_error <= CLOSED_FORM_TOLERANCE;
    let unsnapped = schedule.unsnapped_len();

    if a.common.json {
        let rows: Vec<Value> = schedule
            .beta
            .iter()
            .enumerate()
            .map(|(k, b)| {
                json!({
                    "i": schedule.i_low + k as u32,
                    "beta": b,
                    "closed_form": (k < unsnapped).then(|| schedule.closed_form_ln(k as u32).exp()),
                })
            })
            .collect();
        print_json(&json!({
            "schedule": {
                "L": schedule.l,
                "ell": schedule.ell,
                "c_prime": schedule.c_prime,
                "n": schedule.n,
                "d": schedule.d,
                "i_low": schedule.i_low,
                "i_high": schedule.i_high,
                "floor": schedule.floor,
                "reaches_floor": schedule.reaches_floor(),
                "closed_form_error": closed_form_error,
                "beta": rows,
            },
            "trials": a.trials,
            "t": a.t,
            "L": a.l,
            "applicable": summary.applicable,
            "violations": summary.violating,
            "pass": ok,
        }));
    } else {
        println!(
            "beta schedule: L={} ell={} c'={} n={} d={} floor={}",
            schedule.l,
            schedule.ell,
            schedule.c_prime,
            schedule.n,
            schedule.d,
            format_float(schedule.floor)
        );
        println!("i\tbeta\tclosed_form");
        for (k, b) in schedule.beta.iter().enumerate() {
            let closed = if k < unsnapped {
                format_float(schedule.closed_form_ln(k as u32).exp())
            } else {
                "floor".into()
            };
            println!(
                "{}\t{}\t{closed}",
                schedule.i_low + k as u32,
                format_float(*b)
            );
        }
        println!("closed form max relative error: {closed_form_error:.3e}");
        println!(
            "two-phase: trials={} applicable (G<L)={} violations={}",
            a.trials, summary.applicable, summary.violating
        );
    }
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Args)]
pub struct FibBaseArgs {
    #[arg(long, default_value_t = 2)]
    d: u32,
    #[command(flatten)]
    common: Common,
}

pub fn fib_base(a: FibBaseArgs) -> Result<Outcome> {
    let value = fibonacci_base(a.d)?;
    if a.common.json {
        print_json(&json!({ "d": a.d, "phi_d": value }));
    } else {
        println!("{value:.9}");
    }
    Ok(Outcome::Pass)
}

#[derive(Args)]
pub struct QuantileArgs {
    /// const1, exp, uniform-two:LOW,HIGH or empirical:V1,V2,...
    #[arg(long, value_parser = parse::weights)]
    dist: WeightDistribution,
    #[arg(long)]
    s: f64,
    #[arg(long)]
    n: u64,
    #[command(flatten)]
    common: Common,
}

pub fn quantile(a: QuantileArgs) -> Result<Outcome> {
    let target = quantile_target(a.s, a.n)?;
    let value = weight_quantile_at(&a.dist, target);
    if a.common.json {
        print_json(&json!({
            "dist": a.dist.name(),
            "s": a.s,
            "n": a.n,
            "target": target,
            "m_s": value,
        }));
    } else {
        println!("{}", format_float(value));
    }
    Ok(Outcome::Pass)
}
