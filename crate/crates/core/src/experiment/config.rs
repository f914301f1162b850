use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::process::{ProcessSpec, Rule, WeightDistribution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measurement {
    Gap,
    Potentials,
    Nu,
    LeftLayers,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: Option<PathBuf>,
}

/// A validated experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ProcessSpec,
    pub n: usize,
    /// Ball counts, strictly increasing.
    pub checkpoints: Vec<u64>,
    pub trials: u64,
    pub seed: u64,
    pub measurements: BTreeSet<Measurement>,
    pub alpha: Option<f64>,
    pub output: OutputSpec,
}

impl ExperimentConfig {
    /// A gap-only configuration with CSV output.
    pub fn new(
        spec: ProcessSpec,
        n: usize,
        checkpoints: Vec<u64>,
        trials: u64,
        seed: u64,
    ) -> Result<Self> {
        let config = Self {
            spec,
            n,
            checkpoints,
            trials,
            seed,
            measurements: BTreeSet::from([Measurement::Gap]),
            alpha: None,
            output: OutputSpec {
                format: OutputFormat::Csv,
                path: None,
            },
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_measurements<I: IntoIterator<Item = Measurement>>(mut self, m: I) -> Result<Self> {
        self.measurements = m.into_iter().collect();
        self.validate()?;
        Ok(self)
    }

    pub fn with_alpha(mut self, alpha: Option<f64>) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn measures(&self, m: Measurement) -> bool {
        self.measurements.contains(&m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        check_common(
            self.n,
            &self.checkpoints,
            self.trials,
            &self.measurements,
            self.alpha,
            &mut problems,
        );
        if problems.is_empty() {
            check_against_spec(self, &mut problems);
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}

fn check_common(
    n: usize,
    checkpoints: &[u64],
    trials: u64,
    measurements: &BTreeSet<Measurement>,
    alpha: Option<f64>,
    problems: &mut Vec<String>,
) {
    if n < 2 {
        problems.push(format!("n must be ≥ 2, got {n}"));
    }
    if checkpoints.is_empty() {
        problems.push("checkpoints must not be empty".into());
    } else if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        problems.push("checkpoints not strictly increasing".into());
    }
    if trials < 1 {
        problems.push("trials must be ≥ 1".into());
    }
    if measurements.is_empty() {
        problems.push("measurements must not be empty".into());
    }
    if let Some(a) = alpha {
        if !(a.is_finite() && a > 0.0) {
            problems.push(format!("alpha must be positive, got {a}"));
        }
    }
}

fn check_against_spec(config: &ExperimentConfig, problems: &mut Vec<String>) {
    if let Err(e) = config.spec.validate_bins(config.n) {
        problems.push(e.to_string());
    }
    if config.measures(Measurement::Potentials)
        && config.alpha.is_none()
        && config.spec.epsilon() <= 0.0
    {
        problems.push(format!(
            "potentials for {} need an explicit alpha",
            config.spec.rule().name()
        ));
    }
    if config.measures(Measurement::LeftLayers) {
        if !matches!(config.spec.rule(), Rule::Left { .. }) {
            problems.push("left_layers needs rule \"left\"".into());
        } else if config.spec.weights().unit().is_none() {
            problems.push("left_layers needs weights with integral units".into());
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    process: RawProcess,
    n: usize,
    checkpoints: Vec<u64>,
    trials: u64,
    seed: u64,
    #[serde(default)]
    measurements: Option<Vec<Measurement>>,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    output: Option<RawOutput>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcess {
    rule: String,
    #[serde(default)]
    d: Option<f64>,
    #[serde(default)]
    weights: Option<RawWeights>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeights {
    kind: String,
    #[serde(default)]
    params: Option<serde_json::Map<String, serde_json::Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default)]
    format: OutputFormat,
    #[serde(default)]
    path: Option<PathBuf>,
}

/// Parses and validates a JSON experiment document, listing every problem
/// found.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
    let mut problems = Vec::new();
    let weights = raw
        .process
        .weights
        .as_ref()
        .map(parse_weights)
        .transpose()
        .unwrap_or_else(|e| {
            problems.push(e);
            None
        })
        .unwrap_or_default();
    let spec = parse_rule(&raw.process.rule, raw.process.d)
        .and_then(|rule| ProcessSpec::new(rule, weights).map_err(|e| plain(&e)));
    let measurements: BTreeSet<Measurement> = raw
        .measurements
        .unwrap_or_else(|| vec![Measurement::Gap])
        .into_iter()
        .collect();
    check_common(
        raw.n,
        &raw.checkpoints,
        raw.trials,
        &measurements,
        raw.alpha,
        &mut problems,
    );
    let spec = match spec {
        Ok(spec) => Some(spec),
        Err(e) => {
            problems.push(e);
            None
        }
    };
    let Some(spec) = spec.filter(|_| problems.is_empty()) else {
        return Err(Error::Config(problems));
    };
    let output = raw.output.map_or(
        OutputSpec {
            format: OutputFormat::Csv,
            path: None,
        },
        |o| OutputSpec {
            format: o.format,
            path: o.path,
        },
    );
    let config = ExperimentConfig {
        spec,
        n: raw.n,
        checkpoints: raw.checkpoints,
        trials: raw.trials,
        seed: raw.seed,
        measurements,
        alpha: raw.alpha,
        output,
    };
    config.validate()?;
    Ok(config)
}

/// Reads and parses a config file.
pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    load_config(&std::fs::read_to_string(path)?)
}

fn plain(e: &Error) -> String {
    match e {
        Error::InvalidParameter(msg) => msg.clone(),
        other => other.to_string(),
    }
}

fn parse_rule(rule: &str, d: Option<f64>) -> std::result::Result<Rule, String> {
    let need_d = || d.ok_or_else(|| format!("rule {rule:?} needs d"));
    match rule {
        "greedy" => Ok(Rule::Greedy {
            d: need_d()?,
            force_rank: false,
        }),
        "greedy-rank" => Ok(Rule::Greedy {
            d: need_d()?,
            force_rank: true,
        }),
        "one-choice" => match d {
            None => Ok(Rule::OneChoice),
            Some(1.0) => Ok(Rule::OneChoice),
            Some(d) => Err(format!("one-choice has d = 1, got {d}")),
        },
        "left" => {
            let d = need_d()?;
            if d.fract() != 0.0 || d < 2.0 {
                return Err(format!("left needs an integer d ≥ 2, got {d}"));
            }
            Ok(Rule::Left { d: d as usize })
        }
        other => Err(format!(
            "unknown rule {other:?} (expected greedy, greedy-rank, one-choice or left)"
        )),
    }
}

fn parse_weights(raw: &RawWeights) -> std::result::Result<WeightDistribution, String> {
    let params = raw.params.clone().unwrap_or_default();
    let allow = |keys: &[&str]| -> std::result::Result<(), String> {
        match params.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(format!("unknown weight parameter {k:?} for {}", raw.kind)),
            None => Ok(()),
        }
    };
    let get_u32 = |key: &str| -> std::result::Result<u32, String> {
        params
            .get(key)
            .and_then(|v| v.as_u64())
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| format!("weights.params.{key} must be a positive integer"))
    };
    let get_vec = |key: &str| -> std::result::Result<Option<Vec<f64>>, String> {
        match params.get(key) {
            None => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|_| format!("weights.params.{key} must be an array of numbers")),
        }
    };
    match raw.kind.as_str() {
        "constant" => allow(&[]).map(|_| WeightDistribution::Constant),
        "exponential" => allow(&[]).map(|_| WeightDistribution::Exponential),
        "uniform-two" => {
            allow(&["low", "high"])?;
            WeightDistribution::uniform_two_values(get_u32("low")?, get_u32("high")?)
                .map_err(|e| plain(&e))
        }
        "empirical" => {
            allow(&["values", "probs"])?;
            let values = get_vec("values")?.ok_or("weights.params.values is required")?;
            WeightDistribution::bounded_empirical(values, get_vec("probs")?).map_err(|e| plain(&e))
        }
        other => Err(format!(
            "unknown weight kind {other:?} (expected constant, uniform-two, exponential or empirical)"
        )),
    }
}
