use std::path::PathBuf;

use balloc_core::{ProcessSpec, Result, Rule, WeightDistribution};

pub fn weights(text: &str) -> std::result::Result<WeightDistribution, String> {
    let (kind, params) = text.split_once(':').unwrap_or((text, ""));
    let numbers = || -> std::result::Result<Vec<f64>, String> {
        params
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number {p:?}"))
            })
            .collect()
    };
    let w = match kind {
        "constant" | "const" | "const1" => WeightDistribution::Constant,
        "exponential" | "exp" => WeightDistribution::Exponential,
        "uniform-two" => {
            let (low, high) = params
                .split_once(',')
                .ok_or("uniform-two needs LOW,HIGH")?;
            let low = low.trim().parse().map_err(|_| format!("bad LOW {low:?}"))?;
            let high = high.trim().parse().map_err(|_| format!("bad HIGH {high:?}"))?;
            WeightDistribution::uniform_two_values(low, high).map_err(|e| e.to_string())?
        }
        "empirical" => {
            WeightDistribution::bounded_empirical(numbers()?, None).map_err(|e| e.to_string())?
        }
        other => {
            return Err(format!(
                "unknown weights {other:?} (constant, exponential, uniform-two:LOW,HIGH, empirical:V1,V2,...)"
            ))
        }
    };
    Ok(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RuleName {
    Greedy,
    GreedyRank,
    OneChoice,
    Left,
}

pub fn spec(rule: RuleName, d: f64, weights: WeightDistribution) -> Result<ProcessSpec> {
    let rule = match rule {
        RuleName::Greedy => Rule::Greedy {
            d,
            force_rank: false,
        },
        RuleName::GreedyRank => Rule::Greedy {
            d,
            force_rank: true,
        },
        RuleName::OneChoice => Rule::OneChoice,
        RuleName::Left => {
            if d.fract() != 0.0 || d < 2.0 {
                return Err(balloc_core::Error::InvalidParameter(format!(
                    "left needs an integer d ≥ 2, got {d}"
                )));
            }
            Rule::Left { d: d as usize }
        }
    };
    ProcessSpec::new(rule, weights)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StateSource {
    Random(usize),
    File(PathBuf),
}

pub fn states(text: &str) -> std::result::Result<StateSource, String> {
    match text.split_once(':') {
        Some(("random", count)) => count
            .parse()
            .map(StateSource::Random)
            .map_err(|_| format!("bad state count {count:?}")),
        Some(("file", path)) if !path.is_empty() => Ok(StateSource::File(path.into())),
        _ => Err(format!("expected random:N or file:PATH, got {text:?}")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaChoice {
    Auto,
    Manual(f64),
}

pub fn alpha(text: &str) -> std::result::Result<AlphaChoice, String> {
    if text == "auto" {
        return Ok(AlphaChoice::Auto);
    }
    text.parse()
        .map(AlphaChoice::Manual)
        .map_err(|_| format!("expected auto or a number, got {text:?}"))
}

/// One vector per nonblank line, numbers separated by commas or whitespace;
/// `#` starts a comment.
pub fn state_file(text: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| format!("line {}: not a list of numbers", lineno + 1))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err("state file holds no vectors".into());
    }
    Ok(out)
}
