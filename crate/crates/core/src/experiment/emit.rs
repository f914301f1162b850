use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{OutputFormat, TrialResult};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "trial,balls,gap,phi,psi,gamma,max_load";

/// One emitted row, as read back from JSON.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct EmittedRecord {
    pub trial: u64,
    pub balls: u64,
    pub gap: f64,
    pub phi: Option<f64>,
    pub psi: Option<f64>,
    pub gamma: Option<f64>,
    pub max_load: f64,
}

#[derive(Serialize)]
struct JsonRow {
    trial: u64,
    balls: u64,
    gap: Box<RawValue>,
    phi: Option<Box<RawValue>>,
    psi: Option<Box<RawValue>>,
    gamma: Option<Box<RawValue>>,
    max_load: Box<RawValue>,
}

/// `printf("%.17g")`: 17 significant digits, trailing zeros dropped,
/// exponent form outside `[1e-4, 1e17)`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn raw(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::invalid(format!("cannot emit non-finite value {x}")));
    }
    Ok(RawValue::from_string(format_float(x))?)
}

/// Serialises all records in `(trial, checkpoint)` order.
pub fn render(results: &[TrialResult], format: OutputFormat) -> Result<String> {
    if results.iter().all(|t| t.records.is_empty()) {
        return Err(Error::invalid("no records to emit"));
    }
    let records = results.iter().flat_map(|t| &t.records);
    match format {
        OutputFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
            for r in records {
                let p = r.potentials;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.trial,
                    r.balls,
                    format_float(r.gap),
                    opt(p.map(|p| p.phi)),
                    opt(p.map(|p| p.psi)),
                    opt(p.map(|p| p.gamma)),
                    format_float(r.max_load)
                )
                .expect("writing to a String");
            }
            Ok(out)
        }
        OutputFormat::Json => {
            let rows = records
                .map(|r| {
                    let p = r.potentials;
                    Ok(JsonRow {
                        trial: r.trial,
                        balls: r.balls,
                        gap: raw(r.gap)?,
                        phi: p.map(|p| raw(p.phi)).transpose()?,
                        psi: p.map(|p| raw(p.psi)).transpose()?,
                        gamma: p.map(|p| raw(p.gamma)).transpose()?,
                        max_load: raw(r.max_load)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut out = serde_json::to_string_pretty(&rows)?;
            out.push('\n');
            Ok(out)
        }
    }
}

/// Writes [`render`] output to `path`.
pub fn emit(results: &[TrialResult], format: OutputFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render(results, format)?)?;
    Ok(())
}

pub fn parse_json(text: &str) -> Result<Vec<EmittedRecord>> {
    Ok(serde_json::from_str(text)?)
}
