//! Declarative experiments: configuration, deterministic parallel trials and
//! CSV/JSON emission.

mod config;
mod emit;

pub use config::{
    load_config, load_config_file, ExperimentConfig, Measurement, OutputFormat, OutputSpec,
};
pub use emit::{emit, format_float, parse_json, render, EmittedRecord, CSV_HEADER};

use crate::analysis::{left_layer_fractions, nu_fractions, GapSample, LeftLayers};
use crate::error::{Error, Result};
use crate::potential::{state_potentials, PotentialParams, PotentialReport};
use crate::process::{throw_balls, LoadState, RngContract};
use rayon::prelude::*;

/// Measurements of one trial at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub trial: u64,
    pub balls: u64,
    pub gap: f64,
    pub max_load: f64,
    pub potentials: Option<PotentialReport>,
    pub nu: Option<Vec<f64>>,
    pub left_layers: Option<LeftLayers>,
}

impl Record {
    pub fn gap_sample(&self) -> GapSample {
        GapSample {
            trial: self.trial,
            checkpoint: self.balls,
            gap: self.gap,
            gamma_per_n: self.potentials.map(|p| p.gamma_per_bin()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub trial: u64,
    /// One record per checkpoint, in checkpoint order.
    pub records: Vec<Record>,
}

/// Runs every trial of `config` on `workers` threads (0 picks the rayon
/// default). Output depends only on the config.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let alpha = if config.measures(Measurement::Potentials) {
        Some(match config.alpha {
            Some(a) => PotentialParams::with_alpha(&config.spec, a)?.alpha,
            None => PotentialParams::derive(&config.spec)?.alpha,
        })
    } else {
        None
    };
    let contract = RngContract::new(config.seed);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|trial| {
                run_trial(config, alpha, contract, trial).map_err(|e| Error::Trial {
                    trial,
                    source: Box::new(e),
                })
            })
            .collect()
    })
}

fn run_trial(
    config: &ExperimentConfig,
    alpha: Option<f64>,
    contract: RngContract,
    trial: u64,
) -> Result<TrialResult> {
    let mut rng = contract.stream(trial);
    let mut state = LoadState::empty(config.n, config.spec.weights())?;
    let mut records = Vec::with_capacity(config.checkpoints.len());
    for &balls in &config.checkpoints {
        let pending = balls - state.balls_thrown();
        throw_balls(&mut state, &config.spec, pending, &mut rng)?;
        let potentials = alpha.map(|a| state_potentials(&state, a)).transpose()?;
        let nu = config
            .measures(Measurement::Nu)
            .then(|| nu_fractions(&state));
        let left_layers = if config.measures(Measurement::LeftLayers) {
            Some(left_layer_fractions(&state, &config.spec)?)
        } else {
            None
        };
        records.push(Record {
            trial,
            balls,
            gap: state.gap(),
            max_load: state.max_load(),
            potentials,
            nu,
            left_layers,
        });
    }
    Ok(TrialResult { trial, records })
}

/// Mean gap across trials at each checkpoint.
pub fn mean_gap_by_checkpoint(results: &[TrialResult]) -> Vec<(u64, f64)> {
    let Some(first) = results.first() else {
        return Vec::new();
    };
    (0..first.records.len())
        .map(|c| {
            let total: f64 = results.iter().map(|t| t.records[c].gap).sum();
            (first.records[c].balls, total / results.len() as f64)
        })
        .collect()
}

/// All gaps recorded at `balls`, in trial order.
pub fn gaps_at(results: &[TrialResult], balls: u64) -> Vec<f64> {
    results
        .iter()
        .filter_map(|t| t.records.iter().find(|r| r.balls == balls).map(|r| r.gap))
        .collect()
}
