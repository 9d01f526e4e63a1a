//! Monte-Carlo metrics: per-step RMSE of the device position, the empirical
//! error CDF, and per-variant summaries.

use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::seed::{self, Purpose};
use crate::synthesis::{self, GroundTruth};
use crate::tracker::{self, FilterConfig, TrackOutput, Variant};
use crate::types::Vec2;

pub fn position_error(estimate: &Vec2, truth: &Vec2) -> f64 {
    (estimate - truth).norm()
}

/// `K` runs of one variant.
#[derive(Clone, Debug)]
pub struct RunBatch {
    pub variant: Variant,
    pub runs: Vec<(TrackOutput, GroundTruth)>,
}

impl RunBatch {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            runs: Vec::new(),
        }
    }

    pub fn steps(&self) -> Result<usize> {
        let (first, _) = self.runs.first().ok_or(Error::EmptyBatch)?;
        let n = first.steps.len();
        for (out, truth) in &self.runs {
            if out.steps.len() != n || truth.steps.len() != n {
                return Err(Error::DatasetMismatch(
                    "runs in a batch must share the step count".into(),
                ));
            }
        }
        Ok(n)
    }

    /// Device-position errors indexed `[run][step]`.
    pub fn errors(&self) -> Result<Vec<Vec<f64>>> {
        self.steps()?;
        Ok(self
            .runs
            .iter()
            .map(|(out, truth)| {
                out.steps
                    .iter()
                    .zip(&truth.steps)
                    .map(|(e, t)| position_error(&e.estimate.device, &t.device))
                    .collect()
            })
            .collect())
    }

    fn center_errors(&self) -> Result<Vec<Vec<f64>>> {
        self.steps()?;
        Ok(self
            .runs
            .iter()
            .map(|(out, truth)| {
                out.steps
                    .iter()
                    .zip(&truth.steps)
                    .map(|(e, t)| {
                        position_error(&e.estimate.state.kinematic.position, &t.kinematic.position)
                    })
                    .collect()
            })
            .collect())
    }
}

fn rmse_of(errors: &[Vec<f64>]) -> Vec<f64> {
    let k = errors.len() as f64;
    let n = errors.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| (errors.iter().map(|run| run[i] * run[i]).sum::<f64>() / k).sqrt())
        .collect()
}

/// Root of the mean squared device error across runs, per step.
pub fn rmse_per_step(batch: &RunBatch) -> Result<Vec<f64>> {
    Ok(rmse_of(&batch.errors()?))
}

/// Empirical CDF of all `(run, step)` device errors as sorted
/// `(error, fraction ≤ error)` pairs.
pub fn error_cdf(batch: &RunBatch) -> Result<Vec<(f64, f64)>> {
    let mut all: Vec<f64> = batch.errors()?.into_iter().flatten().collect();
    all.sort_by(f64::total_cmp);
    let n = all.len() as f64;
    Ok(all
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, (i + 1) as f64 / n))
        .collect())
}

/// Smallest error whose cumulative fraction reaches `p`.
pub fn cdf_quantile(cdf: &[(f64, f64)], p: f64) -> f64 {
    cdf.iter()
        .find(|(_, f)| *f >= p - 1e-12)
        .or(cdf.last())
        .map_or(f64::NAN, |(e, _)| *e)
}

/// Steps with the same number of blocked anchors, merged into windows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OlosWindow {
    pub first: usize,
    pub last: usize,
    pub blocked_anchors: usize,
}

pub fn olos_windows(scenario: &Scenario) -> Vec<OlosWindow> {
    let mut out: Vec<OlosWindow> = Vec::new();
    for n in 1..=scenario.steps {
        let blocked = scenario.blocked_count(n);
        if blocked == 0 {
            continue;
        }
        match out.last_mut() {
            Some(w) if w.last + 1 == n && w.blocked_anchors == blocked => w.last = n,
            _ => out.push(OlosWindow {
                first: n,
                last: n,
                blocked_anchors: blocked,
            }),
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub key: String,
    pub runs: usize,
    /// Mean over steps of the per-step RMSE.
    pub avg_rmse_m: f64,
    /// Same for the EO center.
    pub avg_center_rmse_m: f64,
    pub mean_step_seconds: f64,
    pub degeneracy_events: usize,
    pub rmse_per_step: Vec<f64>,
    pub cdf: Vec<(f64, f64)>,
    pub percentiles: Percentiles,
    pub olos_windows: Vec<OlosWindow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub variants: Vec<VariantSummary>,
    pub olos_windows: Vec<OlosWindow>,
}

impl Report {
    pub fn variant(&self, key: &str) -> Option<&VariantSummary> {
        self.variants.iter().find(|v| v.key == key)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn variant_rank(v: &Variant) -> usize {
    match v {
        Variant::ApEopdaGeo => 0,
        Variant::ApEopdaIdeal { .. } => 1,
        Variant::AEopda => 2,
        Variant::ApPda => 3,
    }
}

pub fn summarize_batch(batch: &RunBatch, olos: &[OlosWindow]) -> Result<VariantSummary> {
    let rmse = rmse_per_step(batch)?;
    let center = rmse_of(&batch.center_errors()?);
    let cdf = error_cdf(batch)?;
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let step_seconds: Vec<f64> = batch.runs.iter().map(|(o, _)| o.mean_step_seconds()).collect();
    Ok(VariantSummary {
        variant: batch.variant.label().to_string(),
        key: batch.variant.key().to_string(),
        runs: batch.runs.len(),
        avg_rmse_m: mean(&rmse),
        avg_center_rmse_m: mean(&center),
        mean_step_seconds: mean(&step_seconds),
        degeneracy_events: batch.runs.iter().map(|(o, _)| o.degeneracy_steps.len()).sum(),
        percentiles: Percentiles {
            p50: cdf_quantile(&cdf, 0.5),
            p90: cdf_quantile(&cdf, 0.9),
            p95: cdf_quantile(&cdf, 0.95),
        },
        rmse_per_step: rmse,
        cdf,
        olos_windows: olos.to_vec(),
    })
}

/// Summaries of every batch, ordered by variant.
pub fn summarize(batches: &[RunBatch], olos: &[OlosWindow]) -> Result<Report> {
    let mut sorted: Vec<&RunBatch> = batches.iter().collect();
    sorted.sort_by_key(|b| variant_rank(&b.variant));
    let variants = sorted
        .into_iter()
        .map(|b| summarize_batch(b, olos))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        variants,
        olos_windows: olos.to_vec(),
    })
}

/// Settings of a Monte-Carlo comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub variants: Vec<Variant>,
    pub particles: usize,
    pub runs: usize,
    pub seed: u64,
}

/// Simulates `runs` datasets and tracks each with every variant.
///
/// Run `k` uses the seed derived from `(seed, Run, k)` for both simulation
/// and tracking, so all variants see the same data. Runs execute in parallel
/// on the current rayon pool; each filter runs single-threaded inside its run.
pub fn run_comparison(scenario: &Scenario, cmp: &Comparison) -> Result<Vec<RunBatch>> {
    scenario.validate()?;
    if cmp.variants.is_empty() {
        return Err(Error::InvalidScenario("no variants selected".into()));
    }
    let per_run = (0..cmp.runs as u64)
        .into_par_iter()
        .map(|k| {
            let run_seed = seed::derive_seed(cmp.seed, Purpose::Run, k);
            let (truth, data) = synthesis::simulate(scenario, run_seed)?;
            cmp.variants
                .iter()
                .map(|&v| {
                    let mut config = FilterConfig::new(v, cmp.particles);
                    config.ess_threshold = scenario.tracker.ess_threshold;
                    config.parallel = false;
                    let out = tracker::run_filter(&data, scenario, &config, run_seed)?;
                    log::debug!("run {k} {v}: done");
                    Ok((out, truth.clone()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut batches: Vec<RunBatch> = cmp.variants.iter().map(|&v| RunBatch::new(v)).collect();
    for run in per_run {
        for (batch, item) in batches.iter_mut().zip(run) {
            batch.runs.push(item);
        }
    }
    Ok(batches)
}
