//! Multi-trial experiment harness.
//!
//! Trials are paired: trial i always uses seed `base_seed + i`, and each
//! run reseeds from scratch, so every momentum value sees exactly the
//! same ground truths and measurement streams. Summary statistics are
//! computed on a sorted copy of the per-trial values, which makes them
//! invariant to trial ordering down to the last bit.

use thiserror::Error;

use crate::solver::{run_seeded, SolverError, Trajectory};
use crate::sources::{SourceError, SourceKind, SourceSpec};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("momentum grid must be non-empty")]
    EmptyBetaGrid,
    #[error("momentum value {0} is outside [0, 1)")]
    BetaOutOfRange(f64),
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error("record stride must be at least 1")]
    ZeroRecordEvery,
    #[error("epsilon grid must be non-empty")]
    EmptyEpsilonGrid,
    #[error("epsilon value {0} is outside [0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("dimension set must be non-empty")]
    EmptyDimensionSet,
    #[error("requested error at step {error_at} but runs stop after {iters}")]
    ErrorAtBeyondHorizon { error_at: usize, iters: usize },
    #[error("error at step {t} was not recorded (stride {record_every}, consumed {consumed})")]
    ErrorAtNotRecorded { t: usize, record_every: usize, consumed: usize },
    #[error("cannot summarize an empty value set")]
    EmptyValues,
    #[error("percentile {0} is outside [0, 100]")]
    InvalidPercentile(f64),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A batch recipe: one source family, a momentum grid, and trial count.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: SourceKind,
    pub dim: usize,
    pub betas: Vec<f64>,
    pub trials: usize,
    pub iters: usize,
    pub base_seed: u64,
    /// Trajectory recording stride passed through to the runs.
    pub record_every: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.betas.is_empty() {
            return Err(ExperimentError::EmptyBetaGrid);
        }
        for &beta in &self.betas {
            if !beta.is_finite() || !(0.0..1.0).contains(&beta) {
                return Err(ExperimentError::BetaOutOfRange(beta));
            }
        }
        if self.trials == 0 {
            return Err(ExperimentError::ZeroTrials);
        }
        if self.iters == 0 {
            return Err(ExperimentError::ZeroIterations);
        }
        if self.record_every == 0 {
            return Err(ExperimentError::ZeroRecordEvery);
        }
        Ok(())
    }
}

/// All trial trajectories for one momentum value.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTrials {
    pub beta: f64,
    pub trajectories: Vec<Trajectory>,
}

/// Runs the full (beta x trial) grid. Trial i of every beta replays the
/// same seed, hence the same truth and stream.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<BetaTrials>, ExperimentError> {
    config.validate()?;
    let mut batches = Vec::with_capacity(config.betas.len());
    for &beta in &config.betas {
        let mut trajectories = Vec::with_capacity(config.trials);
        for trial in 0..config.trials {
            let seed = config.base_seed.wrapping_add(trial as u64);
            let spec = SourceSpec::new(config.kind.clone(), config.dim, seed)?;
            trajectories.push(run_seeded(&spec, beta, config.iters, config.record_every)?);
        }
        batches.push(BetaTrials { beta, trajectories });
    }
    Ok(batches)
}

/// Location summary of one value set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointStats {
    pub mean: f64,
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
}

/// Mean, median, and quartiles over a sorted copy of `values`.
pub fn summarize(values: &[f64]) -> Result<PointStats, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptyValues);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    Ok(PointStats {
        mean,
        median: percentile_sorted(&sorted, 50.0),
        p25: percentile_sorted(&sorted, 25.0),
        p75: percentile_sorted(&sorted, 75.0),
    })
}

/// The p-th percentile with linear interpolation between closest ranks:
/// rank = p/100 * (m - 1) over the sorted values.
pub fn percentile(values: &[f64], p: f64) -> Result<f64, ExperimentError> {
    if values.is_empty() {
        return Err(ExperimentError::EmptyValues);
    }
    if !p.is_finite() || !(0.0..=100.0).contains(&p) {
        return Err(ExperimentError::InvalidPercentile(p));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&sorted, p))
}

fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Per-point statistics along one sweep axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: Vec<f64>,
    pub stats: Vec<PointStats>,
    pub trials: usize,
    /// Index of the best point; which statistic defines "best" is up to
    /// the operation that built the sweep. Ties go to the first index.
    pub argmin_index: usize,
}

impl SweepResult {
    pub fn argmin_axis_value(&self) -> f64 {
        self.axis[self.argmin_index]
    }

    pub fn argmin_stats(&self) -> &PointStats {
        &self.stats[self.argmin_index]
    }
}

fn argmin_by<F: Fn(&PointStats) -> f64>(stats: &[PointStats], key: F) -> usize {
    let mut best = 0;
    for (i, s) in stats.iter().enumerate().skip(1) {
        if key(s) < key(&stats[best]) {
            best = i;
        }
    }
    best
}

/// Error-versus-momentum sweep: for each beta in the config grid, the
/// distribution of |x_t - x*| at step `error_at` over paired trials.
/// The argmin is taken over the median.
pub fn sweep_beta(config: &ExperimentConfig, error_at: usize) -> Result<SweepResult, ExperimentError> {
    if error_at > config.iters {
        return Err(ExperimentError::ErrorAtBeyondHorizon { error_at, iters: config.iters });
    }
    let batches = run_trials(config)?;
    let mut stats = Vec::with_capacity(batches.len());
    for batch in &batches {
        let mut values = Vec::with_capacity(batch.trajectories.len());
        for traj in &batch.trajectories {
            let value = traj.error_at_step(error_at).ok_or(
                ExperimentError::ErrorAtNotRecorded {
                    t: error_at,
                    record_every: traj.record_every,
                    consumed: traj.consumed,
                },
            )?;
            values.push(value);
        }
        stats.push(summarize(&values)?);
    }
    let argmin_index = argmin_by(&stats, |s| s.median);
    Ok(SweepResult {
        axis: config.betas.to_vec(),
        stats,
        trials: config.trials,
        argmin_index,
    })
}

/// log10 of an error, clamped away from zero so that exact recoveries
/// stay finite.
pub fn log10_error(error: f64) -> f64 {
    error.max(f64::MIN_POSITIVE).log10()
}

/// One momentum value's results across the coherence axis.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSweep {
    pub beta: f64,
    /// Axis is the epsilon grid; stats summarize log10 final error.
    /// The argmin is taken over the mean.
    pub result: SweepResult,
}

/// Coherence sweep: measurement entries are drawn U[eps, 1), so larger
/// eps means more aligned (coherent) directions. Reports log10 final
/// error per (beta, eps) over paired trials.
pub fn sweep_epsilon(
    eps_grid: &[f64],
    betas: &[f64],
    dim: usize,
    iters: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<EpsilonSweep>, ExperimentError> {
    if eps_grid.is_empty() {
        return Err(ExperimentError::EmptyEpsilonGrid);
    }
    for &eps in eps_grid {
        if !eps.is_finite() || !(0.0..1.0).contains(&eps) {
            return Err(ExperimentError::EpsilonOutOfRange(eps));
        }
    }
    // values[b][e]: per-trial log10 final errors.
    let mut values: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); eps_grid.len()]; betas.len()];
    for (e, &eps) in eps_grid.iter().enumerate() {
        let config = ExperimentConfig {
            kind: SourceKind::Uniform { lo: eps, hi: 1.0 },
            dim,
            betas: betas.to_vec(),
            trials,
            iters,
            base_seed,
            record_every: iters,
        };
        let batches = run_trials(&config)?;
        for (b, batch) in batches.iter().enumerate() {
            values[b][e] = batch
                .trajectories
                .iter()
                .map(|t| log10_error(t.final_error()))
                .collect();
        }
    }
    let mut sweeps = Vec::with_capacity(betas.len());
    for (b, &beta) in betas.iter().enumerate() {
        let stats = values[b]
            .iter()
            .map(|v| summarize(v))
            .collect::<Result<Vec<_>, _>>()?;
        let argmin_index = argmin_by(&stats, |s| s.mean);
        sweeps.push(EpsilonSweep {
            beta,
            result: SweepResult {
                axis: eps_grid.to_vec(),
                stats,
                trials,
                argmin_index,
            },
        });
    }
    Ok(sweeps)
}

/// One signal dimension's results across the momentum axis.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSweep {
    pub dim: usize,
    /// Axis is the momentum grid; stats summarize log10 final error.
    /// The argmin is taken over the mean.
    pub result: SweepResult,
}

/// Signal-length sweep: the same source family and momentum grid at each
/// dimension in `dims`, reporting log10 final error per (dim, beta).
pub fn sweep_length(
    dims: &[usize],
    betas: &[f64],
    kind: SourceKind,
    iters: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<LengthSweep>, ExperimentError> {
    if dims.is_empty() {
        return Err(ExperimentError::EmptyDimensionSet);
    }
    let mut sweeps = Vec::with_capacity(dims.len());
    for &dim in dims {
        let config = ExperimentConfig {
            kind: kind.clone(),
            dim,
            betas: betas.to_vec(),
            trials,
            iters,
            base_seed,
            record_every: iters,
        };
        let batches = run_trials(&config)?;
        let stats = batches
            .iter()
            .map(|batch| {
                let values: Vec<f64> = batch
                    .trajectories
                    .iter()
                    .map(|t| log10_error(t.final_error()))
                    .collect();
                summarize(&values)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let argmin_index = argmin_by(&stats, |s| s.mean);
        sweeps.push(LengthSweep {
            dim,
            result: SweepResult {
                axis: betas.to_vec(),
                stats,
                trials,
                argmin_index,
            },
        });
    }
    Ok(sweeps)
}
