//! Monte Carlo runs, correlator estimates and separation sweeps.
//!
//! Work is split by trial index into fixed-size chunks. Each chunk yields
//! integer counts, and counts add associatively, so the result does not
//! depend on how many workers ran the chunks.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{Angle, Outcome};
use crate::models::{sample_trial, JointLaw, Model, ModelError};
use crate::stream::RandomStream;
use crate::trial::{Trial, TrialSet};

const CHUNK: u64 = 1 << 14;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("separation list is empty")]
    EmptySweep,
    #[error("separation {0} lies outside [0, π/2]")]
    SeparationOutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("could not start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Tallies of the four outcome pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointCounts {
    pub pp: u64,
    pub pm: u64,
    pub mp: u64,
    pub mm: u64,
}

impl JointCounts {
    pub fn record(&mut self, a: Outcome, b: Outcome) {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.mm += 1,
        }
    }

    pub fn from_trials<'a, I: IntoIterator<Item = &'a Trial>>(trials: I) -> Self {
        let mut c = JointCounts::default();
        for t in trials {
            c.record(t.outcome_a, t.outcome_b);
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// Counts in the same cell order as [`JointLaw::cells`].
    pub fn cells(&self) -> [u64; 4] {
        [self.pp, self.pm, self.mp, self.mm]
    }

    fn signed_mean(&self, plus: u64, minus: u64) -> f64 {
        (plus as f64 - minus as f64) / self.total() as f64
    }

    pub fn mean_a(&self) -> f64 {
        self.signed_mean(self.pp + self.pm, self.mp + self.mm)
    }

    pub fn mean_b(&self) -> f64 {
        self.signed_mean(self.pp + self.mp, self.pm + self.mm)
    }

    pub fn correlator(&self) -> CorrelatorEstimate {
        CorrelatorEstimate::from_mean(
            self.signed_mean(self.pp + self.mm, self.pm + self.mp),
            self.total(),
        )
    }
}

impl Add for JointCounts {
    type Output = JointCounts;

    fn add(self, o: JointCounts) -> JointCounts {
        JointCounts {
            pp: self.pp + o.pp,
            pm: self.pm + o.pm,
            mp: self.mp + o.mp,
            mm: self.mm + o.mm,
        }
    }
}

impl AddAssign for JointCounts {
    fn add_assign(&mut self, o: JointCounts) {
        *self = *self + o;
    }
}

/// Sample mean of a ±1 quantity with its standard error `sqrt((1 − mean²)/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl CorrelatorEstimate {
    pub fn from_mean(mean: f64, n: u64) -> Self {
        assert!(n > 0, "estimate over zero samples");
        CorrelatorEstimate {
            mean,
            stderr: ((1.0 - mean * mean).max(0.0) / n as f64).sqrt(),
            n,
        }
    }

    /// `(mean − exact)/stderr`. A zero standard error gives 0 when the mean
    /// matches within 1e-12 and ±∞ otherwise.
    pub fn z_score(&self, exact: f64) -> f64 {
        z_score(self.mean - exact, self.stderr)
    }
}

pub(crate) fn z_score(diff: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        diff / stderr
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// How a run is executed. None of these options change the numbers produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Keep every trial record, not just the counts.
    pub keep_trials: bool,
    pub record_hidden: bool,
    pub stream_id: u64,
}

impl RunOptions {
    pub fn counts_only() -> Self {
        RunOptions::default()
    }

    pub fn with_trials() -> Self {
        RunOptions {
            keep_trials: true,
            ..RunOptions::default()
        }
    }

    pub fn workers(self, workers: usize) -> Self {
        RunOptions {
            workers: Some(workers),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub mean_a: f64,
    pub mean_b: f64,
    pub correlator: CorrelatorEstimate,
    pub counts: JointCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<TrialSet>,
}

pub(crate) fn in_pool<T: Send>(
    workers: Option<usize>,
    job: impl FnOnce() -> T + Send,
) -> Result<T, StatsError> {
    match workers {
        None => Ok(job()),
        Some(w) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()?
            .install(job)),
    }
}

/// Runs `n` trials at fixed settings. Trials are kept.
pub fn run_experiment(
    model: &dyn Model,
    a: Angle,
    b: Angle,
    n: u64,
    seed: u64,
) -> Result<Experiment, StatsError> {
    run_experiment_with(model, a, b, n, seed, &RunOptions::with_trials())
}

pub fn run_experiment_with(
    model: &dyn Model,
    a: Angle,
    b: Angle,
    n: u64,
    seed: u64,
    opts: &RunOptions,
) -> Result<Experiment, StatsError> {
    run_settings(model, n, seed, opts, |_| (a, b))
}

/// Runs one trial per schedule entry; trial `i` uses `schedule[i]`.
pub fn run_schedule(
    model: &dyn Model,
    schedule: &[(Angle, Angle)],
    seed: u64,
    opts: &RunOptions,
) -> Result<Experiment, StatsError> {
    run_settings(model, schedule.len() as u64, seed, opts, |i| {
        schedule[i as usize]
    })
}

fn run_settings<F>(
    model: &dyn Model,
    n: u64,
    seed: u64,
    opts: &RunOptions,
    settings: F,
) -> Result<Experiment, StatsError>
where
    F: Fn(u64) -> (Angle, Angle) + Sync,
{
    if n == 0 {
        return Err(StatsError::ZeroTrials);
    }
    let stream = RandomStream::new(seed).with_stream(opts.stream_id);
    let trial = |i: u64| {
        let (a, b) = settings(i);
        sample_trial(model, i, a, b, &stream, opts.record_hidden)
    };
    let (counts, trials) = in_pool(opts.workers, || {
        if opts.keep_trials {
            let trials: Vec<Trial> = (0..n).into_par_iter().map(trial).collect();
            (JointCounts::from_trials(&trials), Some(trials))
        } else {
            let chunks = n.div_ceil(CHUNK);
            let counts = (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut acc = JointCounts::default();
                    for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                        let t = trial(i);
                        acc.record(t.outcome_a, t.outcome_b);
                    }
                    acc
                })
                .reduce(JointCounts::default, Add::add);
            (counts, None)
        }
    })?;
    Ok(Experiment {
        mean_a: counts.mean_a(),
        mean_b: counts.mean_b(),
        correlator: counts.correlator(),
        counts,
        trials: trials.map(|trials| TrialSet {
            model: model.id(),
            order: model.order(),
            trials,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub estimate: CorrelatorEstimate,
    /// `None` when the model has no exact law.
    pub exact: Option<f64>,
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn max_abs_z(&self) -> Option<f64> {
        self.points
            .iter()
            .filter_map(|p| p.z)
            .map(f64::abs)
            .reduce(f64::max)
    }
}

/// Runs `n` trials at `(0, Δ)` for each separation Δ. Point `k` uses stream `k`.
pub fn sweep(
    model: &dyn Model,
    separations: &[f64],
    n: u64,
    seed: u64,
) -> Result<SweepResult, StatsError> {
    sweep_with(model, separations, n, seed, None)
}

pub fn sweep_with(
    model: &dyn Model,
    separations: &[f64],
    n: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<SweepResult, StatsError> {
    if separations.is_empty() {
        return Err(StatsError::EmptySweep);
    }
    if let Some(&bad) = separations.iter().find(|d| !(0.0..=FRAC_PI_2).contains(*d)) {
        return Err(StatsError::SeparationOutOfRange(bad));
    }
    let mut points = Vec::with_capacity(separations.len());
    for (k, &delta) in separations.iter().enumerate() {
        let b = Angle::new(delta).expect("range checked");
        let opts = RunOptions {
            workers,
            stream_id: k as u64,
            ..RunOptions::counts_only()
        };
        let estimate = run_experiment_with(model, Angle::ZERO, b, n, seed, &opts)?.correlator;
        let exact = match model.exact_correlator(Angle::ZERO, b) {
            Ok(e) => Some(e),
            Err(ModelError::UnsupportedLaw(_)) => None,
            Err(e) => return Err(e.into()),
        };
        points.push(SweepPoint {
            delta,
            estimate,
            exact,
            z: exact.map(|e| estimate.z_score(e)),
        });
    }
    Ok(SweepResult {
        model: model.id(),
        points,
    })
}

/// Pearson's statistic of observed counts against an exact law. Cells with
/// zero expected probability contribute nothing if empty and ∞ otherwise.
pub fn chi_square(counts: &JointCounts, law: &JointLaw) -> f64 {
    let n = counts.total() as f64;
    counts
        .cells()
        .iter()
        .zip(law.cells())
        .map(|(&o, (_, _, p))| {
            let e = n * p;
            let o = o as f64;
            if e > 0.0 {
                (o - e).powi(2) / e
            } else if o == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum()
}

/// Pearson's statistic for two independent samples over the same four cells.
pub fn chi_square_two_sample(x: &JointCounts, y: &JointCounts) -> f64 {
    let (nx, ny) = (x.total() as f64, y.total() as f64);
    let (kx, ky) = ((ny / nx).sqrt(), (nx / ny).sqrt());
    x.cells()
        .iter()
        .zip(y.cells())
        .filter(|(&a, b)| a + b > 0)
        .map(|(&a, b)| (kx * a as f64 - ky * b as f64).powi(2) / (a + b) as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{QmModel, RetroModel};
    use std::f64::consts::FRAC_PI_8;

    #[test]
    fn perfect_correlation_has_zero_stderr() {
        let a = Angle::frac_pi(1, 5);
        let run = run_experiment(&QmModel, a, a, 5000, 1).unwrap();
        assert_eq!(run.correlator.mean, 1.0);
        assert_eq!(run.correlator.stderr, 0.0);
        assert_eq!(run.correlator.z_score(1.0), 0.0);
    }

    #[test]
    fn single_trial() {
        let run = run_experiment(
            &RetroModel::symmetric(),
            Angle::ZERO,
            Angle::frac_pi(1, 8),
            1,
            9,
        )
        .unwrap();
        assert!(run.correlator.mean == 1.0 || run.correlator.mean == -1.0);
        assert_eq!(run.correlator.stderr, 0.0);
        assert_eq!(run.trials.unwrap().len(), 1);
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(matches!(
            run_experiment(&QmModel, Angle::ZERO, Angle::ZERO, 0, 1),
            Err(StatsError::ZeroTrials)
        ));
        assert!(matches!(
            sweep(&QmModel, &[], 10, 1),
            Err(StatsError::EmptySweep)
        ));
        assert!(sweep(&QmModel, &[2.0], 10, 1).is_err());
    }

    #[test]
    fn stderr_formula() {
        let e = CorrelatorEstimate::from_mean(FRAC_PI_8.cos(), 1_000_000);
        let expected = ((1.0 - FRAC_PI_8.cos().powi(2)) / 1e6).sqrt();
        assert_eq!(e.stderr, expected);
        let half = CorrelatorEstimate::from_mean(0.5f64.sqrt(), 1_000_000);
        assert!((half.stderr - 7.071e-4).abs() < 1e-7);
    }

    #[test]
    fn counts_and_trials_agree() {
        let m = RetroModel::symmetric();
        let (a, b) = (Angle::ZERO, Angle::frac_pi(1, 8));
        let kept = run_experiment_with(&m, a, b, 40_000, 3, &RunOptions::with_trials()).unwrap();
        let bare = run_experiment_with(&m, a, b, 40_000, 3, &RunOptions::counts_only()).unwrap();
        assert_eq!(kept.counts, bare.counts);
        assert_eq!(kept.correlator, bare.correlator);
        assert!(kept.trials.unwrap().indices_unique());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = RetroModel::symmetric();
        let (a, b) = (Angle::ZERO, Angle::frac_pi(1, 8));
        let one = run_experiment_with(&m, a, b, 50_000, 8, &RunOptions::with_trials().workers(1))
            .unwrap();
        let four = run_experiment_with(&m, a, b, 50_000, 8, &RunOptions::with_trials().workers(4))
            .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn sweep_exact_column() {
        let deltas: Vec<f64> = (0..5).map(|k| k as f64 * FRAC_PI_8).collect();
        let r = sweep(&QmModel, &deltas, 2000, 4).unwrap();
        for (p, d) in r.points.iter().zip(&deltas) {
            assert!((p.exact.unwrap() - (2.0 * d).cos()).abs() < 1e-12);
        }
        assert_eq!(r.points[0].z, Some(0.0));
    }

    #[test]
    fn chi_square_of_exact_counts_is_zero() {
        let law = JointLaw::from_cells(0.25, 0.25, 0.25, 0.25).unwrap();
        let c = JointCounts {
            pp: 10,
            pm: 10,
            mp: 10,
            mm: 10,
        };
        assert_eq!(chi_square(&c, &law), 0.0);
        assert_eq!(chi_square_two_sample(&c, &c), 0.0);
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(z_score(0.0, 0.0), 0.0);
        assert_eq!(z_score(0.5, 0.0), f64::INFINITY);
        assert_eq!(z_score(-0.5, 0.0), f64::NEG_INFINITY);
        assert_eq!(z_score(0.5, 0.25), 2.0);
    }
}
