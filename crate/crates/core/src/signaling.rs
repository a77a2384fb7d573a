//! No-signaling checks on outcome marginals, and what an observable λ would leak.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::Angle;
use crate::models::{Atoms, Model, ModelError, RetroModel, RetroVariant};
use crate::statistics::{run_experiment_with, z_score, RunOptions, StatsError};

/// Smallest per-point sample size accepted by [`nosignal_scan`].
pub const MIN_SCAN_TRIALS: u64 = 1000;

/// Tolerance of the exact checks in [`sequential_consistency`].
pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SignalingError {
    #[error("scan needs at least {MIN_SCAN_TRIALS} trials per point, got {0}")]
    TooFewTrials(u64),
    #[error("scan list is empty")]
    EmptyScan,
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// The station whose setting is held fixed and whose marginal is watched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedSide {
    pub side: Side,
    pub setting: Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalPoint {
    /// The other station's setting.
    pub setting: Angle,
    pub mean: f64,
    pub stderr: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalScan {
    pub model: String,
    pub fixed: FixedSide,
    pub n: u64,
    /// Marginal pooled over the whole scan.
    pub pooled_mean: f64,
    pub points: Vec<MarginalPoint>,
    pub max_abs_z: f64,
}

/// Estimates the fixed side's marginal at each scanned setting of the other
/// side. Point `k` runs on stream `k`.
///
/// Each point is compared with the marginal pooled over the scan. Under the
/// hypothesis that the marginal ignores the remote setting, the difference
/// has variance `(1 − m²)(1/n − 1/N)` for `N` trials in total.
pub fn nosignal_scan(
    model: &dyn Model,
    fixed: FixedSide,
    scan: &[Angle],
    n: u64,
    seed: u64,
) -> Result<MarginalScan, SignalingError> {
    nosignal_scan_with(model, fixed, scan, n, seed, None)
}

pub fn nosignal_scan_with(
    model: &dyn Model,
    fixed: FixedSide,
    scan: &[Angle],
    n: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<MarginalScan, SignalingError> {
    if n < MIN_SCAN_TRIALS {
        return Err(SignalingError::TooFewTrials(n));
    }
    if scan.is_empty() {
        return Err(SignalingError::EmptyScan);
    }
    let mut means = Vec::with_capacity(scan.len());
    for (k, &other) in scan.iter().enumerate() {
        let (a, b) = match fixed.side {
            Side::Left => (fixed.setting, other),
            Side::Right => (other, fixed.setting),
        };
        let opts = RunOptions {
            workers,
            stream_id: k as u64,
            ..RunOptions::counts_only()
        };
        let run = run_experiment_with(model, a, b, n, seed, &opts)?;
        means.push(match fixed.side {
            Side::Left => run.mean_a,
            Side::Right => run.mean_b,
        });
    }
    let pooled_mean = means.iter().sum::<f64>() / means.len() as f64;
    let total = n as f64 * means.len() as f64;
    let null_sd =
        ((1.0 - pooled_mean * pooled_mean).max(0.0) * (1.0 / n as f64 - 1.0 / total)).sqrt();
    let points: Vec<MarginalPoint> = scan
        .iter()
        .zip(&means)
        .map(|(&setting, &mean)| MarginalPoint {
            setting,
            mean,
            stderr: ((1.0 - mean * mean).max(0.0) / n as f64).sqrt(),
            z: z_score(mean - pooled_mean, null_sd),
        })
        .collect();
    let max_abs_z = points.iter().map(|p| p.z.abs()).fold(0.0, f64::max);
    Ok(MarginalScan {
        model: model.id(),
        fixed,
        n,
        pooled_mean,
        points,
        max_abs_z,
    })
}

/// Best advantage over ½ at guessing whether the left setting was `a0` or `a1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakReport {
    /// The guesser reads the λ of one pair.
    pub with_lambda: f64,
    /// The guesser reads only the right outcome of one pair.
    pub with_b_only: f64,
}

fn atoms_total_variation(p: &Atoms, q: &Atoms) -> f64 {
    let only_p: f64 = p
        .iter()
        .map(|(x, w)| (w - q.weight_of(x).unwrap_or(0.0)).abs())
        .sum();
    let only_q: f64 = q
        .iter()
        .filter(|&(x, _)| p.weight_of(x).is_none())
        .map(|(_, w)| w)
        .sum();
    0.5 * (only_p + only_q)
}

/// Exact distinguishing advantage between two left settings, equiprobable a priori.
///
/// The optimal guesser picks the likelier setting for each observation, so
/// the advantage is half the total variation distance between the two laws.
pub fn lambda_leak(
    retro: &RetroModel,
    a0: Angle,
    a1: Angle,
    b: Angle,
) -> Result<LeakReport, SignalingError> {
    let with_lambda =
        0.5 * atoms_total_variation(&retro.lambda_law(a0, b), &retro.lambda_law(a1, b));
    let b_plus =
        |a| -> Result<f64, ModelError> { Ok((1.0 + retro.exact_joint(a, b)?.mean_b()) / 2.0) };
    let with_b_only = 0.5 * (b_plus(a0)? - b_plus(a1)?).abs();
    Ok(LeakReport {
        with_lambda,
        with_b_only,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub points: usize,
    /// λ law at `(a, b)` equals the one at `(a, b′)` for every probed pair.
    pub lambda_law_ignores_b: bool,
    pub max_mean_a: f64,
    pub max_mean_b: f64,
    pub max_correlator_error: f64,
    pub passed: bool,
}

/// Exact checks of the left-first variant on the 5×5 grid `{kπ/5}²`.
pub fn sequential_consistency(retro: &RetroModel) -> Result<ConsistencyReport, SignalingError> {
    if retro.variant() != RetroVariant::AsymmetricLeftFirst {
        return Err(ModelError::VariantMismatch {
            expected: RetroVariant::AsymmetricLeftFirst,
            found: retro.variant(),
        }
        .into());
    }
    let grid: Vec<Angle> = (0..5).map(|k| Angle::frac_pi(k, 5)).collect();
    let mut report = ConsistencyReport {
        points: 0,
        lambda_law_ignores_b: true,
        max_mean_a: 0.0,
        max_mean_b: 0.0,
        max_correlator_error: 0.0,
        passed: false,
    };
    for &a in &grid {
        for &b in &grid {
            let law = retro.lambda_law(a, b);
            report.lambda_law_ignores_b &= grid
                .iter()
                .all(|&b2| law.same_law(&retro.lambda_law(a, b2)));
            let joint = retro.exact_joint(a, b)?;
            let cos = (2.0 * (a.radians() - b.radians())).cos();
            report.max_mean_a = report.max_mean_a.max(joint.mean_a().abs());
            report.max_mean_b = report.max_mean_b.max(joint.mean_b().abs());
            report.max_correlator_error = report
                .max_correlator_error
                .max((joint.correlator() - cos).abs());
            report.points += 1;
        }
    }
    report.passed = report.lambda_law_ignores_b
        && report.max_mean_a <= EXACT_TOLERANCE
        && report.max_mean_b <= EXACT_TOLERANCE
        && report.max_correlator_error <= EXACT_TOLERANCE;
    Ok(report)
}
