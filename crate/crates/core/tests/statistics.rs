mod common;

use bellsim::models::RetroVariant;
use bellsim::models::{by_id, qm_joint, qm_reproducing, MODEL_IDS};
use bellsim::statistics::{
    chi_square, chi_square_two_sample, run_experiment_with, sweep, RunOptions,
};
use bellsim::wire::{run_wire_experiment, NullSink, SourceLaw, StationLaw, WireConfig, Wiring};
use bellsim::Angle;
use common::{cos2, grid25};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const N: u64 = 1_000_000;

fn q999() -> f64 {
    ChiSquared::new(3.0).unwrap().inverse_cdf(0.999)
}

#[test]
fn qm_sampler_frequencies_fit_the_joint_law() {
    let q = q999();
    let qm = by_id("qm").unwrap();
    for (k, (a, b)) in grid25().into_iter().enumerate() {
        let run = run_experiment_with(
            qm.as_ref(),
            a,
            b,
            N,
            40 + k as u64,
            &RunOptions::counts_only(),
        )
        .unwrap();
        let chi2 = chi_square(&run.counts, &qm_joint(a, b));
        assert!(chi2 < q, "χ² = {chi2} at ({a}, {b})");
    }
}

#[test]
fn marginals_vanish_within_five_over_root_n() {
    let bound = 5.0 / (N as f64).sqrt();
    let pairs = [
        (Angle::ZERO, Angle::frac_pi(1, 8)),
        (Angle::frac_pi(1, 5), Angle::frac_pi(4, 5)),
    ];
    for m in qm_reproducing() {
        for (k, &(a, b)) in pairs.iter().enumerate() {
            let run = run_experiment_with(
                m.as_ref(),
                a,
                b,
                N,
                70 + k as u64,
                &RunOptions::counts_only(),
            )
            .unwrap();
            assert!(run.mean_a.abs() < bound, "{} ⟨A⟩ = {}", m.id(), run.mean_a);
            assert!(run.mean_b.abs() < bound, "{} ⟨B⟩ = {}", m.id(), run.mean_b);
        }
    }
}

#[test]
fn every_sampler_matches_its_exact_correlator() {
    let (a, b) = (Angle::ZERO, Angle::frac_pi(1, 8));
    for id in MODEL_IDS {
        let m = by_id(id).unwrap();
        let exact = m.exact_correlator(a, b).unwrap();
        let run = run_experiment_with(m.as_ref(), a, b, N, 90, &RunOptions::counts_only()).unwrap();
        let z = run.correlator.z_score(exact);
        assert!(
            z.abs() < 5.0,
            "{id}: mean {} vs exact {exact}, z = {z}",
            run.correlator.mean
        );
    }
}

#[test]
fn retro_estimate_at_eighth_turn() {
    let m = by_id("retro").unwrap();
    let run = run_experiment_with(
        m.as_ref(),
        Angle::ZERO,
        Angle::frac_pi(1, 8),
        N,
        5,
        &RunOptions::counts_only(),
    )
    .unwrap();
    assert!((run.correlator.stderr - 7.07e-4).abs() < 1e-5);
    assert!((run.correlator.mean - std::f64::consts::FRAC_1_SQRT_2).abs() < 5.0 * 7.07e-4);
}

#[test]
fn sweep_exact_column_and_aligned_point() {
    let deltas: Vec<f64> = (0..5)
        .map(|k| k as f64 * std::f64::consts::FRAC_PI_8)
        .collect();
    let r = sweep(by_id("bell-toy").unwrap().as_ref(), &deltas, 20_000, 3).unwrap();
    for p in &r.points {
        let oracle = cos2(Angle::ZERO, Angle::new(p.delta).unwrap());
        assert!((p.exact.unwrap() - oracle).abs() < 1e-12);
    }
    assert_eq!(r.points[0].z, Some(0.0));
}

#[test]
fn retro_wire_and_in_process_share_a_law() {
    let (a, b) = (Angle::frac_pi(1, 5), Angle::frac_pi(3, 5));
    let n = 100_000;
    let cfg = WireConfig {
        wiring: Wiring::Retro,
        source: SourceLaw::Retro(RetroVariant::Symmetric),
        station: StationLaw::Malus,
        schedule: vec![(a, b); n],
        seed: 8,
        record_hidden: false,
    };
    let wire = run_wire_experiment(&cfg, &mut NullSink).unwrap();
    let wire_counts = bellsim::statistics::JointCounts::from_trials(&wire);
    let local = run_experiment_with(
        by_id("retro").unwrap().as_ref(),
        a,
        b,
        n as u64,
        8,
        &RunOptions::counts_only(),
    )
    .unwrap();
    let chi2 = chi_square_two_sample(&wire_counts, &local.counts);
    assert!(chi2 < q999(), "χ² = {chi2}");
}
