#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use bellsim::models::{
    Atoms, DeterministicLocalModel, DeterministicResponse, LambdaLaw, LocalCausalModel, Response,
};
use bellsim::{angular_distance, Angle, Outcome};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Independent oracle for the quantum correlator.
pub fn cos2(a: Angle, b: Angle) -> f64 {
    (2.0 * a.radians() - 2.0 * b.radians()).cos()
}

/// `{kπ/5}²`, 25 setting pairs.
pub fn grid25() -> Vec<(Angle, Angle)> {
    let pts: Vec<Angle> = (0..5)
        .map(|k| Angle::new(k as f64 * PI / 5.0).unwrap())
        .collect();
    pts.iter()
        .flat_map(|&a| pts.iter().map(move |&b| (a, b)))
        .collect()
}

pub fn random_angle(rng: &mut ChaCha8Rng) -> Angle {
    Angle::new(rng.random::<f64>() * PI).unwrap()
}

pub fn random_atoms(rng: &mut ChaCha8Rng, max_atoms: usize) -> Atoms {
    let k = rng.random_range(1..=max_atoms);
    let raw: Vec<(Angle, f64)> = (0..k)
        .map(|_| (random_angle(rng), rng.random_range(0.05..1.0)))
        .collect();
    let total: f64 = raw.iter().map(|r| r.1).sum();
    Atoms::new(raw.into_iter().map(|(x, w)| (x, w / total))).unwrap()
}

/// A shared deterministic response: `+1` on an arc of random width around a
/// random offset from the setting, optionally flipped.
pub fn random_rule(rng: &mut ChaCha8Rng) -> DeterministicResponse {
    if rng.random_bool(0.25) {
        return DeterministicResponse::Sign;
    }
    let shift = rng.random::<f64>() * PI;
    let width = rng.random::<f64>() * FRAC_PI_2;
    let flip = rng.random_bool(0.5);
    DeterministicResponse::Custom(Arc::new(move |x: Angle, lam: Angle| {
        let inside = angular_distance(x.rotated(shift), lam) < width;
        Outcome::from_bool(inside != flip)
    }))
}

pub fn random_deterministic_model(rng: &mut ChaCha8Rng) -> DeterministicLocalModel {
    let atoms = random_atoms(rng, 6);
    DeterministicLocalModel::new("random", LambdaLaw::Atoms(atoms), random_rule(rng))
}

pub fn random_response(rng: &mut ChaCha8Rng) -> Response {
    match rng.random_range(0..4) {
        0 => Response::Malus,
        1 => Response::Sign,
        _ => {
            let alpha = rng.random_range(-0.5..0.5);
            let beta = (0.5 - f64::abs(alpha)) * rng.random_range(-1.0..1.0);
            let (phi, psi) = (rng.random::<f64>() * PI, rng.random::<f64>() * PI);
            Response::Custom(Arc::new(move |x: Angle, lam: Angle| {
                let d = x.radians() - lam.radians();
                0.5 + alpha * (2.0 * d + phi).cos() + beta * (4.0 * d + psi).sin()
            }))
        }
    }
}

pub fn random_local_causal_model(rng: &mut ChaCha8Rng) -> LocalCausalModel {
    let atoms = random_atoms(rng, 6);
    LocalCausalModel::new(
        "random",
        LambdaLaw::Atoms(atoms),
        random_response(rng),
        random_response(rng),
    )
}
