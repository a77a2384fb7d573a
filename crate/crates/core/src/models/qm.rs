use rand::Rng;

use crate::angle::{Angle, Outcome};
use crate::models::{Draw, JointLaw, Model, ModelError};
use crate::stream::TrialRng;

/// Quantum correlator `⟨AB⟩ = cos(2a − 2b)` for the polarization-entangled pair.
pub fn qm_correlator(a: Angle, b: Angle) -> f64 {
    (2.0 * (a.radians() - b.radians())).cos()
}

/// The quantum joint law: zero marginals, correlator `cos(2a − 2b)`.
pub fn qm_joint(a: Angle, b: Angle) -> JointLaw {
    JointLaw::from_moments(0.0, 0.0, qm_correlator(a, b))
}

/// Malus' law: probability that a photon polarized along `lam` gives `outcome`
/// at a polarizer set to `setting`.
pub fn malus_prob(outcome: Outcome, setting: Angle, lam: Angle) -> f64 {
    let d = setting.radians() - lam.radians();
    match outcome {
        Outcome::Plus => d.cos().powi(2),
        Outcome::Minus => d.sin().powi(2),
    }
}

/// Conditional mean `⟨A⟩ = cos²(x − λ) − sin²(x − λ)` of a Malus station.
pub fn malus_mean(setting: Angle, lam: Angle) -> f64 {
    malus_prob(Outcome::Plus, setting, lam) - malus_prob(Outcome::Minus, setting, lam)
}

pub(crate) fn malus_draw(setting: Angle, lam: Angle, rng: &mut TrialRng) -> Outcome {
    Outcome::from_bool(rng.random::<f64>() < malus_prob(Outcome::Plus, setting, lam))
}

/// Samples outcome pairs straight from [`qm_joint`]; no hidden variable.
#[derive(Debug, Clone, Copy, Default)]
pub struct QmModel;

impl Model for QmModel {
    fn id(&self) -> String {
        "qm".into()
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let (outcome_a, outcome_b) = qm_joint(a, b).draw(rng.random());
        Draw {
            outcome_a,
            outcome_b,
            hidden: None,
        }
    }

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        Ok(qm_joint(a, b))
    }

    fn exact_correlator(&self, a: Angle, b: Angle) -> Result<f64, ModelError> {
        Ok(qm_correlator(a, b))
    }
}
