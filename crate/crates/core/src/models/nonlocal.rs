use rand::Rng;

use crate::angle::{Angle, Outcome};
use crate::models::qm::{malus_draw, malus_prob};
use crate::models::retro::{RetroModel, RetroVariant};
use crate::models::{Draw, JointLaw, Model, ModelError};
use crate::stream::TrialRng;
use crate::trial::Hidden;

pub const BRANCHES: [u8; 4] = [1, 2, 3, 4];

/// `λ′(n, a, b)`: branch `n` picks one of `a, a+π/2, b, b+π/2`.
pub fn branch_angle(n: u8, a: Angle, b: Angle) -> Result<Angle, ModelError> {
    match n {
        1 => Ok(a),
        2 => Ok(a.perpendicular()),
        3 => Ok(b),
        4 => Ok(b.perpendicular()),
        _ => Err(ModelError::InvalidLaw(format!("branch {n} outside 1..=4"))),
    }
}

/// The symmetric retro model rewritten with a settings-independent integer
/// `n`; both stations evaluate `λ′(n, a, b)` at measurement time, so each one
/// reads the remote setting.
#[derive(Debug, Clone, Copy, Default)]
pub struct NonlocalModel;

/// Trades the retro model's settings-dependent λ for a uniform branch label.
pub fn nonlocalize(retro: &RetroModel) -> Result<NonlocalModel, ModelError> {
    match retro.variant() {
        RetroVariant::Symmetric => Ok(NonlocalModel),
        RetroVariant::AsymmetricLeftFirst => Err(ModelError::VariantMismatch {
            expected: RetroVariant::Symmetric,
            found: RetroVariant::AsymmetricLeftFirst,
        }),
    }
}

impl Model for NonlocalModel {
    fn id(&self) -> String {
        "nonlocal".into()
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let n = rng.random_range(1..=4u8);
        let lam = branch_angle(n, a, b).expect("n drawn from 1..=4");
        let outcome_a = malus_draw(a, lam, rng);
        let outcome_b = malus_draw(b, lam, rng);
        Draw {
            outcome_a,
            outcome_b,
            hidden: Some(Hidden::Branch(n)),
        }
    }

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        let mut parts = Vec::with_capacity(BRANCHES.len());
        for n in BRANCHES {
            let lam = branch_angle(n, a, b)?;
            parts.push((
                0.25,
                JointLaw::independent(
                    malus_prob(Outcome::Plus, a, lam),
                    malus_prob(Outcome::Plus, b, lam),
                ),
            ));
        }
        Ok(JointLaw::mixture(parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::qm::qm_joint;

    #[test]
    fn branch_two_is_perpendicular_to_a() {
        let lam = branch_angle(2, Angle::ZERO, Angle::frac_pi(1, 8)).unwrap();
        assert!(lam.approx_eq(Angle::frac_pi(1, 2)));
        assert!(branch_angle(0, Angle::ZERO, Angle::ZERO).is_err());
    }

    #[test]
    fn joint_law_matches_retro_and_qm() {
        let retro = RetroModel::symmetric();
        let nl = nonlocalize(&retro).unwrap();
        let (a, b) = (Angle::ZERO, Angle::frac_pi(1, 8));
        let x = nl.exact_joint(a, b).unwrap();
        assert!(x.total_variation(&retro.exact_joint(a, b).unwrap()) < 1e-12);
        assert!(x.total_variation(&qm_joint(a, b)) < 1e-12);
    }

    #[test]
    fn equal_settings_are_perfectly_correlated() {
        let a = Angle::frac_pi(2, 7);
        let law = NonlocalModel.exact_joint(a, a).unwrap();
        assert!(law.prob(Outcome::Plus, Outcome::Minus).abs() < 1e-12);
        assert!(law.prob(Outcome::Minus, Outcome::Plus).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_variant_rejected() {
        assert!(nonlocalize(&RetroModel::asymmetric()).is_err());
    }
}
