use serde::{Deserialize, Serialize};

use crate::angle::Angle;
use crate::angle::Outcome;
use crate::models::qm::{malus_draw, malus_mean, malus_prob};
use crate::models::{Atoms, Draw, JointLaw, Model, ModelError};
use crate::stream::TrialRng;
use crate::trial::{Hidden, SamplingOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetroVariant {
    /// λ ∈ {a, a+π/2, b, b+π/2}, each with weight ¼.
    Symmetric,
    /// λ ∈ {a, a+π/2}, each with weight ½; the left measurement happens first.
    AsymmetricLeftFirst,
}

fn left_first_law(a: Angle) -> Atoms {
    Atoms::uniform_over(&[a, a.perpendicular()]).expect("two equal weights")
}

/// The settings-dependent hidden-polarization law `ρ(λ|a,b)`.
///
/// ```
/// use bellsim::{models::{retro_lambda_law, RetroVariant}, Angle};
/// let law = retro_lambda_law(RetroVariant::Symmetric, Angle::ZERO, Angle::frac_pi(1, 8));
/// assert_eq!(law.len(), 4);
/// assert_eq!(law.weight_of(Angle::frac_pi(5, 8)), Some(0.25));
/// ```
pub fn retro_lambda_law(variant: RetroVariant, a: Angle, b: Angle) -> Atoms {
    match variant {
        RetroVariant::Symmetric => {
            Atoms::uniform_over(&[a, a.perpendicular(), b, b.perpendicular()])
                .expect("four equal weights")
        }
        RetroVariant::AsymmetricLeftFirst => left_first_law(a),
    }
}

/// The retro-causal toy model. λ is drawn after the settings are known and
/// both stations then answer by Malus' law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetroModel {
    variant: RetroVariant,
}

/// Moments of the outcomes conditional on one value of λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMoments {
    pub mean_a: f64,
    pub mean_b: f64,
    pub correlator: f64,
}

impl RetroModel {
    pub fn new(variant: RetroVariant) -> Self {
        RetroModel { variant }
    }

    pub fn symmetric() -> Self {
        RetroModel::new(RetroVariant::Symmetric)
    }

    pub fn asymmetric() -> Self {
        RetroModel::new(RetroVariant::AsymmetricLeftFirst)
    }

    pub fn variant(&self) -> RetroVariant {
        self.variant
    }

    pub fn lambda_law(&self, a: Angle, b: Angle) -> Atoms {
        retro_lambda_law(self.variant, a, b)
    }
}

fn branch_joint(lam: Angle, a: Angle, b: Angle) -> JointLaw {
    JointLaw::independent(
        malus_prob(Outcome::Plus, a, lam),
        malus_prob(Outcome::Plus, b, lam),
    )
}

impl Model for RetroModel {
    fn id(&self) -> String {
        match self.variant {
            RetroVariant::Symmetric => "retro".into(),
            RetroVariant::AsymmetricLeftFirst => "retro-seq".into(),
        }
    }

    fn order(&self) -> SamplingOrder {
        SamplingOrder::SettingsFirst
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let lam = self.lambda_law(a, b).sample(rng);
        let outcome_a = malus_draw(a, lam, rng);
        let outcome_b = malus_draw(b, lam, rng);
        Draw {
            outcome_a,
            outcome_b,
            hidden: Some(Hidden::Angle(lam)),
        }
    }

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        Ok(JointLaw::mixture(
            self.lambda_law(a, b)
                .iter()
                .map(|(lam, w)| (w, branch_joint(lam, a, b))),
        ))
    }
}

/// Conditional moments given `λ = branch`. The branch must be an atom of the
/// model's law at `(a, b)`.
pub fn branch_statistics(
    retro: &RetroModel,
    branch: Angle,
    a: Angle,
    b: Angle,
) -> Result<BranchMoments, ModelError> {
    if retro.lambda_law(a, b).weight_of(branch).is_none() {
        return Err(ModelError::NotAnAtom {
            branch: branch.radians(),
        });
    }
    let (mean_a, mean_b) = (malus_mean(a, branch), malus_mean(b, branch));
    // Outcomes are independent given λ.
    Ok(BranchMoments {
        mean_a,
        mean_b,
        correlator: mean_a * mean_b,
    })
}

/// The single-branch rule `λ = a` with probability one. It reproduces the
/// cosine correlator but the right marginal follows `a`, so it signals.
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleBranchModel;

impl Model for SingleBranchModel {
    fn id(&self) -> String {
        "retro-single".into()
    }

    fn order(&self) -> SamplingOrder {
        SamplingOrder::SettingsFirst
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let outcome_a = malus_draw(a, a, rng);
        let outcome_b = malus_draw(b, a, rng);
        Draw {
            outcome_a,
            outcome_b,
            hidden: Some(Hidden::Angle(a)),
        }
    }

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        Ok(branch_joint(a, a, b))
    }
}
