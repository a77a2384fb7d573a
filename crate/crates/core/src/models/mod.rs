//! The model families: quantum statistics, locally causal models, Bell's
//! non-local toy model, the retro-causal toy model and its non-local rewrite.

use std::sync::Arc;

use thiserror::Error;

use crate::angle::{Angle, Outcome};
use crate::stream::{RandomStream, TrialRng};
use crate::trial::{Hidden, SamplingOrder, Trial};

mod law;
mod local;
mod nonlocal;
mod qm;
mod retro;
mod toy;

pub use law::{AngleSampler, Atoms, JointLaw, LambdaLaw, PROBABILITY_TOLERANCE};
pub use local::{
    DeterministicLocalModel, DeterministicResponse, DeterministicRule, LocalCausalModel,
    PlusProbability, Response,
};
pub use nonlocal::{branch_angle, nonlocalize, NonlocalModel, BRANCHES};
pub(crate) use qm::malus_draw;
pub use qm::{malus_mean, malus_prob, qm_correlator, qm_joint, QmModel};
pub use retro::{
    branch_statistics, retro_lambda_law, BranchMoments, RetroModel, RetroVariant, SingleBranchModel,
};
pub use toy::{bell_toy_aprime, BellToyModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("exact evaluation unsupported: {0}")]
    UnsupportedLaw(&'static str),
    #[error("invalid probability law: {0}")]
    InvalidLaw(String),
    #[error("λ = {branch} is not an atom of the model's law at these settings")]
    NotAnAtom { branch: f64 },
    #[error("expected the {expected:?} variant, got {found:?}")]
    VariantMismatch {
        expected: RetroVariant,
        found: RetroVariant,
    },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
}

/// Outcomes of one activation, plus whatever hidden value produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub hidden: Option<Hidden>,
}

/// A sampler together with its exact outcome law.
pub trait Model: Send + Sync {
    fn id(&self) -> String;

    fn order(&self) -> SamplingOrder {
        SamplingOrder::SourceFirst
    }

    /// One activation at settings `(a, b)`, using only `rng` for randomness.
    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw;

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError>;

    fn exact_correlator(&self, a: Angle, b: Angle) -> Result<f64, ModelError> {
        Ok(self.exact_joint(a, b)?.correlator())
    }
}

/// Runs trial `index` on its own substream of `stream`.
pub fn sample_trial(
    model: &dyn Model,
    index: u64,
    a: Angle,
    b: Angle,
    stream: &RandomStream,
    record_hidden: bool,
) -> Trial {
    let draw = model.sample(a, b, &mut stream.substream(index));
    Trial {
        index,
        a,
        b,
        outcome_a: draw.outcome_a,
        outcome_b: draw.outcome_b,
        hidden: if record_hidden { draw.hidden } else { None },
    }
}

/// Identifiers accepted by [`by_id`].
pub const MODEL_IDS: [&str; 8] = [
    "qm",
    "bell-toy",
    "retro",
    "retro-seq",
    "retro-single",
    "nonlocal",
    "local:malus",
    "local:sign",
];

/// Looks up a built-in model.
///
/// ```
/// let m = bellsim::models::by_id("retro").unwrap();
/// assert_eq!(m.id(), "retro");
/// assert!(bellsim::models::by_id("bohm").is_err());
/// ```
pub fn by_id(id: &str) -> Result<Arc<dyn Model>, ModelError> {
    Ok(match id {
        "qm" => Arc::new(QmModel),
        "bell-toy" => Arc::new(BellToyModel),
        "retro" => Arc::new(RetroModel::symmetric()),
        "retro-seq" => Arc::new(RetroModel::asymmetric()),
        "retro-single" => Arc::new(SingleBranchModel),
        "nonlocal" => Arc::new(NonlocalModel),
        "local:malus" => Arc::new(LocalCausalModel::malus_uniform()),
        "local:sign" => Arc::new(DeterministicLocalModel::sign_uniform()),
        other => return Err(ModelError::UnknownModel(other.to_owned())),
    })
}

/// The four models whose statistics match the quantum prediction.
pub fn qm_reproducing() -> Vec<Arc<dyn Model>> {
    ["qm", "bell-toy", "retro", "retro-seq"]
        .into_iter()
        .map(|id| by_id(id).expect("built-in"))
        .collect()
}
