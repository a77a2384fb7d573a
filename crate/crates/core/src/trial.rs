//! Records of individual runs of the two-station experiment.

use serde::{Deserialize, Serialize};

use crate::angle::{Angle, Outcome};

/// Diagnostic copy of the hidden variable a model drew for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hidden {
    /// A polarization angle λ.
    Angle(Angle),
    /// A settings-independent branch label n ∈ {1, 2, 3, 4}.
    Branch(u8),
}

/// In what order a simulator resolved the trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingOrder {
    /// The source state is drawn before (and independently of) the settings.
    SourceFirst,
    /// The settings are read before the source state is drawn. Used by the
    /// retro-causal models, where the simulation order deliberately runs
    /// against emission order.
    SettingsFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: u64,
    pub a: Angle,
    pub b: Angle,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Hidden>,
}

impl Trial {
    pub fn product(&self) -> i8 {
        self.outcome_a.value() * self.outcome_b.value()
    }
}

/// Trials from one run, ordered by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub model: String,
    pub order: SamplingOrder,
    pub trials: Vec<Trial>,
}

impl TrialSet {
    pub fn new(model: impl Into<String>, order: SamplingOrder) -> Self {
        TrialSet {
            model: model.into(),
            order,
            trials: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Trial> {
        self.trials.iter()
    }

    /// True when indices are strictly increasing, hence unique.
    pub fn indices_unique(&self) -> bool {
        self.trials.windows(2).all(|w| w[0].index < w[1].index)
    }
}

impl<'a> IntoIterator for &'a TrialSet {
    type Item = &'a Trial;
    type IntoIter = std::slice::Iter<'a, Trial>;

    fn into_iter(self) -> Self::IntoIter {
        self.trials.iter()
    }
}
