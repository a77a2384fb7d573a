//! Locally causal models: the hidden variable is drawn from a settings-independent
//! law, and each station's outcome law reads only its own setting and λ.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::angle::{angular_distance, polarizer_sign, Angle, Outcome};
use crate::models::qm::malus_prob;
use crate::models::{Atoms, Draw, JointLaw, LambdaLaw, Model, ModelError};
use crate::stream::TrialRng;
use crate::trial::Hidden;

pub type PlusProbability = Arc<dyn Fn(Angle, Angle) -> f64 + Send + Sync>;
pub type DeterministicRule = Arc<dyn Fn(Angle, Angle) -> Outcome + Send + Sync>;

/// How one station turns `(own setting, λ)` into a probability of `+1`.
#[derive(Clone)]
pub enum Response {
    /// `cos²(x − λ)`.
    Malus,
    /// Deterministic [`polarizer_sign`].
    Sign,
    Custom(PlusProbability),
}

impl Response {
    pub fn prob_plus(&self, setting: Angle, lam: Angle) -> f64 {
        match self {
            Response::Malus => malus_prob(Outcome::Plus, setting, lam),
            Response::Sign => match polarizer_sign(setting, lam) {
                Outcome::Plus => 1.0,
                Outcome::Minus => 0.0,
            },
            Response::Custom(f) => f(setting, lam),
        }
    }

    fn draw(&self, setting: Angle, lam: Angle, rng: &mut TrialRng) -> Outcome {
        match self {
            Response::Sign => polarizer_sign(setting, lam),
            _ => Outcome::from_bool(rng.random::<f64>() < self.prob_plus(setting, lam)),
        }
    }
}

impl fmt::Debug for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Malus => f.write_str("Malus"),
            Response::Sign => f.write_str("Sign"),
            Response::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// `⟨A(x,λ) B(y,λ)⟩` for λ uniform on `[0, π)`, where it has a closed form.
fn uniform_pair_correlator(
    left: &Response,
    x: Angle,
    right: &Response,
    y: Angle,
) -> Result<f64, ModelError> {
    let c = (2.0 * (x.radians() - y.radians())).cos();
    match (left, right) {
        (Response::Malus, Response::Malus) => Ok(0.5 * c),
        // Overlap of two transmitting arcs of width π/2.
        (Response::Sign, Response::Sign) => Ok(1.0 - angular_distance(x, y) / FRAC_PI_4),
        (Response::Sign, Response::Malus) | (Response::Malus, Response::Sign) => Ok(FRAC_2_PI * c),
        _ => Err(ModelError::UnsupportedLaw(
            "uniform λ with a custom response has no closed form",
        )),
    }
}

/// Stochastic local hidden-variable model.
#[derive(Clone, Debug)]
pub struct LocalCausalModel {
    id: String,
    law: LambdaLaw,
    left: Response,
    right: Response,
}

impl LocalCausalModel {
    pub fn new(id: impl Into<String>, law: LambdaLaw, left: Response, right: Response) -> Self {
        LocalCausalModel {
            id: id.into(),
            law,
            left,
            right,
        }
    }

    /// Uniformly polarized pairs measured with Malus' law on both sides.
    pub fn malus_uniform() -> Self {
        LocalCausalModel::new(
            "local:malus",
            LambdaLaw::Uniform,
            Response::Malus,
            Response::Malus,
        )
    }

    pub fn law(&self) -> &LambdaLaw {
        &self.law
    }

    /// `P(A = outcome | a, λ)`. Takes no right-hand setting.
    pub fn left_prob(&self, outcome: Outcome, a: Angle, lam: Angle) -> f64 {
        side_prob(&self.left, outcome, a, lam)
    }

    /// `P(B = outcome | b, λ)`. Takes no left-hand setting.
    pub fn right_prob(&self, outcome: Outcome, b: Angle, lam: Angle) -> f64 {
        side_prob(&self.right, outcome, b, lam)
    }
}

fn side_prob(response: &Response, outcome: Outcome, setting: Angle, lam: Angle) -> f64 {
    let p = response.prob_plus(setting, lam);
    match outcome {
        Outcome::Plus => p,
        Outcome::Minus => 1.0 - p,
    }
}

impl Model for LocalCausalModel {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let lam = self.law.sample(rng);
        let outcome_a = self.left.draw(a, lam, rng);
        let outcome_b = self.right.draw(b, lam, rng);
        Draw {
            outcome_a,
            outcome_b,
            hidden: Some(Hidden::Angle(lam)),
        }
    }

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        match &self.law {
            LambdaLaw::Atoms(atoms) => Ok(JointLaw::mixture(atoms.iter().map(|(lam, w)| {
                (
                    w,
                    JointLaw::independent(
                        self.left.prob_plus(a, lam),
                        self.right.prob_plus(b, lam),
                    ),
                )
            }))),
            LambdaLaw::Uniform => {
                let e = uniform_pair_correlator(&self.left, a, &self.right, b)?;
                Ok(JointLaw::from_moments(0.0, 0.0, e))
            }
            LambdaLaw::Sampled(_) => Err(ModelError::UnsupportedLaw(
                "λ law is neither finitely supported nor uniform",
            )),
        }
    }
}

/// Shared deterministic response `A(x, λ)`; both stations use the same rule.
#[derive(Clone)]
pub enum DeterministicResponse {
    Sign,
    Custom(DeterministicRule),
}

impl DeterministicResponse {
    pub fn respond(&self, setting: Angle, lam: Angle) -> Outcome {
        match self {
            DeterministicResponse::Sign => polarizer_sign(setting, lam),
            DeterministicResponse::Custom(f) => f(setting, lam),
        }
    }
}

impl fmt::Debug for DeterministicResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeterministicResponse::Sign => f.write_str("Sign"),
            DeterministicResponse::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Deterministic local model with `B(x, λ) = A(x, λ)`.
#[derive(Clone, Debug)]
pub struct DeterministicLocalModel {
    id: String,
    law: LambdaLaw,
    response: DeterministicResponse,
}

impl DeterministicLocalModel {
    pub fn new(id: impl Into<String>, law: LambdaLaw, response: DeterministicResponse) -> Self {
        DeterministicLocalModel {
            id: id.into(),
            law,
            response,
        }
    }

    /// Uniform λ with sign responses: the correlator falls linearly with separation.
    pub fn sign_uniform() -> Self {
        DeterministicLocalModel::new(
            "local:sign",
            LambdaLaw::Uniform,
            DeterministicResponse::Sign,
        )
    }

    pub fn law(&self) -> &LambdaLaw {
        &self.law
    }

    pub fn response(&self, setting: Angle, lam: Angle) -> Outcome {
        self.response.respond(setting, lam)
    }

    pub fn atoms(&self) -> Result<&Atoms, ModelError> {
        match &self.law {
            LambdaLaw::Atoms(atoms) => Ok(atoms),
            _ => Err(ModelError::UnsupportedLaw(
                "λ law is not finitely supported",
            )),
        }
    }

    /// `Σ ρ(λ) A(x,λ) A(y,λ)` by summation over atoms.
    pub fn enumerate_correlator(&self, x: Angle, y: Angle) -> Result<f64, ModelError> {
        Ok(self
            .atoms()?
            .iter()
            .map(|(lam, w)| {
                w * f64::from(self.response(x, lam).value() * self.response(y, lam).value())
            })
            .sum())
    }
}

impl Model for DeterministicLocalModel {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let lam = self.law.sample(rng);
        Draw {
            outcome_a: self.response(a, lam),
            outcome_b: self.response(b, lam),
            hidden: Some(Hidden::Angle(lam)),
        }
    }

    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        let indicator = |o: Outcome| if o == Outcome::Plus { 1.0 } else { 0.0 };
        match (&self.law, &self.response) {
            (LambdaLaw::Atoms(atoms), _) => Ok(JointLaw::mixture(atoms.iter().map(|(lam, w)| {
                (
                    w,
                    JointLaw::independent(
                        indicator(self.response(a, lam)),
                        indicator(self.response(b, lam)),
                    ),
                )
            }))),
            (LambdaLaw::Uniform, DeterministicResponse::Sign) => {
                let d = angular_distance(a, b);
                let same = 0.5 - d / PI;
                let differ = d / PI;
                JointLaw::from_cells(same, differ, differ, same)
            }
            _ => Err(ModelError::UnsupportedLaw(
                "exact integration needs finite atoms, or uniform λ with sign responses",
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;
    use std::f64::consts::FRAC_PI_2;

    fn ang(x: f64) -> Angle {
        Angle::new(x).unwrap()
    }

    // Midpoint-rule oracle for ⟨E[A|x,λ] E[B|y,λ]⟩ with λ uniform on [0, π).
    fn quadrature(left: &Response, x: Angle, right: &Response, y: Angle) -> f64 {
        let n = 200_000;
        (0..n)
            .map(|i| {
                let lam = ang((i as f64 + 0.5) * PI / n as f64);
                (2.0 * left.prob_plus(x, lam) - 1.0) * (2.0 * right.prob_plus(y, lam) - 1.0)
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn uniform_closed_forms_match_quadrature() {
        let kinds = [Response::Malus, Response::Sign];
        for (x, y) in [(0.0, 0.3), (0.2, 1.9), (1.0, 1.0), (0.0, FRAC_PI_2)] {
            for l in &kinds {
                for r in &kinds {
                    let exact = uniform_pair_correlator(l, ang(x), r, ang(y)).unwrap();
                    let q = quadrature(l, ang(x), r, ang(y));
                    assert!(
                        (exact - q).abs() < 1e-4,
                        "{l:?} {r:?} at ({x},{y}): {exact} vs {q}"
                    );
                }
            }
        }
    }

    #[test]
    fn custom_response_with_uniform_law_is_rejected() {
        let m = LocalCausalModel::new(
            "custom",
            LambdaLaw::Uniform,
            Response::Custom(Arc::new(|_, _| 0.5)),
            Response::Malus,
        );
        assert!(matches!(
            m.exact_joint(Angle::ZERO, Angle::ZERO),
            Err(ModelError::UnsupportedLaw(_))
        ));
        let sampled = LocalCausalModel::new(
            "sampled",
            LambdaLaw::Sampled(Arc::new(|_| Angle::ZERO)),
            Response::Malus,
            Response::Malus,
        );
        assert!(sampled.exact_joint(Angle::ZERO, Angle::ZERO).is_err());
    }

    #[test]
    fn left_law_ignores_right_setting() {
        let atoms = Atoms::new([(ang(0.1), 0.3), (ang(1.2), 0.7)]).unwrap();
        let m = LocalCausalModel::new(
            "probe",
            LambdaLaw::Atoms(atoms),
            Response::Custom(Arc::new(|x, l| {
                0.5 + 0.4 * (3.0 * x.radians() + l.radians()).sin()
            })),
            Response::Malus,
        );
        let a = ang(0.4);
        let b = ang(0.9);
        let base = m.exact_joint(a, Angle::ZERO).unwrap();
        for probe in [0.3, 1.0, 2.5] {
            // Marginals of the joint law agree up to summation rounding.
            assert!((m.exact_joint(a, ang(probe)).unwrap().mean_a() - base.mean_a()).abs() < 1e-15);
            let right = m.exact_joint(Angle::ZERO, b).unwrap().mean_b();
            assert!((m.exact_joint(ang(probe), b).unwrap().mean_b() - right).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_sign_uniform_is_linear() {
        let m = DeterministicLocalModel::sign_uniform();
        let e = m
            .exact_correlator(Angle::ZERO, Angle::frac_pi(1, 8))
            .unwrap();
        assert!((e - 0.5).abs() < 1e-15);
        let law = m.exact_joint(ang(0.3), ang(1.7)).unwrap();
        law.validate().unwrap();
        assert!(law.mean_a().abs() < 1e-15);
    }

    #[test]
    fn deterministic_sampling_shares_the_response() {
        let m = DeterministicLocalModel::sign_uniform();
        let s = RandomStream::new(5);
        for i in 0..1000 {
            let d = m.sample(ang(0.6), ang(0.6), &mut s.substream(i));
            assert_eq!(d.outcome_a, d.outcome_b);
        }
    }

    #[test]
    fn atoms_accessor_requires_finite_law() {
        assert!(DeterministicLocalModel::sign_uniform().atoms().is_err());
    }
}
