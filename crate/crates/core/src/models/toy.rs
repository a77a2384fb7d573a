use std::f64::consts::{FRAC_PI_4, PI};

use crate::angle::{angular_distance, polarizer_sign, Angle};
use crate::models::{Draw, JointLaw, LambdaLaw, Model, ModelError};
use crate::stream::TrialRng;
use crate::trial::Hidden;

/// The shifted left axis `a′`: on the shorter arc from `b` toward `a`, at distance
/// `(π/4)(1 − cos(2a − 2b))` from `b`.
///
/// With sign responses around `a′` and `b` and a uniform λ, the correlator is
/// `1 − (4/π)·dist(a′, b) = cos(2a − 2b)`.
///
/// ```
/// use bellsim::{models::bell_toy_aprime, Angle};
/// let a = Angle::frac_pi(1, 3);
/// assert_eq!(bell_toy_aprime(a, a), a);
/// ```
pub fn bell_toy_aprime(a: Angle, b: Angle) -> Angle {
    let s = b.offset_to(a);
    if s == 0.0 {
        return b;
    }
    let d = FRAC_PI_4 * (1.0 - (2.0 * s).cos());
    b.rotated(s.signum() * d)
}

/// Bell's non-local toy model: λ uniform, `A = sign(a′, λ)`, `B = sign(b, λ)`.
/// The left station reads the remote setting through `a′`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BellToyModel;

impl BellToyModel {
    pub fn law(&self) -> LambdaLaw {
        LambdaLaw::Uniform
    }
}

impl Model for BellToyModel {
    fn id(&self) -> String {
        "bell-toy".into()
    }

    fn sample(&self, a: Angle, b: Angle, rng: &mut TrialRng) -> Draw {
        let lam = LambdaLaw::Uniform.sample(rng);
        Draw {
            outcome_a: polarizer_sign(bell_toy_aprime(a, b), lam),
            outcome_b: polarizer_sign(b, lam),
            hidden: Some(Hidden::Angle(lam)),
        }
    }

    /// Two quarter-period arcs at distance `d` overlap on a length `π/2 − d`.
    fn exact_joint(&self, a: Angle, b: Angle) -> Result<JointLaw, ModelError> {
        let d = angular_distance(bell_toy_aprime(a, b), b);
        let same = 0.5 - d / PI;
        let differ = d / PI;
        JointLaw::from_cells(same, differ, differ, same)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::RandomStream;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

    // Oracle: midpoint rule for ∫ sign(a′,λ)·sign(b,λ) dλ/π.
    fn integrate_sign_product(ap: Angle, b: Angle) -> f64 {
        let n = 200_000;
        let h = PI / n as f64;
        (0..n)
            .map(|i| {
                let lam = Angle::new((i as f64 + 0.5) * h).unwrap();
                f64::from(polarizer_sign(ap, lam).value() * polarizer_sign(b, lam).value())
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn aprime_at_equal_settings() {
        for x in [0.0, 0.4, 2.9] {
            let a = Angle::new(x).unwrap();
            assert_eq!(bell_toy_aprime(a, a), a);
        }
    }

    #[test]
    fn aprime_at_eighth_turn() {
        let b = Angle::frac_pi(1, 8);
        let ap = bell_toy_aprime(Angle::ZERO, b);
        let offset = FRAC_PI_4 * (1.0 - 0.5f64.sqrt());
        assert!((offset - 0.230_038).abs() < 1e-6);
        assert!((ap.radians() - (FRAC_PI_8 - offset)).abs() < 1e-12);
        assert!((ap.radians() - 0.162_661).abs() < 1e-6);
        let e = integrate_sign_product(ap, b);
        assert!((e - (PI / 4.0).cos()).abs() < 1e-4, "{e}");
    }

    #[test]
    fn aprime_at_quarter_turn() {
        let b = Angle::frac_pi(1, 2);
        let ap = bell_toy_aprime(Angle::ZERO, b);
        assert!(ap.approx_eq(Angle::ZERO));
        assert!((angular_distance(ap, b) - FRAC_PI_2).abs() < 1e-12);
        assert!((integrate_sign_product(ap, b) + 1.0).abs() < 1e-4);
    }

    #[test]
    fn exact_correlator_is_cosine() {
        for i in 0..5 {
            for j in 0..5 {
                let (a, b) = (Angle::frac_pi(i, 5), Angle::frac_pi(j, 5));
                let e = BellToyModel.exact_correlator(a, b).unwrap();
                let cos = (2.0 * (a.radians() - b.radians())).cos();
                assert!((e - cos).abs() < 1e-12, "{a} {b}: {e} vs {cos}");
            }
        }
    }

    #[test]
    fn anti_aligned_axes_always_disagree() {
        let stream = RandomStream::new(11);
        let b = Angle::frac_pi(1, 2);
        for i in 0..2000 {
            let d = BellToyModel.sample(Angle::ZERO, b, &mut stream.substream(i));
            assert_eq!(d.outcome_a.value() * d.outcome_b.value(), -1);
        }
    }

    #[test]
    fn right_side_reads_only_b_and_lambda() {
        let stream = RandomStream::new(5);
        let b = Angle::frac_pi(1, 8);
        for i in 0..500 {
            let d = BellToyModel.sample(Angle::frac_pi(1, 3), b, &mut stream.substream(i));
            let Some(Hidden::Angle(lam)) = d.hidden else {
                panic!("no λ recorded")
            };
            assert_eq!(d.outcome_b, polarizer_sign(b, lam));
            let other = BellToyModel.sample(Angle::ZERO, b, &mut stream.substream(i));
            assert_eq!(other.outcome_b, d.outcome_b);
        }
    }
}
