//! Polarizer orientations on the circle of circumference π, and detector outcomes.
//!
//! A polarizing beam splitter at angle `x` and one at `x + π` are the same
//! device, so every orientation (settings, hidden polarizations) lives on
//! `[0, π)`. Distances are measured along that circle and never exceed π/2.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used when two derived angles are asserted equal.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AngleError {
    #[error("angle must be finite, got {0}")]
    NonFinite(f64),
}

/// An orientation in radians, canonicalized to `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    pub const ZERO: Angle = Angle(0.0);

    /// Reduces `radians` modulo π.
    pub fn new(radians: f64) -> Result<Angle, AngleError> {
        canonicalize(radians)
    }

    /// `numerator·π / denominator`, reduced modulo π.
    ///
    /// ```
    /// use bellsim::Angle;
    /// assert_eq!(Angle::frac_pi(1, 8).radians(), std::f64::consts::FRAC_PI_8);
    /// assert_eq!(Angle::frac_pi(9, 8), Angle::frac_pi(1, 8));
    /// ```
    pub fn frac_pi(numerator: i64, denominator: u32) -> Angle {
        assert!(denominator > 0, "zero denominator");
        let d = i64::from(denominator);
        // Reduce the numerator first so whole periods never touch floating point.
        let k = numerator.rem_euclid(d);
        Angle(PI * k as f64 / d as f64)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// This orientation turned by `delta` radians, reduced modulo π.
    pub fn rotated(self, delta: f64) -> Angle {
        assert!(delta.is_finite(), "rotation by non-finite angle {delta}");
        reduce(self.0 + delta)
    }

    /// The perpendicular orientation, `self + π/2`.
    pub fn perpendicular(self) -> Angle {
        self.rotated(FRAC_PI_2)
    }

    /// Signed offset from `self` to `other` along the shorter arc, in `(-π/2, π/2]`.
    pub fn offset_to(self, other: Angle) -> f64 {
        let mut d = other.0 - self.0;
        if d > FRAC_PI_2 {
            d -= PI;
        } else if d <= -FRAC_PI_2 {
            d += PI;
        }
        d
    }

    /// True when the two orientations agree within [`ANGLE_TOLERANCE`] on the circle.
    pub fn approx_eq(self, other: Angle) -> bool {
        angular_distance(self, other) <= ANGLE_TOLERANCE
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = f64::deserialize(deserializer)?;
        Angle::new(raw).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<f64> for Angle {
    type Error = AngleError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Angle::new(value)
    }
}

fn reduce(x: f64) -> Angle {
    let r = x.rem_euclid(PI);
    // rem_euclid can round up to exactly π for tiny negative inputs.
    Angle(if r >= PI { 0.0 } else { r })
}

/// Reduces a finite angle into `[0, π)`.
pub fn canonicalize(radians: f64) -> Result<Angle, AngleError> {
    if !radians.is_finite() {
        return Err(AngleError::NonFinite(radians));
    }
    Ok(reduce(radians))
}

/// Distance between two orientations along the circle of circumference π; lies in `[0, π/2]`.
pub fn angular_distance(x: Angle, y: Angle) -> f64 {
    let m = (x.0 - y.0).abs();
    m.min(PI - m)
}

/// Detector result at one station.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.value())
    }

    pub fn from_value(value: i64) -> Option<Outcome> {
        match value {
            1 => Some(Outcome::Plus),
            -1 => Some(Outcome::Minus),
            _ => None,
        }
    }

    pub fn from_bool(plus: bool) -> Outcome {
        if plus {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

impl Serialize for Outcome {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Outcome {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = i64::deserialize(deserializer)?;
        Outcome::from_value(raw)
            .ok_or_else(|| serde::de::Error::custom(format!("outcome must be 1 or -1, got {raw}")))
    }
}

/// The ±1 response of an ideal polarizer whose transmitting arc is centered on `center`.
///
/// Returns `Plus` when `lam` is strictly closer than π/4 to `center`; the
/// boundary itself maps to `Minus`.
pub fn polarizer_sign(center: Angle, lam: Angle) -> Outcome {
    Outcome::from_bool(angular_distance(center, lam) < FRAC_PI_4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(PI).unwrap(), Angle::ZERO);
        assert!((canonicalize(-FRAC_PI_4).unwrap().radians() - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let x = canonicalize(4.0).unwrap().radians();
        assert!((x - 0.858_407_346_410_206_9).abs() < 1e-15);
        assert!((x + PI - 4.0).abs() < 1e-15);
    }

    #[test]
    fn canonicalize_rejects_non_finite() {
        assert!(canonicalize(f64::NAN).is_err());
        assert!(canonicalize(f64::INFINITY).is_err());
        assert!(canonicalize(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn tiny_negative_wraps_below_pi() {
        let a = canonicalize(-1e-300).unwrap();
        assert!(a.radians() < PI);
    }

    // Brute force: the distance is the smallest |x - y + kπ| over representatives.
    fn distance_by_representatives(x: f64, y: f64) -> f64 {
        (-3..=3)
            .map(|k| (x - y + k as f64 * PI).abs())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn angular_distance_examples() {
        let z = Angle::ZERO;
        assert_eq!(
            angular_distance(z, Angle::new(FRAC_PI_2).unwrap()),
            FRAC_PI_2
        );
        let d = angular_distance(Angle::new(0.1).unwrap(), Angle::new(3.1).unwrap());
        assert!((d - distance_by_representatives(0.1, 3.1)).abs() < 1e-15);
        assert!((d - 0.141_592_653_589_793_1).abs() < 1e-12);
        let x = Angle::new(2.3).unwrap();
        assert_eq!(angular_distance(x, x), 0.0);
    }

    #[test]
    fn polarizer_sign_examples() {
        let b = Angle::new(1.1).unwrap();
        assert_eq!(polarizer_sign(b, b), Outcome::Plus);
        assert_eq!(
            polarizer_sign(Angle::ZERO, Angle::new(FRAC_PI_2).unwrap()),
            Outcome::Minus
        );
        assert_eq!(
            polarizer_sign(Angle::ZERO, Angle::new(FRAC_PI_4).unwrap()),
            Outcome::Minus
        );
    }

    #[test]
    fn frac_pi_reduces_numerator() {
        assert_eq!(Angle::frac_pi(8, 8), Angle::ZERO);
        assert_eq!(Angle::frac_pi(-1, 4), Angle::frac_pi(3, 4));
    }

    #[test]
    fn offset_to_takes_short_arc() {
        let a = Angle::new(0.1).unwrap();
        let b = Angle::new(3.0).unwrap();
        assert!((a.offset_to(b) - (3.0 - 0.1 - PI)).abs() < 1e-15);
        assert!((b.offset_to(a) - (PI - 2.9)).abs() < 1e-15);
    }

    #[test]
    fn outcome_values_square_to_one() {
        for o in Outcome::BOTH {
            assert_eq!(o.value() * o.value(), 1);
            assert_eq!(Outcome::from_value(o.value().into()), Some(o));
        }
        assert_eq!(Outcome::from_value(0), None);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn canonicalize_is_idempotent(x in -1e6f64..1e6) {
            let once = canonicalize(x).unwrap();
            prop_assert!(once.radians() >= 0.0 && once.radians() < PI);
            prop_assert_eq!(canonicalize(once.radians()).unwrap(), once);
        }

        #[test]
        fn canonicalize_ignores_whole_periods(x in -100.0f64..100.0, k in -50i32..50) {
            let a = canonicalize(x).unwrap();
            let b = canonicalize(x + f64::from(k) * PI).unwrap();
            prop_assert!(angular_distance(a, b) < 1e-12);
        }

        #[test]
        fn distance_is_symmetric_and_bounded(x in -10.0f64..10.0, y in -10.0f64..10.0) {
            let (a, b) = (canonicalize(x).unwrap(), canonicalize(y).unwrap());
            let d = angular_distance(a, b);
            prop_assert_eq!(d, angular_distance(b, a));
            prop_assert!((0.0..=FRAC_PI_2).contains(&d));
            prop_assert!((d - distance_by_representatives(a.radians(), b.radians())).abs() < 1e-12);
        }

        #[test]
        fn distance_triangle_inequality(x in 0.0f64..PI, y in 0.0f64..PI, z in 0.0f64..PI) {
            let (a, b, c) = (Angle::new(x).unwrap(), Angle::new(y).unwrap(), Angle::new(z).unwrap());
            prop_assert!(angular_distance(a, c) <= angular_distance(a, b) + angular_distance(b, c) + 1e-15);
        }

        #[test]
        fn polarizer_sign_is_symmetric(x in 0.0f64..PI, y in 0.0f64..PI) {
            let (a, b) = (Angle::new(x).unwrap(), Angle::new(y).unwrap());
            prop_assert_eq!(polarizer_sign(a, b), polarizer_sign(b, a));
        }
    }
}
