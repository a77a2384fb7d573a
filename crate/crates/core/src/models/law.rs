use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::{Angle, Outcome};
use crate::models::ModelError;
use crate::stream::TrialRng;

/// Slack allowed on probabilities that should sum to one.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

fn cell(o: Outcome) -> usize {
    match o {
        Outcome::Plus => 0,
        Outcome::Minus => 1,
    }
}

/// Joint distribution of the two outcomes at fixed settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLaw {
    /// `p[i][j]` with index 0 for `+1` and 1 for `-1`; `i` is the left outcome.
    p: [[f64; 2]; 2],
}

impl JointLaw {
    pub fn from_cells(pp: f64, pm: f64, mp: f64, mm: f64) -> Result<Self, ModelError> {
        let law = JointLaw {
            p: [[pp, pm], [mp, mm]],
        };
        law.validate()?;
        Ok(law)
    }

    /// The law fixed by its first and second moments. Any ±1 pair satisfies
    /// `p(A,B) = (1 + A⟨A⟩ + B⟨B⟩ + AB⟨AB⟩) / 4`.
    pub fn from_moments(mean_a: f64, mean_b: f64, correlator: f64) -> Self {
        let mut p = [[0.0; 2]; 2];
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                let (x, y) = (a.as_f64(), b.as_f64());
                p[cell(a)][cell(b)] = (1.0 + x * mean_a + y * mean_b + x * y * correlator) / 4.0;
            }
        }
        JointLaw { p }
    }

    /// Two independent sides with `P(A = +1) = left_plus` and `P(B = +1) = right_plus`.
    pub fn independent(left_plus: f64, right_plus: f64) -> Self {
        let l = [left_plus, 1.0 - left_plus];
        let r = [right_plus, 1.0 - right_plus];
        JointLaw {
            p: [[l[0] * r[0], l[0] * r[1]], [l[1] * r[0], l[1] * r[1]]],
        }
    }

    /// Weighted sum of laws. Weights are used as given.
    pub fn mixture<I: IntoIterator<Item = (f64, JointLaw)>>(parts: I) -> Self {
        let mut p = [[0.0; 2]; 2];
        for (w, law) in parts {
            for (row, lrow) in p.iter_mut().zip(law.p.iter()) {
                for (x, y) in row.iter_mut().zip(lrow.iter()) {
                    *x += w * y;
                }
            }
        }
        JointLaw { p }
    }

    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[cell(a)][cell(b)]
    }

    pub fn correlator(&self) -> f64 {
        (self.p[0][0] + self.p[1][1]) - (self.p[0][1] + self.p[1][0])
    }

    pub fn mean_a(&self) -> f64 {
        (self.p[0][0] + self.p[0][1]) - (self.p[1][0] + self.p[1][1])
    }

    pub fn mean_b(&self) -> f64 {
        (self.p[0][0] + self.p[1][0]) - (self.p[0][1] + self.p[1][1])
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn total_variation(&self, other: &JointLaw) -> f64 {
        0.5 * self
            .p
            .iter()
            .flatten()
            .zip(other.p.iter().flatten())
            .map(|(x, y)| (x - y).abs())
            .sum::<f64>()
    }

    /// Cells in the fixed order `(+,+), (+,-), (-,+), (-,-)`.
    pub fn cells(&self) -> [(Outcome, Outcome, f64); 4] {
        use Outcome::{Minus, Plus};
        [
            (Plus, Plus, self.p[0][0]),
            (Plus, Minus, self.p[0][1]),
            (Minus, Plus, self.p[1][0]),
            (Minus, Minus, self.p[1][1]),
        ]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let in_range = self
            .p
            .iter()
            .flatten()
            .all(|&x| (-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&x));
        if !in_range || (self.total() - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(ModelError::InvalidLaw(format!(
                "not a joint law: {:?}",
                self.p
            )));
        }
        Ok(())
    }

    /// Draws one outcome pair from a uniform variate in `[0, 1)`.
    pub fn draw(&self, u: f64) -> (Outcome, Outcome) {
        let mut acc = 0.0;
        let cells = self.cells();
        for &(a, b, p) in &cells[..3] {
            acc += p;
            if u < acc {
                return (a, b);
            }
        }
        (cells[3].0, cells[3].1)
    }
}

/// A finitely supported law over hidden polarizations. Coinciding atoms are merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atoms {
    atoms: Vec<(Angle, f64)>,
}

impl Atoms {
    pub fn new<I: IntoIterator<Item = (Angle, f64)>>(weighted: I) -> Result<Self, ModelError> {
        let mut atoms: Vec<(Angle, f64)> = Vec::new();
        for (angle, w) in weighted {
            if !(w.is_finite() && w >= 0.0) {
                return Err(ModelError::InvalidLaw(format!("atom weight {w}")));
            }
            match atoms.iter_mut().find(|(x, _)| x.approx_eq(angle)) {
                Some((_, acc)) => *acc += w,
                None => atoms.push((angle, w)),
            }
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        if atoms.is_empty() || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(ModelError::InvalidLaw(format!(
                "atom weights sum to {total}, expected 1"
            )));
        }
        Ok(Atoms { atoms })
    }

    /// Equal weights on the given angles (before merging).
    pub fn uniform_over(angles: &[Angle]) -> Result<Self, ModelError> {
        let w = 1.0 / angles.len() as f64;
        Atoms::new(angles.iter().map(|&x| (x, w)))
    }

    pub fn single(angle: Angle) -> Self {
        Atoms {
            atoms: vec![(angle, 1.0)],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Angle, f64)> + '_ {
        self.atoms.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight_of(&self, angle: Angle) -> Option<f64> {
        self.atoms
            .iter()
            .find(|(x, _)| x.approx_eq(angle))
            .map(|&(_, w)| w)
    }

    /// True when both laws put the same weight on the same points.
    pub fn same_law(&self, other: &Atoms) -> bool {
        self.len() == other.len()
            && self.atoms.iter().all(|&(x, w)| {
                other
                    .weight_of(x)
                    .is_some_and(|v| (v - w).abs() <= PROBABILITY_TOLERANCE)
            })
    }

    pub fn sample(&self, rng: &mut TrialRng) -> Angle {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            acc += w;
            if u < acc {
                return x;
            }
        }
        self.atoms[self.atoms.len() - 1].0
    }
}

pub type AngleSampler = Arc<dyn Fn(&mut TrialRng) -> Angle + Send + Sync>;

/// Distribution of a settings-independent hidden polarization.
#[derive(Clone)]
pub enum LambdaLaw {
    Atoms(Atoms),
    /// Uniform on `[0, π)`.
    Uniform,
    /// Any other law; can be sampled but not integrated exactly.
    Sampled(AngleSampler),
}

impl LambdaLaw {
    pub fn sample(&self, rng: &mut TrialRng) -> Angle {
        match self {
            LambdaLaw::Atoms(atoms) => atoms.sample(rng),
            LambdaLaw::Uniform => Angle::new(rng.random::<f64>() * PI).expect("finite"),
            LambdaLaw::Sampled(f) => f(rng),
        }
    }
}

impl fmt::Debug for LambdaLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaLaw::Atoms(a) => f.debug_tuple("Atoms").field(a).finish(),
            LambdaLaw::Uniform => f.write_str("Uniform"),
            LambdaLaw::Sampled(_) => f.write_str("Sampled(..)"),
        }
    }
}
