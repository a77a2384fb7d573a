//! Bell's 1964 inequality, the CHSH expression, and the deterministic local
//! strategies that bound them.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::{Angle, Outcome};
use crate::models::{DeterministicLocalModel, ModelError};
use crate::statistics::CorrelatorEstimate;

/// Slack on exact comparisons against an inequality's bound.
pub const VIOLATION_TOLERANCE: f64 = 1e-12;

/// Number of propagated standard errors a Monte Carlo margin must exceed.
pub const ESTIMATE_SIGMAS: f64 = 5.0;

/// Local bound of the CHSH expression.
pub const CHSH_LOCAL_BOUND: f64 = 2.0;

#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("{expression:?} takes {expected} settings, got {found}")]
    SettingsCount {
        expression: Expression,
        expected: usize,
        found: usize,
    },
    #[error("grid resolution {0} is below 8 points per quarter turn")]
    Resolution(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expression {
    Bell1964,
    Chsh,
}

impl Expression {
    pub fn settings_count(self) -> usize {
        match self {
            Expression::Bell1964 => 3,
            Expression::Chsh => 4,
        }
    }

    fn check(self, settings: &[Angle]) -> Result<(), InequalityError> {
        if settings.len() != self.settings_count() {
            return Err(InequalityError::SettingsCount {
                expression: self,
                expected: self.settings_count(),
                found: settings.len(),
            });
        }
        Ok(())
    }
}

/// Both sides of `|P(a,b) − P(a,c)| ≤ 1 − P(b,c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellTriple {
    pub a: Angle,
    pub b: Angle,
    pub c: Angle,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
}

impl BellTriple {
    pub fn margin(&self) -> f64 {
        self.lhs - self.rhs
    }
}

fn bell_sides(ab: f64, ac: f64, bc: f64) -> (f64, f64) {
    ((ab - ac).abs(), 1.0 - bc)
}

/// Evaluates Bell's 1964 inequality for a correlator.
///
/// ```
/// use bellsim::{inequalities::bell1964, models::qm_correlator, Angle};
/// let t = bell1964(qm_correlator, Angle::ZERO, Angle::frac_pi(1, 6), Angle::frac_pi(1, 3));
/// assert!(t.violated);
/// ```
pub fn bell1964<F: Fn(Angle, Angle) -> f64>(
    correlator: F,
    a: Angle,
    b: Angle,
    c: Angle,
) -> BellTriple {
    let (lhs, rhs) = bell_sides(correlator(a, b), correlator(a, c), correlator(b, c));
    BellTriple {
        a,
        b,
        c,
        lhs,
        rhs,
        violated: lhs > rhs + VIOLATION_TOLERANCE,
    }
}

/// Bell's 1964 inequality on Monte Carlo correlators for `(a,b)`, `(a,c)`, `(b,c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedBell {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// `sqrt(σ_ab² + σ_ac² + σ_bc²)`.
    pub stderr: f64,
    /// Margin above `5·stderr`.
    pub violated: bool,
}

pub fn bell1964_estimated(
    ab: &CorrelatorEstimate,
    ac: &CorrelatorEstimate,
    bc: &CorrelatorEstimate,
) -> EstimatedBell {
    let (lhs, rhs) = bell_sides(ab.mean, ac.mean, bc.mean);
    let stderr = (ab.stderr.powi(2) + ac.stderr.powi(2) + bc.stderr.powi(2)).sqrt();
    let margin = lhs - rhs;
    EstimatedBell {
        lhs,
        rhs,
        margin,
        stderr,
        violated: margin > ESTIMATE_SIGMAS * stderr,
    }
}

/// `P(a,b) − P(a,c)` set against `Σ ρ A(a)A(b)[1 − A(b)A(c)]`; returns the
/// absolute difference, which vanishes identically.
pub fn intermediate_identity_residual(
    model: &DeterministicLocalModel,
    a: Angle,
    b: Angle,
    c: Angle,
) -> Result<f64, InequalityError> {
    let atoms = model.atoms()?;
    let val = |x: Angle, lam: Angle| f64::from(model.response(x, lam).value());
    let lhs = model.enumerate_correlator(a, b)? - model.enumerate_correlator(a, c)?;
    let rhs: f64 = atoms
        .iter()
        .map(|(lam, w)| w * val(a, lam) * val(b, lam) * (1.0 - val(b, lam) * val(c, lam)))
        .sum();
    Ok((lhs - rhs).abs())
}

/// `S = |E(a,b) − E(a,b2)| + |E(a2,b) + E(a2,b2)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshQuad {
    pub a: Angle,
    pub a2: Angle,
    pub b: Angle,
    pub b2: Angle,
    #[serde(rename = "S")]
    pub s: f64,
}

fn chsh_value(ab: f64, ab2: f64, a2b: f64, a2b2: f64) -> f64 {
    (ab - ab2).abs() + (a2b + a2b2).abs()
}

/// ```
/// use bellsim::{inequalities::chsh, models::qm_correlator, Angle};
/// let q = chsh(qm_correlator, Angle::ZERO, Angle::frac_pi(1, 4), Angle::frac_pi(1, 8), Angle::frac_pi(3, 8));
/// assert!((q.s - 2.0 * 2f64.sqrt()).abs() < 1e-12);
/// ```
pub fn chsh<F: Fn(Angle, Angle) -> f64>(
    correlator: F,
    a: Angle,
    a2: Angle,
    b: Angle,
    b2: Angle,
) -> ChshQuad {
    ChshQuad {
        a,
        a2,
        b,
        b2,
        s: chsh_value(
            correlator(a, b),
            correlator(a, b2),
            correlator(a2, b),
            correlator(a2, b2),
        ),
    }
}

/// Outcome assignment of a deterministic strategy, aligned with the settings
/// it was enumerated for. For CHSH the order is `A(a), A(a2), B(b), B(b2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Strategy {
    pub values: Vec<Outcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBound {
    /// Largest `lhs − rhs` (Bell-1964) or `S` (CHSH) over all strategies.
    pub value: f64,
    pub witness: Strategy,
    /// How many consistent strategies were enumerated.
    pub strategies: usize,
}

/// Every ±1 assignment to `slots` values, in counting order (bit set = −1).
fn assignments(slots: usize) -> impl Iterator<Item = Vec<Outcome>> {
    (0u32..1 << slots).map(move |bits| {
        (0..slots)
            .map(|i| Outcome::from_bool(bits >> i & 1 == 0))
            .collect()
    })
}

/// A deterministic station gives one answer per orientation, so settings
/// that coincide must carry equal values.
fn consistent(settings: &[Angle], values: &[Outcome]) -> bool {
    (0..settings.len())
        .all(|i| (0..i).all(|j| !settings[i].approx_eq(settings[j]) || values[i] == values[j]))
}

/// Maximizes the expression over all deterministic local strategies.
///
/// Bell-1964 takes `[a, b, c]` with one response shared by both sides;
/// CHSH takes `[a, a2, b, b2]` with independent left and right responses.
pub fn local_bound_bruteforce(
    expression: Expression,
    settings: &[Angle],
) -> Result<LocalBound, InequalityError> {
    expression.check(settings)?;
    let groups: Vec<&[Angle]> = match expression {
        Expression::Bell1964 => vec![settings],
        Expression::Chsh => vec![&settings[..2], &settings[2..]],
    };
    let score = |v: &[f64]| match expression {
        Expression::Bell1964 => {
            let (lhs, rhs) = bell_sides(v[0] * v[1], v[0] * v[2], v[1] * v[2]);
            lhs - rhs
        }
        Expression::Chsh => chsh_value(v[0] * v[2], v[0] * v[3], v[1] * v[2], v[1] * v[3]),
    };
    let mut best: Option<(f64, Vec<Outcome>)> = None;
    let mut count = 0;
    for values in assignments(settings.len()) {
        let mut offset = 0;
        let ok = groups.iter().all(|g| {
            let r = consistent(g, &values[offset..offset + g.len()]);
            offset += g.len();
            r
        });
        if !ok {
            continue;
        }
        count += 1;
        let v: Vec<f64> = values.iter().map(|o| o.as_f64()).collect();
        let s = score(&v);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, values));
        }
    }
    let (value, values) = best.expect("the all-plus strategy is always consistent");
    Ok(LocalBound {
        value,
        witness: Strategy { values },
        strategies: count,
    })
}

/// Best settings found by [`violation_search`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub expression: Expression,
    /// `[a, b, c]` or `[a, a2, b, b2]`.
    pub settings: Vec<Angle>,
    /// `lhs − rhs` for Bell-1964, `S` for CHSH.
    pub value: f64,
    /// Distance above the local bound: `lhs − rhs`, or `S − 2`.
    pub margin: f64,
    pub violated: bool,
}

/// The search lattice: `resolution` evenly spaced points on `[0, π/2]`,
/// continued with the same spacing around the whole circle.
pub fn search_grid(resolution: usize) -> Result<Vec<Angle>, InequalityError> {
    if resolution < 8 {
        return Err(InequalityError::Resolution(resolution));
    }
    let step = FRAC_PI_2 / (resolution - 1) as f64;
    Ok((0..2 * (resolution - 1))
        .map(|k| Angle::new(k as f64 * step).expect("finite"))
        .collect())
}

/// Exhaustive grid search for the settings that maximize the violation
/// margin. Ties go to the lexicographically smallest grid indices, in the
/// order `(a, b, c)` for Bell-1964 and `(b, b2, a, a2)` for CHSH.
pub fn violation_search<F: Fn(Angle, Angle) -> f64>(
    correlator: F,
    expression: Expression,
    resolution: usize,
) -> Result<SearchResult, InequalityError> {
    let grid = search_grid(resolution)?;
    let n = grid.len();
    let table: Vec<f64> = grid
        .iter()
        .flat_map(|&x| grid.iter().map(move |&y| (x, y)))
        .map(|(x, y)| correlator(x, y))
        .collect();
    let e = |i: usize, j: usize| table[i * n + j];
    let (idx, value, margin) = match expression {
        Expression::Bell1964 => {
            let mut best = (vec![0, 0, 0], f64::NEG_INFINITY);
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let (lhs, rhs) = bell_sides(e(a, b), e(a, c), e(b, c));
                        if lhs - rhs > best.1 {
                            best = (vec![a, b, c], lhs - rhs);
                        }
                    }
                }
            }
            (best.0, best.1, best.1)
        }
        Expression::Chsh => {
            // S separates: the first term needs only a, the second only a2.
            let mut best = (vec![0, 0, 0, 0], f64::NEG_INFINITY);
            for b in 0..n {
                for b2 in 0..n {
                    let (mut ta, mut va) = (0, f64::NEG_INFINITY);
                    let (mut ta2, mut va2) = (0, f64::NEG_INFINITY);
                    for a in 0..n {
                        let x = (e(a, b) - e(a, b2)).abs();
                        if x > va {
                            (ta, va) = (a, x);
                        }
                        let y = (e(a, b) + e(a, b2)).abs();
                        if y > va2 {
                            (ta2, va2) = (a, y);
                        }
                    }
                    if va + va2 > best.1 {
                        best = (vec![ta, ta2, b, b2], va + va2);
                    }
                }
            }
            (best.0, best.1, best.1 - CHSH_LOCAL_BOUND)
        }
    };
    Ok(SearchResult {
        expression,
        settings: idx.into_iter().map(|i| grid[i]).collect(),
        value,
        margin,
        violated: margin > VIOLATION_TOLERANCE,
    })
}
