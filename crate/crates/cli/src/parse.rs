//! Angle, grid and schedule syntax.
//!
//! Angles are plain radians (`0.3`, `-1e-2`) or rational multiples of π:
//! `pi`, `pi/8`, `3pi/8`, `3*pi/8`, `-pi/4`. Rational forms are evaluated as
//! `k·π/N` with `k` reduced first, so `pi/8` is exactly `FRAC_PI_8`.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use bellsim::Angle;

/// An angle as written on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSpec {
    PiFraction { numerator: i64, denominator: u32 },
    Radians(f64),
}

impl AngleSpec {
    pub fn radians(self) -> f64 {
        match self {
            AngleSpec::PiFraction {
                numerator,
                denominator,
            } => PI * numerator as f64 / f64::from(denominator),
            AngleSpec::Radians(x) => x,
        }
    }

    /// The orientation, reduced modulo π.
    pub fn angle(self) -> Angle {
        match self {
            AngleSpec::PiFraction {
                numerator,
                denominator,
            } => Angle::frac_pi(numerator, denominator),
            AngleSpec::Radians(x) => Angle::new(x).expect("finite by construction"),
        }
    }
}

impl FromStr for AngleSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        if t.is_empty() {
            bail!("empty angle");
        }
        let Some(at) = t.find("pi") else {
            let x: f64 = t.parse().map_err(|_| anyhow!("malformed angle `{s}`"))?;
            if !x.is_finite() {
                bail!("angle `{s}` is not finite");
            }
            return Ok(AngleSpec::Radians(x));
        };
        let (head, tail) = (&t[..at], &t[at + 2..]);
        let head = head.strip_suffix('*').unwrap_or(head);
        let numerator: i64 = match head {
            "" | "+" => 1,
            "-" => -1,
            h => h
                .parse()
                .map_err(|_| anyhow!("malformed multiple of π in `{s}`"))?,
        };
        let denominator: u32 = match tail {
            "" => 1,
            t => t
                .strip_prefix('/')
                .and_then(|d| d.parse().ok())
                .filter(|&d| d > 0)
                .ok_or_else(|| anyhow!("malformed denominator in `{s}`"))?,
        };
        Ok(AngleSpec::PiFraction {
            numerator,
            denominator,
        })
    }
}

impl fmt::Display for AngleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleSpec::PiFraction {
                numerator,
                denominator,
            } => write!(f, "{numerator}*pi/{denominator}"),
            AngleSpec::Radians(x) => write!(f, "{x}"),
        }
    }
}

/// `start:end:count`, `count` evenly spaced values with both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: AngleSpec,
    pub end: AngleSpec,
    pub count: u32,
}

impl FromStr for GridSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, end, count] = parts[..] else {
            bail!("grid `{s}` is not start:end:count");
        };
        let count: u32 = count
            .trim()
            .parse()
            .map_err(|_| anyhow!("malformed grid count in `{s}`"))?;
        if count == 0 {
            bail!("grid `{s}` has no points");
        }
        Ok(GridSpec {
            start: start.parse()?,
            end: end.parse()?,
            count,
        })
    }
}

impl GridSpec {
    /// The points as written, before any reduction modulo π. When both ends
    /// are multiples of π, every point is computed as one rational multiple.
    pub fn points(&self) -> Vec<AngleSpec> {
        let steps = i64::from(self.count.max(2) - 1);
        (0..i64::from(self.count))
            .map(|k| match (self.start, self.end) {
                (
                    AngleSpec::PiFraction {
                        numerator: p1,
                        denominator: q1,
                    },
                    AngleSpec::PiFraction {
                        numerator: p2,
                        denominator: q2,
                    },
                ) => {
                    let (q1, q2) = (i64::from(q1), i64::from(q2));
                    let num = p1 * q2 * steps + k * (p2 * q1 - p1 * q2);
                    let den = q1 * q2 * steps;
                    let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
                    AngleSpec::PiFraction {
                        numerator: num / g,
                        denominator: u32::try_from(den / g).expect("grid denominators stay small"),
                    }
                }
                (s, e) => {
                    let (x, y) = (s.radians(), e.radians());
                    AngleSpec::Radians(x + (y - x) * k as f64 / steps as f64)
                }
            })
            .take(self.count as usize)
            .collect()
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Reads a per-trial schedule: one `a,b` pair per line. Blank lines, `#`
/// comments and an `a,b` header are skipped.
pub fn read_schedule(path: &Path) -> anyhow::Result<Vec<(Angle, Angle)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading schedule {}", path.display()))?;
    let mut schedule = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.eq_ignore_ascii_case("a,b") {
            continue;
        }
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| anyhow!("{}:{}: expected `a,b`", path.display(), i + 1))?;
        let a: AngleSpec = a
            .parse()
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let b: AngleSpec = b
            .parse()
            .with_context(|| format!("{}:{}", path.display(), i + 1))?;
        schedule.push((a.angle(), b.angle()));
    }
    if schedule.is_empty() {
        bail!("schedule {} has no trials", path.display());
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

    fn rad(s: &str) -> f64 {
        s.parse::<AngleSpec>().unwrap().radians()
    }

    #[test]
    fn angle_forms() {
        assert_eq!(rad("0"), 0.0);
        assert_eq!(rad("0.25"), 0.25);
        assert_eq!(rad("pi/8"), FRAC_PI_8);
        assert_eq!(rad("PI/2"), FRAC_PI_2);
        assert_eq!(rad("3*pi/8"), 3.0 * PI / 8.0);
        assert_eq!(rad("3pi/8"), 3.0 * PI / 8.0);
        assert_eq!(rad("-pi/4"), -FRAC_PI_4);
        assert_eq!(rad("pi"), PI);
        assert_eq!(
            "-pi/4".parse::<AngleSpec>().unwrap().angle().radians(),
            3.0 * PI / 4.0
        );
        assert_eq!(
            "9*pi/8".parse::<AngleSpec>().unwrap().angle(),
            Angle::frac_pi(1, 8)
        );
    }

    #[test]
    fn malformed_angles() {
        for bad in [
            "", "pie", "pi/0", "pi/x", "x*pi", "1/8", "nan", "inf", "pi/-2",
        ] {
            assert!(bad.parse::<AngleSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_points_are_exact_multiples() {
        let g: GridSpec = "0:pi/2:9".parse().unwrap();
        let pts: Vec<f64> = g.points().into_iter().map(AngleSpec::radians).collect();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[2], FRAC_PI_8);
        assert_eq!(pts[4], FRAC_PI_4);
        assert_eq!(pts[8], FRAC_PI_2);
        let single: GridSpec = "pi/3:pi:1".parse().unwrap();
        assert_eq!(single.points(), vec!["pi/3".parse().unwrap()]);
    }

    #[test]
    fn grid_with_radians() {
        let g: GridSpec = "0:1:5".parse().unwrap();
        let pts: Vec<f64> = g.points().into_iter().map(AngleSpec::radians).collect();
        assert_eq!(pts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!("0:1".parse::<GridSpec>().is_err());
        assert!("0:1:0".parse::<GridSpec>().is_err());
    }
}
