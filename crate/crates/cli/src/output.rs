//! CSV and JSON emitters. Floats use Rust's shortest round-trip formatting.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use bellsim::signaling::MarginalScan;
use bellsim::statistics::SweepResult;
use bellsim::{Hidden, Trial};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Opens `path`, or stdout when absent.
pub fn open(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// The parent directory of an output path must already exist.
pub fn check_output_path(path: Option<&PathBuf>) -> Result<(), String> {
    let Some(p) = path else { return Ok(()) };
    if p.as_os_str().is_empty() {
        return Err("empty output path".into());
    }
    match p.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(format!("output directory {} does not exist", dir.display()))
        }
        _ => Ok(()),
    }
}

pub fn json<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Shortest digits that round-trip, switching to exponent form for very
/// small or very large magnitudes.
pub fn num(x: f64) -> String {
    let m = x.abs();
    if m != 0.0 && m.is_finite() && !(1e-5..1e16).contains(&m) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn hidden_value(h: Option<Hidden>) -> String {
    match h {
        Some(Hidden::Angle(lam)) => num(lam.radians()),
        Some(Hidden::Branch(n)) => n.to_string(),
        None => String::new(),
    }
}

/// One trial as it appears in CSV and JSON output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct TrialRow {
    pub index: u64,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "A")]
    pub outcome_a: i8,
    #[serde(rename = "B")]
    pub outcome_b: i8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

impl From<&Trial> for TrialRow {
    fn from(t: &Trial) -> Self {
        TrialRow {
            index: t.index,
            a: t.a.radians(),
            b: t.b.radians(),
            outcome_a: t.outcome_a.value(),
            outcome_b: t.outcome_b.value(),
            lambda: t.hidden.map(|h| match h {
                Hidden::Angle(lam) => lam.radians(),
                Hidden::Branch(n) => f64::from(n),
            }),
        }
    }
}

pub fn trials_csv<'a>(
    out: &mut dyn Write,
    trials: impl IntoIterator<Item = &'a Trial>,
    with_lambda: bool,
) -> anyhow::Result<()> {
    if with_lambda {
        writeln!(out, "index,a,b,A,B,lambda")?;
    } else {
        writeln!(out, "index,a,b,A,B")?;
    }
    for t in trials {
        write!(
            out,
            "{},{},{},{},{}",
            t.index,
            num(t.a.radians()),
            num(t.b.radians()),
            t.outcome_a,
            t.outcome_b
        )?;
        if with_lambda {
            write!(out, ",{}", hidden_value(t.hidden))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn sweep_csv(out: &mut dyn Write, r: &SweepResult) -> anyhow::Result<()> {
    writeln!(out, "delta,mean,stderr,exact,z")?;
    for p in &r.points {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(p.delta),
            num(p.estimate.mean),
            num(p.estimate.stderr),
            cell(p.exact),
            cell(p.z)
        )?;
    }
    Ok(())
}

pub fn scan_csv(out: &mut dyn Write, s: &MarginalScan) -> anyhow::Result<()> {
    writeln!(out, "setting,mean,stderr,z")?;
    for p in &s.points {
        writeln!(
            out,
            "{},{},{},{}",
            num(p.setting.radians()),
            num(p.mean),
            num(p.stderr),
            num(p.z)
        )?;
    }
    Ok(())
}
