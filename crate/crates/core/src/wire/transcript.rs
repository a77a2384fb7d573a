//! Coordinator-side transcripts and the audit that recovers the wiring from them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::wire::{Kind, Role, WireError, WireMessage, Wiring};

/// One message as the coordinator saw it; `seq` is its arrival order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    pub from: Role,
    pub to: Role,
    pub msg: WireMessage,
}

pub trait TranscriptSink {
    fn record(&mut self, entry: &TranscriptEntry) -> Result<(), WireError>;
}

/// Feeds both sinks.
impl<A: TranscriptSink, B: TranscriptSink> TranscriptSink for (A, B) {
    fn record(&mut self, entry: &TranscriptEntry) -> Result<(), WireError> {
        self.0.record(entry)?;
        self.1.record(entry)
    }
}

impl<S: TranscriptSink + ?Sized> TranscriptSink for &mut S {
    fn record(&mut self, entry: &TranscriptEntry) -> Result<(), WireError> {
        (**self).record(entry)
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl TranscriptSink for NullSink {
    fn record(&mut self, _: &TranscriptEntry) -> Result<(), WireError> {
        Ok(())
    }
}

/// A transcript held in memory.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl TranscriptSink for Transcript {
    fn record(&mut self, entry: &TranscriptEntry) -> Result<(), WireError> {
        self.entries.push(*entry);
        Ok(())
    }
}

impl Transcript {
    pub fn write_ndjson<W: Write>(&self, w: W) -> Result<(), WireError> {
        let mut sink = NdjsonSink::new(w);
        for e in &self.entries {
            sink.record(e)?;
        }
        sink.w.flush()?;
        Ok(())
    }

    pub fn read_ndjson<R: BufRead>(r: R) -> Result<Self, WireError> {
        let mut entries = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TranscriptEntry = serde_json::from_str(&line)?;
            e.msg.validate()?;
            entries.push(e);
        }
        Ok(Transcript { entries })
    }

    pub fn audit(&self, declared: Wiring) -> Result<AuditReport, WireError> {
        transcript_audit(&self.entries, declared)
    }
}

/// Streams entries as newline-delimited JSON.
#[derive(Debug)]
pub struct NdjsonSink<W: Write> {
    w: W,
}

impl<W: Write> NdjsonSink<W> {
    pub fn new(w: W) -> Self {
        NdjsonSink { w }
    }

    pub fn into_inner(self) -> W {
        self.w
    }
}

impl<W: Write> TranscriptSink for NdjsonSink<W> {
    fn record(&mut self, entry: &TranscriptEntry) -> Result<(), WireError> {
        serde_json::to_writer(&mut self.w, entry)?;
        self.w.write_all(b"\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub declared: Wiring,
    /// `None` when no trial ran, so nothing reveals the wiring.
    pub derived: Option<Wiring>,
    pub matches: bool,
    pub trials: u64,
    /// SETTING messages addressed to the source.
    pub settings_to_source: u64,
}

#[derive(Debug, Default)]
struct Progress {
    emitted: bool,
    photon: bool,
    results: BTreeSet<Role>,
}

/// Audits a transcript as it streams past, keeping only unfinished trials.
#[derive(Debug, Default)]
pub struct Auditor {
    next_seq: u64,
    hellos: BTreeSet<Role>,
    pending: BTreeMap<u64, Progress>,
    completed: u64,
    settings_to_source: u64,
    done_sent: BTreeSet<Role>,
    done_received: BTreeSet<Role>,
}

const ENDPOINTS: [Role; 3] = [Role::Source, Role::Left, Role::Right];

impl Auditor {
    pub fn new() -> Self {
        Auditor::default()
    }

    pub fn finish(self, declared: Wiring) -> Result<AuditReport, WireError> {
        let missing_hello: Vec<Role> = ENDPOINTS
            .into_iter()
            .filter(|r| !self.hellos.contains(r))
            .collect();
        if !missing_hello.is_empty() {
            return Err(WireError::Truncated(format!(
                "no HELLO from {missing_hello:?}"
            )));
        }
        if let Some((trial, p)) = self.pending.iter().next() {
            return Err(WireError::Truncated(format!(
                "trial {trial} unfinished (emitted {}, photon {}, results from {:?})",
                p.emitted, p.photon, p.results
            )));
        }
        if self.done_sent.len() < 3 || self.done_received.len() < 3 {
            return Err(WireError::Truncated(format!(
                "DONE sent to {:?}, acknowledged by {:?}",
                self.done_sent, self.done_received
            )));
        }
        let derived = match (self.completed, self.settings_to_source) {
            (0, 0) => None,
            (_, 0) => Some(Wiring::Causal),
            _ => Some(Wiring::Retro),
        };
        Ok(AuditReport {
            declared,
            derived,
            matches: derived.is_none_or(|d| d == declared),
            trials: self.completed,
            settings_to_source: self.settings_to_source,
        })
    }
}

impl TranscriptSink for Auditor {
    fn record(&mut self, e: &TranscriptEntry) -> Result<(), WireError> {
        if e.seq != self.next_seq {
            return Err(WireError::Audit(format!(
                "expected seq {}, found {}",
                self.next_seq, e.seq
            )));
        }
        self.next_seq += 1;
        let bad = |why: &str| WireError::Audit(format!("{why}: {}", e.msg));
        match (e.msg.kind, e.from, e.to) {
            (Kind::Hello, from, Role::Coordinator) => {
                if e.msg.role() != Some(from) {
                    return Err(bad("HELLO role does not match its sender"));
                }
                self.hellos.insert(from);
            }
            (Kind::Hello, Role::Coordinator, _) => {}
            (Kind::Setting, Role::Coordinator, Role::Source) => {
                self.settings_to_source += 1;
            }
            (Kind::Setting, Role::Coordinator, Role::Left | Role::Right) => {}
            (Kind::Emit, Role::Coordinator, Role::Source) => {
                self.pending.entry(e.msg.trial).or_default().emitted = true;
            }
            (Kind::Photon, Role::Source, Role::Coordinator) => {
                match self.pending.get_mut(&e.msg.trial) {
                    Some(p) if p.emitted => p.photon = true,
                    _ => return Err(bad("PHOTON without EMIT")),
                }
            }
            (Kind::Photon, Role::Coordinator, Role::Left | Role::Right) => {}
            (Kind::Result, from @ (Role::Left | Role::Right), Role::Coordinator) => {
                let trial = e.msg.trial;
                let p = match self.pending.get_mut(&trial) {
                    Some(p) if p.photon => p,
                    _ => return Err(bad("RESULT before PHOTON")),
                };
                if !p.results.insert(from) {
                    return Err(bad("duplicate RESULT"));
                }
                if p.results.len() == 2 {
                    self.pending.remove(&trial);
                    self.completed += 1;
                }
            }
            (Kind::Done, Role::Coordinator, to) => {
                self.done_sent.insert(to);
            }
            (Kind::Done, from, Role::Coordinator) => {
                if !self.done_sent.contains(&from) {
                    return Err(bad("DONE before the coordinator's DONE"));
                }
                self.done_received.insert(from);
            }
            _ => return Err(bad("message on an edge the protocol does not have")),
        }
        Ok(())
    }
}

/// Recovers the wiring from message order alone and compares it with `declared`.
/// The verdict is RETRO when any SETTING was addressed to the source.
pub fn transcript_audit<'a, I>(entries: I, declared: Wiring) -> Result<AuditReport, WireError>
where
    I: IntoIterator<Item = &'a TranscriptEntry>,
{
    let mut auditor = Auditor::new();
    for e in entries {
        auditor.record(e)?;
    }
    auditor.finish(declared)
}
