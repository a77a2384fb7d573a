//! A message-passing harness with a source, two stations and a coordinator.
//!
//! The coordinator is a hub: every message goes through it and is written to
//! a transcript in arrival order. Under [`Wiring::Causal`] the source only
//! ever hears EMIT. Under [`Wiring::Retro`] the coordinator first forwards
//! both settings to the source, left then right, which is the extra edge
//! running back to the source.
//!
//! Per trial `i`:
//!
//! ```text
//! RETRO only:  C→S SETTING(i, a)   C→S SETTING(i, b)
//!              C→S EMIT(i)         S→C PHOTON(i, λ)
//!              C→L SETTING(i, a)   C→L PHOTON(i, λ)
//!              C→R SETTING(i, b)   C→R PHOTON(i, λ)
//!              L→C RESULT(i, A)    R→C RESULT(i, B)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod endpoint;
mod frame;
mod harness;
mod message;
mod transcript;

pub use endpoint::{
    run_source, run_station, EndpointSummary, Link, SourceLaw, StationLaw, LEFT_STREAM,
    READ_TIMEOUT, RIGHT_STREAM, SOURCE_STREAM,
};
pub use frame::{read_frame, write_frame, MAX_FRAME};
pub use harness::{coordinate, replay, run_wire_experiment, WireConfig, WirePlan};
pub use message::{Kind, Payload, Role, WireMessage, PROTOCOL_VERSION};
pub use transcript::{
    transcript_audit, AuditReport, Auditor, NdjsonSink, NullSink, Transcript, TranscriptEntry,
    TranscriptSink,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Wiring {
    Causal,
    Retro,
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    Json(#[from] serde_json::Error),
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(u64),
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("payload does not fit its kind: {0}")]
    Payload(WireMessage),
    #[error("protocol violation at {role}: {reason}: {message}")]
    Protocol {
        role: Role,
        message: WireMessage,
        reason: &'static str,
    },
    #[error("{0} closed the connection")]
    Closed(Role),
    #[error("truncated transcript: {0}")]
    Truncated(String),
    #[error("transcript audit: {0}")]
    Audit(String),
    #[error("configuration: {0}")]
    Config(String),
}
