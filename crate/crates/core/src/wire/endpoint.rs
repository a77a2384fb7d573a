//! The three endpoints. Each one runs a single-threaded loop over its link to
//! the coordinator; stations never talk to each other.

use std::io::{BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::angle::{polarizer_sign, Angle, Outcome};
use crate::models::malus_draw;
use crate::models::{retro_lambda_law, LambdaLaw, RetroVariant};
use crate::stream::{RandomStream, TrialRng};
use crate::wire::frame::{read_frame, write_frame};
use crate::wire::{Kind, Role, WireError, WireMessage};

/// Stream ids of the endpoints' generators under the shared master seed.
pub const SOURCE_STREAM: u64 = 0x51;
pub const LEFT_STREAM: u64 = 0x52;
pub const RIGHT_STREAM: u64 = 0x53;

/// A blocked read longer than this is treated as a dead peer.
pub const READ_TIMEOUT: Duration = Duration::from_secs(60);

/// How the source draws λ.
#[derive(Debug, Clone)]
pub enum SourceLaw {
    /// Settings-independent; the source must never see a SETTING.
    Causal(LambdaLaw),
    /// Needs both settings, left first, before EMIT.
    Retro(RetroVariant),
}

/// How a station turns `(setting, λ)` into an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StationLaw {
    Malus,
    Sign,
}

impl StationLaw {
    pub fn respond(self, setting: Angle, lam: Angle, rng: &mut TrialRng) -> Outcome {
        match self {
            StationLaw::Malus => malus_draw(setting, lam, rng),
            StationLaw::Sign => polarizer_sign(setting, lam),
        }
    }
}

/// A framed, buffered, bidirectional connection.
#[derive(Debug)]
pub struct Link {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Link {
    pub fn new(stream: TcpStream) -> Result<Self, WireError> {
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(READ_TIMEOUT))?;
        Ok(Link {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }

    /// Queues a frame; call [`Link::flush`] before waiting for a reply.
    pub fn send(&mut self, msg: &WireMessage) -> Result<(), WireError> {
        write_frame(&mut self.writer, msg)
    }

    pub fn flush(&mut self) -> Result<(), WireError> {
        self.writer.flush()?;
        Ok(())
    }

    /// Next frame; end of stream is an error naming `peer`.
    pub fn recv(&mut self, peer: Role) -> Result<WireMessage, WireError> {
        read_frame(&mut self.reader)?.ok_or(WireError::Closed(peer))
    }
}

fn protocol(role: Role, message: WireMessage, reason: &'static str) -> WireError {
    WireError::Protocol {
        role,
        message,
        reason,
    }
}

fn handshake(link: &mut Link, role: Role) -> Result<(), WireError> {
    link.send(&WireMessage::hello(role))?;
    link.flush()?;
    let reply = link.recv(Role::Coordinator)?;
    if reply.kind != Kind::Hello || reply.role() != Some(Role::Coordinator) {
        return Err(protocol(role, reply, "expected the coordinator's HELLO"));
    }
    Ok(())
}

fn finish(link: &mut Link) -> Result<(), WireError> {
    link.send(&WireMessage::done())?;
    link.flush()
}

/// What an endpoint did before it saw DONE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EndpointSummary {
    pub role: Role,
    pub trials: u64,
}

/// Serves the source role until DONE.
pub fn run_source(
    stream: TcpStream,
    law: &SourceLaw,
    seed: u64,
) -> Result<EndpointSummary, WireError> {
    let role = Role::Source;
    let mut link = Link::new(stream)?;
    handshake(&mut link, role)?;
    let rng = RandomStream::new(seed).with_stream(SOURCE_STREAM);
    let mut settings: Vec<(u64, Angle)> = Vec::with_capacity(2);
    let mut trials = 0;
    loop {
        let msg = link.recv(Role::Coordinator)?;
        match msg.kind {
            Kind::Setting => {
                if matches!(law, SourceLaw::Causal(_)) {
                    return Err(protocol(role, msg, "SETTING reached a causal source"));
                }
                if settings.len() == 2 || settings.first().is_some_and(|&(t, _)| t != msg.trial) {
                    return Err(protocol(role, msg, "unexpected SETTING"));
                }
                settings.push((msg.trial, msg.angle().expect("validated payload")));
            }
            Kind::Emit => {
                let mut r = rng.substream(msg.trial);
                let lam = match law {
                    SourceLaw::Causal(l) => l.sample(&mut r),
                    SourceLaw::Retro(variant) => match settings[..] {
                        [(ta, a), (tb, b)] if ta == msg.trial && tb == msg.trial => {
                            retro_lambda_law(*variant, a, b).sample(&mut r)
                        }
                        _ => return Err(protocol(role, msg, "EMIT before both settings")),
                    },
                };
                settings.clear();
                link.send(&WireMessage::photon(msg.trial, lam))?;
                link.flush()?;
                trials += 1;
            }
            Kind::Done => {
                finish(&mut link)?;
                return Ok(EndpointSummary { role, trials });
            }
            _ => return Err(protocol(role, msg, "not a source message")),
        }
    }
}

/// Serves a station role (`Left` or `Right`) until DONE.
pub fn run_station(
    stream: TcpStream,
    role: Role,
    law: StationLaw,
    seed: u64,
) -> Result<EndpointSummary, WireError> {
    let stream_id = match role {
        Role::Left => LEFT_STREAM,
        Role::Right => RIGHT_STREAM,
        other => return Err(WireError::Config(format!("{other} is not a station"))),
    };
    let mut link = Link::new(stream)?;
    handshake(&mut link, role)?;
    let rng = RandomStream::new(seed).with_stream(stream_id);
    let mut setting: Option<(u64, Angle)> = None;
    let mut trials = 0;
    loop {
        let msg = link.recv(Role::Coordinator)?;
        match msg.kind {
            Kind::Setting => setting = Some((msg.trial, msg.angle().expect("validated payload"))),
            Kind::Photon => {
                let x = match setting.take() {
                    Some((t, x)) if t == msg.trial => x,
                    _ => return Err(protocol(role, msg, "PHOTON before this trial's SETTING")),
                };
                let lam = msg.angle().expect("validated payload");
                let outcome = law.respond(x, lam, &mut rng.substream(msg.trial));
                link.send(&WireMessage::result(msg.trial, outcome))?;
                link.flush()?;
                trials += 1;
            }
            Kind::Done => {
                finish(&mut link)?;
                return Ok(EndpointSummary { role, trials });
            }
            _ => return Err(protocol(role, msg, "not a station message")),
        }
    }
}
