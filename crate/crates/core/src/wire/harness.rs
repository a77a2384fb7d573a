//! The coordinator hub and the in-process runner.

use std::collections::BTreeMap;
use std::net::{TcpListener, TcpStream};
use std::thread;

use crate::angle::Angle;
use crate::trial::{Hidden, SamplingOrder, Trial, TrialSet};
use crate::wire::endpoint::{
    run_source, run_station, EndpointSummary, Link, SourceLaw, StationLaw,
};
use crate::wire::transcript::{TranscriptEntry, TranscriptSink};
use crate::wire::{Kind, Role, WireError, WireMessage, Wiring};

/// What the coordinator drives: one trial per schedule entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WirePlan {
    pub wiring: Wiring,
    pub schedule: Vec<(Angle, Angle)>,
    /// Copy each PHOTON's λ into the trial record.
    pub record_hidden: bool,
}

/// Everything needed to run all four parties in one process.
#[derive(Debug, Clone)]
pub struct WireConfig {
    pub wiring: Wiring,
    pub source: SourceLaw,
    pub station: StationLaw,
    pub schedule: Vec<(Angle, Angle)>,
    pub seed: u64,
    pub record_hidden: bool,
}

impl WireConfig {
    pub fn plan(&self) -> WirePlan {
        WirePlan {
            wiring: self.wiring,
            schedule: self.schedule.clone(),
            record_hidden: self.record_hidden,
        }
    }
}

pub(crate) fn model_label(wiring: Wiring) -> &'static str {
    match wiring {
        Wiring::Causal => "wire:causal",
        Wiring::Retro => "wire:retro",
    }
}

pub(crate) fn sampling_order(wiring: Wiring) -> SamplingOrder {
    match wiring {
        Wiring::Causal => SamplingOrder::SourceFirst,
        Wiring::Retro => SamplingOrder::SettingsFirst,
    }
}

struct Hub<'s> {
    wiring: Wiring,
    links: BTreeMap<Role, Link>,
    seq: u64,
    sink: &'s mut dyn TranscriptSink,
}

impl Hub<'_> {
    fn log(&mut self, from: Role, to: Role, msg: WireMessage) -> Result<(), WireError> {
        let entry = TranscriptEntry {
            seq: self.seq,
            from,
            to,
            msg,
        };
        self.seq += 1;
        self.sink.record(&entry)
    }

    fn send(&mut self, to: Role, msg: WireMessage) -> Result<(), WireError> {
        if self.wiring == Wiring::Causal && to == Role::Source && msg.kind == Kind::Setting {
            return Err(WireError::Protocol {
                role: Role::Coordinator,
                message: msg,
                reason: "causal wiring has no SETTING edge to the source",
            });
        }
        self.links
            .get_mut(&to)
            .expect("all roles connected")
            .send(&msg)?;
        self.log(Role::Coordinator, to, msg)
    }

    fn recv(&mut self, from: Role, kind: Kind, trial: u64) -> Result<WireMessage, WireError> {
        for link in self.links.values_mut() {
            link.flush()?;
        }
        let msg = self
            .links
            .get_mut(&from)
            .expect("all roles connected")
            .recv(from)?;
        self.log(from, Role::Coordinator, msg)?;
        if msg.kind != kind || msg.trial != trial {
            return Err(WireError::Protocol {
                role: Role::Coordinator,
                message: msg,
                reason: "out-of-order message",
            });
        }
        Ok(msg)
    }
}

/// Accepts the three endpoints on `listener` and runs the plan.
pub fn coordinate(
    listener: &TcpListener,
    plan: &WirePlan,
    sink: &mut dyn TranscriptSink,
) -> Result<TrialSet, WireError> {
    let mut hub = Hub {
        wiring: plan.wiring,
        links: BTreeMap::new(),
        seq: 0,
        sink,
    };
    while hub.links.len() < 3 {
        let (stream, _) = listener.accept()?;
        let mut link = Link::new(stream)?;
        let hello = link.recv(Role::Coordinator)?;
        let role = match (hello.kind, hello.role()) {
            (Kind::Hello, Some(r @ (Role::Source | Role::Left | Role::Right)))
                if !hub.links.contains_key(&r) =>
            {
                r
            }
            _ => {
                return Err(WireError::Protocol {
                    role: Role::Coordinator,
                    message: hello,
                    reason: "expected HELLO from an unclaimed endpoint role",
                })
            }
        };
        hub.log(role, Role::Coordinator, hello)?;
        hub.links.insert(role, link);
    }
    for role in [Role::Source, Role::Left, Role::Right] {
        hub.send(role, WireMessage::hello(Role::Coordinator))?;
    }

    let mut trials = Vec::with_capacity(plan.schedule.len());
    for (i, &(a, b)) in plan.schedule.iter().enumerate() {
        let i = i as u64;
        if plan.wiring == Wiring::Retro {
            hub.send(Role::Source, WireMessage::setting(i, a))?;
            hub.send(Role::Source, WireMessage::setting(i, b))?;
        }
        hub.send(Role::Source, WireMessage::emit(i))?;
        let lam = hub
            .recv(Role::Source, Kind::Photon, i)?
            .angle()
            .expect("validated payload");
        for (station, x) in [(Role::Left, a), (Role::Right, b)] {
            hub.send(station, WireMessage::setting(i, x))?;
            hub.send(station, WireMessage::photon(i, lam))?;
        }
        let outcome_a = hub
            .recv(Role::Left, Kind::Result, i)?
            .outcome()
            .expect("validated payload");
        let outcome_b = hub
            .recv(Role::Right, Kind::Result, i)?
            .outcome()
            .expect("validated payload");
        trials.push(Trial {
            index: i,
            a,
            b,
            outcome_a,
            outcome_b,
            hidden: plan.record_hidden.then_some(Hidden::Angle(lam)),
        });
    }

    for role in [Role::Source, Role::Left, Role::Right] {
        hub.send(role, WireMessage::done())?;
    }
    for role in [Role::Source, Role::Left, Role::Right] {
        hub.recv(role, Kind::Done, 0)?;
    }
    Ok(TrialSet {
        model: model_label(plan.wiring).into(),
        order: sampling_order(plan.wiring),
        trials,
    })
}

/// Runs coordinator, source and both stations in one process over loopback TCP.
///
/// When an endpoint aborts, its error is returned in preference to the
/// coordinator's, since the coordinator then only sees a closed link.
pub fn run_wire_experiment(
    config: &WireConfig,
    sink: &mut dyn TranscriptSink,
) -> Result<TrialSet, WireError> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let plan = config.plan();
    thread::scope(|s| {
        let source = s.spawn(|| run_source(TcpStream::connect(addr)?, &config.source, config.seed));
        let stations = [Role::Left, Role::Right].map(|role| {
            s.spawn(move || {
                run_station(TcpStream::connect(addr)?, role, config.station, config.seed)
            })
        });
        let coordinated = coordinate(&listener, &plan, sink);
        drop(listener);
        let mut endpoint_results: Vec<Result<EndpointSummary, WireError>> = vec![join(source)];
        endpoint_results.extend(stations.map(join));
        let mut first_err = None;
        for r in endpoint_results {
            if let Err(e) = r {
                if matches!(e, WireError::Protocol { .. }) {
                    return Err(e);
                }
                first_err.get_or_insert(e);
            }
        }
        let trials = coordinated?;
        match first_err {
            Some(e) => Err(e),
            None => Ok(trials),
        }
    })
}

fn join(
    h: thread::ScopedJoinHandle<'_, Result<EndpointSummary, WireError>>,
) -> Result<EndpointSummary, WireError> {
    h.join()
        .unwrap_or_else(|_| Err(WireError::Config("endpoint thread panicked".into())))
}

/// Rebuilds the trial records from a transcript.
pub fn replay<'a, I>(entries: I, wiring: Wiring) -> Result<TrialSet, WireError>
where
    I: IntoIterator<Item = &'a TranscriptEntry>,
{
    #[derive(Default)]
    struct Partial {
        a: Option<Angle>,
        b: Option<Angle>,
        lam: Option<Angle>,
        outcome_a: Option<crate::angle::Outcome>,
        outcome_b: Option<crate::angle::Outcome>,
    }
    let mut partial: BTreeMap<u64, Partial> = BTreeMap::new();
    for e in entries {
        let m = e.msg;
        let p = || WireError::Audit(format!("unexpected entry during replay: {m}"));
        match (m.kind, e.from, e.to) {
            (Kind::Setting, Role::Coordinator, Role::Left) => {
                partial.entry(m.trial).or_default().a = m.angle()
            }
            (Kind::Setting, Role::Coordinator, Role::Right) => {
                partial.entry(m.trial).or_default().b = m.angle()
            }
            (Kind::Photon, Role::Source, Role::Coordinator) => {
                partial.entry(m.trial).or_default().lam = m.angle()
            }
            (Kind::Result, Role::Left, Role::Coordinator) => {
                partial.get_mut(&m.trial).ok_or_else(p)?.outcome_a = m.outcome()
            }
            (Kind::Result, Role::Right, Role::Coordinator) => {
                partial.get_mut(&m.trial).ok_or_else(p)?.outcome_b = m.outcome()
            }
            _ => {}
        }
    }
    let mut trials = Vec::with_capacity(partial.len());
    for (index, p) in partial {
        match (p.a, p.b, p.outcome_a, p.outcome_b) {
            (Some(a), Some(b), Some(outcome_a), Some(outcome_b)) => trials.push(Trial {
                index,
                a,
                b,
                outcome_a,
                outcome_b,
                hidden: p.lam.map(Hidden::Angle),
            }),
            _ => return Err(WireError::Truncated(format!("trial {index} incomplete"))),
        }
    }
    Ok(TrialSet {
        model: model_label(wiring).into(),
        order: sampling_order(wiring),
        trials,
    })
}
