use std::net::{TcpListener, TcpStream};
use std::thread;

use bellsim::models::{Atoms, LambdaLaw, RetroVariant};
use bellsim::wire::{
    coordinate, read_frame, replay, run_source, run_wire_experiment, transcript_audit, write_frame,
    Auditor, Kind, Role, SourceLaw, StationLaw, Transcript, TranscriptEntry, WireConfig, WireError,
    WireMessage, WirePlan, Wiring,
};
use bellsim::Angle;

fn config(wiring: Wiring, source: SourceLaw, n: usize) -> WireConfig {
    WireConfig {
        wiring,
        source,
        station: StationLaw::Malus,
        schedule: vec![(Angle::ZERO, Angle::frac_pi(1, 8)); n],
        seed: 17,
        record_hidden: true,
    }
}

fn retro(n: usize) -> WireConfig {
    config(Wiring::Retro, SourceLaw::Retro(RetroVariant::Symmetric), n)
}

fn causal(n: usize) -> WireConfig {
    config(Wiring::Causal, SourceLaw::Causal(LambdaLaw::Uniform), n)
}

#[test]
fn retro_run_is_audited_as_retro() {
    let mut t = Transcript::default();
    let trials = run_wire_experiment(&retro(200), &mut t).unwrap();
    assert_eq!(trials.len(), 200);
    let report = t.audit(Wiring::Retro).unwrap();
    assert_eq!(report.derived, Some(Wiring::Retro));
    assert!(report.matches);
    assert_eq!(report.trials, 200);
    assert_eq!(replay(&t.entries, Wiring::Retro).unwrap(), trials);
}

#[test]
fn causal_run_is_audited_as_causal() {
    let mut t = Transcript::default();
    let trials = run_wire_experiment(&causal(100), &mut t).unwrap();
    let report = t.audit(Wiring::Causal).unwrap();
    assert_eq!(report.derived, Some(Wiring::Causal));
    assert_eq!(report.settings_to_source, 0);
    assert!(report.matches);
    assert!(!t.audit(Wiring::Retro).unwrap().matches);
    assert_eq!(trials.trials.len(), 100);
}

#[test]
fn inserted_setting_flags_retro() {
    let mut t = Transcript::default();
    run_wire_experiment(&causal(20), &mut t).unwrap();
    let emit = t
        .entries
        .iter()
        .position(|e| e.msg.kind == Kind::Emit && e.msg.trial == 5)
        .unwrap();
    t.entries.insert(
        emit,
        TranscriptEntry {
            seq: 0,
            from: Role::Coordinator,
            to: Role::Source,
            msg: WireMessage::setting(5, Angle::ZERO),
        },
    );
    for (i, e) in t.entries.iter_mut().enumerate() {
        e.seq = i as u64;
    }
    let report = transcript_audit(&t.entries, Wiring::Causal).unwrap();
    assert_eq!(report.derived, Some(Wiring::Retro));
    assert!(!report.matches);
}

#[test]
fn truncated_transcript_is_an_error() {
    let mut t = Transcript::default();
    run_wire_experiment(&retro(10), &mut t).unwrap();
    let last_result = t
        .entries
        .iter()
        .rposition(|e| e.msg.kind == Kind::Result)
        .unwrap();
    let cut = &t.entries[..last_result];
    assert!(matches!(
        transcript_audit(cut, Wiring::Retro),
        Err(WireError::Truncated(_))
    ));
    let no_done = &t.entries[..t.entries.len() - 1];
    assert!(matches!(
        transcript_audit(no_done, Wiring::Retro),
        Err(WireError::Truncated(_))
    ));
}

#[test]
fn empty_schedule_still_says_goodbye() {
    let mut t = Transcript::default();
    let trials = run_wire_experiment(&retro(0), &mut t).unwrap();
    assert!(trials.is_empty());
    let kinds: Vec<Kind> = t.entries.iter().map(|e| e.msg.kind).collect();
    assert_eq!(kinds.iter().filter(|&&k| k == Kind::Done).count(), 6);
    assert_eq!(kinds.iter().filter(|&&k| k == Kind::Hello).count(), 6);
    let report = t.audit(Wiring::Retro).unwrap();
    assert_eq!(report.derived, None);
    assert!(report.matches);
}

#[test]
fn setting_at_causal_source_is_a_protocol_error() {
    // RETRO wiring forwards settings; a causal source must refuse them.
    let cfg = config(Wiring::Retro, SourceLaw::Causal(LambdaLaw::Uniform), 3);
    let err = run_wire_experiment(&cfg, &mut Transcript::default()).unwrap_err();
    match err {
        WireError::Protocol { role, message, .. } => {
            assert_eq!(role, Role::Source);
            assert_eq!(message.kind, Kind::Setting);
            assert!(message.to_string().contains(r#""kind":"SETTING""#));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn retro_source_needs_settings() {
    let cfg = config(Wiring::Causal, SourceLaw::Retro(RetroVariant::Symmetric), 2);
    let err = run_wire_experiment(&cfg, &mut Transcript::default()).unwrap_err();
    assert!(
        matches!(err, WireError::Protocol { role: Role::Source, message, .. } if message.kind == Kind::Emit)
    );
}

#[test]
fn hand_driven_source_rejects_setting() {
    // Drive a causal source by hand, as a misbehaving coordinator would.
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let src = thread::spawn(move || {
        run_source(
            TcpStream::connect(addr).unwrap(),
            &SourceLaw::Causal(LambdaLaw::Uniform),
            1,
        )
    });
    let (mut conn, _) = listener.accept().unwrap();
    let hello = read_frame(&mut conn).unwrap().unwrap();
    assert_eq!(hello.role(), Some(Role::Source));
    write_frame(&mut conn, &WireMessage::hello(Role::Coordinator)).unwrap();
    write_frame(&mut conn, &WireMessage::setting(0, Angle::ZERO)).unwrap();
    let err = src.join().unwrap().unwrap_err();
    assert!(err.to_string().contains(r#""kind":"SETTING""#), "{err}");
}

#[test]
fn same_seed_same_trials() {
    let atoms = Atoms::new([(Angle::frac_pi(1, 7), 0.3), (Angle::frac_pi(4, 7), 0.7)]).unwrap();
    let cfg = config(
        Wiring::Causal,
        SourceLaw::Causal(LambdaLaw::Atoms(atoms)),
        300,
    );
    let x = run_wire_experiment(&cfg, &mut Auditor::new()).unwrap();
    let y = run_wire_experiment(&cfg, &mut Auditor::new()).unwrap();
    assert_eq!(x, y);
}

#[test]
fn sign_stations_reproduce_outcomes_from_lambda() {
    let mut cfg = causal(200);
    cfg.station = StationLaw::Sign;
    let trials = run_wire_experiment(&cfg, &mut Transcript::default()).unwrap();
    for t in &trials {
        let Some(bellsim::Hidden::Angle(lam)) = t.hidden else {
            panic!("λ not recorded")
        };
        assert_eq!(t.outcome_a, bellsim::polarizer_sign(t.a, lam));
        assert_eq!(t.outcome_b, bellsim::polarizer_sign(t.b, lam));
    }
}

#[test]
fn transcript_ndjson_round_trip() {
    let mut t = Transcript::default();
    run_wire_experiment(&retro(5), &mut t).unwrap();
    let mut buf = Vec::new();
    t.write_ndjson(&mut buf).unwrap();
    let back = Transcript::read_ndjson(buf.as_slice()).unwrap();
    assert_eq!(back, t);
    let first = String::from_utf8(buf)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_owned();
    assert!(first.starts_with(r#"{"seq":0,"from":"#), "{first}");
}

#[test]
fn coordinator_refuses_duplicate_roles() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let fake = thread::spawn(move || {
        let mut conns = Vec::new();
        for _ in 0..2 {
            let mut c = TcpStream::connect(addr).unwrap();
            write_frame(&mut c, &WireMessage::hello(Role::Left)).unwrap();
            conns.push(c);
        }
        conns
    });
    let plan = WirePlan {
        wiring: Wiring::Causal,
        schedule: vec![],
        record_hidden: false,
    };
    let mut sink = Transcript::default();
    let err = coordinate(&listener, &plan, &mut sink).unwrap_err();
    assert!(matches!(
        err,
        WireError::Protocol {
            role: Role::Coordinator,
            ..
        }
    ));
    drop(fake.join());
}

#[test]
fn auditor_and_transcript_agree() {
    let mut pair = (Transcript::default(), Auditor::new());
    run_wire_experiment(&retro(50), &mut pair).unwrap();
    let (t, auditor) = pair;
    assert_eq!(
        auditor.finish(Wiring::Retro).unwrap(),
        t.audit(Wiring::Retro).unwrap()
    );
}
