//! One handler per subcommand.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::Context;
use bellsim::inequalities::{
    bell1964, bell1964_estimated, chsh, violation_search, BellTriple, ChshQuad, EstimatedBell,
    Expression, InequalityError, SearchResult, CHSH_LOCAL_BOUND, ESTIMATE_SIGMAS,
};
use bellsim::models::LambdaLaw;
use bellsim::models::{by_id, nonlocalize, Model, ModelError, RetroModel, RetroVariant, MODEL_IDS};
use bellsim::signaling::{lambda_leak, nosignal_scan_with, FixedSide, Side, SignalingError};
use bellsim::statistics::{
    run_experiment_with, run_schedule, sweep_with, CorrelatorEstimate, Experiment, JointCounts,
    RunOptions, StatsError,
};
use bellsim::wire::{
    coordinate, run_source, run_station, run_wire_experiment, AuditReport, Auditor, NdjsonSink,
    Role, SourceLaw, StationLaw, Transcript, TranscriptSink, WireConfig, WireError, WirePlan,
    Wiring,
};
use bellsim::{Angle, SamplingOrder, TrialSet};
use serde::Serialize;

use crate::output::{self, check_output_path, Format, TrialRow};
use crate::parse::{read_schedule, AngleSpec};
use crate::*;

/// Outcome of a subcommand that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Passed,
    Failed,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit status 2.
    Usage(String),
    /// The run itself broke: exit status 1.
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

impl From<StatsError> for Failure {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::ZeroTrials
            | StatsError::EmptySweep
            | StatsError::SeparationOutOfRange(_) => Failure::Usage(e.to_string()),
            StatsError::Model(m) => m.into(),
            other => Failure::Run(other.into()),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownModel(_)
            | ModelError::UnsupportedLaw(_)
            | ModelError::VariantMismatch { .. } => Failure::Usage(e.to_string()),
            other => Failure::Run(other.into()),
        }
    }
}

impl From<InequalityError> for Failure {
    fn from(e: InequalityError) -> Self {
        match e {
            InequalityError::Model(m) => m.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<SignalingError> for Failure {
    fn from(e: SignalingError) -> Self {
        match e {
            SignalingError::TooFewTrials(_) | SignalingError::EmptyScan => {
                Failure::Usage(e.to_string())
            }
            SignalingError::Stats(s) => s.into(),
            SignalingError::Model(m) => m.into(),
        }
    }
}

impl From<WireError> for Failure {
    fn from(e: WireError) -> Self {
        Failure::Run(e.into())
    }
}

type Outcome = Result<Status, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn writer(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    check_output_path(path).map_err(Failure::Usage)?;
    Ok(output::open(path.map(PathBuf::as_path))?)
}

fn emit_json<T: Serialize>(path: Option<&PathBuf>, value: &T) -> Result<(), Failure> {
    let mut out = writer(path)?;
    output::json(&mut *out, value)?;
    out.flush()?;
    Ok(())
}

pub fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Sweep(a) => sweep(a),
        Command::Bell1964(a) => bell(a),
        Command::Chsh(a) => chsh_cmd(a),
        Command::Nosignal(a) => nosignal(a),
        Command::Leak(a) => leak(a),
        Command::TranslateCheck(a) => translate_check(a),
        Command::Wire(w) => match w {
            WireCommand::Run(a) => wire_run(a),
            WireCommand::Coordinator(a) => wire_coordinator(a),
            WireCommand::Source(a) => wire_source(a),
            WireCommand::Station(a) => wire_station(a),
            WireCommand::Audit(a) => wire_audit(a),
        },
        Command::ListModels => {
            let mut out = writer(None)?;
            for id in MODEL_IDS {
                writeln!(out, "{id}")?;
            }
            out.flush()?;
            Ok(Status::Passed)
        }
    }
}

fn model(arg: &ModelArg) -> Result<std::sync::Arc<dyn Model>, Failure> {
    Ok(by_id(&arg.model)?)
}

enum Settings {
    Fixed { a: Angle, b: Angle, n: u64 },
    Schedule(Vec<(Angle, Angle)>),
}

impl Settings {
    fn from_args(s: &SettingsArgs) -> Result<Self, Failure> {
        match (&s.schedule, s.a, s.b, s.trials) {
            (Some(path), ..) => Ok(Settings::Schedule(
                read_schedule(path).map_err(|e| usage(format!("{e:#}")))?,
            )),
            (None, Some(a), Some(b), Some(n)) => Ok(Settings::Fixed {
                a: a.angle(),
                b: b.angle(),
                n,
            }),
            _ => Err(usage("give --a, --b and --trials, or --schedule")),
        }
    }

    fn into_schedule(self) -> Vec<(Angle, Angle)> {
        match self {
            Settings::Fixed { a, b, n } => vec![(a, b); n as usize],
            Settings::Schedule(s) => s,
        }
    }
}

/// JSON shape shared by `simulate` and the wire commands.
#[derive(Serialize)]
struct RunSummary<'a> {
    model: &'a str,
    order: SamplingOrder,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    n: u64,
    mean_a: f64,
    mean_b: f64,
    correlator: CorrelatorEstimate,
    counts: JointCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    audit: Option<AuditReport>,
    trials: Vec<TrialRow>,
}

fn write_trials(
    out: &OutputArgs,
    trials: &TrialSet,
    seed: Option<u64>,
    with_lambda: bool,
    audit: Option<AuditReport>,
) -> Result<(), Failure> {
    let mut w = writer(out.output.as_ref())?;
    match out.format {
        Format::Csv => output::trials_csv(&mut *w, trials, with_lambda)?,
        Format::Json => {
            let counts = JointCounts::from_trials(trials);
            let summary = RunSummary {
                model: &trials.model,
                order: trials.order,
                seed,
                n: counts.total(),
                mean_a: if counts.total() > 0 {
                    counts.mean_a()
                } else {
                    0.0
                },
                mean_b: if counts.total() > 0 {
                    counts.mean_b()
                } else {
                    0.0
                },
                correlator: if counts.total() > 0 {
                    counts.correlator()
                } else {
                    CorrelatorEstimate::from_mean(0.0, 0)
                },
                counts,
                audit,
                trials: trials.iter().map(TrialRow::from).collect(),
            };
            output::json(&mut *w, &summary)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Outcome {
    let m = model(&args.model)?;
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    let opts = RunOptions {
        workers: args.workers,
        keep_trials: true,
        record_hidden: args.record_lambda,
        stream_id: 0,
    };
    let run: Experiment = match Settings::from_args(&args.settings)? {
        Settings::Fixed { a, b, n } => run_experiment_with(m.as_ref(), a, b, n, args.seed, &opts)?,
        Settings::Schedule(s) => run_schedule(m.as_ref(), &s, args.seed, &opts)?,
    };
    let trials = run.trials.expect("trials were requested");
    write_trials(
        &args.out,
        &trials,
        Some(args.seed),
        args.record_lambda,
        None,
    )?;
    Ok(Status::Passed)
}

fn sweep(args: SweepArgs) -> Outcome {
    let m = model(&args.model)?;
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    let deltas: Vec<f64> = args
        .grid
        .points()
        .into_iter()
        .map(AngleSpec::radians)
        .collect();
    let r = sweep_with(m.as_ref(), &deltas, args.trials, args.seed, args.workers)?;
    let mut w = writer(args.out.output.as_ref())?;
    match args.out.format {
        Format::Csv => output::sweep_csv(&mut *w, &r)?,
        Format::Json => output::json(&mut *w, &r)?,
    }
    w.flush()?;
    Ok(Status::Passed)
}

/// Exact correlator of `m`, failing early when the model has no exact law.
fn exact_correlator(m: &dyn Model) -> Result<impl Fn(Angle, Angle) -> f64 + '_, Failure> {
    m.exact_correlator(Angle::ZERO, Angle::ZERO)?;
    Ok(move |a, b| m.exact_correlator(a, b).expect("exact law checked above"))
}

fn estimate(
    m: &dyn Model,
    pairs: &[(Angle, Angle)],
    n: u64,
    seed: u64,
) -> Result<Vec<CorrelatorEstimate>, Failure> {
    pairs
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| {
            let opts = RunOptions {
                stream_id: k as u64,
                ..RunOptions::counts_only()
            };
            Ok(run_experiment_with(m, x, y, n, seed, &opts)?.correlator)
        })
        .collect()
}

#[derive(Serialize)]
struct EstimatedBellReport {
    a: Angle,
    b: Angle,
    c: Angle,
    ab: CorrelatorEstimate,
    ac: CorrelatorEstimate,
    bc: CorrelatorEstimate,
    #[serde(flatten)]
    bell: EstimatedBell,
}

fn bell(args: Bell1964Args) -> Outcome {
    let m = model(&args.model)?;
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    if let Some(resolution) = args.search {
        let r: SearchResult = violation_search(
            exact_correlator(m.as_ref())?,
            Expression::Bell1964,
            resolution,
        )?;
        emit_json(args.out.output.as_ref(), &r)?;
        return Ok(Status::Passed);
    }
    let (a, b, c) = match (args.a, args.b, args.c) {
        (Some(a), Some(b), Some(c)) => (a.angle(), b.angle(), c.angle()),
        _ => return Err(usage("give --a, --b and --c, or --search")),
    };
    match args.trials {
        None => {
            let t: BellTriple = bell1964(exact_correlator(m.as_ref())?, a, b, c);
            emit_json(args.out.output.as_ref(), &t)?;
        }
        Some(n) => {
            let e = estimate(m.as_ref(), &[(a, b), (a, c), (b, c)], n, args.seed)?;
            let report = EstimatedBellReport {
                a,
                b,
                c,
                ab: e[0],
                ac: e[1],
                bc: e[2],
                bell: bell1964_estimated(&e[0], &e[1], &e[2]),
            };
            emit_json(args.out.output.as_ref(), &report)?;
        }
    }
    Ok(Status::Passed)
}

#[derive(Serialize)]
struct EstimatedChsh {
    #[serde(flatten)]
    quad: ChshQuad,
    stderr: f64,
    /// `S − 2` exceeds five standard errors.
    violated: bool,
    estimates: Vec<CorrelatorEstimate>,
}

fn chsh_cmd(args: ChshArgs) -> Outcome {
    let m = model(&args.model)?;
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    if let Some(resolution) = args.search {
        let r = violation_search(exact_correlator(m.as_ref())?, Expression::Chsh, resolution)?;
        emit_json(args.out.output.as_ref(), &r)?;
        return Ok(Status::Passed);
    }
    let (a, a2, b, b2) = match (args.a, args.a2, args.b, args.b2) {
        (Some(a), Some(a2), Some(b), Some(b2)) => (a.angle(), a2.angle(), b.angle(), b2.angle()),
        _ => return Err(usage("give --a, --a2, --b and --b2, or --search")),
    };
    match args.trials {
        None => emit_json(
            args.out.output.as_ref(),
            &chsh(exact_correlator(m.as_ref())?, a, a2, b, b2),
        )?,
        Some(n) => {
            let pairs = [(a, b), (a, b2), (a2, b), (a2, b2)];
            let e = estimate(m.as_ref(), &pairs, n, args.seed)?;
            let lookup = |x: Angle, y: Angle| {
                let k = pairs
                    .iter()
                    .position(|&p| p == (x, y))
                    .expect("one of the four pairs");
                e[k].mean
            };
            let quad = chsh(lookup, a, a2, b, b2);
            let stderr = e.iter().map(|x| x.stderr * x.stderr).sum::<f64>().sqrt();
            let report = EstimatedChsh {
                quad,
                stderr,
                violated: quad.s - CHSH_LOCAL_BOUND > ESTIMATE_SIGMAS * stderr,
                estimates: e,
            };
            emit_json(args.out.output.as_ref(), &report)?;
        }
    }
    Ok(Status::Passed)
}

fn nosignal(args: NosignalArgs) -> Outcome {
    let m = model(&args.model)?;
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    let fixed = FixedSide {
        side: match args.fix {
            SideArg::Left => Side::Left,
            SideArg::Right => Side::Right,
        },
        setting: args.at.angle(),
    };
    let scan: Vec<Angle> = args
        .scan
        .points()
        .into_iter()
        .map(AngleSpec::angle)
        .collect();
    let s = nosignal_scan_with(
        m.as_ref(),
        fixed,
        &scan,
        args.trials,
        args.seed,
        args.workers,
    )?;
    let mut w = writer(args.out.output.as_ref())?;
    match args.out.format {
        Format::Csv => output::scan_csv(&mut *w, &s)?,
        Format::Json => output::json(&mut *w, &s)?,
    }
    w.flush()?;
    let passed = s.max_abs_z < args.threshold;
    eprintln!(
        "{}: max |z| = {} (threshold {})",
        if passed { "pass" } else { "FAIL" },
        s.max_abs_z,
        args.threshold
    );
    Ok(if passed {
        Status::Passed
    } else {
        Status::Failed
    })
}

fn variant(v: VariantArg) -> RetroVariant {
    match v {
        VariantArg::Symmetric => RetroVariant::Symmetric,
        VariantArg::Asymmetric => RetroVariant::AsymmetricLeftFirst,
    }
}

fn leak(args: LeakArgs) -> Outcome {
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    let r = lambda_leak(
        &RetroModel::new(variant(args.variant)),
        args.a0.angle(),
        args.a1.angle(),
        args.b.angle(),
    )?;
    emit_json(args.out.output.as_ref(), &r)?;
    Ok(Status::Passed)
}

#[derive(Serialize)]
struct TranslationReport {
    points: usize,
    max_total_variation: f64,
    tolerance: f64,
    passed: bool,
}

fn translate_check(args: TranslateArgs) -> Outcome {
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    let retro = RetroModel::symmetric();
    let nl = nonlocalize(&retro)?;
    let grid: Vec<Angle> = args
        .grid
        .points()
        .into_iter()
        .map(AngleSpec::angle)
        .collect();
    let mut worst = 0.0f64;
    for &a in &grid {
        for &b in &grid {
            worst = worst.max(
                nl.exact_joint(a, b)?
                    .total_variation(&retro.exact_joint(a, b)?),
            );
        }
    }
    let report = TranslationReport {
        points: grid.len() * grid.len(),
        max_total_variation: worst,
        tolerance: args.tolerance,
        passed: worst <= args.tolerance,
    };
    emit_json(args.out.output.as_ref(), &report)?;
    Ok(if report.passed {
        Status::Passed
    } else {
        Status::Failed
    })
}

fn wiring(w: WiringArg) -> Wiring {
    match w {
        WiringArg::Causal => Wiring::Causal,
        WiringArg::Retro => Wiring::Retro,
    }
}

fn source_law(s: SourceArg) -> SourceLaw {
    match s {
        SourceArg::Uniform => SourceLaw::Causal(LambdaLaw::Uniform),
        SourceArg::Retro => SourceLaw::Retro(RetroVariant::Symmetric),
        SourceArg::RetroSeq => SourceLaw::Retro(RetroVariant::AsymmetricLeftFirst),
    }
}

fn station_law(s: StationArg) -> StationLaw {
    match s {
        StationArg::Malus => StationLaw::Malus,
        StationArg::Sign => StationLaw::Sign,
    }
}

/// Runs `job` with an auditor, teeing to an NDJSON file when asked.
fn audited<F>(
    transcript: Option<&PathBuf>,
    declared: Wiring,
    job: F,
) -> Result<(TrialSet, AuditReport), Failure>
where
    F: FnOnce(&mut dyn TranscriptSink) -> Result<TrialSet, WireError>,
{
    let mut auditor = Auditor::new();
    let trials = match transcript {
        None => job(&mut auditor)?,
        Some(path) => {
            let file =
                File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut tee = (&mut auditor, NdjsonSink::new(BufWriter::new(file)));
            let trials = job(&mut tee)?;
            tee.1.into_inner().flush()?;
            trials
        }
    };
    let report = auditor.finish(declared)?;
    Ok((trials, report))
}

fn check_paths(out: &OutputArgs, transcript: Option<&PathBuf>) -> Result<(), Failure> {
    check_output_path(out.output.as_ref()).map_err(Failure::Usage)?;
    check_output_path(transcript).map_err(Failure::Usage)
}

fn wire_run(args: WireRunArgs) -> Outcome {
    check_paths(&args.out, args.transcript.as_ref())?;
    let declared = wiring(args.wiring);
    let source = args.source.unwrap_or(match args.wiring {
        WiringArg::Causal => SourceArg::Uniform,
        WiringArg::Retro => SourceArg::Retro,
    });
    let config = WireConfig {
        wiring: declared,
        source: source_law(source),
        station: station_law(args.station),
        schedule: Settings::from_args(&args.settings)?.into_schedule(),
        seed: args.seed,
        record_hidden: args.record_lambda,
    };
    let (trials, report) = audited(args.transcript.as_ref(), declared, |sink| {
        run_wire_experiment(&config, sink)
    })?;
    write_trials(
        &args.out,
        &trials,
        Some(args.seed),
        args.record_lambda,
        Some(report),
    )?;
    Ok(if report.matches {
        Status::Passed
    } else {
        Status::Failed
    })
}

fn wire_coordinator(args: CoordinatorArgs) -> Outcome {
    check_paths(&args.out, args.transcript.as_ref())?;
    let declared = wiring(args.wiring);
    let plan = WirePlan {
        wiring: declared,
        schedule: Settings::from_args(&args.settings)?.into_schedule(),
        record_hidden: args.record_lambda,
    };
    let listener =
        TcpListener::bind(&args.listen).with_context(|| format!("binding {}", args.listen))?;
    eprintln!("listening on {}", listener.local_addr()?);
    let (trials, report) = audited(args.transcript.as_ref(), declared, |sink| {
        coordinate(&listener, &plan, sink)
    })?;
    write_trials(&args.out, &trials, None, args.record_lambda, Some(report))?;
    Ok(if report.matches {
        Status::Passed
    } else {
        Status::Failed
    })
}

/// Endpoints may start before the coordinator listens; retry for a while.
fn connect(addr: &str) -> Result<TcpStream, Failure> {
    let deadline = Instant::now() + Duration::from_secs(10);
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => {
                return Err(Failure::Run(
                    anyhow::Error::new(e).context(format!("connecting to {addr}")),
                ))
            }
            Err(_) => thread::sleep(Duration::from_millis(50)),
        }
    }
}

fn wire_source(args: SourceArgs) -> Outcome {
    let summary = run_source(connect(&args.connect)?, &source_law(args.source), args.seed)?;
    eprintln!("source served {} trials", summary.trials);
    Ok(Status::Passed)
}

fn wire_station(args: StationArgs) -> Outcome {
    let role = match args.role {
        StationRole::Left => Role::Left,
        StationRole::Right => Role::Right,
    };
    let summary = run_station(
        connect(&args.connect)?,
        role,
        station_law(args.station),
        args.seed,
    )?;
    eprintln!("{role} station served {} trials", summary.trials);
    Ok(Status::Passed)
}

fn wire_audit(args: AuditArgs) -> Outcome {
    check_output_path(args.out.output.as_ref()).map_err(Failure::Usage)?;
    let file = File::open(&args.transcript)
        .map_err(|e| usage(format!("{}: {e}", args.transcript.display())))?;
    let t = Transcript::read_ndjson(BufReader::new(file))?;
    let report = t.audit(wiring(args.declared))?;
    emit_json(args.out.output.as_ref(), &report)?;
    Ok(if report.matches {
        Status::Passed
    } else {
        Status::Failed
    })
}
