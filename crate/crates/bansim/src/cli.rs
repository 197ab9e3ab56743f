//! Command-line front end: validate scenario files, run simulations, and
//! run the built-in conformance suites.
//!
//! Exit codes are the machine contract: 0 success, 1 internal error,
//! 2 scenario file missing or unreadable, 3 scenario validation failure.
//! Summary text is for humans and not stable.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{classify, ChAction, EscalationEvent, EscalationState, PatientMode, TimerConfig};
use crate::codec::{
    build_status_field, crc16, decode_frame, encode_frame, EventRecord, Fingerprint, Frame,
    QuantSpec,
};
use crate::engine::{run_with_seed, write_trace, Metrics, Scenario};
use crate::time::VirtualTime;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_UNREADABLE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

/// Body-area-network protocol simulator.
#[derive(Parser, Debug)]
#[command(name = "bansim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    /// Human-readable summary table.
    Table,
    /// Metrics JSON on stdout.
    Structured,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario and write its trace and metrics.
    Run {
        /// Scenario file (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's seed; the effective seed lands in the
        /// trace header.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for trace.jsonl and metrics.json.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Summary format.
        #[arg(long, value_enum, default_value_t = ReportFormat::Table)]
        report: ReportFormat,
        /// Print per-event counts while running.
        #[arg(short, long)]
        verbose: bool,
    },
    /// Check a scenario file against every invariant.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run the built-in conformance suites.
    Selftest,
}

/// Everything `run` needs, resolved from the command line.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario_path: PathBuf,
    pub seed_override: Option<u64>,
    pub out_dir: PathBuf,
    pub report: ReportFormat,
    pub verbose: bool,
}

pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            report,
            verbose,
        } => cmd_run(&RunConfig {
            scenario_path: scenario,
            seed_override: seed,
            out_dir: out,
            report,
            verbose,
        }),
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Selftest => cmd_selftest(),
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, i32> {
    let text = match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(EXIT_UNREADABLE);
        }
    };
    match Scenario::from_json(&text) {
        Ok(s) => Ok(s),
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_INVALID)
        }
    }
}

/// Runs the scenario and writes `trace.jsonl` and `metrics.json` into the
/// output directory. Nothing is written anywhere else.
pub fn cmd_run(config: &RunConfig) -> i32 {
    let scenario = match load_scenario(&config.scenario_path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let seed = config.seed_override.unwrap_or(scenario.seed);

    let result = std::panic::catch_unwind(|| run_with_seed(&scenario, seed));
    let output = match result {
        Ok(Ok(output)) => output,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
        Err(_) => {
            eprintln!("error: internal engine failure");
            return EXIT_INTERNAL;
        }
    };

    if let Err(e) = fs::create_dir_all(&config.out_dir) {
        eprintln!("error: cannot create {}: {e}", config.out_dir.display());
        return EXIT_INTERNAL;
    }
    let trace_path = config.out_dir.join("trace.jsonl");
    let metrics_path = config.out_dir.join("metrics.json");
    let metrics_json = serde_json::to_string_pretty(&output.metrics)
        .expect("metrics always serialize");
    if let Err(e) = fs::write(&trace_path, write_trace(&output.trace)) {
        eprintln!("error: cannot write {}: {e}", trace_path.display());
        return EXIT_INTERNAL;
    }
    if let Err(e) = fs::write(&metrics_path, metrics_json.as_bytes()) {
        eprintln!("error: cannot write {}: {e}", metrics_path.display());
        return EXIT_INTERNAL;
    }

    if config.verbose {
        println!("seed {seed}, {} trace records", output.trace.len());
    }
    match config.report {
        ReportFormat::Table => print_summary(&output.metrics, seed),
        ReportFormat::Structured => println!("{metrics_json}"),
    }
    println!(
        "wrote {} and {}",
        trace_path.display(),
        metrics_path.display()
    );
    EXIT_OK
}

fn print_summary(m: &Metrics, seed: u64) {
    println!("run summary (seed {seed}, {} ms simulated)", m.duration_ms);
    println!(
        "  mode occupancy   normal {} ms | semi-critical {} ms | critical {} ms",
        m.mode_occupancy.normal_ms, m.mode_occupancy.semi_critical_ms, m.mode_occupancy.critical_ms
    );
    println!(
        "  escalations      {} activations | stage sends {}/{}/{} | acked {} | returns {}",
        m.escalation.activations,
        m.escalation.stage1_sends,
        m.escalation.stage2_sends,
        m.escalation.stage3_sends,
        m.escalation.acked_activations,
        m.escalation.interrupt_returns
    );
    println!(
        "  daily reports    {} sent | {} retries | {} acked",
        m.daily.reports_sent, m.daily.retries, m.daily.acked
    );
    println!(
        "  frames           {} sent | {} delivered | {} lost | {} undecodable",
        m.frames.sent, m.frames.delivered, m.frames.lost, m.frames.decode_dropped
    );
    if m.delivery.count > 0 {
        println!(
            "  delivery latency {} samples | min {} ms | mean {:.1} ms | max {} ms",
            m.delivery.count, m.delivery.min_ms, m.delivery.mean_ms, m.delivery.max_ms
        );
    }
    if m.emergency_detection.count > 0 {
        println!(
            "  detection        {} emergencies | min {} ms | mean {:.1} ms | max {} ms",
            m.emergency_detection.count,
            m.emergency_detection.min_ms,
            m.emergency_detection.mean_ms,
            m.emergency_detection.max_ms
        );
    }
    println!(
        "  fault detection  {} true positives | {} false positives | {} false negatives",
        m.fault_detection.true_positives,
        m.fault_detection.false_positives,
        m.fault_detection.false_negatives
    );
    let energy: Vec<String> = m
        .energy_by_link
        .iter()
        .map(|(k, v)| format!("{} {v:.1}", k.name()))
        .collect();
    println!(
        "  energy           total {:.1} ({})",
        m.energy_total,
        energy.join(" | ")
    );
    println!(
        "  sinks            {} records? advisories {} | dispatches {}",
        m.advisories + m.service_dispatches,
        m.advisories,
        m.service_dispatches
    );
}

/// Validates the scenario file; exit 0 when every invariant holds.
pub fn cmd_validate(path: &Path) -> i32 {
    match load_scenario(path) {
        Ok(_) => {
            println!("{}: ok", path.display());
            EXIT_OK
        }
        Err(code) => code,
    }
}

struct Suite {
    name: &'static str,
    passed: u64,
    failed: u64,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            name,
            passed: 0,
            failed: 0,
        }
    }

    fn check(&mut self, ok: bool, what: &str) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            eprintln!("  FAIL [{}] {what}", self.name);
        }
    }

    fn report(&self) -> bool {
        println!(
            "  {:<24} {} passed, {} failed",
            self.name, self.passed, self.failed
        );
        self.failed == 0
    }
}

/// Built-in conformance suites: codec round-trip, checksum corruption
/// detection, escalation timeline, and classifier boundaries.
pub fn cmd_selftest() -> i32 {
    println!("selftest");
    let mut ok = true;

    // Codec round-trip over pseudo-random frames.
    let mut suite = Suite::new("codec round-trip");
    let specs: Vec<QuantSpec> = (0..10)
        .map(|_| QuantSpec::new(30.0, 45.0, 8).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xBA2B);
    for i in 0..1000 {
        let frame = random_frame(&mut rng);
        let bytes = match encode_frame(&frame, &specs) {
            Ok(b) => b,
            Err(e) => {
                suite.check(false, &format!("frame {i} failed to encode: {e}"));
                continue;
            }
        };
        match decode_frame(&bytes, &specs) {
            Ok(back) => suite.check(back == frame, &format!("frame {i} round-trip mismatch")),
            Err(e) => suite.check(false, &format!("frame {i} failed to decode: {e}")),
        }
    }
    ok &= suite.report();

    // Single-bit corruption over one frame of each kind.
    let mut suite = Suite::new("checksum detection");
    for frame in sample_frames() {
        let bytes = encode_frame(&frame, &specs).unwrap();
        for byte_idx in 0..bytes.len() {
            for bit in 0..8 {
                let mut corrupted = bytes.clone();
                corrupted[byte_idx] ^= 1 << bit;
                suite.check(
                    decode_frame(&corrupted, &specs).is_err(),
                    &format!(
                        "{}: flip byte {byte_idx} bit {bit} went undetected",
                        frame.kind_name()
                    ),
                );
            }
        }
    }
    ok &= suite.report();

    // CRC reference value.
    let mut suite = Suite::new("checksum reference");
    suite.check(crc16(b"123456789") == 0x29B1, "reference value mismatch");
    suite.check(crc16(&[]) == 0xFFFF, "empty-input register mismatch");
    ok &= suite.report();

    // Escalation timeline with dead channels.
    let mut suite = Suite::new("escalation timeline");
    let timeline = escalation_timeline();
    suite.check(
        timeline == vec![(0, 1), (100, 2), (2_100, 3), (22_100, 0)],
        &format!("got {timeline:?}"),
    );
    ok &= suite.report();

    // Classifier boundaries.
    let mut suite = Suite::new("classifier boundaries");
    let expect = [
        (0, PatientMode::Normal),
        (1, PatientMode::SemiCritical),
        (2, PatientMode::SemiCritical),
        (3, PatientMode::Critical),
        (5, PatientMode::Critical),
    ];
    for (count, mode) in expect {
        suite.check(
            classify(count, 10) == Ok(mode),
            &format!("count {count} misclassified"),
        );
    }
    suite.check(classify(11, 10).is_err(), "count above sensors accepted");
    ok &= suite.report();

    if ok {
        println!("selftest: all suites passed");
        EXIT_OK
    } else {
        eprintln!("selftest: FAILED");
        EXIT_INTERNAL
    }
}

fn random_frame(rng: &mut ChaCha8Rng) -> Frame {
    use rand::Rng;
    let fp = Fingerprint(rng.random_range(1..=u64::MAX));
    let events: Vec<EventRecord> = (0..rng.random_range(0..8))
        .map(|_| EventRecord {
            sensor_index: rng.random_range(0..10),
            qvalue: rng.random_range(0..=255),
            t_offset_ms: rng.random(),
        })
        .collect();
    match rng.random_range(0..5) {
        0 => Frame::Beacon { fingerprint: fp },
        1 => {
            let verdicts: Vec<bool> = (0..10).map(|_| rng.random()).collect();
            Frame::DailyReport {
                fingerprint: fp,
                status: build_status_field(&verdicts),
                events,
            }
        }
        2 => Frame::EmergencyBroadcast {
            fingerprint: fp,
            events,
        },
        3 => Frame::SatelliteReport {
            fingerprint: fp,
            events,
        },
        _ => Frame::Ack { fingerprint: fp },
    }
}

fn sample_frames() -> Vec<Frame> {
    let fp = Fingerprint(0x1234_5678_9ABC_DEF0);
    let events = vec![EventRecord {
        sensor_index: 4,
        qvalue: 200,
        t_offset_ms: 12_345,
    }];
    vec![
        Frame::Beacon { fingerprint: fp },
        Frame::DailyReport {
            fingerprint: fp,
            status: build_status_field(&[
                true, true, true, true, true, false, true, true, true, true,
            ]),
            events: events.clone(),
        },
        Frame::EmergencyBroadcast {
            fingerprint: fp,
            events: events.clone(),
        },
        Frame::SatelliteReport {
            fingerprint: fp,
            events,
        },
        Frame::Ack { fingerprint: fp },
    ]
}

/// Drives one dead-channel activation and returns (ms, stage) pairs with
/// stage 0 standing for the interrupt return.
fn escalation_timeline() -> Vec<(u64, u8)> {
    let cfg = TimerConfig::default();
    let mut state = EscalationState::new();
    let payload = crate::cluster::EmergencyPayload {
        fingerprint: Fingerprint(1),
        status: build_status_field(&[false; 3]),
        events: vec![],
    };
    let mut now = VirtualTime::ZERO;
    let mut log = Vec::new();
    let mut pending = state
        .step(&cfg, EscalationEvent::EmergencyRaised(payload), now)
        .unwrap();
    loop {
        let mut armed = None;
        for action in pending.drain(..) {
            match action {
                ChAction::SendToPersonalPhone(_) => log.push((now.as_millis(), 1)),
                ChAction::BroadcastNearby(_) => log.push((now.as_millis(), 2)),
                ChAction::SendSatellite(_) => log.push((now.as_millis(), 3)),
                ChAction::ReturnFromInterrupt => log.push((now.as_millis(), 0)),
                ChAction::ArmTimer(d) => armed = Some(d),
                ChAction::EmptyInbox => {}
            }
        }
        match armed {
            Some(d) => {
                now = now + d;
                pending = state.step(&cfg, EscalationEvent::TimerExpired, now).unwrap();
            }
            None => break,
        }
    }
    log
}
