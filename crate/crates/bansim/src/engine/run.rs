//! The simulation loop: wires sensors, the cluster head, phones, and sinks
//! together over virtual time under a single seeded random stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{
    classify, on_mode_change, ChAction, EmergencyPayload, EscalationEvent, EscalationState,
    ModeAction, NormalAction, NormalLoop, PatientMode,
};
use crate::codec::{
    build_status_field, decode_frame, encode_frame, quantize, EventRecord, Fingerprint, Frame,
    QuantSpec,
};
use crate::fault::{PredictorModel, SensorHealth, Verdict};
use crate::net::{
    database_on_receive, discover_nearby, phone_on_receive, transmit, LinkKind, LinkModel,
    PhoneAction, PhoneNode, SinkAction,
};
use crate::time::{VirtualDuration, VirtualTime};

use super::metrics::Metrics;
use super::queue::EventQueue;
use super::scenario::{FaultMode, Scenario, ScenarioError, SensorConfig};
use super::trace::{ActorId, SendContext, TraceRecord};
use super::vitals::sample_vital;

/// Result of a run: the full trace and the metrics derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<TraceRecord>,
    pub metrics: Metrics,
}

/// Where a frame can land.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Endpoint {
    ClusterHead,
    Phone(usize),
    Database,
    EmergencyCenter,
}

#[derive(Debug)]
enum Event {
    SensorSample { sensor: usize },
    PhoneScript { phone: usize, reachable: Option<bool>, position: Option<[f64; 2]> },
    FaultStart { injection: usize },
    AnomalyMark { sensor: usize, offset: f64, start: bool },
    ChTimer { epoch: u64 },
    DailyTick,
    RetryTick,
    RaiseEmergency,
    Delivery { to: Endpoint, from: Endpoint, link: LinkKind, bytes: Vec<u8> },
}

struct SensorRuntime {
    cfg: SensorConfig,
    health: SensorHealth,
    predictor: Option<PredictorModel>,
    fault: Option<FaultMode>,
    last_reading: Option<(VirtualTime, f64)>,
    traced_verdict: Option<Verdict>,
}

/// The cluster head's view of one sensor.
#[derive(Clone, Copy)]
struct SensorSnapshot {
    out_of_threshold: bool,
    agrees: bool,
    sample_time: VirtualTime,
    last_value: f64,
}

struct ClusterHead {
    fingerprint: Fingerprint,
    escalation: EscalationState,
    timer_epoch: u64,
    normal: NormalLoop,
    mode: PatientMode,
    snapshot: Vec<SensorSnapshot>,
    daily_events: Vec<EventRecord>,
    window_start: VirtualTime,
}

struct Engine {
    scenario: Scenario,
    specs: Vec<QuantSpec>,
    rng: ChaCha8Rng,
    queue: EventQueue<Event>,
    trace: Vec<TraceRecord>,
    now: VirtualTime,
    end: VirtualTime,
    sensors: Vec<SensorRuntime>,
    ch: ClusterHead,
    phones: Vec<PhoneNode>,
}

/// Validates the scenario and executes it to completion. The same scenario
/// and seed always produce a byte-identical trace.
pub fn run(scenario: &Scenario) -> Result<RunOutput, ScenarioError> {
    run_with_seed(scenario, scenario.seed)
}

/// Like [`run`], with the seed overridden (the override is what lands in the
/// trace header).
pub fn run_with_seed(scenario: &Scenario, seed: u64) -> Result<RunOutput, ScenarioError> {
    scenario.validate()?;
    let mut engine = Engine::new(scenario.clone(), seed);
    engine.bootstrap(seed);
    while let Some((t, event)) = engine.queue.next_event() {
        if t > engine.end {
            break;
        }
        engine.now = t;
        engine.dispatch(event);
    }
    engine.finish();
    let metrics = Metrics::from_trace(&engine.trace);
    Ok(RunOutput {
        trace: engine.trace,
        metrics,
    })
}

impl Engine {
    fn new(scenario: Scenario, seed: u64) -> Engine {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let specs: Vec<QuantSpec> = scenario
            .sensors
            .iter()
            .map(|s| {
                QuantSpec::new(s.range_lo, s.range_hi, s.quant_bits)
                    .expect("spec ranges validated")
            })
            .collect();
        let sensors: Vec<SensorRuntime> = scenario
            .sensors
            .iter()
            .map(|cfg| {
                let predictor = (!cfg.neighbors.is_empty()).then(|| {
                    PredictorModel::seeded(
                        cfg.neighbors.len(),
                        cfg.hidden_units,
                        cfg.learning_rate,
                        cfg.vital.baseline,
                        &mut rng,
                    )
                });
                SensorRuntime {
                    health: SensorHealth::new(
                        (cfg.range_lo, cfg.range_hi),
                        cfg.eps_max,
                        VirtualDuration::from_millis(cfg.fault_window_ms),
                    ),
                    predictor,
                    fault: None,
                    last_reading: None,
                    traced_verdict: None,
                    cfg: cfg.clone(),
                }
            })
            .collect();
        let phones: Vec<PhoneNode> = scenario
            .phones
            .iter()
            .map(|p| PhoneNode {
                id: p.id,
                position: p.position_m,
                reachable: p.reachable,
                role: p.role,
            })
            .collect();
        let n = sensors.len();
        let end = VirtualTime::from_millis(scenario.duration_ms);
        Engine {
            ch: ClusterHead {
                fingerprint: Fingerprint(scenario.patient_fingerprint),
                escalation: EscalationState::new(),
                timer_epoch: 0,
                normal: NormalLoop::new(),
                mode: PatientMode::Normal,
                snapshot: vec![
                    SensorSnapshot {
                        out_of_threshold: false,
                        agrees: true,
                        sample_time: VirtualTime::ZERO,
                        last_value: 0.0,
                    };
                    n
                ],
                daily_events: Vec::new(),
                window_start: VirtualTime::ZERO,
            },
            scenario,
            specs,
            rng,
            queue: EventQueue::new(),
            trace: Vec::new(),
            now: VirtualTime::ZERO,
            end,
            sensors,
            phones,
        }
    }

    fn bootstrap(&mut self, seed: u64) {
        self.trace.push(TraceRecord::Header {
            seed,
            duration_ms: self.scenario.duration_ms,
        });

        // Ground-truth markers first so same-instant samples see them.
        for (si, s) in self.scenario.sensors.iter().enumerate() {
            for w in &s.vital.anomalies {
                self.queue.schedule(
                    VirtualTime::from_millis(w.start_ms),
                    Event::AnomalyMark {
                        sensor: si,
                        offset: w.offset,
                        start: true,
                    },
                );
                self.queue.schedule(
                    VirtualTime::from_millis(w.end_ms),
                    Event::AnomalyMark {
                        sensor: si,
                        offset: w.offset,
                        start: false,
                    },
                );
            }
        }
        for (fi, f) in self.scenario.fault_injections.iter().enumerate() {
            self.queue.schedule(
                VirtualTime::from_millis(f.start_ms),
                Event::FaultStart { injection: fi },
            );
        }
        for (pi, p) in self.scenario.phones.iter().enumerate() {
            for c in &p.reachability_changes {
                self.queue.schedule(
                    VirtualTime::from_millis(c.at_ms),
                    Event::PhoneScript {
                        phone: pi,
                        reachable: Some(c.reachable),
                        position: None,
                    },
                );
            }
            for c in &p.position_changes {
                self.queue.schedule(
                    VirtualTime::from_millis(c.at_ms),
                    Event::PhoneScript {
                        phone: pi,
                        reachable: None,
                        position: Some(c.position_m),
                    },
                );
            }
        }
        for sensor in 0..self.sensors.len() {
            self.queue
                .schedule(VirtualTime::ZERO, Event::SensorSample { sensor });
        }
        let timers = &self.scenario.timers;
        self.queue
            .schedule(VirtualTime::ZERO + timers.time0(), Event::DailyTick);
        self.queue
            .schedule(VirtualTime::ZERO + timers.time01(), Event::RetryTick);
    }

    fn emit(&mut self, record: TraceRecord) {
        self.trace.push(record);
    }

    fn next_seq(&self) -> u64 {
        self.trace.len() as u64
    }

    fn dispatch(&mut self, event: Event) {
        match event {
            Event::SensorSample { sensor } => self.on_sensor_sample(sensor),
            Event::PhoneScript {
                phone,
                reachable,
                position,
            } => self.on_phone_script(phone, reachable, position),
            Event::FaultStart { injection } => self.on_fault_start(injection),
            Event::AnomalyMark {
                sensor,
                offset,
                start,
            } => {
                let (t, seq) = (self.now.as_millis(), self.next_seq());
                self.emit(if start {
                    TraceRecord::AnomalyStarted {
                        t,
                        seq,
                        sensor,
                        offset,
                    }
                } else {
                    TraceRecord::AnomalyEnded { t, seq, sensor }
                });
            }
            Event::ChTimer { epoch } => {
                // Stale timers (superseded by an ACK or a clear) are dropped.
                if epoch == self.ch.timer_epoch {
                    let actions = self
                        .ch
                        .escalation
                        .step(&self.scenario.timers, EscalationEvent::TimerExpired, self.now)
                        .expect("engine delivers timer expiry only in waiting stages");
                    self.process_ch_actions(actions);
                }
            }
            Event::DailyTick => self.on_daily_tick(),
            Event::RetryTick => self.on_retry_tick(),
            Event::RaiseEmergency => self.on_raise_emergency(),
            Event::Delivery {
                to,
                from,
                link,
                bytes,
            } => self.on_delivery(to, from, link, bytes),
        }
    }

    // ---- sensors ---------------------------------------------------------

    fn on_sensor_sample(&mut self, index: usize) {
        let period =
            VirtualDuration::from_millis(self.sensors[index].cfg.sample_period_ms);
        self.queue
            .schedule(self.now + period, Event::SensorSample { sensor: index });

        if matches!(self.sensors[index].fault, Some(FaultMode::Dead)) {
            return;
        }

        let raw = sample_vital(&self.sensors[index].cfg.vital, self.now, &mut self.rng);
        let reading = match self.sensors[index].fault {
            Some(FaultMode::StuckAt(v)) => v,
            Some(FaultMode::Offset(d)) => raw + d,
            _ => raw,
        };

        // Neighbor inputs: the latest transmitted value of each neighbor.
        // Until every neighbor has reported, the range check stands alone.
        let inputs: Option<Vec<f64>> = self.sensors[index]
            .cfg
            .neighbors
            .iter()
            .map(|&j| self.sensors[j].last_reading.map(|(_, v)| v))
            .collect();
        let prediction = match (&self.sensors[index].predictor, &inputs) {
            (Some(model), Some(xs)) => {
                Some(model.predict(xs).expect("validated inputs are finite"))
            }
            _ => None,
        };

        let outcome = self.sensors[index]
            .health
            .check_reading(reading, prediction, self.now);
        if outcome.train {
            let xs = inputs.as_ref().expect("train implies prediction inputs");
            self.sensors[index]
                .predictor
                .as_mut()
                .expect("train implies a predictor")
                .train_step(xs, reading)
                .expect("validated inputs are finite");
        }
        self.sensors[index].last_reading = Some((self.now, reading));

        if self.sensors[index].traced_verdict != Some(outcome.verdict) {
            self.sensors[index].traced_verdict = Some(outcome.verdict);
            let (t, seq) = (self.now.as_millis(), self.next_seq());
            self.emit(TraceRecord::Verdict {
                t,
                seq,
                sensor: index,
                verdict: outcome.verdict,
                reading,
                prediction,
                in_range: outcome.in_range,
            });
        }

        // Cluster-head ingest: refresh the snapshot, record threshold
        // crossings, and reclassify.
        let out = !outcome.in_range || outcome.verdict != Verdict::Valid;
        let was_out = self.ch.snapshot[index].out_of_threshold;
        self.ch.snapshot[index] = SensorSnapshot {
            out_of_threshold: out,
            agrees: outcome.verdict == Verdict::Valid,
            sample_time: self.now,
            last_value: reading,
        };
        if out && !was_out && self.ch.daily_events.len() < u16::MAX as usize {
            let offset = self.now.since(self.ch.window_start).as_millis();
            self.ch.daily_events.push(EventRecord {
                sensor_index: index as u8,
                qvalue: quantize(reading, &self.specs[index]),
                t_offset_ms: offset.min(u32::MAX as u64) as u32,
            });
        }
        self.reclassify();
    }

    fn reclassify(&mut self) {
        let count = self
            .ch
            .snapshot
            .iter()
            .filter(|s| s.out_of_threshold)
            .count();
        let new_mode =
            classify(count, self.sensors.len()).expect("count is bounded by sensor count");
        if new_mode == self.ch.mode {
            return;
        }
        let old = self.ch.mode;
        self.ch.mode = new_mode;
        let (t, seq) = (self.now.as_millis(), self.next_seq());
        self.emit(TraceRecord::ModeChange {
            t,
            seq,
            old,
            new: new_mode,
            out_of_threshold: count,
        });
        for action in on_mode_change(old, new_mode) {
            match action {
                ModeAction::RequestAllSensorData => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::DataRequestBroadcast { t, seq });
                    // The collected snapshot goes straight to the database
                    // through the personal phone; it bypasses the retry queue.
                    let frame = self.build_report();
                    self.send_to_personal(&frame, SendContext::SemiCriticalReport);
                }
                ModeAction::RaiseEmergency => self.on_raise_emergency(),
                ModeAction::ClearEmergency => {
                    let actions = self
                        .ch
                        .escalation
                        .step(
                            &self.scenario.timers,
                            EscalationEvent::EmergencyCleared,
                            self.now,
                        )
                        .expect("clear is legal in every stage");
                    debug_assert!(actions.is_empty());
                    self.ch.timer_epoch += 1;
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::EmergencyCleared { t, seq });
                }
            }
        }
    }

    // ---- cluster head ----------------------------------------------------

    /// Current status field and accumulated undesirable events as a frame.
    fn build_report(&self) -> Frame {
        let agrees: Vec<bool> = self.ch.snapshot.iter().map(|s| s.agrees).collect();
        Frame::DailyReport {
            fingerprint: self.ch.fingerprint,
            status: build_status_field(&agrees),
            events: self.ch.daily_events.clone(),
        }
    }

    fn emergency_payload(&self) -> EmergencyPayload {
        let agrees: Vec<bool> = self.ch.snapshot.iter().map(|s| s.agrees).collect();
        let events: Vec<EventRecord> = self
            .ch
            .snapshot
            .iter()
            .enumerate()
            .filter(|(_, s)| s.out_of_threshold)
            .map(|(i, s)| EventRecord {
                sensor_index: i as u8,
                qvalue: quantize(s.last_value, &self.specs[i]),
                t_offset_ms: self.now.since(s.sample_time).as_millis().min(u32::MAX as u64)
                    as u32,
            })
            .collect();
        EmergencyPayload {
            fingerprint: self.ch.fingerprint,
            status: build_status_field(&agrees),
            events,
        }
    }

    fn on_raise_emergency(&mut self) {
        // A clear may have slipped in between a return and the scheduled
        // re-raise; also never raise into a still-waiting stage.
        if self.ch.escalation.stage().is_waiting() {
            return;
        }
        if self.ch.mode != PatientMode::Critical {
            return;
        }
        let payload = self.emergency_payload();
        let (t, seq) = (self.now.as_millis(), self.next_seq());
        self.emit(TraceRecord::EmergencyRaised { t, seq });
        let actions = self
            .ch
            .escalation
            .step(
                &self.scenario.timers,
                EscalationEvent::EmergencyRaised(payload),
                self.now,
            )
            .expect("raise from idle is legal");
        self.process_ch_actions(actions);
    }

    fn process_ch_actions(&mut self, actions: Vec<ChAction>) {
        for action in actions {
            match action {
                ChAction::SendToPersonalPhone(frame) => {
                    let recipients = usize::from(self.personal_phone().is_some());
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::EscalationSend {
                        t,
                        seq,
                        stage: 1,
                        recipients,
                    });
                    self.send_to_personal(&frame, SendContext::Stage1);
                }
                ChAction::BroadcastNearby(frame) => {
                    let nearby = discover_nearby(
                        &self.phones,
                        self.scenario.ch_position_m,
                        self.scenario.broadcast_radius_m,
                    );
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::EscalationSend {
                        t,
                        seq,
                        stage: 2,
                        recipients: nearby.len(),
                    });
                    let bytes = self.encode(&frame);
                    for phone in nearby {
                        let idx = self
                            .phones
                            .iter()
                            .position(|p| p.id == phone.id)
                            .expect("discovered phone exists");
                        self.transmit_frame(
                            Endpoint::ClusterHead,
                            Endpoint::Phone(idx),
                            LinkKind::NearbyBroadcast,
                            bytes.clone(),
                            SendContext::Stage2,
                        );
                    }
                }
                ChAction::SendSatellite(frame) => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::EscalationSend {
                        t,
                        seq,
                        stage: 3,
                        recipients: 1,
                    });
                    let bytes = self.encode(&frame);
                    self.transmit_frame(
                        Endpoint::ClusterHead,
                        Endpoint::Database,
                        LinkKind::Satellite,
                        bytes,
                        SendContext::Stage3,
                    );
                }
                ChAction::ArmTimer(duration) => {
                    self.ch.timer_epoch += 1;
                    self.queue.schedule(
                        self.now + duration,
                        Event::ChTimer {
                            epoch: self.ch.timer_epoch,
                        },
                    );
                }
                ChAction::EmptyInbox => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::InboxEmptied { t, seq });
                }
                ChAction::ReturnFromInterrupt => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::InterruptReturned { t, seq });
                    if self.ch.escalation.emergency_active() {
                        // Re-raise on the next queue turn at the same instant.
                        self.queue.schedule(self.now, Event::RaiseEmergency);
                    }
                }
            }
        }
    }

    fn escalation_busy(&self) -> bool {
        self.ch.escalation.stage().is_waiting() || self.ch.escalation.emergency_active()
    }

    fn on_daily_tick(&mut self) {
        self.queue
            .schedule(self.now + self.scenario.timers.time0(), Event::DailyTick);
        if self.escalation_busy() {
            return;
        }
        let frame = self.build_report();
        self.ch.daily_events.clear();
        self.ch.window_start = self.now;
        match self.ch.normal.on_daily(frame, self.now) {
            NormalAction::SendDaily(frame) => {
                let (t, seq, depth) = (
                    self.now.as_millis(),
                    self.next_seq(),
                    self.ch.normal.queue_len(),
                );
                self.emit(TraceRecord::QueueEnqueued { t, seq, depth });
                self.send_to_personal(&frame, SendContext::DailyInitial);
            }
            other => unreachable!("daily boundary yields a daily send, got {other:?}"),
        }
    }

    fn on_retry_tick(&mut self) {
        self.queue
            .schedule(self.now + self.scenario.timers.time01(), Event::RetryTick);
        // A daily boundary is not also a retry boundary, and the normal loop
        // pauses while an emergency is in flight.
        if self.now.is_multiple_of(self.scenario.timers.time0()) || self.escalation_busy() {
            return;
        }
        if let Some(NormalAction::Resend { frame, attempt }) = self.ch.normal.on_retry(self.now)
        {
            self.send_to_personal(&frame, SendContext::DailyRetry { attempt });
        }
    }

    // ---- transmission ----------------------------------------------------

    fn encode(&self, frame: &Frame) -> Vec<u8> {
        encode_frame(frame, &self.specs).expect("engine-built frames are well-formed")
    }

    fn personal_phone(&self) -> Option<usize> {
        self.phones
            .iter()
            .position(|p| p.role == crate::net::PhoneRole::Personal)
    }

    fn send_to_personal(&mut self, frame: &Frame, context: SendContext) {
        let Some(idx) = self.personal_phone() else {
            // Nobody to address: the send cannot even be attempted.
            return;
        };
        let bytes = self.encode(frame);
        self.transmit_frame(
            Endpoint::ClusterHead,
            Endpoint::Phone(idx),
            LinkKind::Personal,
            bytes,
            context,
        );
    }

    fn link_model(&self, kind: LinkKind) -> LinkModel {
        match kind {
            LinkKind::Personal => self.scenario.links.personal,
            LinkKind::NearbyBroadcast => self.scenario.links.broadcast,
            LinkKind::Satellite => self.scenario.links.satellite,
            LinkKind::Internal => self.scenario.links.internal,
        }
    }

    fn actor(&self, e: Endpoint) -> ActorId {
        match e {
            Endpoint::ClusterHead => ActorId::ClusterHead,
            Endpoint::Phone(idx) => ActorId::Phone(self.phones[idx].id),
            Endpoint::Database => ActorId::Database,
            Endpoint::EmergencyCenter => ActorId::EmergencyCenter,
        }
    }

    /// One transmission attempt. The sender's energy is spent regardless of
    /// the outcome; an unreachable destination loses the frame without a
    /// channel draw (reachability is evaluated at send time).
    fn transmit_frame(
        &mut self,
        from: Endpoint,
        to: Endpoint,
        kind: LinkKind,
        bytes: Vec<u8>,
        context: SendContext,
    ) {
        let link = self.link_model(kind);
        let reachable = match to {
            Endpoint::Phone(idx) => self.phones[idx].reachable,
            _ => true,
        };
        let delivery = if reachable {
            transmit(&link, &bytes, self.now, &mut self.rng)
        } else {
            None
        };
        let (t, seq) = (self.now.as_millis(), self.next_seq());
        self.emit(TraceRecord::FrameSent {
            t,
            seq,
            from: self.actor(from),
            to: self.actor(to),
            link: kind,
            context,
            bytes: hex::encode(&bytes),
            delivered: delivery.is_some(),
            arrive_ms: delivery.as_ref().map(|d| d.arrive_time.as_millis()),
            energy: link.energy_cost,
        });
        if let Some(d) = delivery {
            self.queue.schedule(
                d.arrive_time,
                Event::Delivery {
                    to,
                    from,
                    link: kind,
                    bytes: d.bytes,
                },
            );
        }
    }

    // ---- receivers -------------------------------------------------------

    fn on_delivery(&mut self, to: Endpoint, from: Endpoint, _link: LinkKind, bytes: Vec<u8>) {
        let (t, seq) = (self.now.as_millis(), self.next_seq());
        self.emit(TraceRecord::FrameReceived {
            t,
            seq,
            at: self.actor(to),
            from: self.actor(from),
            bytes: hex::encode(&bytes),
        });
        let frame = match decode_frame(&bytes, &self.specs) {
            Ok(frame) => frame,
            Err(e) => {
                let (t, seq) = (self.now.as_millis(), self.next_seq());
                self.emit(TraceRecord::DecodeDropped {
                    t,
                    seq,
                    at: self.actor(to),
                    reason: e.to_string(),
                });
                return;
            }
        };
        match to {
            Endpoint::ClusterHead => self.ch_receive(frame),
            Endpoint::Phone(idx) => self.phone_receive(idx, frame),
            Endpoint::Database | Endpoint::EmergencyCenter => self.sink_receive(to, from, frame),
        }
    }

    fn ch_receive(&mut self, frame: Frame) {
        let Frame::Ack { fingerprint } = frame else {
            return;
        };
        if fingerprint != self.ch.fingerprint {
            return;
        }
        if self.ch.escalation.stage().awaits_ack() {
            let actions = self
                .ch
                .escalation
                .step(
                    &self.scenario.timers,
                    EscalationEvent::AckReceived(frame),
                    self.now,
                )
                .expect("ack events are always legal");
            self.process_ch_actions(actions);
        } else if let Some(removed) = self.ch.normal.on_ack(fingerprint) {
            let (t, seq) = (self.now.as_millis(), self.next_seq());
            self.emit(TraceRecord::QueueRemoved {
                t,
                seq,
                waited_ms: self.now.since(removed.enqueued_at).as_millis(),
                attempts: removed.attempts,
            });
        }
    }

    fn phone_receive(&mut self, idx: usize, frame: Frame) {
        let actions = phone_on_receive(&self.phones[idx], &frame);
        for action in actions {
            match action {
                PhoneAction::ForwardToEmergencyCenter(f) => {
                    let bytes = self.encode(&f);
                    self.transmit_frame(
                        Endpoint::Phone(idx),
                        Endpoint::EmergencyCenter,
                        LinkKind::Internal,
                        bytes,
                        SendContext::ForwardToCenter,
                    );
                }
                PhoneAction::ForwardToDatabase(f) => {
                    let bytes = self.encode(&f);
                    self.transmit_frame(
                        Endpoint::Phone(idx),
                        Endpoint::Database,
                        LinkKind::Internal,
                        bytes,
                        SendContext::ForwardToDatabase,
                    );
                }
                PhoneAction::AckToClusterHead(f) => {
                    let kind = match self.phones[idx].role {
                        crate::net::PhoneRole::Personal => LinkKind::Personal,
                        crate::net::PhoneRole::Bystander => LinkKind::NearbyBroadcast,
                    };
                    let bytes = self.encode(&f);
                    self.transmit_frame(
                        Endpoint::Phone(idx),
                        Endpoint::ClusterHead,
                        kind,
                        bytes,
                        SendContext::Ack,
                    );
                }
            }
        }
    }

    fn sink_receive(&mut self, at: Endpoint, from: Endpoint, frame: Frame) {
        for action in database_on_receive(&frame) {
            match action {
                SinkAction::Record => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::RecordStored {
                        t,
                        seq,
                        at: self.actor(at),
                        frame_kind: frame.kind_name().to_string(),
                    });
                }
                SinkAction::DispatchService => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::ServiceDispatched {
                        t,
                        seq,
                        at: self.actor(at),
                    });
                }
                SinkAction::SensorDamagedAdvisory(sensor) => {
                    let (t, seq) = (self.now.as_millis(), self.next_seq());
                    self.emit(TraceRecord::SensorDamagedAdvisory { t, seq, sensor });
                }
                SinkAction::Ack(ack) => {
                    let bytes = self.encode(&ack);
                    self.transmit_frame(
                        at,
                        from,
                        LinkKind::Internal,
                        bytes,
                        SendContext::Ack,
                    );
                }
            }
        }
    }

    // ---- scripts and ground truth ----------------------------------------

    fn on_phone_script(
        &mut self,
        idx: usize,
        reachable: Option<bool>,
        position: Option<[f64; 2]>,
    ) {
        if let Some(r) = reachable {
            self.phones[idx].reachable = r;
        }
        if let Some(p) = position {
            self.phones[idx].position = p;
        }
        let (t, seq) = (self.now.as_millis(), self.next_seq());
        self.emit(TraceRecord::PhoneScriptApplied {
            t,
            seq,
            phone: self.phones[idx].id,
            reachable,
            position_m: position,
        });
    }

    fn on_fault_start(&mut self, injection: usize) {
        let f = self.scenario.fault_injections[injection];
        self.sensors[f.sensor].fault = Some(f.mode);
        let mode = match f.mode {
            FaultMode::StuckAt(v) => format!("stuck_at({v})"),
            FaultMode::Offset(d) => format!("offset({d})"),
            FaultMode::Dead => "dead".to_string(),
        };
        let (t, seq) = (self.now.as_millis(), self.next_seq());
        self.emit(TraceRecord::FaultInjected {
            t,
            seq,
            sensor: f.sensor,
            mode,
        });
    }

    fn finish(&mut self) {
        let t = self.end.as_millis();
        for i in 0..self.sensors.len() {
            if let Some(model) = &self.sensors[i].predictor {
                let params = model.params();
                let seq = self.next_seq();
                self.emit(TraceRecord::ModelSnapshot {
                    t,
                    seq,
                    sensor: i,
                    params,
                });
            }
        }
    }
}
