//! The normal-mode loop: one daily report, retried hourly until acknowledged.
//!
//! Every `time0` the cluster head sends the daily report and enqueues it.
//! Every `time01` it rechecks: if the head of the queue is still
//! unacknowledged it resends it. ACKs remove entries in FIFO order. The loop
//! only runs while no emergency is active.

use std::collections::VecDeque;

use crate::codec::{Fingerprint, Frame};
use crate::time::VirtualTime;

use super::TimerConfig;

/// A report waiting for its ACK.
#[derive(Clone, Debug, PartialEq)]
pub struct QueuedReport {
    pub frame: Frame,
    pub enqueued_at: VirtualTime,
    pub attempts: u32,
}

/// What a tick of the normal loop asks the caller to transmit.
#[derive(Clone, Debug, PartialEq)]
pub enum NormalAction {
    /// First transmission of a fresh daily report.
    SendDaily(Frame),
    /// Retry of the unacknowledged head of the queue; `attempt` counts all
    /// transmissions of that report so far, including this one.
    Resend { frame: Frame, attempt: u32 },
}

/// Retry-queue state for the normal loop.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NormalLoop {
    queue: VecDeque<QueuedReport>,
}

impl NormalLoop {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn queue(&self) -> &VecDeque<QueuedReport> {
        &self.queue
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// A daily boundary (`now` on a multiple of `time0`): send the fresh
    /// report and enqueue it for acknowledgment tracking.
    pub fn on_daily(&mut self, frame: Frame, now: VirtualTime) -> NormalAction {
        self.queue.push_back(QueuedReport {
            frame: frame.clone(),
            enqueued_at: now,
            attempts: 1,
        });
        NormalAction::SendDaily(frame)
    }

    /// A retry boundary (`now` on a multiple of `time01` that is not also a
    /// daily boundary): resend the head of the queue if it is still waiting.
    pub fn on_retry(&mut self, _now: VirtualTime) -> Option<NormalAction> {
        let head = self.queue.front_mut()?;
        head.attempts += 1;
        Some(NormalAction::Resend {
            frame: head.frame.clone(),
            attempt: head.attempts,
        })
    }

    /// An ACK arrived: drop the head of the queue if its fingerprint
    /// matches. Returns the removed report. ACKs carry no sequence numbers,
    /// so matching is by fingerprint and FIFO position only.
    pub fn on_ack(&mut self, fingerprint: Fingerprint) -> Option<QueuedReport> {
        if self.queue.front()?.frame.fingerprint() == fingerprint {
            self.queue.pop_front()
        } else {
            None
        }
    }

    /// Convenience tick used by the driver: dispatches to the daily or retry
    /// path based on where `now` falls. `build_report` is only invoked on a
    /// daily boundary.
    pub fn tick(
        &mut self,
        cfg: &TimerConfig,
        now: VirtualTime,
        build_report: impl FnOnce() -> Frame,
    ) -> Option<NormalAction> {
        if now > VirtualTime::ZERO && now.is_multiple_of(cfg.time0()) {
            Some(self.on_daily(build_report(), now))
        } else if now > VirtualTime::ZERO && now.is_multiple_of(cfg.time01()) {
            self.on_retry(now)
        } else {
            None
        }
    }
}
