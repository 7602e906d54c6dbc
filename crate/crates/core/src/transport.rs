//! End-to-end sources: a window-based TCP with NewReno-style loss
//! recovery (slow start, AIMD, fast retransmit, RTO), and a paced
//! "optimal" source whose rate is the inverse of the coded-queue price
//! summed along its path and fed back on acks.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone)]
pub struct TcpConfig {
    /// Data payload per packet, bytes.
    pub mss: u32,
    pub ack_size: u32,
    /// Initial window, packets.
    pub init_cwnd: f64,
    pub init_ssthresh: f64,
    pub rto_floor: f64,
    pub rto_init: f64,
    pub rto_max: f64,
}

impl Default for TcpConfig {
    fn default() -> Self {
        TcpConfig {
            mss: 500,
            ack_size: 40,
            init_cwnd: 2.0,
            init_ssthresh: 131.0,
            rto_floor: 0.2,
            rto_init: 1.0,
            rto_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcpPhase {
    SlowStart,
    CongestionAvoidance,
    FastRecovery,
}

#[derive(Debug, Clone, Copy)]
pub struct SentRecord {
    pub sent_at: f64,
    pub retransmitted: bool,
}

/// Sender state. Sequence numbers count whole packets.
#[derive(Debug, Clone)]
pub struct TcpSender {
    pub cwnd: f64,
    pub ssthresh: f64,
    pub phase: TcpPhase,
    pub next_seq: u64,
    pub highest_acked: u64,
    pub dup_acks: u32,
    pub rto: f64,
    pub rto_epoch: u64,
    pub inflight: BTreeMap<u64, SentRecord>,
    srtt: Option<f64>,
    rttvar: f64,
    /// NewReno recovery point: leave fast recovery once acked past it.
    recover: u64,
    /// Next candidate for pipelined retransmission inside fast
    /// recovery. Tail-drop losses are contiguous, so blindly resending
    /// from the cumulative point recovers a burst at SACK-like speed.
    fr_cursor: u64,
    /// Sequences below this point are re-sends of a timed-out window
    /// (go-back-N); their RTT samples are discarded per Karn.
    rewind_point: u64,
    rto_floor: f64,
    rto_max: f64,
}

#[derive(Debug, Default)]
pub struct AckReaction {
    /// Cumulative ack advanced.
    pub new_data_acked: bool,
    /// Sequence to retransmit right away (fast retransmit or NewReno
    /// partial-ack hole fill).
    pub retransmit: Option<u64>,
}

impl TcpSender {
    pub fn new(cfg: &TcpConfig) -> Self {
        TcpSender {
            cwnd: cfg.init_cwnd.max(1.0),
            ssthresh: cfg.init_ssthresh.max(2.0),
            phase: TcpPhase::SlowStart,
            next_seq: 0,
            highest_acked: 0,
            dup_acks: 0,
            rto: cfg.rto_init,
            rto_epoch: 0,
            inflight: BTreeMap::new(),
            srtt: None,
            rttvar: 0.0,
            recover: 0,
            fr_cursor: 0,
            rewind_point: 0,
            rto_floor: cfg.rto_floor,
            rto_max: cfg.rto_max,
        }
    }

    /// Window check: packets in flight stay below floor(cwnd); the
    /// fast-retransmit path may briefly exceed it by one. The first two
    /// duplicate acks each allow one extra segment (limited transmit),
    /// which keeps the ack clock alive at small windows.
    pub fn can_send(&self) -> bool {
        let limited = if self.phase == TcpPhase::FastRecovery {
            0
        } else {
            self.dup_acks.min(2) as usize
        };
        self.inflight.len() < (self.cwnd.floor() as usize).max(1) + limited
    }

    /// Register a fresh send and return its sequence number.
    pub fn take_next_seq(&mut self, now: f64) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.inflight.insert(
            seq,
            SentRecord {
                sent_at: now,
                retransmitted: seq < self.rewind_point,
            },
        );
        seq
    }

    pub fn mark_retransmitted(&mut self, seq: u64, now: f64) {
        self.inflight.insert(
            seq,
            SentRecord {
                sent_at: now,
                retransmitted: true,
            },
        );
    }

    pub fn earliest_unacked(&self) -> Option<u64> {
        self.inflight.keys().next().copied()
    }

    fn sample_rtt(&mut self, sample: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(sample);
                self.rttvar = sample / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - sample).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * sample);
            }
        }
        // Timer-granularity guard keeps queueing-delay jitter at deep
        // buffers from firing spurious timeouts.
        self.rto = (self.srtt.unwrap() + (4.0 * self.rttvar).max(self.rto_floor))
            .max(self.rto_floor)
            .min(self.rto_max);
    }

    /// Process a cumulative ack for `ack` (next packet expected by the
    /// receiver).
    pub fn on_ack(&mut self, ack: u64, now: f64) -> AckReaction {
        let mut reaction = AckReaction::default();
        // Cumulative semantics: everything below the ack point is
        // delivered, whichever branch we take. This also repairs the
        // window after a timeout rewind raced with a late ack.
        if ack > self.highest_acked {
            // Karn: sample only segments acked on first transmission.
            if let Some(rec) = self.inflight.get(&(ack - 1)) {
                if !rec.retransmitted {
                    let rtt = now - rec.sent_at;
                    self.sample_rtt(rtt);
                }
            }
        }
        let acked: Vec<u64> = self.inflight.range(..ack).map(|(&s, _)| s).collect();
        let newly = acked.len() as f64;
        for s in acked {
            self.inflight.remove(&s);
        }
        self.next_seq = self.next_seq.max(ack);
        if ack > self.highest_acked {
            reaction.new_data_acked = true;
            self.highest_acked = ack;
            self.dup_acks = 0;
            match self.phase {
                TcpPhase::FastRecovery => {
                    if ack > self.recover {
                        // Full ack: deflate and resume avoidance.
                        self.cwnd = self.ssthresh;
                        self.phase = TcpPhase::CongestionAvoidance;
                    } else {
                        // Partial ack: retransmit the next hole.
                        reaction.retransmit = Some(ack);
                        self.fr_cursor = self.fr_cursor.max(ack + 1);
                    }
                }
                TcpPhase::SlowStart => {
                    self.cwnd += newly;
                    if self.cwnd >= self.ssthresh {
                        self.phase = TcpPhase::CongestionAvoidance;
                    }
                }
                TcpPhase::CongestionAvoidance => {
                    self.cwnd += newly / self.cwnd;
                }
            }
        } else {
            self.dup_acks += 1;
            match self.phase {
                TcpPhase::FastRecovery => {
                    // Window inflation plus pipelined recovery: each
                    // further dup ack retransmits the next suspect
                    // segment instead of waiting a full round trip per
                    // hole.
                    self.cwnd += 1.0;
                    if self.fr_cursor < self.recover {
                        reaction.retransmit = Some(self.fr_cursor);
                        self.fr_cursor += 1;
                    }
                }
                _ => {
                    // Early retransmit: with little outstanding data the
                    // full three dupacks may never arrive.
                    let threshold = 3.min((self.inflight.len() as u32).saturating_sub(1).max(2));
                    if self.dup_acks >= threshold {
                        self.ssthresh = (self.cwnd / 2.0).max(2.0);
                        self.cwnd = self.ssthresh + 3.0;
                        self.recover = self.next_seq;
                        self.phase = TcpPhase::FastRecovery;
                        reaction.retransmit = Some(self.highest_acked);
                        self.fr_cursor = self.highest_acked + 1;
                    }
                }
            }
        }
        self.cwnd = self.cwnd.max(1.0);
        reaction
    }

    /// Retransmission timeout: collapse to slow start, back off the
    /// timer, and rewind to the earliest unacked segment. Everything
    /// past the hole counts as unsent again (go-back-N); recovery then
    /// proceeds through the normal send path.
    pub fn on_timeout(&mut self) -> bool {
        let Some(seq) = self.earliest_unacked() else {
            return false;
        };
        self.ssthresh = (self.cwnd / 2.0).max(2.0);
        self.cwnd = 1.0;
        self.phase = TcpPhase::SlowStart;
        self.dup_acks = 0;
        self.rto = (self.rto * 2.0).min(self.rto_max);
        self.rewind_point = self.rewind_point.max(self.next_seq);
        self.next_seq = seq;
        self.inflight.clear();
        true
    }
}

/// Receiver side: cumulative ack point plus an out-of-order stash.
#[derive(Debug, Clone, Default)]
pub struct TcpReceiver {
    pub rcv_nxt: u64,
    ooo: BTreeSet<u64>,
}

impl TcpReceiver {
    /// Accept a data segment; returns how many packets were newly
    /// delivered in order to the application.
    pub fn on_data(&mut self, seq: u64) -> u64 {
        if seq < self.rcv_nxt {
            return 0;
        }
        if seq == self.rcv_nxt {
            self.rcv_nxt += 1;
            let mut n = 1;
            while self.ooo.remove(&self.rcv_nxt) {
                self.rcv_nxt += 1;
                n += 1;
            }
            n
        } else {
            self.ooo.insert(seq);
            0
        }
    }
}

/// Rate for the optimal source given the fed-back path price: the
/// inverse of the price (log utility), scaled and clamped.
pub fn optimal_step(scale: f64, feedback: f64, rate_min: f64, rate_max: f64) -> f64 {
    if feedback <= 0.0 {
        rate_max
    } else {
        (scale / feedback).clamp(rate_min, rate_max)
    }
}

/// Paced source mimicking the solver's rate controller. Feedback is
/// smoothed before inversion; the raw per-packet queue prices are far
/// too noisy to follow directly.
#[derive(Debug, Clone)]
pub struct OptimalSource {
    pub rate: f64,
    pub scale: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub next_seq: u64,
    smoothed_price: Option<f64>,
}

impl OptimalSource {
    pub fn new(scale: f64, rate_min: f64, rate_max: f64, initial_rate: f64) -> Self {
        OptimalSource {
            rate: initial_rate,
            scale,
            rate_min,
            rate_max,
            next_seq: 0,
            smoothed_price: None,
        }
    }

    pub fn on_feedback(&mut self, price: f64) {
        let s = match self.smoothed_price {
            None => price,
            Some(prev) => {
                let g = std::env::var("OPT_GAMMA").ok().and_then(|v| v.parse().ok()).unwrap_or(0.05f64);
                (1.0 - g) * prev + g * price
            }
        };
        self.smoothed_price = Some(s);
        self.rate = optimal_step(self.scale, s, self.rate_min, self.rate_max);
    }
}
