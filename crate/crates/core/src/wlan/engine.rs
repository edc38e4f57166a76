//! Event-driven DCF over a single shared channel, downlink only.
//!
//! Each AP with a backlog counts down a backoff drawn uniformly from
//! `[0, CW)` slots while its medium is idle and freezes while carrier sense
//! reports busy. A frame occupies `overhead + payload/rate` microseconds, the
//! rate being the MCS supported by the station's noise-only SINR. The frame
//! succeeds iff the SINR at the station, taken against the largest
//! interference seen while it was on air, still meets that MCS threshold.
//! Failures double CW up to `cw_max`; successes reset it to `cw_min`.

use thiserror::Error;

use super::channel::{dbm_to_mw, mw_to_dbm};
use super::report::{BssReport, ThroughputReport, WindowSample};
use super::scenario::{Scenario, TrafficLoad};
use crate::error::ConfigError;
use crate::sim::{Event, EventKind, Handler, RngStream, Scheduler, SimError, SimTime, Simulation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WlanError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation fault: {0}")]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacEvent {
    FrameArrival { ap: usize },
    BackoffExpiry { ap: usize, token: u64 },
    TxEnd { ap: usize },
    Sample { index: u64 },
}

impl EventKind for MacEvent {
    fn kind(&self) -> &'static str {
        match self {
            MacEvent::FrameArrival { .. } => "frame_arrival",
            MacEvent::BackoffExpiry { .. } => "backoff_expiry",
            MacEvent::TxEnd { .. } => "tx_end",
            MacEvent::Sample { .. } => "monitoring_sample",
        }
    }

    fn detail(&self) -> String {
        match self {
            MacEvent::FrameArrival { ap } | MacEvent::TxEnd { ap } => format!("ap={ap}"),
            MacEvent::BackoffExpiry { ap, token } => format!("ap={ap} token={token}"),
            MacEvent::Sample { index } => format!("sample={index}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    pub duration: SimTime,
    pub seed: u64,
    pub trace: bool,
    /// Emit per-BSS throughput samples at this period.
    pub sample_interval: Option<SimTime>,
}

impl SimOptions {
    pub fn new(duration: SimTime, seed: u64) -> Self {
        Self {
            duration,
            seed,
            trace: false,
            sample_interval: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: ThroughputReport,
    pub samples: Vec<WindowSample>,
    pub trace: Option<String>,
    pub events_processed: u64,
}

/// Runs `s` for `duration` and reports per-BSS throughput.
pub fn simulate_scenario(
    s: &Scenario,
    duration: SimTime,
    seed: u64,
) -> Result<ThroughputReport, WlanError> {
    simulate_with(s, &SimOptions::new(duration, seed)).map(|o| o.report)
}

pub fn simulate_with(s: &Scenario, opts: &SimOptions) -> Result<SimOutput, WlanError> {
    s.validate()?;
    let mut model = MacModel::new(s, opts.seed);
    let mut sim = Simulation::new();
    if opts.trace {
        sim = sim.with_trace();
    }
    model.bootstrap(&mut sim)?;
    if let Some(period) = opts.sample_interval.filter(|p| p.as_micros() > 0) {
        let mut k = 1;
        while SimTime::from_micros(period.as_micros() * k) <= opts.duration {
            sim.schedule(
                SimTime::from_micros(period.as_micros() * k),
                MacEvent::Sample { index: k },
            )?;
            k += 1;
        }
    }
    let stats = sim.run_until(&mut model, opts.duration)?;
    let report = model.finish(opts.duration);
    Ok(SimOutput {
        report,
        samples: model.samples,
        trace: sim.take_trace().map(|t| t.into_string()),
        events_processed: stats.processed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Nothing queued.
    Empty,
    /// Backlogged, medium busy.
    Frozen,
    Counting,
    Transmitting,
    /// No station reachable at any MCS.
    Unreachable,
}

#[derive(Debug, Clone)]
struct Link {
    sta: usize,
    rate_mbps: f64,
    min_sinr_db: f64,
}

#[derive(Debug, Clone)]
struct ActiveTx {
    start: SimTime,
    link: usize,
    /// Current and worst interference at the receiver, mW.
    interference_mw: f64,
    max_interference_mw: f64,
}

#[derive(Debug)]
struct Ap {
    node: usize,
    links: Vec<Link>,
    next_link: usize,
    saturated: bool,
    arrival_interval_us: f64,
    arrivals: u64,
    pending: u64,
    phase: Phase,
    cw: u32,
    backoff: u32,
    need_difs: bool,
    count_start: SimTime,
    expiry: Option<SimTime>,
    token: u64,
    tx: Option<ActiveTx>,
    rng: RngStream,
    delivered_bits: u64,
    frames_ok: u64,
    frames_failed: u64,
    sinr_sum_db: f64,
    airtime_us: u64,
    zero_rate_link: bool,
}

impl Ap {
    fn has_frame(&self) -> bool {
        self.saturated || self.pending > 0
    }
}

struct MacModel<'a> {
    s: &'a Scenario,
    aps: Vec<Ap>,
    /// `gain_mw[i][n]`: power received at node `n` from AP `i`, mW.
    gain_mw: Vec<Vec<f64>>,
    active: Vec<usize>,
    noise_mw: f64,
    cca_dbm: f64,
    samples: Vec<WindowSample>,
    sample_marks: Vec<u64>,
    last_sample: SimTime,
}

impl<'a> MacModel<'a> {
    fn new(s: &'a Scenario, seed: u64) -> Self {
        let noise = s.channel.noise_floor_dbm;
        let mut gain_mw = Vec::with_capacity(s.bss.len());
        let mut aps = Vec::with_capacity(s.bss.len());
        for b in &s.bss {
            let node = s.node_index(&b.ap).expect("validated");
            let row: Vec<f64> = (0..s.nodes.len())
                .map(|n| {
                    if n == node {
                        0.0
                    } else {
                        dbm_to_mw(s.rx_power_between(node, n, b.tx_power_dbm))
                    }
                })
                .collect();
            let mut links = Vec::new();
            let mut zero_rate_link = false;
            for (n, st) in s.nodes.iter().enumerate() {
                if st.role != super::scenario::Role::Sta || st.bss != b.id {
                    continue;
                }
                let snr = s.rx_power_between(node, n, b.tx_power_dbm) - noise;
                match s.mcs_table.entry_for(snr) {
                    Some(e) => links.push(Link {
                        sta: n,
                        rate_mbps: e.rate_mbps,
                        min_sinr_db: e.min_sinr_db,
                    }),
                    None => zero_rate_link = true,
                }
            }
            let (saturated, interval) = match b.traffic_load {
                TrafficLoad::Saturated => (true, 0.0),
                TrafficLoad::Mbps(v) if v > 0.0 => (false, s.mac.payload_bits as f64 / v),
                TrafficLoad::Mbps(_) => (false, f64::INFINITY),
            };
            aps.push(Ap {
                node,
                phase: if links.is_empty() {
                    Phase::Unreachable
                } else {
                    Phase::Empty
                },
                links,
                next_link: 0,
                saturated,
                arrival_interval_us: interval,
                arrivals: 0,
                pending: 0,
                cw: s.mac.cw_min,
                backoff: 0,
                need_difs: true,
                count_start: SimTime::ZERO,
                expiry: None,
                token: 0,
                tx: None,
                rng: RngStream::new(seed, format!("mac.bss{}", b.id)),
                delivered_bits: 0,
                frames_ok: 0,
                frames_failed: 0,
                sinr_sum_db: 0.0,
                airtime_us: 0,
                zero_rate_link,
            });
            gain_mw.push(row);
        }
        let n = aps.len();
        MacModel {
            s,
            aps,
            gain_mw,
            active: Vec::with_capacity(n),
            noise_mw: dbm_to_mw(noise),
            cca_dbm: s.channel.cca_threshold_dbm,
            samples: Vec::new(),
            sample_marks: vec![0; n],
            last_sample: SimTime::ZERO,
        }
    }

    fn bootstrap(&mut self, sim: &mut Simulation<MacEvent>) -> Result<(), SimError> {
        for i in 0..self.aps.len() {
            if self.aps[i].phase == Phase::Unreachable {
                continue;
            }
            if self.aps[i].saturated {
                let ap = &mut self.aps[i];
                ap.backoff = draw_backoff(&mut ap.rng, ap.cw);
                ap.need_difs = true;
                ap.count_start = SimTime::ZERO + SimTime::from_micros(self.s.mac.difs_us);
                ap.expiry = Some(
                    ap.count_start + SimTime::from_micros(u64::from(ap.backoff) * self.s.mac.slot_us),
                );
                ap.token += 1;
                ap.phase = Phase::Counting;
                sim.schedule(
                    ap.expiry.unwrap(),
                    MacEvent::BackoffExpiry {
                        ap: i,
                        token: ap.token,
                    },
                )?;
            } else if let Some(t) = self.arrival_time(i, 0) {
                sim.schedule(t, MacEvent::FrameArrival { ap: i })?;
            }
        }
        Ok(())
    }

    /// Time of the `k`-th arrival (0-based): constant bit rate, first frame one interval in.
    fn arrival_time(&self, i: usize, k: u64) -> Option<SimTime> {
        let iv = self.aps[i].arrival_interval_us;
        if !iv.is_finite() {
            return None;
        }
        Some(SimTime::from_micros(((k + 1) as f64 * iv).ceil() as u64))
    }

    fn busy_at(&self, i: usize) -> bool {
        let node = self.aps[i].node;
        let mut total = 0.0;
        let mut any = false;
        for &k in &self.active {
            if k != i {
                total += self.gain_mw[k][node];
                any = true;
            }
        }
        any && mw_to_dbm(total) >= self.cca_dbm
    }

    fn start_countdown(
        &mut self,
        i: usize,
        sched: &mut Scheduler<'_, MacEvent>,
    ) -> Result<(), SimError> {
        let slot = self.s.mac.slot_us;
        let difs = self.s.mac.difs_us;
        let now = sched.now();
        let ap = &mut self.aps[i];
        ap.count_start = now + SimTime::from_micros(if ap.need_difs { difs } else { 0 });
        let expiry = ap.count_start + SimTime::from_micros(u64::from(ap.backoff) * slot);
        ap.expiry = Some(expiry);
        ap.token += 1;
        ap.phase = Phase::Counting;
        sched.schedule(
            expiry,
            MacEvent::BackoffExpiry {
                ap: i,
                token: ap.token,
            },
        )?;
        Ok(())
    }

    fn freeze(&mut self, i: usize, now: SimTime) {
        let slot = self.s.mac.slot_us;
        let ap = &mut self.aps[i];
        if now >= ap.count_start {
            let elapsed = (now - ap.count_start).as_micros() / slot;
            ap.backoff -= (elapsed.min(u64::from(ap.backoff))) as u32;
            ap.need_difs = false;
        }
        ap.expiry = None;
        ap.token += 1;
        ap.phase = Phase::Frozen;
    }

    /// New access attempt for a backlogged AP that is not on air.
    fn contend(
        &mut self,
        i: usize,
        fresh: bool,
        sched: &mut Scheduler<'_, MacEvent>,
    ) -> Result<(), SimError> {
        {
            let ap = &mut self.aps[i];
            ap.backoff = draw_backoff(&mut ap.rng, ap.cw);
            ap.need_difs = fresh;
        }
        if self.busy_at(i) {
            let ap = &mut self.aps[i];
            ap.phase = Phase::Frozen;
            ap.expiry = None;
            ap.token += 1;
            Ok(())
        } else {
            self.start_countdown(i, sched)
        }
    }

    fn start_tx(&mut self, i: usize, sched: &mut Scheduler<'_, MacEvent>) -> Result<(), SimError> {
        let now = sched.now();
        let link_idx = {
            let ap = &mut self.aps[i];
            let l = ap.next_link % ap.links.len();
            ap.next_link = (l + 1) % ap.links.len();
            l
        };
        let link = self.aps[i].links[link_idx].clone();
        let interference: f64 = self
            .active
            .iter()
            .map(|&k| self.gain_mw[k][link.sta])
            .sum();
        for &k in &self.active {
            let rx = self.aps[k].links[self.aps[k].tx.as_ref().expect("on air").link].sta;
            let add = self.gain_mw[i][rx];
            let tx = self.aps[k].tx.as_mut().expect("on air");
            tx.interference_mw += add;
            tx.max_interference_mw = tx.max_interference_mw.max(tx.interference_mw);
        }
        let dur = self.s.mac.frame_duration_us(link.rate_mbps);
        let ap = &mut self.aps[i];
        ap.phase = Phase::Transmitting;
        ap.expiry = None;
        ap.tx = Some(ActiveTx {
            start: now,
            link: link_idx,
            interference_mw: interference,
            max_interference_mw: interference,
        });
        self.active.push(i);
        sched.schedule_in(SimTime::from_micros(dur), MacEvent::TxEnd { ap: i })?;

        // Others that count down into this very instant still transmit in the same slot.
        for j in 0..self.aps.len() {
            if j != i
                && self.aps[j].phase == Phase::Counting
                && self.aps[j].expiry != Some(now)
                && self.busy_at(j)
            {
                self.freeze(j, now);
            }
        }
        Ok(())
    }

    fn end_tx(&mut self, i: usize, sched: &mut Scheduler<'_, MacEvent>) -> Result<(), SimError> {
        let now = sched.now();
        let tx = self.aps[i].tx.take().expect("tx_end without transmission");
        self.active.retain(|&k| k != i);
        let link = self.aps[i].links[tx.link].clone();
        for &k in &self.active {
            let sub = self.gain_mw[i][self.aps[k].links[self.aps[k].tx.as_ref().unwrap().link].sta];
            let other = self.aps[k].tx.as_mut().unwrap();
            other.interference_mw = (other.interference_mw - sub).max(0.0);
        }
        let signal_mw = self.gain_mw[i][link.sta];
        let sinr_db = mw_to_dbm(signal_mw) - mw_to_dbm(tx.max_interference_mw + self.noise_mw);
        let ok = sinr_db >= link.min_sinr_db;
        let (cw_min, cw_max, payload) =
            (self.s.mac.cw_min, self.s.mac.cw_max, self.s.mac.payload_bits);
        {
            let ap = &mut self.aps[i];
            ap.airtime_us += (now - tx.start).as_micros();
            ap.sinr_sum_db += sinr_db;
            if ok {
                ap.frames_ok += 1;
                ap.delivered_bits += payload;
                ap.cw = cw_min;
                if !ap.saturated {
                    ap.pending -= 1;
                }
            } else {
                ap.frames_failed += 1;
                ap.cw = (ap.cw * 2 + 1).min(cw_max);
            }
        }
        if self.aps[i].has_frame() {
            self.contend(i, false, sched)?;
        } else {
            self.aps[i].phase = Phase::Empty;
        }
        for j in 0..self.aps.len() {
            if j != i && self.aps[j].phase == Phase::Frozen && !self.busy_at(j) {
                self.start_countdown(j, sched)?;
            }
        }
        Ok(())
    }

    fn arrival(&mut self, i: usize, sched: &mut Scheduler<'_, MacEvent>) -> Result<(), SimError> {
        let k = {
            let ap = &mut self.aps[i];
            ap.arrivals += 1;
            ap.arrivals
        };
        if let Some(t) = self.arrival_time(i, k) {
            sched.schedule(t, MacEvent::FrameArrival { ap: i })?;
        }
        let ap = &mut self.aps[i];
        if ap.phase == Phase::Unreachable {
            return Ok(());
        }
        ap.pending += 1;
        if ap.phase == Phase::Empty {
            self.contend(i, true, sched)?;
        }
        Ok(())
    }

    fn sample(&mut self, now: SimTime) {
        let span = (now - self.last_sample).as_micros();
        let thr = self
            .aps
            .iter()
            .zip(self.sample_marks.iter_mut())
            .map(|(ap, mark)| {
                let bits = ap.delivered_bits - *mark;
                *mark = ap.delivered_bits;
                if span == 0 {
                    0.0
                } else {
                    bits as f64 / span as f64
                }
            })
            .collect();
        self.samples.push(WindowSample { end: now, thr_mbps: thr });
        self.last_sample = now;
    }

    fn finish(&mut self, end: SimTime) -> ThroughputReport {
        let window = end.as_micros();
        let bss = self
            .aps
            .iter()
            .zip(&self.s.bss)
            .map(|(ap, b)| {
                let on_air = ap.tx.as_ref().map_or(0, |t| (end - t.start).as_micros());
                let frames = ap.frames_ok + ap.frames_failed;
                let (thr, airtime) = if window == 0 {
                    (0.0, 0.0)
                } else {
                    (
                        ap.delivered_bits as f64 / window as f64,
                        ((ap.airtime_us + on_air) as f64 / window as f64).min(1.0),
                    )
                };
                BssReport {
                    bss_id: b.id,
                    thr_mbps: thr,
                    airtime,
                    collisions: ap.frames_failed,
                    frames_ok: ap.frames_ok,
                    mean_sinr_db: (frames > 0).then(|| ap.sinr_sum_db / frames as f64),
                    offered_mbps: b.traffic_load.offered_mbps(),
                    zero_rate_link: ap.zero_rate_link,
                }
            })
            .collect();
        ThroughputReport {
            window_start: SimTime::ZERO,
            window_end: end,
            bss,
        }
    }
}

fn draw_backoff(rng: &mut RngStream, cw: u32) -> u32 {
    rng.below(u64::from(cw)) as u32
}

impl Handler<MacEvent> for MacModel<'_> {
    fn handle(
        &mut self,
        event: Event<MacEvent>,
        sched: &mut Scheduler<'_, MacEvent>,
    ) -> Result<(), SimError> {
        match event.payload {
            MacEvent::FrameArrival { ap } => self.arrival(ap, sched),
            MacEvent::BackoffExpiry { ap, token } => {
                let a = &self.aps[ap];
                if a.token == token && a.phase == Phase::Counting {
                    self.aps[ap].need_difs = false;
                    self.start_tx(ap, sched)
                } else {
                    Ok(())
                }
            }
            MacEvent::TxEnd { ap } => self.end_tx(ap, sched),
            MacEvent::Sample { .. } => {
                self.sample(sched.now());
                Ok(())
            }
        }
    }
}
