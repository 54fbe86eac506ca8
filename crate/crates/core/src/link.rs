//! Half-duplex watch <-> access point link as a discrete-event simulation.
//!
//! The access point (AP) is started by the host, the watch is put into a
//! mode, and in ACC mode every accelerometer sample goes over the air as one
//! [`CodecFrame`]. Frames take `latency` virtual milliseconds, are lost with
//! independent probability `loss_probability`, and optionally pass through
//! the FSK modem so channel noise shows up as CRC failures. Delivered frames
//! land in the AP's receive FIFO for the host to drain.
//!
//! The only AP -> watch traffic is control (start announcement and mode
//! acknowledgment). A mode change waits for in-flight frames to land first,
//! so the two directions never share the air.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{self, CodecError, CodecFrame, Fifo, ModemConfig, WatchMode};
use crate::seed;
use crate::sensor::AccelSample;

pub const AP_STARTED_MESSAGE: &str =
    "Access point started. Now start watch in ACC, PPT or Synch mode.";
pub const ACQUIRING_MESSAGE: &str = "Acquiring data from accelerometer sensor";

pub const DEFAULT_RX_FIFO: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("access point already started")]
    AlreadyStarted,
    #[error("access point not started")]
    NotStarted,
    #[error("watch is in {0} mode; samples are only sent in ACC mode")]
    NotStreaming(WatchMode),
    #[error("cannot run backwards from t={now} to t={requested}")]
    ClockRegression { now: u64, requested: u64 },
    #[error("invalid link configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Modem(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AccessPointState {
    #[default]
    NotStarted,
    Started,
    Acquiring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    pub loss_probability: f64,
    /// Air time plus processing per frame, virtual ms.
    pub latency: u64,
    pub seed: u64,
    /// Informational only; nothing is sampled at the carrier frequency.
    pub carrier_label: String,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            loss_probability: 0.0,
            latency: 5,
            seed: 0,
            carrier_label: "900 MHz".to_string(),
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<(), LinkError> {
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(LinkError::InvalidConfig(format!(
                "loss_probability {} must lie in [0, 1]",
                self.loss_probability
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkEventKind {
    ApStarted,
    ModeSet,
    FrameSent,
    FrameDelivered,
    FrameLost,
    AcquireAnnounced,
}

impl LinkEventKind {
    pub fn name(self) -> &'static str {
        match self {
            LinkEventKind::ApStarted => "AP_STARTED",
            LinkEventKind::ModeSet => "MODE_SET",
            LinkEventKind::FrameSent => "FRAME_SENT",
            LinkEventKind::FrameDelivered => "FRAME_DELIVERED",
            LinkEventKind::FrameLost => "FRAME_LOST",
            LinkEventKind::AcquireAnnounced => "ACQUIRE_ANNOUNCED",
        }
    }

    /// True for traffic the AP puts on the air.
    pub fn is_ap_transmission(self) -> bool {
        matches!(self, LinkEventKind::ApStarted | LinkEventKind::ModeSet)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossCause {
    /// Bernoulli loss on the air.
    Dropped,
    /// Modem noise corrupted the frame and the CRC or sync check rejected it.
    Corrupted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventDetail {
    None,
    Message(&'static str),
    Mode(WatchMode),
    Frame {
        id: u64,
        frame: CodecFrame,
        cause: Option<LossCause>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkEvent {
    pub t: u64,
    pub kind: LinkEventKind,
    pub detail: EventDetail,
}

impl LinkEvent {
    pub fn frame_id(&self) -> Option<u64> {
        match self.detail {
            EventDetail::Frame { id, .. } => Some(id),
            _ => None,
        }
    }

    /// Log lines for this event: the event line, followed by the verbatim
    /// control-center message for announcements.
    pub fn log_lines(&self) -> Vec<String> {
        let mut lines = vec![self.to_string()];
        if let EventDetail::Message(msg) = self.detail {
            lines.push(msg.to_string());
        }
        lines
    }
}

impl fmt::Display for LinkEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[t={}] {}", self.t, self.kind.name())?;
        match &self.detail {
            EventDetail::None | EventDetail::Message(_) => Ok(()),
            EventDetail::Mode(mode) => write!(f, " {mode}"),
            EventDetail::Frame { id, frame, cause } => {
                let (x, y, z) = frame.payload();
                write!(f, " id={id} mode={} x={x} y={y} z={z}", frame.mode())?;
                match cause {
                    Some(LossCause::Dropped) => write!(f, " cause=dropped"),
                    Some(LossCause::Corrupted) => write!(f, " cause=corrupted"),
                    None => Ok(()),
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    id: u64,
    arrive_at: u64,
    sent: CodecFrame,
    /// `None` when the frame will not arrive intact.
    received: Option<CodecFrame>,
    cause: Option<LossCause>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub corrupted: u64,
}

/// Single-owner simulation of one watch and one access point.
#[derive(Debug, Clone)]
pub struct LinkSim {
    cfg: LinkConfig,
    modem: Option<ModemConfig>,
    ap: AccessPointState,
    mode: WatchMode,
    now: u64,
    loss_rng: ChaCha8Rng,
    next_id: u64,
    in_flight: VecDeque<InFlight>,
    rx: Fifo,
    events: Vec<LinkEvent>,
    stats: LinkStats,
}

impl LinkSim {
    /// A link that carries frames as bits without a waveform stage.
    pub fn new(cfg: LinkConfig) -> Result<Self, LinkError> {
        cfg.validate()?;
        Ok(Self {
            loss_rng: seed::rng_for(cfg.seed, seed::stream::LINK_LOSS),
            cfg,
            modem: None,
            ap: AccessPointState::NotStarted,
            mode: WatchMode::Idle,
            now: 0,
            next_id: 0,
            in_flight: VecDeque::new(),
            rx: Fifo::new(DEFAULT_RX_FIFO),
            events: Vec::new(),
            stats: LinkStats::default(),
        })
    }

    /// A link whose frames are modulated, sent through the noisy channel and
    /// demodulated.
    pub fn with_modem(cfg: LinkConfig, modem: ModemConfig) -> Result<Self, LinkError> {
        modem.validate()?;
        let mut sim = Self::new(cfg)?;
        sim.modem = Some(modem);
        Ok(sim)
    }

    pub fn with_rx_capacity(mut self, capacity: usize) -> Self {
        self.rx = Fifo::new(capacity);
        self
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn ap_state(&self) -> AccessPointState {
        self.ap
    }

    pub fn watch_mode(&self) -> WatchMode {
        self.mode
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    pub fn events(&self) -> &[LinkEvent] {
        &self.events
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight.len()
    }

    /// Arrival time of the oldest frame still on the air.
    pub fn next_arrival(&self) -> Option<u64> {
        self.in_flight.front().map(|f| f.arrive_at)
    }

    /// Frames dropped because the receive FIFO was full.
    pub fn rx_overflows(&self) -> u64 {
        self.rx.dropped()
    }

    /// Takes the oldest delivered frame out of the AP's receive FIFO.
    pub fn recv(&mut self) -> Option<CodecFrame> {
        self.rx.pop().ok()
    }

    pub fn log_lines(&self) -> Vec<String> {
        self.events.iter().flat_map(LinkEvent::log_lines).collect()
    }

    fn record(&mut self, kind: LinkEventKind, detail: EventDetail) -> LinkEvent {
        let event = LinkEvent { t: self.now, kind, detail };
        self.events.push(event.clone());
        event
    }

    pub fn ap_start(&mut self) -> Result<LinkEvent, LinkError> {
        if self.ap != AccessPointState::NotStarted {
            return Err(LinkError::AlreadyStarted);
        }
        self.ap = AccessPointState::Started;
        Ok(self.record(LinkEventKind::ApStarted, EventDetail::Message(AP_STARTED_MESSAGE)))
    }

    /// Changes the watch mode. Frames still on the air are delivered first,
    /// which advances the clock to the last arrival.
    pub fn watch_set_mode(&mut self, mode: WatchMode) -> Result<LinkEvent, LinkError> {
        if self.ap == AccessPointState::NotStarted {
            return Err(LinkError::NotStarted);
        }
        if let Some(last) = self.in_flight.back().map(|f| f.arrive_at) {
            self.run_until(last)?;
        }
        self.mode = mode;
        Ok(self.record(LinkEventKind::ModeSet, EventDetail::Mode(mode)))
    }

    /// Sends one sample at the current virtual time. Returns the `FrameSent`
    /// event; whether the frame arrives is decided now but only becomes
    /// visible as `FrameDelivered` or `FrameLost` at `now + latency`.
    pub fn transmit_sample(&mut self, sample: &AccelSample) -> Result<LinkEvent, LinkError> {
        if self.ap == AccessPointState::NotStarted {
            return Err(LinkError::NotStarted);
        }
        if self.mode != WatchMode::Acc {
            return Err(LinkError::NotStreaming(self.mode));
        }
        let id = self.next_id;
        self.next_id += 1;
        let frame = CodecFrame::from_sample(WatchMode::Acc, sample);

        // one draw per frame keeps the loss stream aligned across configs
        let dropped = self.loss_rng.gen::<f64>() < self.cfg.loss_probability;
        let (received, cause) = if dropped {
            (None, Some(LossCause::Dropped))
        } else {
            match self.modem {
                None => (Some(frame), None),
                Some(modem) => {
                    let per_frame = ModemConfig {
                        seed: seed::derive_seed(modem.seed, id),
                        ..modem
                    };
                    match codec::transmit_frame(&frame, &per_frame) {
                        Ok(rx) => (Some(rx), None),
                        Err(_) => (None, Some(LossCause::Corrupted)),
                    }
                }
            }
        };

        self.in_flight.push_back(InFlight {
            id,
            arrive_at: self.now + self.cfg.latency,
            sent: frame,
            received,
            cause,
        });
        self.stats.sent += 1;
        Ok(self.record(
            LinkEventKind::FrameSent,
            EventDetail::Frame { id, frame, cause: None },
        ))
    }

    /// Processes every arrival with timestamp <= `t` in order and advances
    /// the clock to `t`. Returns the events produced.
    pub fn run_until(&mut self, t: u64) -> Result<Vec<LinkEvent>, LinkError> {
        if t < self.now {
            return Err(LinkError::ClockRegression { now: self.now, requested: t });
        }
        let first = self.events.len();
        while self.in_flight.front().is_some_and(|f| f.arrive_at <= t) {
            let flight = self.in_flight.pop_front().expect("front checked");
            self.now = flight.arrive_at;
            match flight.received {
                Some(frame) => {
                    self.stats.delivered += 1;
                    let _ = self.rx.push(frame);
                    self.record(
                        LinkEventKind::FrameDelivered,
                        EventDetail::Frame { id: flight.id, frame, cause: None },
                    );
                    self.on_first_delivery();
                }
                None => {
                    self.stats.lost += 1;
                    if flight.cause == Some(LossCause::Corrupted) {
                        self.stats.corrupted += 1;
                    }
                    self.record(
                        LinkEventKind::FrameLost,
                        EventDetail::Frame { id: flight.id, frame: flight.sent, cause: flight.cause },
                    );
                }
            }
        }
        self.now = t;
        Ok(self.events[first..].to_vec())
    }

    /// Runs until every frame on the air has landed.
    pub fn flush(&mut self) -> Result<Vec<LinkEvent>, LinkError> {
        let until = self.in_flight.back().map_or(self.now, |f| f.arrive_at.max(self.now));
        self.run_until(until)
    }

    fn on_first_delivery(&mut self) {
        if self.ap == AccessPointState::Started {
            self.ap = AccessPointState::Acquiring;
            self.record(LinkEventKind::AcquireAnnounced, EventDetail::Message(ACQUIRING_MESSAGE));
        }
    }
}
