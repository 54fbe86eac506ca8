//! PIR-gated home-automation server and the end-to-end pipeline.
//!
//! The controller ignores gestures until a PIR detection arms it. After
//! that, debounced ON/OFF actions switch the appliance. Server log lines:
//!
//! ```text
//! [t=<ms>] PIR TRIGGERED
//! [t=<ms>] ACTION <ON|OFF|DO_NOTHING>
//! [t=<ms>] APPLIANCE <name> -> <ON|OFF>
//! ```

use thiserror::Error;

use crate::classifier::{self, Action, CalibrationProfile, ClassifierError, Debouncer};
use crate::codec::{ModemConfig, WatchMode};
use crate::link::{LinkConfig, LinkError, LinkSim, LinkStats};
use crate::sensor::{AccelSample, Trace, DEFAULT_SAMPLE_PERIOD_MS};

pub const DEFAULT_APPLIANCE: &str = "light";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PirState {
    Unarmed,
    Armed { last_trigger_t: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApplianceState {
    pub name: String,
    pub powered: bool,
}

impl ApplianceState {
    pub fn status(&self) -> &'static str {
        if self.powered {
            "ON"
        } else {
            "OFF"
        }
    }
}

/// Home-automation server for one appliance.
#[derive(Debug, Clone)]
pub struct Controller {
    pir: PirState,
    /// Arming lapses this many ms after the last trigger; `None` keeps it armed.
    pir_timeout: Option<u64>,
    appliance: ApplianceState,
    log: Vec<String>,
    transitions: u64,
}

impl Default for Controller {
    fn default() -> Self {
        Self::new(DEFAULT_APPLIANCE)
    }
}

impl Controller {
    pub fn new(appliance: &str) -> Self {
        Self {
            pir: PirState::Unarmed,
            pir_timeout: None,
            appliance: ApplianceState { name: appliance.to_string(), powered: false },
            log: Vec::new(),
            transitions: 0,
        }
    }

    pub fn with_pir_timeout(mut self, timeout_ms: Option<u64>) -> Self {
        self.pir_timeout = timeout_ms;
        self
    }

    /// Starts with the appliance already powered (no log entry).
    pub fn with_powered(mut self, powered: bool) -> Self {
        self.appliance.powered = powered;
        self
    }

    pub fn pir(&self) -> PirState {
        self.pir
    }

    pub fn appliance(&self) -> &ApplianceState {
        &self.appliance
    }

    pub fn log(&self) -> &[String] {
        &self.log
    }

    pub fn transitions(&self) -> u64 {
        self.transitions
    }

    pub fn is_armed_at(&self, t: u64) -> bool {
        match (self.pir, self.pir_timeout) {
            (PirState::Unarmed, _) => false,
            (PirState::Armed { .. }, None) => true,
            (PirState::Armed { last_trigger_t }, Some(timeout)) => {
                t.saturating_sub(last_trigger_t) <= timeout
            }
        }
    }

    pub fn pir_trigger(&mut self, t: u64) {
        self.pir = PirState::Armed { last_trigger_t: t };
        self.log.push(format!("[t={t}] PIR TRIGGERED"));
    }

    pub fn apply_action(&mut self, action: Action, t: u64) -> &ApplianceState {
        self.log.push(format!("[t={t}] ACTION {action}"));
        if self.is_armed_at(t) {
            let target = match action {
                Action::On => Some(true),
                Action::Off => Some(false),
                Action::DoNothing => None,
            };
            if let Some(powered) = target.filter(|&p| p != self.appliance.powered) {
                self.appliance.powered = powered;
                self.transitions += 1;
                self.log.push(format!(
                    "[t={t}] APPLIANCE {} -> {}",
                    self.appliance.name,
                    self.appliance.status()
                ));
            }
        }
        &self.appliance
    }
}

/// Groups delivered samples into tumbling windows. A silence longer than one
/// window period discards the partial window and counts as a reset.
#[derive(Debug, Clone)]
struct WindowAssembler {
    size: usize,
    max_gap: u64,
    buf: Vec<AccelSample>,
    last_t: Option<u64>,
    resets: u64,
}

impl WindowAssembler {
    fn new(size: usize, sample_period: u64) -> Self {
        Self {
            size,
            max_gap: size as u64 * sample_period,
            buf: Vec::with_capacity(size),
            last_t: None,
            resets: 0,
        }
    }

    fn push(&mut self, sample: AccelSample) -> Option<Vec<AccelSample>> {
        if let Some(prev) = self.last_t {
            if sample.t.saturating_sub(prev) > self.max_gap && !self.buf.is_empty() {
                self.buf.clear();
                self.resets += 1;
            }
        }
        self.last_t = Some(sample.t);
        self.buf.push(sample);
        (self.buf.len() == self.size).then(|| std::mem::take(&mut self.buf))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PipelineStats {
    pub frames_sent: u64,
    pub frames_delivered: u64,
    pub frames_lost: u64,
    pub windows: u64,
    pub actions_emitted: u64,
    /// Partial windows discarded after a delivery gap.
    pub resets: u64,
}

impl PipelineStats {
    fn new(link: LinkStats, windows: u64, actions_emitted: u64, resets: u64) -> Self {
        Self {
            frames_sent: link.sent,
            frames_delivered: link.delivered,
            frames_lost: link.lost,
            windows,
            actions_emitted,
            resets,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineReport {
    pub final_state: ApplianceState,
    /// Link and server lines interleaved in processing order.
    pub log: Vec<String>,
    /// Per-window classifier verdicts.
    pub verdicts: Vec<Action>,
    /// Debounced actions handed to the controller.
    pub actions: Vec<Action>,
    pub stats: PipelineStats,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// PIR detection time; `None` never arms the controller.
    pub pir_at: Option<u64>,
    pub pir_timeout: Option<u64>,
    pub appliance: String,
    pub initially_powered: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            pir_at: Some(0),
            pir_timeout: None,
            appliance: DEFAULT_APPLIANCE.to_string(),
            initially_powered: false,
        }
    }
}

struct Run {
    sim: LinkSim,
    ctrl: Controller,
    windows: WindowAssembler,
    debouncer: Debouncer,
    profile: CalibrationProfile,
    pir_at: Option<u64>,
    log: Vec<String>,
    seen_events: usize,
    seen_ctrl: usize,
    verdicts: Vec<Action>,
    actions: Vec<Action>,
}

impl Run {
    fn sync_log(&mut self) {
        for ev in &self.sim.events()[self.seen_events..] {
            self.log.extend(ev.log_lines());
        }
        self.seen_events = self.sim.events().len();
        self.log.extend_from_slice(&self.ctrl.log()[self.seen_ctrl..]);
        self.seen_ctrl = self.ctrl.log().len();
    }

    fn consume(&mut self) -> Result<(), PipelineError> {
        let delivered: Vec<_> = self.sim.events()[self.seen_events..]
            .iter()
            .filter(|e| e.kind == crate::link::LinkEventKind::FrameDelivered)
            .map(|e| e.t)
            .collect();
        self.sync_log();
        for t in delivered {
            let frame = self.sim.recv().expect("delivered frame is queued");
            if let Some(window) = self.windows.push(frame.to_sample(t)) {
                let verdict = classifier::classify_window(&window, &self.profile)?;
                self.verdicts.push(verdict);
                if let Some(action) = self.debouncer.push(verdict) {
                    self.actions.push(action);
                    self.ctrl.apply_action(action, t);
                    self.sync_log();
                }
            }
        }
        Ok(())
    }

    /// Advances virtual time to `t`. A PIR detection due at or before `t`
    /// fires ahead of deliveries stamped at the same instant.
    fn advance(&mut self, t: u64) -> Result<(), PipelineError> {
        if let Some(pir_t) = self.pir_at.filter(|&p| p <= t) {
            if pir_t > self.sim.now() {
                self.sim.run_until(pir_t - 1)?;
                self.consume()?;
            }
            self.ctrl.pir_trigger(pir_t.max(self.sim.now()));
            self.sync_log();
            self.pir_at = None;
        }
        self.sim.run_until(t)?;
        self.consume()
    }
}

/// Streams `trace` from the watch to the server and returns the resulting
/// appliance state with the full log. The AP is started and the watch put in
/// ACC mode at t=0; trace timestamps are taken as send times.
pub fn run_pipeline(
    trace: &Trace,
    profile: &CalibrationProfile,
    link_cfg: &LinkConfig,
    modem_cfg: &ModemConfig,
    options: &PipelineOptions,
) -> Result<PipelineReport, PipelineError> {
    if trace.is_empty() {
        return Err(PipelineError::EmptyTrace);
    }
    profile.validate()?;
    let sim = LinkSim::with_modem(link_cfg.clone(), *modem_cfg)?;
    let ctrl = Controller::new(&options.appliance)
        .with_pir_timeout(options.pir_timeout)
        .with_powered(options.initially_powered);
    let mut run = Run {
        sim,
        ctrl,
        windows: WindowAssembler::new(profile.window_size, DEFAULT_SAMPLE_PERIOD_MS),
        debouncer: Debouncer::new(profile.debounce_n),
        profile: *profile,
        pir_at: options.pir_at,
        log: Vec::new(),
        seen_events: 0,
        seen_ctrl: 0,
        verdicts: Vec::new(),
        actions: Vec::new(),
    };

    run.sim.ap_start()?;
    run.sim.watch_set_mode(WatchMode::Acc)?;
    run.sync_log();

    for sample in trace.samples() {
        run.advance(sample.t)?;
        run.sim.transmit_sample(sample)?;
        run.sync_log();
    }
    let end = run.sim.now() + link_cfg.latency;
    run.advance(end)?;

    let stats = PipelineStats::new(
        run.sim.stats(),
        run.verdicts.len() as u64,
        run.actions.len() as u64,
        run.windows.resets,
    );
    Ok(PipelineReport {
        final_state: run.ctrl.appliance().clone(),
        log: run.log,
        verdicts: run.verdicts,
        actions: run.actions,
        stats,
    })
}
