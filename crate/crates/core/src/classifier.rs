//! Windowed-mean gesture classification.
//!
//! A window of samples is reduced to the exact mean of its Z and Y axes. A Z
//! mean inside the ON band means the wrist moved up and down; otherwise a Y
//! mean inside the OFF band means it swept sideways; anything else is
//! ignored. Bands are inclusive and compared in exact rational arithmetic,
//! so a mean of exactly 286 is inside `[240, 286]` with no tolerance.

use std::fmt;
use std::fs;
use std::path::Path;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sensor::{AccelSample, Axis, GestureKind, Trace};

/// Exact mean of a window.
pub type Mean = Ratio<i64>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifierError {
    #[error("window is empty")]
    EmptyWindow,
    #[error("window has {got} samples, profile expects {expected}")]
    WindowLength { expected: usize, got: usize },
    #[error("no {0} traces supplied")]
    NoTraces(&'static str),
    #[error("trace {index} of the {role} set is labeled {found:?}, expected {expected}")]
    WrongLabel {
        role: &'static str,
        index: usize,
        expected: GestureKind,
        found: Option<GestureKind>,
    },
    #[error("bands overlap: on {on}, off {off}")]
    Overlap { on: Band, off: Band },
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Classifier verdict. Checked in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    On,
    Off,
    DoNothing,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::On => "ON",
            Action::Off => "OFF",
            Action::DoNothing => "DO_NOTHING",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inclusive integer interval, serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 2]", into = "[i64; 2]")]
pub struct Band {
    lo: i64,
    hi: i64,
}

impl Band {
    pub fn new(lo: i64, hi: i64) -> Result<Self, ClassifierError> {
        if lo > hi {
            return Err(ClassifierError::InvalidProfile(format!("band [{lo}, {hi}] has lo > hi")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn contains(&self, mean: &Mean) -> bool {
        *mean >= Mean::from_integer(self.lo) && *mean <= Mean::from_integer(self.hi)
    }

    pub fn overlaps(&self, other: &Band) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

impl TryFrom<[i64; 2]> for Band {
    type Error = ClassifierError;

    fn try_from([lo, hi]: [i64; 2]) -> Result<Self, Self::Error> {
        Band::new(lo, hi)
    }
}

impl From<Band> for [i64; 2] {
    fn from(b: Band) -> Self {
        [b.lo, b.hi]
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

pub const DEFAULT_ON_BAND: Band = Band { lo: 240, hi: 286 };
pub const DEFAULT_OFF_BAND: Band = Band { lo: 323, hi: 384 };
pub const DEFAULT_WINDOW: usize = 16;
pub const DEFAULT_DEBOUNCE: usize = 2;

/// Decision bands plus windowing parameters.
///
/// Persisted as JSON with exactly the keys `on_band`, `off_band`,
/// `window_size` and `debounce_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationProfile {
    /// Applied to the Z-axis window mean.
    pub on_band: Band,
    /// Applied to the Y-axis window mean.
    pub off_band: Band,
    pub window_size: usize,
    pub debounce_n: usize,
}

impl Default for CalibrationProfile {
    fn default() -> Self {
        Self {
            on_band: DEFAULT_ON_BAND,
            off_band: DEFAULT_OFF_BAND,
            window_size: DEFAULT_WINDOW,
            debounce_n: DEFAULT_DEBOUNCE,
        }
    }
}

impl CalibrationProfile {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.on_band.overlaps(&self.off_band) {
            return Err(ClassifierError::Overlap { on: self.on_band, off: self.off_band });
        }
        if self.window_size == 0 {
            return Err(ClassifierError::InvalidProfile("window_size must be at least 1".into()));
        }
        if self.debounce_n == 0 {
            return Err(ClassifierError::InvalidProfile("debounce_n must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_window(self, window_size: usize) -> Self {
        Self { window_size, ..self }
    }

    pub fn from_json(text: &str) -> Result<Self, ClassifierError> {
        let profile: Self = serde_json::from_str(text)
            .map_err(|e| ClassifierError::InvalidProfile(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifierError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ClassifierError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifierError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|e| ClassifierError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

pub fn window_mean(samples: &[AccelSample], axis: Axis) -> Result<Mean, ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptyWindow);
    }
    let sum: i64 = samples.iter().map(|s| i64::from(s.axis(axis))).sum();
    Ok(Mean::new(sum, samples.len() as i64))
}

/// Rule evaluation without the window-length check.
pub fn decide(samples: &[AccelSample], on_band: &Band, off_band: &Band) -> Result<Action, ClassifierError> {
    if on_band.contains(&window_mean(samples, Axis::Z)?) {
        Ok(Action::On)
    } else if off_band.contains(&window_mean(samples, Axis::Y)?) {
        Ok(Action::Off)
    } else {
        Ok(Action::DoNothing)
    }
}

pub fn classify_window(
    samples: &[AccelSample],
    profile: &CalibrationProfile,
) -> Result<Action, ClassifierError> {
    if samples.len() != profile.window_size {
        return Err(ClassifierError::WindowLength {
            expected: profile.window_size,
            got: samples.len(),
        });
    }
    decide(samples, &profile.on_band, &profile.off_band)
}

fn axis_extremes(
    traces: &[Trace],
    axis: Axis,
    role: &'static str,
    expected: GestureKind,
) -> Result<(i64, i64), ClassifierError> {
    if traces.is_empty() {
        return Err(ClassifierError::NoTraces(role));
    }
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for (index, trace) in traces.iter().enumerate() {
        if trace.label != Some(expected) || trace.is_empty() {
            return Err(ClassifierError::WrongLabel { role, index, expected, found: trace.label });
        }
        for s in trace.samples() {
            let v = i64::from(s.axis(axis));
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    Ok((lo, hi))
}

/// Builds bands from labeled recordings: the ON band spans the Z values of
/// the up/down traces, the OFF band the Y values of the horizontal traces,
/// each widened by the margins. Window and debounce take their defaults.
pub fn calibrate(
    on_traces: &[Trace],
    off_traces: &[Trace],
    margin_lo: i64,
    margin_hi: i64,
) -> Result<CalibrationProfile, ClassifierError> {
    let (on_lo, on_hi) = axis_extremes(on_traces, Axis::Z, "on", GestureKind::VerticalUpDown)?;
    let (off_lo, off_hi) = axis_extremes(off_traces, Axis::Y, "off", GestureKind::Horizontal)?;
    let on_band = Band::new(on_lo - margin_lo, on_hi + margin_hi)?;
    let off_band = Band::new(off_lo - margin_lo, off_hi + margin_hi)?;
    if on_band.overlaps(&off_band) {
        return Err(ClassifierError::Overlap { on: on_band, off: off_band });
    }
    Ok(CalibrationProfile { on_band, off_band, ..CalibrationProfile::default() })
}

/// Run-length debouncer. An action is emitted once it has been seen in
/// `n` consecutive windows, unless it is the action emitted last.
/// `DoNothing` is never emitted; it only breaks runs.
#[derive(Debug, Clone)]
pub struct Debouncer {
    n: usize,
    run: Option<(Action, usize)>,
    last_emitted: Option<Action>,
}

impl Debouncer {
    /// # Panics
    /// If `n` is zero.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "debounce count must be at least 1");
        Self { n, run: None, last_emitted: None }
    }

    pub fn push(&mut self, verdict: Action) -> Option<Action> {
        if verdict == Action::DoNothing {
            self.run = None;
            return None;
        }
        let count = match self.run {
            Some((a, c)) if a == verdict => c + 1,
            _ => 1,
        };
        self.run = Some((verdict, count));
        if count >= self.n && self.last_emitted != Some(verdict) {
            self.last_emitted = Some(verdict);
            Some(verdict)
        } else {
            None
        }
    }

    pub fn last_emitted(&self) -> Option<Action> {
        self.last_emitted
    }
}

pub fn debounced_stream(verdicts: &[Action], debounce_n: usize) -> Vec<Action> {
    let mut d = Debouncer::new(debounce_n);
    verdicts.iter().filter_map(|&v| d.push(v)).collect()
}
