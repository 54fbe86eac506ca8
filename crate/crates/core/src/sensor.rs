//! Accelerometer sample streams.
//!
//! Samples are raw 10-bit counts as the watch reports them; there is no
//! conversion to physical units. Traces persist as a small CSV dialect:
//!
//! ```text
//! # label=VerticalUpDown
//! # seed=1
//! t_ms,x,y,z
//! 0,200,200,277
//! 20,200,200,279
//! ```
//!
//! The `#` metadata lines are written only when the trace carries a label or
//! seed. The header line is optional on load.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Largest raw count a 10-bit accelerometer channel can report.
pub const MAX_COUNT: u16 = 1023;

/// Nominal sample spacing (50 Hz).
pub const DEFAULT_SAMPLE_PERIOD_MS: u64 = 20;

pub const CSV_HEADER: &str = "t_ms,x,y,z";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: malformed row {row:?}: {reason}")]
    Malformed { line: usize, row: String, reason: String },
    #[error("line {line}: {axis} count {value} exceeds {MAX_COUNT}")]
    OutOfRange { line: usize, axis: Axis, value: u64 },
    #[error("line {line}: timestamp {t} ms does not follow {prev} ms")]
    NonMonotonic { line: usize, prev: u64, t: u64 },
    #[error("sample at {t} ms: {axis} count {value} exceeds {MAX_COUNT}")]
    SampleRange { t: u64, axis: Axis, value: u16 },
    #[error("sample {index}: timestamp {t} ms does not follow {prev} ms")]
    SampleOrder { index: usize, prev: u64, t: u64 },
    #[error("labeled trace must contain at least one sample")]
    EmptyLabeled,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// One timestamped 3-axis reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AccelSample {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub z: u16,
}

impl AccelSample {
    pub fn new(t: u64, x: u16, y: u16, z: u16) -> Result<Self, TraceError> {
        for (axis, value) in [(Axis::X, x), (Axis::Y, y), (Axis::Z, z)] {
            if value > MAX_COUNT {
                return Err(TraceError::SampleRange { t, axis, value });
            }
        }
        Ok(Self { t, x, y, z })
    }

    pub fn axis(&self, axis: Axis) -> u16 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GestureKind {
    /// Wrist moved up and down; dominant on the Z axis.
    VerticalUpDown,
    /// Wrist swept sideways; dominant on the Y axis.
    Horizontal,
    Other,
}

impl GestureKind {
    pub const ALL: [GestureKind; 3] = [
        GestureKind::VerticalUpDown,
        GestureKind::Horizontal,
        GestureKind::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GestureKind::VerticalUpDown => "VerticalUpDown",
            GestureKind::Horizontal => "Horizontal",
            GestureKind::Other => "Other",
        }
    }
}

impl fmt::Display for GestureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GestureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "verticalupdown" | "vertical" => Ok(GestureKind::VerticalUpDown),
            "horizontal" => Ok(GestureKind::Horizontal),
            "other" => Ok(GestureKind::Other),
            _ => Err(format!("unknown gesture kind {s:?}")),
        }
    }
}

/// An ordered run of samples, optionally labeled with the gesture it records.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    samples: Vec<AccelSample>,
    pub label: Option<GestureKind>,
    pub seed: Option<u64>,
}

impl Trace {
    pub fn from_parts(
        samples: Vec<AccelSample>,
        label: Option<GestureKind>,
        seed: Option<u64>,
    ) -> Result<Self, TraceError> {
        for (index, pair) in samples.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(TraceError::SampleOrder {
                    index: index + 1,
                    prev: pair[0].t,
                    t: pair[1].t,
                });
            }
        }
        if let Some(s) = samples.iter().find(|s| s.x.max(s.y).max(s.z) > MAX_COUNT) {
            AccelSample::new(s.t, s.x, s.y, s.z)?;
        }
        if label.is_some() && samples.is_empty() {
            return Err(TraceError::EmptyLabeled);
        }
        Ok(Self { samples, label, seed })
    }

    pub fn samples(&self) -> &[AccelSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends `other`, shifting its timestamps to start one sample period
    /// after this trace ends. The label is kept only if both agree.
    pub fn concat(&self, other: &Trace) -> Trace {
        let offset = self
            .samples
            .last()
            .map_or(0, |s| s.t + DEFAULT_SAMPLE_PERIOD_MS);
        let base = other.samples.first().map_or(0, |s| s.t);
        let mut samples = self.samples.clone();
        samples.extend(other.samples.iter().map(|s| AccelSample {
            t: s.t - base + offset,
            ..*s
        }));
        let label = if self.label == other.label { self.label } else { None };
        Trace { samples, label, seed: None }
    }

    /// Renders the trace in its on-disk form.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(label) = self.label {
            out.push_str(&format!("# label={label}\n"));
        }
        if let Some(seed) = self.seed {
            out.push_str(&format!("# seed={seed}\n"));
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", s.t, s.x, s.y, s.z));
        }
        out
    }

    /// Parses the on-disk form. Line numbers in errors are 1-based physical
    /// lines of `text`.
    pub fn parse_csv(text: &str) -> Result<Self, TraceError> {
        let mut label = None;
        let mut seed = None;
        let mut samples: Vec<AccelSample> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim();
            if row.is_empty() {
                continue;
            }
            if let Some(meta) = row.strip_prefix('#') {
                let malformed = |reason: &str| TraceError::Malformed {
                    line,
                    row: raw.to_string(),
                    reason: reason.to_string(),
                };
                match meta.trim().split_once('=') {
                    Some(("label", v)) => {
                        label = Some(v.trim().parse().map_err(|e: String| malformed(&e))?)
                    }
                    Some(("seed", v)) => {
                        seed = Some(v.trim().parse().map_err(|_| malformed("bad seed"))?)
                    }
                    _ => {}
                }
                continue;
            }
            if row == CSV_HEADER {
                continue;
            }
            let sample = parse_row(row, line)?;
            if let Some(prev) = samples.last() {
                if sample.t <= prev.t {
                    return Err(TraceError::NonMonotonic { line, prev: prev.t, t: sample.t });
                }
            }
            samples.push(sample);
        }

        if label.is_some() && samples.is_empty() {
            return Err(TraceError::EmptyLabeled);
        }
        Ok(Trace { samples, label, seed })
    }
}

fn parse_row(row: &str, line: usize) -> Result<AccelSample, TraceError> {
    let malformed = |reason: String| TraceError::Malformed {
        line,
        row: row.to_string(),
        reason,
    };
    let fields: Vec<&str> = row.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(malformed(format!("expected 4 fields, found {}", fields.len())));
    }
    let mut nums = [0u64; 4];
    for (slot, field) in nums.iter_mut().zip(&fields) {
        *slot = field
            .parse()
            .map_err(|_| malformed(format!("{field:?} is not a non-negative integer")))?;
    }
    for (axis, value) in [(Axis::X, nums[1]), (Axis::Y, nums[2]), (Axis::Z, nums[3])] {
        if value > u64::from(MAX_COUNT) {
            return Err(TraceError::OutOfRange { line, axis, value });
        }
    }
    Ok(AccelSample {
        t: nums[0],
        x: nums[1] as u16,
        y: nums[2] as u16,
        z: nums[3] as u16,
    })
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Trace::parse_csv(&text)
}

pub fn save_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let path = path.as_ref();
    fs::write(path, trace.to_csv()).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Inclusive count range a generated gesture draws from on each axis.
pub fn gesture_ranges(kind: GestureKind) -> [(u16, u16); 3] {
    const ON_Z: (u16, u16) = (261, 284);
    const OFF_Y: (u16, u16) = (323, 381);
    const QUIET: (u16, u16) = (169, 230);
    match kind {
        GestureKind::VerticalUpDown => [QUIET, QUIET, ON_Z],
        GestureKind::Horizontal => [QUIET, OFF_Y, QUIET],
        GestureKind::Other => [QUIET, QUIET, QUIET],
    }
}

/// Synthesizes `n` samples of a gesture at the default sample period.
///
/// Each axis is uniform over the reference recording's range for that
/// gesture; axes the gesture does not drive use the "other movement" range.
pub fn generate_gesture(kind: GestureKind, n: usize, seed: u64) -> Result<Trace, TraceError> {
    if n == 0 {
        return Err(TraceError::ZeroSamples);
    }
    let mut rng = seed::rng_for(seed, seed::stream::GESTURE);
    let [rx, ry, rz] = gesture_ranges(kind);
    let samples = (0..n as u64)
        .map(|i| AccelSample {
            t: i * DEFAULT_SAMPLE_PERIOD_MS,
            x: rng.gen_range(rx.0..=rx.1),
            y: rng.gen_range(ry.0..=ry.1),
            z: rng.gen_range(rz.0..=rz.1),
        })
        .collect();
    Ok(Trace { samples, label: Some(kind), seed: Some(seed) })
}
