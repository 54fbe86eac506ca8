//! Desk-scale simulation of a wrist-worn accelerometer controlling home
//! appliances over a short-range radio link.
//!
//! The pipeline: [`sensor`] samples are framed and modulated by [`codec`],
//! carried to the access point by [`link`], reduced to ON/OFF/no-op verdicts
//! by [`classifier`], and applied by the PIR-gated [`controller`].
//! Everything runs in virtual time from explicit seeds.

pub mod classifier;
pub mod codec;
pub mod controller;
pub mod link;
pub mod seed;
pub mod sensor;
pub mod table1;

pub use classifier::{Action, Band, CalibrationProfile};
pub use codec::{CodecFrame, ModemConfig, WatchMode};
pub use controller::{run_pipeline, Controller, PipelineOptions, PipelineReport};
pub use link::{LinkConfig, LinkSim};
pub use sensor::{AccelSample, Axis, GestureKind, Trace};
