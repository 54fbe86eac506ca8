//! Reference accelerometer readings recorded from the eZ430-Chronos watch.
//!
//! Three groups: Z-axis readings for the up/down wrist gesture (light ON),
//! Y-axis readings for the horizontal gesture (light OFF), and readings for
//! every other movement (no action).

use crate::sensor::{AccelSample, GestureKind, Trace, DEFAULT_SAMPLE_PERIOD_MS};

/// Z-axis values of the vertical up/down gesture.
pub const ON_Z: [u16; 17] = [
    277, 279, 282, 284, 265, 277, 261, 274, 269, 276, 270, 280, 270, 267, 268, 279, 272,
];

/// Y-axis values of the horizontal gesture.
pub const OFF_Y: [u16; 18] = [
    360, 363, 374, 379, 367, 326, 331, 356, 323, 381, 335, 359, 339, 368, 352, 378, 372, 335,
];

/// Values recorded for all other movements.
pub const OTHER: [u16; 19] = [
    230, 225, 228, 192, 219, 212, 217, 199, 208, 224, 211, 184, 182, 179, 184, 169, 201, 206, 215,
];

/// Filler for the axes a group does not record.
pub const FILLER: u16 = 200;

fn build(values: &[u16], label: GestureKind, place: impl Fn(u16) -> (u16, u16, u16)) -> Trace {
    let samples = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (x, y, z) = place(v);
            AccelSample::new(i as u64 * DEFAULT_SAMPLE_PERIOD_MS, x, y, z)
                .expect("reference values are in range")
        })
        .collect();
    Trace::from_parts(samples, Some(label), None).expect("reference timestamps are increasing")
}

/// The ON group as a trace: z carries the readings, x and y the filler.
pub fn on_trace() -> Trace {
    build(&ON_Z, GestureKind::VerticalUpDown, |v| (FILLER, FILLER, v))
}

/// The OFF group as a trace: y carries the readings, x and z the filler.
pub fn off_trace() -> Trace {
    build(&OFF_Y, GestureKind::Horizontal, |v| (FILLER, v, FILLER))
}

/// The no-action group: the readings go on both y and z.
pub fn other_trace() -> Trace {
    build(&OTHER, GestureKind::Other, |v| (FILLER, v, v))
}
