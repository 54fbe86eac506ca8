//! Intra-body communication module: serial framing, FIFO buffering and a
//! binary FSK modem over an attenuating, noisy channel.
//!
//! Frame layout, most significant bit first:
//!
//! | bits  | field                                   |
//! |-------|-----------------------------------------|
//! | 0-7   | sync `10100101` (0xA5)                  |
//! | 8-9   | mode (00 Idle, 01 ACC, 10 PPT, 11 Sync) |
//! | 10-19 | x                                       |
//! | 20-29 | y                                       |
//! | 30-39 | z                                       |
//! | 40-47 | CRC-8, poly 0x07, init 0x00, bits 8-39  |

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::sensor::{AccelSample, MAX_COUNT};

pub const SYNC: u8 = 0xA5;
pub const FRAME_BITS: usize = 48;
pub const CRC_POLY: u8 = 0x07;

/// First and one-past-last bit index covered by the CRC.
pub const CRC_COVERAGE: (usize, usize) = (8, 40);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("frame must be {FRAME_BITS} bits, got {0}")]
    WrongLength(usize),
    #[error("sync pattern mismatch: {0:#04x}")]
    SyncMismatch(u8),
    #[error("crc mismatch: computed {computed:#04x}, received {received:#04x}")]
    CrcMismatch { computed: u8, received: u8 },
    #[error("{field} value {value} does not fit in 10 bits")]
    FieldRange { field: &'static str, value: u16 },
    #[error("waveform length {len} is not a multiple of {samples_per_bit} samples per bit")]
    RaggedWaveform { len: usize, samples_per_bit: usize },
    #[error("invalid modem configuration: {0}")]
    InvalidConfig(String),
}

/// Operating mode of the watch, carried in every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum WatchMode {
    #[default]
    Idle,
    Acc,
    Ppt,
    Sync,
}

impl WatchMode {
    pub const ALL: [WatchMode; 4] = [WatchMode::Idle, WatchMode::Acc, WatchMode::Ppt, WatchMode::Sync];

    pub fn tag(self) -> u8 {
        match self {
            WatchMode::Idle => 0b00,
            WatchMode::Acc => 0b01,
            WatchMode::Ppt => 0b10,
            WatchMode::Sync => 0b11,
        }
    }

    pub fn from_tag(tag: u8) -> Self {
        match tag & 0b11 {
            0b00 => WatchMode::Idle,
            0b01 => WatchMode::Acc,
            0b10 => WatchMode::Ppt,
            _ => WatchMode::Sync,
        }
    }
}

impl fmt::Display for WatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WatchMode::Idle => "IDLE",
            WatchMode::Acc => "ACC",
            WatchMode::Ppt => "PPT",
            WatchMode::Sync => "SYNC",
        })
    }
}

impl FromStr for WatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "IDLE" => Ok(WatchMode::Idle),
            "ACC" => Ok(WatchMode::Acc),
            "PPT" => Ok(WatchMode::Ppt),
            "SYNC" => Ok(WatchMode::Sync),
            _ => Err(format!("unknown watch mode {s:?}")),
        }
    }
}

/// A decoded frame. Sync and CRC are implied: they are produced by
/// [`serialize`] and checked by [`deserialize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodecFrame {
    mode: WatchMode,
    x: u16,
    y: u16,
    z: u16,
}

impl CodecFrame {
    pub fn new(mode: WatchMode, x: u16, y: u16, z: u16) -> Result<Self, CodecError> {
        for (field, value) in [("x", x), ("y", y), ("z", z)] {
            if value > MAX_COUNT {
                return Err(CodecError::FieldRange { field, value });
            }
        }
        Ok(Self { mode, x, y, z })
    }

    /// Wraps an accelerometer reading. Sample counts are already 10-bit.
    pub fn from_sample(mode: WatchMode, sample: &AccelSample) -> Self {
        Self::new(mode, sample.x, sample.y, sample.z).expect("sample counts are 10-bit")
    }

    pub fn mode(&self) -> WatchMode {
        self.mode
    }

    pub fn payload(&self) -> (u16, u16, u16) {
        (self.x, self.y, self.z)
    }

    pub fn to_sample(&self, t: u64) -> AccelSample {
        AccelSample { t, x: self.x, y: self.y, z: self.z }
    }

    pub fn crc(&self) -> u8 {
        crc8(&self.protected_bits())
    }

    fn protected_bits(&self) -> Vec<bool> {
        let mut bits = Vec::with_capacity(32);
        push_bits(&mut bits, u32::from(self.mode.tag()), 2);
        for v in [self.x, self.y, self.z] {
            push_bits(&mut bits, u32::from(v), 10);
        }
        bits
    }
}

fn push_bits(out: &mut Vec<bool>, value: u32, width: u32) {
    for i in (0..width).rev() {
        out.push((value >> i) & 1 == 1);
    }
}

fn read_bits(bits: &[bool]) -> u32 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u32::from(b))
}

/// Bitwise CRC-8 (poly 0x07, init 0x00, no reflection, no final xor) over an
/// MSB-first bit stream.
pub fn crc8(bits: &[bool]) -> u8 {
    let mut crc = 0u8;
    for &bit in bits {
        let feedback = ((crc >> 7) == 1) ^ bit;
        crc <<= 1;
        if feedback {
            crc ^= CRC_POLY;
        }
    }
    crc
}

pub fn serialize(frame: &CodecFrame) -> Vec<bool> {
    let mut bits = Vec::with_capacity(FRAME_BITS);
    push_bits(&mut bits, u32::from(SYNC), 8);
    bits.extend(frame.protected_bits());
    push_bits(&mut bits, u32::from(frame.crc()), 8);
    bits
}

pub fn deserialize(bits: &[bool]) -> Result<CodecFrame, CodecError> {
    if bits.len() != FRAME_BITS {
        return Err(CodecError::WrongLength(bits.len()));
    }
    let sync = read_bits(&bits[0..8]) as u8;
    if sync != SYNC {
        return Err(CodecError::SyncMismatch(sync));
    }
    let computed = crc8(&bits[8..40]);
    let received = read_bits(&bits[40..48]) as u8;
    if computed != received {
        return Err(CodecError::CrcMismatch { computed, received });
    }
    Ok(CodecFrame {
        mode: WatchMode::from_tag(read_bits(&bits[8..10]) as u8),
        x: read_bits(&bits[10..20]) as u16,
        y: read_bits(&bits[20..30]) as u16,
        z: read_bits(&bits[30..40]) as u16,
    })
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum FifoError {
    #[error("fifo full ({capacity} frames); frame dropped")]
    Overflow { capacity: usize },
    #[error("fifo empty")]
    Empty,
}

/// Bounded first-in-first-out frame buffer. Frames pushed while full are
/// dropped and counted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fifo {
    capacity: usize,
    frames: VecDeque<CodecFrame>,
    dropped: u64,
}

impl Fifo {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "fifo capacity must be positive");
        Self { capacity, frames: VecDeque::with_capacity(capacity), dropped: 0 }
    }

    pub fn push(&mut self, frame: CodecFrame) -> Result<(), FifoError> {
        if self.frames.len() == self.capacity {
            self.dropped += 1;
            return Err(FifoError::Overflow { capacity: self.capacity });
        }
        self.frames.push_back(frame);
        Ok(())
    }

    pub fn pop(&mut self) -> Result<CodecFrame, FifoError> {
        self.frames.pop_front().ok_or(FifoError::Empty)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn iter(&self) -> impl Iterator<Item = &CodecFrame> {
        self.frames.iter()
    }
}

/// Tone, sampling and channel parameters of the FSK modem.
///
/// The defaults place both tones on exact DFT bins of one bit period
/// (1 kHz and 2 kHz at 16 kHz, 16 samples per bit), so the two tones are
/// orthogonal over each bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModemConfig {
    /// Tone for bit 0, Hz.
    pub f0: f64,
    /// Tone for bit 1, Hz.
    pub f1: f64,
    pub sample_rate: f64,
    pub samples_per_bit: usize,
    /// Linear amplitude gain in (0, 1].
    pub channel_attenuation: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for ModemConfig {
    fn default() -> Self {
        Self {
            f0: 1_000.0,
            f1: 2_000.0,
            sample_rate: 16_000.0,
            samples_per_bit: 16,
            channel_attenuation: 1.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl ModemConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        let bad = |m: String| Err(CodecError::InvalidConfig(m));
        let nyquist = self.sample_rate / 2.0;
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return bad(format!("sample_rate {} must be positive", self.sample_rate));
        }
        if self.f0 == self.f1 {
            return bad("f0 and f1 must differ".into());
        }
        for (name, f) in [("f0", self.f0), ("f1", self.f1)] {
            if !(f.is_finite() && f > 0.0 && f < nyquist) {
                return bad(format!("{name} = {f} Hz must lie in (0, {nyquist})"));
            }
        }
        if self.samples_per_bit < 4 {
            return bad(format!("samples_per_bit {} must be at least 4", self.samples_per_bit));
        }
        if !(self.channel_attenuation > 0.0 && self.channel_attenuation <= 1.0) {
            return bad(format!(
                "channel_attenuation {} must lie in (0, 1]",
                self.channel_attenuation
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma {} must be finite and non-negative", self.noise_sigma));
        }
        Ok(())
    }

    /// Noise standard deviation giving `snr_db` for a unit-amplitude tone
    /// after attenuation (signal power `a^2 / 2`).
    pub fn sigma_for_snr_db(&self, snr_db: f64) -> f64 {
        let signal_power = self.channel_attenuation.powi(2) / 2.0;
        (signal_power / 10f64.powf(snr_db / 10.0)).sqrt()
    }
}

/// Continuous-phase FSK: bit 1 emits `f1`, bit 0 emits `f0`, unit amplitude.
pub fn modulate(bits: &[bool], cfg: &ModemConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(bits.len() * cfg.samples_per_bit);
    let mut phase = 0.0f64;
    for &bit in bits {
        let f = if bit { cfg.f1 } else { cfg.f0 };
        let step = 2.0 * PI * f / cfg.sample_rate;
        for _ in 0..cfg.samples_per_bit {
            out.push(phase.sin());
            phase = (phase + step) % (2.0 * PI);
        }
    }
    out
}

/// Scales by `channel_attenuation` and adds zero-mean Gaussian noise drawn
/// from `cfg.seed`.
pub fn channel_apply(waveform: &[f64], cfg: &ModemConfig) -> Vec<f64> {
    let gain = cfg.channel_attenuation;
    if cfg.noise_sigma == 0.0 {
        return waveform.iter().map(|s| s * gain).collect();
    }
    let normal = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
    let mut rng = seed::rng_for(cfg.seed, seed::stream::CHANNEL_NOISE);
    waveform.iter().map(|s| s * gain + normal.sample(&mut rng)).collect()
}

/// Energy of `chunk` in the single DFT bin at `freq` (Goertzel recurrence).
fn tone_energy(chunk: &[f64], freq: f64, sample_rate: f64) -> f64 {
    let coeff = 2.0 * (2.0 * PI * freq / sample_rate).cos();
    let (s1, s2) = chunk
        .iter()
        .fold((0.0, 0.0), |(s1, s2), &x| (x + coeff * s1 - s2, s1));
    s1 * s1 + s2 * s2 - coeff * s1 * s2
}

/// Non-coherent energy detection per bit period; equal energies decode as 0.
pub fn demodulate(waveform: &[f64], cfg: &ModemConfig) -> Result<Vec<bool>, CodecError> {
    let spb = cfg.samples_per_bit;
    if waveform.len() % spb != 0 {
        return Err(CodecError::RaggedWaveform { len: waveform.len(), samples_per_bit: spb });
    }
    Ok(waveform
        .chunks_exact(spb)
        .map(|chunk| {
            tone_energy(chunk, cfg.f1, cfg.sample_rate) > tone_energy(chunk, cfg.f0, cfg.sample_rate)
        })
        .collect())
}

/// Pushes a frame through modulator, channel and demodulator.
pub fn transmit_frame(frame: &CodecFrame, cfg: &ModemConfig) -> Result<CodecFrame, CodecError> {
    let rx = channel_apply(&modulate(&serialize(frame), cfg), cfg);
    deserialize(&demodulate(&rx, cfg)?)
}

/// Fraction of `n_bits` random bits decoded wrongly after the channel.
pub fn measure_ber(cfg: &ModemConfig, n_bits: usize) -> Result<f64, CodecError> {
    cfg.validate()?;
    if n_bits == 0 {
        return Err(CodecError::InvalidConfig("n_bits must be at least 1".into()));
    }
    let mut rng = seed::rng_for(cfg.seed, seed::stream::BER_BITS);
    let bits: Vec<bool> = (0..n_bits).map(|_| rng.gen()).collect();
    let channel = ModemConfig { seed: seed::derive_seed(cfg.seed, seed::stream::BER_NOISE), ..*cfg };
    let rx = demodulate(&channel_apply(&modulate(&bits, cfg), &channel), cfg)?;
    let errors = bits.iter().zip(&rx).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / n_bits as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acc(x: u16, y: u16, z: u16) -> CodecFrame {
        CodecFrame::new(WatchMode::Acc, x, y, z).unwrap()
    }

    #[test]
    fn zero_payload_serializes_to_zero_payload_bits() {
        let bits = serialize(&acc(0, 0, 0));
        assert_eq!(bits.len(), FRAME_BITS);
        assert!(bits[10..40].iter().all(|b| !b));
        assert_eq!(&bits[8..10], &[false, true]);
    }

    #[test]
    fn layout_matches_hand_computed_fields() {
        // 100 = 0001100100, 360 = 0101101000, 277 = 0100010101
        let bits = serialize(&acc(100, 360, 277));
        let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        assert_eq!(&s[0..8], "10100101");
        assert_eq!(&s[8..10], "01");
        assert_eq!(&s[10..20], "0001100100");
        assert_eq!(&s[20..30], "0101101000");
        assert_eq!(&s[30..40], "0100010101");
        // CRC-8/SMBUS of bytes 46 45 A1 15 is 0xCF
        assert_eq!(&s[40..48], "11001111");
    }

    #[test]
    fn deserialize_errors() {
        assert_eq!(deserialize(&[false; 47]), Err(CodecError::WrongLength(47)));
        let mut bits = serialize(&acc(1, 2, 3));
        bits[0] = !bits[0];
        assert!(matches!(deserialize(&bits), Err(CodecError::SyncMismatch(0x25))));
        let mut bits = serialize(&acc(1, 2, 3));
        bits[25] = !bits[25];
        assert!(matches!(deserialize(&bits), Err(CodecError::CrcMismatch { .. })));
    }

    #[test]
    fn field_range_checked() {
        assert!(matches!(
            CodecFrame::new(WatchMode::Acc, 1024, 0, 0),
            Err(CodecError::FieldRange { field: "x", value: 1024 })
        ));
    }

    #[test]
    fn fifo_order_and_overflow() {
        let mut fifo = Fifo::new(4);
        fifo.push(acc(1, 0, 0)).unwrap();
        assert_eq!(fifo.len(), 1);
        for i in 2..=4 {
            fifo.push(acc(i, 0, 0)).unwrap();
        }
        let before = fifo.clone();
        assert_eq!(fifo.push(acc(5, 0, 0)), Err(FifoError::Overflow { capacity: 4 }));
        assert_eq!(fifo.dropped(), 1);
        assert!(fifo.iter().eq(before.iter()));
        assert_eq!(fifo.pop().unwrap().payload().0, 1);
        assert_eq!(fifo.pop().unwrap().payload().0, 2);
    }

    #[test]
    fn fifo_pop_empty() {
        assert_eq!(Fifo::new(1).pop(), Err(FifoError::Empty));
    }

    #[test]
    fn modulate_lengths_and_single_tone() {
        let cfg = ModemConfig { samples_per_bit: 8, ..ModemConfig::default() };
        assert!(modulate(&[], &cfg).is_empty());
        let w = modulate(&[true], &cfg);
        let expected: Vec<f64> = (0..8)
            .map(|n| (2.0 * PI * cfg.f1 * n as f64 / cfg.sample_rate).sin())
            .collect();
        for (a, b) in w.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let cfg = ModemConfig::default();
        assert_eq!(modulate(&serialize(&acc(1, 2, 3)), &cfg).len(), 48 * 16);
    }

    #[test]
    fn phase_is_continuous_across_bits() {
        let cfg = ModemConfig { f0: 1_500.0, ..ModemConfig::default() };
        let w = modulate(&[false, true, false], &cfg);
        let max_step = 2.0 * PI * cfg.f1 / cfg.sample_rate;
        for pair in w.windows(2) {
            // |sin a - sin b| <= |a - b|
            assert!((pair[1] - pair[0]).abs() <= max_step + 1e-12);
        }
    }

    #[test]
    fn channel_scaling_and_determinism() {
        let w = modulate(&[true, false, true], &ModemConfig::default());
        assert_eq!(channel_apply(&w, &ModemConfig::default()), w);
        let half = ModemConfig { channel_attenuation: 0.5, ..ModemConfig::default() };
        for (a, b) in channel_apply(&w, &half).iter().zip(&w) {
            assert_eq!(*a, b * 0.5);
        }
        let noisy = ModemConfig { noise_sigma: 0.3, seed: 11, ..ModemConfig::default() };
        assert_eq!(channel_apply(&w, &noisy), channel_apply(&w, &noisy));
        assert_ne!(channel_apply(&w, &noisy), w);
    }

    #[test]
    fn demodulate_tie_and_ragged() {
        let cfg = ModemConfig::default();
        assert_eq!(demodulate(&[0.0; 64], &cfg).unwrap(), vec![false; 4]);
        assert_eq!(
            demodulate(&[0.0; 17], &cfg),
            Err(CodecError::RaggedWaveform { len: 17, samples_per_bit: 16 })
        );
    }

    #[test]
    fn config_validation() {
        assert!(ModemConfig::default().validate().is_ok());
        let bad = [
            ModemConfig { f1: 1_000.0, ..ModemConfig::default() },
            ModemConfig { f1: 8_000.0, ..ModemConfig::default() },
            ModemConfig { samples_per_bit: 3, ..ModemConfig::default() },
            ModemConfig { channel_attenuation: 0.0, ..ModemConfig::default() },
            ModemConfig { noise_sigma: -1.0, ..ModemConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn ber_noiseless_is_zero() {
        assert_eq!(measure_ber(&ModemConfig::default(), 1_000).unwrap(), 0.0);
        assert!(measure_ber(&ModemConfig::default(), 0).is_err());
    }

    #[test]
    fn sigma_for_snr() {
        let cfg = ModemConfig::default();
        assert!((cfg.sigma_for_snr_db(20.0) - (0.005f64).sqrt()).abs() < 1e-15);
    }
}
