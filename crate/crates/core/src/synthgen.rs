//! Seeded synthetic generator for multi-sensor welding-cycle recordings.
//!
//! Each cycle follows the idle -> horn-move -> welding -> cooling structure:
//! Gaussian sensor noise at the channel's noise floor, a damped 200 Hz burst
//! when the horn moves, then a 20 kHz carrier for the welding phase. Tool
//! wear adds a 10 kHz subharmonic, deeper amplitude modulation and a 5-8 kHz
//! broadband bump; a contaminated workpiece surface multiplies the carrier
//! with a slow random-walk fluctuation and injects short 14-16 kHz slip
//! bursts, independently of tool condition. Class-dependent content is only
//! injected into channels whose [`SensorModel`] is marked discriminative, so
//! sensor-ranking experiments have a known ground truth.
//!
//! Generation is a pure function of the [`CycleSpec`]: identical specs
//! (including the seed) produce bit-identical recordings.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rand::SeedableRng;

use crate::domain::{derive_seed, Labels, SensorId, SurfaceCondition, ToolCondition};
use crate::error::{Result, WeldmonError};
use crate::ingest::{ChannelInfo, GroundTruth, Manifest, Recording, FORMAT_VERSION};

use std::f64::consts::PI;

/// Frequency response and noise model of one sensor channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub id: SensorId,
    pub gain: f64,
    pub noise_floor_rms: f64,
    /// (low, high) cut in Hz; signal components outside the band are dropped.
    pub passband_hz: (f64, f64),
    /// Whether class-dependent welding content reaches this channel. The
    /// default power and geophone models are non-discriminative so the
    /// sensor-ranking protocol has known good and bad channels.
    pub discriminative: bool,
}

impl SensorModel {
    /// Stock model for a sensor id.
    pub fn default_for(id: SensorId) -> SensorModel {
        match id {
            SensorId::PowerA => SensorModel {
                id,
                gain: 1.0,
                noise_floor_rms: 0.0015,
                passband_hz: (50.0, 2_000.0),
                discriminative: false,
            },
            SensorId::PowerB => SensorModel {
                id,
                gain: 0.9,
                noise_floor_rms: 0.0015,
                passband_hz: (50.0, 2_000.0),
                discriminative: false,
            },
            SensorId::Accelerometer => SensorModel {
                id,
                gain: 1.0,
                noise_floor_rms: 0.002,
                passband_hz: (20.0, 24_000.0),
                discriminative: true,
            },
            SensorId::Microphone => SensorModel {
                id,
                gain: 0.8,
                noise_floor_rms: 0.003,
                passband_hz: (100.0, 24_000.0),
                discriminative: true,
            },
            SensorId::Geophone => SensorModel {
                id,
                gain: 1.2,
                noise_floor_rms: 0.002,
                passband_hz: (5.0, 800.0),
                discriminative: false,
            },
        }
    }

    /// All five stock sensors in ascending id order.
    pub fn defaults() -> Vec<SensorModel> {
        SensorId::ALL.iter().map(|&id| SensorModel::default_for(id)).collect()
    }
}

/// Full description of one synthetic welding cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSpec {
    pub seed: u64,
    pub sample_rate_hz: u32,
    pub duration_s: f64,
    /// Horn-move onset.
    pub t_hm_true_s: f64,
    /// Welding onset; must trail the horn-move onset by at least 0.2 s.
    pub t_weld_true_s: f64,
    pub t_welding_s: f64,
    pub tool: ToolCondition,
    pub surface: SurfaceCondition,
    pub channels: Vec<SensorModel>,
}

impl CycleSpec {
    /// Spec with stock timing (horn move at 1.0 s, weld at 2.0 s, 1 s weld,
    /// 4 s total at 48 kHz) and all five stock sensors.
    pub fn new(seed: u64, tool: ToolCondition, surface: SurfaceCondition) -> CycleSpec {
        CycleSpec {
            seed,
            sample_rate_hz: 48_000,
            duration_s: 4.0,
            t_hm_true_s: 1.0,
            t_weld_true_s: 2.0,
            t_welding_s: 1.0,
            tool,
            surface,
            channels: SensorModel::defaults(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(WeldmonError::InvalidSpec(msg));
        if self.sample_rate_hz == 0 {
            return err("sample_rate_hz must be > 0".into());
        }
        if self.t_welding_s <= 0.0 {
            return err("t_welding_s must be > 0".into());
        }
        if !(self.t_hm_true_s > 0.0) {
            return err(format!("t_hm_true_s = {} must be > 0", self.t_hm_true_s));
        }
        if self.t_weld_true_s < self.t_hm_true_s + 0.2 {
            return err(format!(
                "t_weld_true_s = {} must be >= t_hm_true_s + 0.2 = {}",
                self.t_weld_true_s,
                self.t_hm_true_s + 0.2
            ));
        }
        if self.t_weld_true_s + self.t_welding_s + 0.5 > self.duration_s {
            return err(format!(
                "duration_s = {} leaves no post-weld tail (needs >= {})",
                self.duration_s,
                self.t_weld_true_s + self.t_welding_s + 0.5
            ));
        }
        if self.channels.is_empty() {
            return err("channel list is empty".into());
        }
        let nyquist = f64::from(self.sample_rate_hz) / 2.0;
        for ch in &self.channels {
            let (lo, hi) = ch.passband_hz;
            if !(0.0 <= lo && lo < hi && hi <= nyquist) {
                return err(format!(
                    "channel {} passband ({lo}, {hi}) must satisfy 0 <= low < high <= {nyquist}",
                    ch.id
                ));
            }
            if ch.gain < 0.0 || ch.noise_floor_rms < 0.0 {
                return err(format!("channel {} gain/noise floor must be >= 0", ch.id));
            }
        }
        Ok(())
    }

    fn labels(&self) -> Labels {
        Labels::new(self.tool, self.surface)
    }
}

/// One narrowband signal component placed on the cycle timeline.
struct Component {
    /// Frequency extent (lo, hi) in Hz; a channel receives the component only
    /// if its passband covers the whole extent.
    freq_hz: (f64, f64),
    class_dependent: bool,
    start: usize,
    wave: Vec<f64>,
}

impl Component {
    fn passes(&self, ch: &SensorModel) -> bool {
        let (lo, hi) = self.freq_hz;
        let in_band = ch.passband_hz.0 <= lo && hi <= ch.passband_hz.1;
        in_band && (!self.class_dependent || ch.discriminative)
    }
}

const HORN_BURST_FREQ_HZ: f64 = 200.0;
const HORN_BURST_LEN_S: f64 = 0.150;
const HORN_BURST_AMP: f64 = 0.08;
const HORN_BURST_TAU_S: f64 = 0.060;
const MAINS_FREQ_HZ: f64 = 120.0;
const MAINS_AMP: f64 = 0.18;
const CARRIER_FREQ_HZ: f64 = 20_000.0;
const CARRIER_AMP: f64 = 0.42;
const AM_DEPTH_NEW: f64 = 0.05;
const AM_DEPTH_WORN: f64 = 0.25;
const SUBHARMONIC_FREQ_HZ: f64 = 10_000.0;
const SUBHARMONIC_AMP: f64 = 0.12;
const BUMP_BAND_HZ: (f64, f64) = (5_000.0, 8_000.0);
const BUMP_TONES: usize = 16;
const BUMP_TOTAL_RMS: f64 = 0.035;
const SLIP_BAND_HZ: (f64, f64) = (14_000.0, 16_000.0);
const SLIP_AMP: f64 = 0.22;
const WOBBLE_STEP: f64 = 0.06;
const WOBBLE_CLAMP: f64 = 0.30;
const WOBBLE_RATE_HZ: f64 = 100.0;

fn sine_burst(fs: f64, len: usize, freq: f64, phase: f64, amp: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..len)
        .map(|j| amp(j) * (2.0 * PI * freq * j as f64 / fs + phase).sin())
        .collect()
}

/// Slow multiplicative fluctuation for contaminated surfaces: a clamped
/// random walk sampled at `WOBBLE_RATE_HZ` and linearly interpolated.
fn wobble_path(rng: &mut ChaCha8Rng, fs: f64, len: usize) -> Vec<f64> {
    let step = (fs / WOBBLE_RATE_HZ).round() as usize;
    let n_cp = len / step + 2;
    let normal = Normal::new(0.0, WOBBLE_STEP).expect("valid normal");
    let mut cps = Vec::with_capacity(n_cp);
    let mut w = 0.0f64;
    for _ in 0..n_cp {
        cps.push(w);
        w = (w + normal.sample(rng)).clamp(-WOBBLE_CLAMP, WOBBLE_CLAMP);
    }
    (0..len)
        .map(|j| {
            let pos = j as f64 / step as f64;
            let i = pos as usize;
            let frac = pos - i as f64;
            cps[i] * (1.0 - frac) + cps[i + 1] * frac
        })
        .collect()
}

fn build_components(spec: &CycleSpec, rng: &mut ChaCha8Rng) -> Vec<Component> {
    let fs = f64::from(spec.sample_rate_hz);
    let weld_start = (spec.t_weld_true_s * fs).round() as usize;
    let weld_len = (spec.t_welding_s * fs).round() as usize;
    let mut components = Vec::new();

    // Horn move: damped low-frequency burst.
    let hm_start = (spec.t_hm_true_s * fs).round() as usize;
    let hm_len = (HORN_BURST_LEN_S * fs).round() as usize;
    let hm_phase = rng.random_range(0.0..2.0 * PI);
    components.push(Component {
        freq_hz: (HORN_BURST_FREQ_HZ, HORN_BURST_FREQ_HZ),
        class_dependent: false,
        start: hm_start,
        wave: sine_burst(fs, hm_len, HORN_BURST_FREQ_HZ, hm_phase, |j| {
            HORN_BURST_AMP * (-(j as f64) / (HORN_BURST_TAU_S * fs)).exp()
        }),
    });

    // Mains draw hum while the machine welds; class-independent, low
    // frequency, so power and geophone channels see the weld happen without
    // learning anything about the tool.
    let mains_phase = rng.random_range(0.0..2.0 * PI);
    components.push(Component {
        freq_hz: (MAINS_FREQ_HZ, MAINS_FREQ_HZ),
        class_dependent: false,
        start: weld_start,
        wave: sine_burst(fs, weld_len, MAINS_FREQ_HZ, mains_phase, |_| MAINS_AMP),
    });

    // Welding carrier with tool-dependent AM depth and surface-dependent
    // multiplicative wobble.
    let am_depth = match spec.tool {
        ToolCondition::New => AM_DEPTH_NEW,
        ToolCondition::Worn => AM_DEPTH_WORN,
    };
    let am_freq = rng.random_range(110.0..125.0);
    let am_phase = rng.random_range(0.0..2.0 * PI);
    let carrier_phase = rng.random_range(0.0..2.0 * PI);
    let wobble = match spec.surface {
        SurfaceCondition::Clean => vec![0.0; weld_len],
        SurfaceCondition::Contaminated => wobble_path(rng, fs, weld_len),
    };
    components.push(Component {
        freq_hz: (CARRIER_FREQ_HZ, CARRIER_FREQ_HZ),
        class_dependent: true,
        start: weld_start,
        wave: sine_burst(fs, weld_len, CARRIER_FREQ_HZ, carrier_phase, |j| {
            let t = j as f64 / fs;
            let am = 1.0 - am_depth * (0.5 + 0.5 * (2.0 * PI * am_freq * t + am_phase).sin());
            CARRIER_AMP * am * (1.0 + wobble[j])
        }),
    });

    if spec.tool == ToolCondition::Worn {
        // Subharmonic with mild per-cycle amplitude jitter.
        let sub_amp = SUBHARMONIC_AMP * rng.random_range(0.8..1.2);
        let sub_phase = rng.random_range(0.0..2.0 * PI);
        components.push(Component {
            freq_hz: (SUBHARMONIC_FREQ_HZ, SUBHARMONIC_FREQ_HZ),
            class_dependent: true,
            start: weld_start,
            wave: sine_burst(fs, weld_len, SUBHARMONIC_FREQ_HZ, sub_phase, |_| sub_amp),
        });

        // Broadband bump: a comb of tones across the bump band.
        let tone_amp = BUMP_TOTAL_RMS * (2.0 / BUMP_TONES as f64).sqrt();
        for _ in 0..BUMP_TONES {
            let f = rng.random_range(BUMP_BAND_HZ.0..BUMP_BAND_HZ.1);
            let phase = rng.random_range(0.0..2.0 * PI);
            components.push(Component {
                freq_hz: (f, f),
                class_dependent: true,
                start: weld_start,
                wave: sine_burst(fs, weld_len, f, phase, |_| tone_amp),
            });
        }
    }

    if spec.surface == SurfaceCondition::Contaminated {
        // Slip bursts: short Hann-shaped high-frequency chirps at random
        // instants inside the welding window.
        let n_bursts = rng.random_range(3..=8);
        for _ in 0..n_bursts {
            let dur = (rng.random_range(0.010..0.040) * fs).round() as usize;
            let latest = weld_len.saturating_sub(dur).max(1);
            let offset = rng.random_range(0..latest);
            let f = rng.random_range(SLIP_BAND_HZ.0..SLIP_BAND_HZ.1);
            let phase = rng.random_range(0.0..2.0 * PI);
            components.push(Component {
                freq_hz: (f, f),
                class_dependent: true,
                start: weld_start + offset,
                wave: sine_burst(fs, dur, f, phase, |j| {
                    let window = (PI * j as f64 / dur as f64).sin();
                    SLIP_AMP * window * window
                }),
            });
        }
    }

    components
}

/// Renders one cycle to an interleaved 16-bit recording.
pub fn generate_cycle(spec: &CycleSpec) -> Result<Recording> {
    spec.validate()?;
    let fs = f64::from(spec.sample_rate_hz);
    let n_frames = (spec.duration_s * fs).round() as usize;
    let k = spec.channels.len();

    let mut scene_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "scene", &[]));
    let components = build_components(spec, &mut scene_rng);

    let mut samples = vec![0i16; n_frames * k];
    let mut channel = vec![0.0f64; n_frames];
    for (ci, ch) in spec.channels.iter().enumerate() {
        channel.iter_mut().for_each(|v| *v = 0.0);
        for comp in components.iter().filter(|c| c.passes(ch)) {
            let end = (comp.start + comp.wave.len()).min(n_frames);
            for (j, slot) in channel[comp.start..end].iter_mut().enumerate() {
                *slot += comp.wave[j];
            }
        }
        let mut noise_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, "noise", &[ci as u64]));
        let normal = Normal::new(0.0, ch.noise_floor_rms.max(f64::MIN_POSITIVE))
            .expect("valid normal");
        if ch.noise_floor_rms > 0.0 {
            for v in channel.iter_mut() {
                *v += normal.sample(&mut noise_rng);
            }
        }
        for (frame, &v) in channel.iter().enumerate() {
            let scaled = (v * ch.gain).clamp(-0.999_97, 0.999_97);
            samples[frame * k + ci] = (scaled * 32_767.0).round() as i16;
        }
    }

    Ok(Recording {
        samples,
        manifest: Manifest {
            format_version: FORMAT_VERSION,
            sample_rate_hz: spec.sample_rate_hz,
            channels: spec
                .channels
                .iter()
                .map(|c| ChannelInfo { id: c.id, name: c.id.name().into() })
                .collect(),
            labels: Some(spec.labels()),
            ground_truth: Some(GroundTruth {
                t_hm_true_s: spec.t_hm_true_s,
                t_weld_true_s: spec.t_weld_true_s,
                t_welding_s: spec.t_welding_s,
            }),
            seed: Some(spec.seed),
        },
    })
}

/// Onset jitter applied per cycle so segmentation cannot be index-based.
pub const ONSET_JITTER_S: f64 = 0.3;

/// Generates `4 * cycles_per_class` recordings, class-major, with jittered
/// onsets. Seeds derive deterministically from `base_seed` and the cycle
/// index, so the same base seed always reproduces the same dataset.
pub fn generate_dataset(base_seed: u64, cycles_per_class: usize) -> Result<Vec<Recording>> {
    if cycles_per_class == 0 {
        return Err(WeldmonError::InvalidSpec("cycles_per_class must be >= 1".into()));
    }
    let mut recordings = Vec::with_capacity(4 * cycles_per_class);
    for (class_idx, labels) in Labels::ALL.iter().enumerate() {
        for i in 0..cycles_per_class {
            let idx = (class_idx * cycles_per_class + i) as u64;
            let mut jitter_rng =
                ChaCha8Rng::seed_from_u64(derive_seed(base_seed, "jitter", &[idx]));
            let mut spec = CycleSpec::new(
                derive_seed(base_seed, "cycle", &[idx]),
                labels.tool,
                labels.surface,
            );
            spec.t_hm_true_s = 1.0 + jitter_rng.random_range(-ONSET_JITTER_S..ONSET_JITTER_S);
            spec.t_weld_true_s = 2.0 + jitter_rng.random_range(-ONSET_JITTER_S..ONSET_JITTER_S);
            recordings.push(generate_cycle(&spec)?);
        }
    }
    Ok(recordings)
}
