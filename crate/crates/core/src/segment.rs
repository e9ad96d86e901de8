//! Two-stage threshold segmentation of the welding phase.
//!
//! Stage 1 finds the horn-move onset t_hm: the first time the sliding RMS of
//! the reference channel exceeds `theta1` times the idle baseline (median RMS
//! over the opening `baseline_window_s`). The horn moves for at most 0.2 s,
//! so stage 2 searches after t_hm + 0.2 for the first crossing of the higher
//! `theta2` threshold, yielding the raw weld onset. Threshold detections lag
//! the physical onset, so 0.01 s is subtracted to obtain t_sw, and the weld
//! ends at t_ew = t_sw + t_welding. Both thresholds are relative to the
//! baseline, which makes the marks invariant to amplitude scaling.

use ndarray::Array2;

use crate::domain::SensorId;
use crate::error::{Result, WeldmonError};
use crate::ingest::{Recording, SegmentMarks, WeldSegment};

/// Parameters of the two-stage segmenter.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmenterConfig {
    pub reference_channel: SensorId,
    pub rms_window_s: f64,
    pub rms_hop_s: f64,
    pub baseline_window_s: f64,
    /// Stage-1 multiplier over the idle baseline.
    pub theta1: f64,
    /// Stage-2 multiplier over the idle baseline.
    pub theta2: f64,
    /// Maximum horn travel time; stage 2 starts after t_hm + this.
    pub horn_move_max_s: f64,
    /// Subtracted from the raw stage-2 detection to compensate threshold lag.
    pub sw_adjust_s: f64,
    pub t_welding_s: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        SegmenterConfig {
            reference_channel: SensorId::Accelerometer,
            rms_window_s: 0.010,
            rms_hop_s: 0.001,
            baseline_window_s: 0.5,
            theta1: 4.0,
            theta2: 8.0,
            horn_move_max_s: 0.2,
            sw_adjust_s: 0.010,
            t_welding_s: 1.0,
        }
    }
}

impl SegmenterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta1 > 1.0 && self.theta2 > 1.0) {
            return Err(WeldmonError::InvalidSpec("theta1 and theta2 must be > 1".into()));
        }
        if !(self.rms_window_s > self.rms_hop_s && self.rms_hop_s > 0.0) {
            return Err(WeldmonError::InvalidSpec(
                "need rms_window_s > rms_hop_s > 0".into(),
            ));
        }
        if self.t_welding_s <= 0.0 || self.baseline_window_s <= 0.0 {
            return Err(WeldmonError::InvalidSpec(
                "t_welding_s and baseline_window_s must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Sliding RMS over `samples`: window of `window` samples advanced by `hop`.
/// Returns (time of window end in seconds, rms) per hop.
fn sliding_rms(samples: &[f64], sample_rate: f64, window: usize, hop: usize) -> Vec<(f64, f64)> {
    if samples.len() < window {
        return Vec::new();
    }
    let n_hops = (samples.len() - window) / hop + 1;
    let mut out = Vec::with_capacity(n_hops);
    // Running sum of squares; exact recompute every 256 hops bounds drift.
    let mut sum_sq: f64 = samples[..window].iter().map(|v| v * v).sum();
    for m in 0..n_hops {
        let start = m * hop;
        if m > 0 {
            if m % 256 == 0 {
                sum_sq = samples[start..start + window].iter().map(|v| v * v).sum();
            } else {
                for j in (start - hop)..start {
                    sum_sq -= samples[j] * samples[j];
                }
                for j in (start + window - hop)..(start + window) {
                    sum_sq += samples[j] * samples[j];
                }
            }
        }
        let t_end = (start + window) as f64 / sample_rate;
        out.push((t_end, (sum_sq.max(0.0) / window as f64).sqrt()));
    }
    out
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Runs both detection stages on one real-valued channel.
///
/// Exposed separately from [`segment_cycle`] so the amplitude-invariance of
/// the relative thresholds can be exercised directly on unquantized data.
pub fn detect_marks(samples: &[f64], sample_rate: f64, cfg: &SegmenterConfig) -> Result<SegmentMarks> {
    cfg.validate()?;
    let window = (cfg.rms_window_s * sample_rate).round() as usize;
    let hop = (cfg.rms_hop_s * sample_rate).round().max(1.0) as usize;
    let min_len = ((cfg.baseline_window_s + cfg.horn_move_max_s + cfg.t_welding_s) * sample_rate)
        .round() as usize;
    if samples.len() < min_len {
        return Err(WeldmonError::InputTooShort(format!(
            "recording has {} samples, segmentation needs at least {min_len}",
            samples.len()
        )));
    }

    let rms = sliding_rms(samples, sample_rate, window, hop);
    let mut baseline_values: Vec<f64> = rms
        .iter()
        .take_while(|(t, _)| *t <= cfg.baseline_window_s)
        .map(|(_, v)| *v)
        .collect();
    if baseline_values.is_empty() {
        return Err(WeldmonError::InputTooShort(
            "baseline window shorter than one RMS window".into(),
        ));
    }
    let baseline = median(&mut baseline_values);

    let t_hm = rms
        .iter()
        .find(|(_, v)| *v > cfg.theta1 * baseline)
        .map(|(t, _)| *t)
        .ok_or(WeldmonError::NoHornMove)?;

    let t_sw_raw = rms
        .iter()
        .find(|(t, v)| *t > t_hm + cfg.horn_move_max_s && *v > cfg.theta2 * baseline)
        .map(|(t, _)| *t)
        .ok_or(WeldmonError::NoWeldOnset)?;

    let t_sw = t_sw_raw - cfg.sw_adjust_s;
    Ok(SegmentMarks { t_hm_s: t_hm, t_sw_s: t_sw, t_ew_s: t_sw + cfg.t_welding_s })
}

/// Extracts the welding-phase slice of every channel of a recording.
///
/// The returned segment has exactly `round(sample_rate * t_welding)` rows; if
/// the slice falls one sample short of the recording end due to rounding, the
/// final frame is repeated.
pub fn segment_cycle(rec: &Recording, cfg: &SegmenterConfig) -> Result<WeldSegment> {
    let ref_idx = rec.channel_index(cfg.reference_channel).ok_or_else(|| {
        WeldmonError::MissingChannel(format!(
            "reference channel {} not present in recording",
            cfg.reference_channel
        ))
    })?;
    let fs = f64::from(rec.manifest.sample_rate_hz);
    let reference = rec.channel_f64(ref_idx);
    let marks = detect_marks(&reference, fs, cfg)?;

    let k = rec.channel_count();
    let n_frames = rec.frame_count();
    let n = (fs * cfg.t_welding_s).round() as usize;
    let start = (marks.t_sw_s * fs).round() as usize;
    let end = start + n;
    if end > n_frames + 1 {
        return Err(WeldmonError::SegmentOutOfBounds(format!(
            "weld window [{:.3}, {:.3}) s ends past the recording ({:.3} s)",
            marks.t_sw_s,
            marks.t_ew_s,
            rec.duration_s()
        )));
    }

    let mut data = Array2::<f32>::zeros((n, k));
    for row in 0..n {
        let frame = (start + row).min(n_frames - 1); // repeat-pad final frame
        for ch in 0..k {
            data[[row, ch]] = f32::from(rec.samples[frame * k + ch]) / 32_768.0;
        }
    }

    let source_id = match rec.manifest.seed {
        Some(seed) => format!("seed-{seed}"),
        None => "recording".into(),
    };
    Ok(WeldSegment {
        data,
        channels: rec.manifest.channels.clone(),
        sample_rate_hz: rec.manifest.sample_rate_hz,
        marks,
        labels: rec.manifest.labels,
        source_id,
    })
}
