//! Unsafe-segment extraction by short-time energy with two thresholds.
//!
//! The acceleration signal is cut into rectangular frames and each frame's
//! energy (sum of squared samples) is compared against a high threshold `T2`
//! derived from a physical acceleration limit. Runs of frames above `T2` form
//! cores, which are widened while the energy stays above a lower, per-signal
//! threshold `T1`.

use crate::error::{Error, Result};
use crate::kinematics::KinematicTrack;
use crate::model::ComfortThresholds;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Longitudinal,
    Lateral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriggerAxis {
    Longitudinal,
    Lateral,
    Both,
}

impl TriggerAxis {
    fn union(self, other: TriggerAxis) -> TriggerAxis {
        if self == other {
            self
        } else {
            TriggerAxis::Both
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TriggerAxis::Longitudinal => "longitudinal",
            TriggerAxis::Lateral => "lateral",
            TriggerAxis::Both => "both",
        }
    }
}

impl From<Axis> for TriggerAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Longitudinal => TriggerAxis::Longitudinal,
            Axis::Lateral => TriggerAxis::Lateral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    /// Window-center times.
    pub frame_times: Vec<f64>,
    pub energy: Vec<f64>,
    pub window_samples: usize,
    pub hop_samples: usize,
    pub source_axis: Axis,
    /// Time span of the underlying samples.
    pub span: (f64, f64),
    /// Duration of one hop (s).
    pub hop_s: f64,
}

impl EnergySeries {
    pub fn len(&self) -> usize {
        self.energy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energy.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub thresholds: ComfortThresholds,
    /// Fraction of frames, counted from the most energetic, whose energy sets `T1`.
    pub t1_percentile: f64,
    pub merge_gap_s: f64,
    /// Lower bound for `T1`; segments are not widened into comfortable motion.
    pub t1_floor: Option<ComfortThresholds>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            window_s: 1.0,
            hop_s: 0.1,
            thresholds: ComfortThresholds::UNSAFE,
            t1_percentile: 0.30,
            merge_gap_s: 0.3,
            t1_floor: Some(ComfortThresholds::COMFORTABLE),
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.window_s > 0.0) {
            v.push("window_s must be > 0".into());
        }
        if !(self.hop_s > 0.0) || self.hop_s > self.window_s {
            v.push("hop_s must be in (0, window_s]".into());
        }
        if !(self.t1_percentile > 0.0 && self.t1_percentile < 1.0) {
            v.push("t1_percentile must be in (0, 1)".into());
        }
        if !self.thresholds.is_valid() {
            v.push("thresholds must be positive".into());
        }
        if !(self.merge_gap_s >= 0.0) {
            v.push("merge_gap_s must be >= 0".into());
        }
        v
    }

    /// `(window, hop)` in samples for a given sampling rate.
    pub fn frame_samples(&self, sample_rate_hz: f64) -> (usize, usize) {
        let w = ((self.window_s * sample_rate_hz).round() as usize).max(1);
        let h = ((self.hop_s * sample_rate_hz).round() as usize).clamp(1, w);
        (w, h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnsafeInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub trigger_axis: TriggerAxis,
    pub peak_energy: f64,
    /// Center time of the most energetic frame, relative to its threshold.
    pub peak_t: f64,
}

impl UnsafeInterval {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Rectangular-window short-time energy of `signal` sampled at `times`.
pub fn short_time_energy(
    signal: &[f64],
    times: &[f64],
    window_samples: usize,
    hop_samples: usize,
    axis: Axis,
) -> Result<EnergySeries> {
    assert_eq!(signal.len(), times.len());
    assert!(window_samples > 0 && hop_samples > 0);
    let n = signal.len();
    if n < window_samples {
        return Err(Error::SignalTooShort {
            len: n,
            window: window_samples,
        });
    }
    let frames = (n - window_samples) / hop_samples + 1;
    let mut frame_times = Vec::with_capacity(frames);
    let mut energy = Vec::with_capacity(frames);
    for k in 0..frames {
        let start = k * hop_samples;
        let end = start + window_samples;
        energy.push(signal[start..end].iter().map(|a| a * a).sum());
        frame_times.push(0.5 * (times[start] + times[end - 1]));
    }
    let dt = if n > 1 {
        (times[n - 1] - times[0]) / (n - 1) as f64
    } else {
        0.0
    };
    Ok(EnergySeries {
        frame_times,
        energy,
        window_samples,
        hop_samples,
        source_axis: axis,
        span: (times[0], times[n - 1]),
        hop_s: dt * hop_samples as f64,
    })
}

/// Energy of a window filled with a constant signal at the threshold.
pub fn t2_from_threshold(a_threshold: f64, window_samples: usize) -> f64 {
    a_threshold * a_threshold * window_samples as f64
}

/// Energy at rank `floor(percentile * (len - 1))` in descending order, capped at `t2`.
pub fn t1_adaptive(energy: &EnergySeries, percentile: f64, t2: f64) -> f64 {
    assert!(!energy.is_empty(), "t1 of an empty energy series");
    let mut sorted = energy.energy.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let rank = (percentile * (sorted.len() - 1) as f64).floor() as usize;
    sorted[rank].min(t2)
}

/// Inclusive frame index range of one detected segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameSpan {
    pub first: usize,
    pub last: usize,
}

/// Cores are maximal runs where `is_core` holds; each is widened while the
/// energy stays at or above `t1`, then overlapping spans are merged.
pub fn detect_frames(energy: &EnergySeries, t1: f64, is_core: impl Fn(usize) -> bool) -> Vec<FrameSpan> {
    let e = &energy.energy;
    let n = e.len();
    let mut spans: Vec<FrameSpan> = Vec::new();
    let mut k = 0;
    while k < n {
        if !is_core(k) {
            k += 1;
            continue;
        }
        let mut last = k;
        while last + 1 < n && is_core(last + 1) {
            last += 1;
        }
        let mut first = k;
        while first > 0 && e[first - 1] >= t1 {
            first -= 1;
        }
        let mut end = last;
        while end + 1 < n && e[end + 1] >= t1 {
            end += 1;
        }
        match spans.last_mut() {
            Some(prev) if first <= prev.last + 1 => prev.last = prev.last.max(end),
            _ => spans.push(FrameSpan { first, last: end }),
        }
        k = last + 1;
    }
    spans
}

fn span_to_interval(energy: &EnergySeries, span: FrameSpan) -> UnsafeInterval {
    let half = 0.5 * energy.hop_s;
    let slice = &energy.energy[span.first..=span.last];
    let max = slice.iter().copied().fold(f64::MIN, f64::max);
    let peak = span.first
        + slice
            .iter()
            .position(|&x| x >= max * (1.0 - 1e-9))
            .unwrap_or(0);
    UnsafeInterval {
        t_start: (energy.frame_times[span.first] - half).max(energy.span.0),
        t_end: (energy.frame_times[span.last] + half).min(energy.span.1),
        trigger_axis: energy.source_axis.into(),
        peak_energy: energy.energy[peak],
        peak_t: energy.frame_times[peak],
    }
}

/// Merges intervals that overlap or sit closer than `merge_gap_s`.
/// The merged peak is the one with the largest energy-to-threshold ratio.
fn merge_intervals(mut items: Vec<(UnsafeInterval, f64)>, merge_gap_s: f64) -> Vec<UnsafeInterval> {
    items.sort_by(|a, b| a.0.t_start.total_cmp(&b.0.t_start));
    let mut out: Vec<(UnsafeInterval, f64)> = Vec::new();
    for (iv, ratio) in items {
        match out.last_mut() {
            Some((prev, prev_ratio)) if iv.t_start - prev.t_end < merge_gap_s || iv.t_start <= prev.t_end => {
                prev.t_end = prev.t_end.max(iv.t_end);
                prev.trigger_axis = prev.trigger_axis.union(iv.trigger_axis);
                if ratio > *prev_ratio {
                    prev.peak_energy = iv.peak_energy;
                    prev.peak_t = iv.peak_t;
                    *prev_ratio = ratio;
                }
            }
            _ => out.push((iv, ratio)),
        }
    }
    out.into_iter().map(|(iv, _)| iv).collect()
}

/// Plain dual-threshold detection: cores where energy ≥ `t2`.
pub fn detect_endpoints(energy: &EnergySeries, t1: f64, t2: f64, merge_gap_s: f64) -> Vec<UnsafeInterval> {
    let spans = detect_frames(energy, t1, |k| energy.energy[k] >= t2);
    let items = spans
        .into_iter()
        .map(|s| {
            let iv = span_to_interval(energy, s);
            (iv, iv.peak_energy / t2)
        })
        .collect();
    merge_intervals(items, merge_gap_s)
}

fn lower_threshold(energy: &EnergySeries, config: &DetectionConfig, t2: f64, floor_accel: Option<f64>) -> f64 {
    let rank = t1_adaptive(energy, config.t1_percentile, t2);
    match floor_accel {
        Some(a) => rank.max(t2_from_threshold(a, energy.window_samples)).min(t2),
        None => rank,
    }
}

/// Detection on the longitudinal signal. A frame is a core frame when its
/// energy reaches the acceleration-side `T2` and the window holds a sample
/// above the acceleration limit, or likewise on the deceleration side.
pub fn longitudinal_intervals(
    a_x: &[f64],
    times: &[f64],
    sample_rate_hz: f64,
    config: &DetectionConfig,
) -> Result<Vec<(UnsafeInterval, f64)>> {
    let (w, h) = config.frame_samples(sample_rate_hz);
    let energy = short_time_energy(a_x, times, w, h, Axis::Longitudinal)?;
    let th = config.thresholds;
    let t2_acc = t2_from_threshold(th.lon_accel_max, w);
    let t2_dec = t2_from_threshold(th.lon_decel_max, w);
    let t2_min = t2_acc.min(t2_dec);
    let floor = config.t1_floor.map(|c| c.lon_accel_max.min(c.lon_decel_max));
    let t1 = lower_threshold(&energy, config, t2_min, floor);
    let is_core = |k: usize| {
        let e = energy.energy[k];
        let win = &a_x[k * h..k * h + w];
        (e >= t2_acc && win.iter().any(|&a| a > th.lon_accel_max))
            || (e >= t2_dec && win.iter().any(|&a| a < -th.lon_decel_max))
    };
    let spans = detect_frames(&energy, t1, is_core);
    Ok(spans
        .into_iter()
        .map(|s| {
            let iv = span_to_interval(&energy, s);
            (iv, iv.peak_energy / t2_min)
        })
        .collect())
}

pub fn lateral_intervals(
    a_y: &[f64],
    times: &[f64],
    sample_rate_hz: f64,
    config: &DetectionConfig,
) -> Result<Vec<(UnsafeInterval, f64)>> {
    let (w, h) = config.frame_samples(sample_rate_hz);
    let energy = short_time_energy(a_y, times, w, h, Axis::Lateral)?;
    let t2 = t2_from_threshold(config.thresholds.lat_max, w);
    let t1 = lower_threshold(&energy, config, t2, config.t1_floor.map(|c| c.lat_max));
    let spans = detect_frames(&energy, t1, |k| energy.energy[k] >= t2);
    Ok(spans
        .into_iter()
        .map(|s| {
            let iv = span_to_interval(&energy, s);
            (iv, iv.peak_energy / t2)
        })
        .collect())
}

/// Runs detection on both acceleration axes and merges the result.
pub fn extract_unsafe_segments(track: &KinematicTrack, config: &DetectionConfig) -> Result<Vec<UnsafeInterval>> {
    let times: Vec<f64> = track.samples.iter().map(|s| s.t).collect();
    let rate = effective_rate(track);
    let mut all = longitudinal_intervals(&track.a_x(), &times, rate, config)?;
    all.extend(lateral_intervals(&track.a_y(), &times, rate, config)?);
    Ok(merge_intervals(all, config.merge_gap_s))
}

fn effective_rate(track: &KinematicTrack) -> f64 {
    if track.sample_rate_hz > 0.0 {
        return track.sample_rate_hz;
    }
    let (a, b) = track.t_span();
    (track.samples.len() - 1) as f64 / (b - a)
}
