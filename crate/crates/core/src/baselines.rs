//! Comparison alerting strategies: frame-only argmax alerting,
//! sliding-window majority vote over hard predictions, and EMA-smoothed
//! probabilities with per-frame thresholding.
//!
//! All three are pure functions over a complete stream and share the same
//! event-merging rule: consecutive frames (adjacent `t`) marked with the
//! same non-Normal class collapse into one event.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{argmax_class, AlertEvent, LabeledFrame, ProbabilityFrame, NORMAL_CLASS};

/// Sliding-window majority vote configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MajorityConfig {
    /// Window length in frames.
    pub w: usize,
}

impl Default for MajorityConfig {
    fn default() -> Self {
        Self { w: 15 }
    }
}

impl MajorityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.w < 1 {
            return Err(Error::InvalidConfig("majority window must be >= 1".into()));
        }
        Ok(())
    }
}

/// EMA smoothing configuration: `p~_t = lambda * p~_{t-1} + (1 - lambda) * p_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmaConfig {
    pub lambda: f64,
    /// Alert threshold applied to the smoothed argmax probability.
    pub tau: f64,
}

impl Default for EmaConfig {
    fn default() -> Self {
        Self {
            lambda: 0.8,
            tau: 0.75,
        }
    }
}

impl EmaConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || !(0.0..1.0).contains(&self.lambda) {
            return Err(Error::InvalidConfig(format!(
                "ema lambda must be in [0, 1), got {}",
                self.lambda
            )));
        }
        if !self.tau.is_finite() || self.tau <= 0.0 || self.tau > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "ema tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

fn check_stream(frames: &[ProbabilityFrame]) -> Result<()> {
    let mut prev: Option<u64> = None;
    for frame in frames {
        frame.validate()?;
        if let Some(p) = prev {
            if frame.t <= p {
                return Err(Error::NonMonotonicTime {
                    prev: p,
                    t: frame.t,
                });
            }
        }
        prev = Some(frame.t);
    }
    Ok(())
}

/// Merge per-frame alert marks into events: a run of same-class marks on
/// adjacent frames becomes one event, Normal/unmarked frames close runs.
fn merge_alert_frames(marks: impl Iterator<Item = (u64, Option<u8>)>) -> Vec<AlertEvent> {
    let mut events = Vec::new();
    let mut open: Option<AlertEvent> = None;
    for (t, mark) in marks {
        open = match (open.take(), mark) {
            (Some(ev), Some(c)) if ev.class_id == c && t == ev.t_end + 1 => {
                Some(AlertEvent::new(c, ev.t_start, t))
            }
            (prev, mark) => {
                if let Some(ev) = prev {
                    events.push(ev);
                }
                mark.map(|c| AlertEvent::new(c, t, t))
            }
        };
    }
    if let Some(ev) = open {
        events.push(ev);
    }
    events
}

/// Frame-only baseline: alert whenever the per-frame argmax is non-Normal.
/// Equivalent to the gate in frame mode with `tau = 0`.
pub fn frame_only_alerts(frames: &[ProbabilityFrame]) -> Result<Vec<AlertEvent>> {
    check_stream(frames)?;
    Ok(merge_alert_frames(frames.iter().map(|f| {
        let c = f.argmax_class();
        (f.t, (c != NORMAL_CLASS).then_some(c))
    })))
}

/// Per-frame hard predictions (argmax labels) for a stream.
pub fn hard_labels(frames: &[ProbabilityFrame]) -> Vec<LabeledFrame> {
    frames
        .iter()
        .map(|f| LabeledFrame {
            t: f.t,
            label: f.argmax_class(),
        })
        .collect()
}

/// Sliding-window majority vote over hard predictions. Windows near the
/// stream start use the truncated prefix (no padding). The output class is
/// the unique plurality winner; on a tie the previous output is retained
/// (initially Normal).
pub fn majority_vote_alerts(
    frames: &[ProbabilityFrame],
    cfg: &MajorityConfig,
) -> Result<Vec<AlertEvent>> {
    cfg.validate()?;
    check_stream(frames)?;
    let hard: Vec<u8> = frames.iter().map(|f| f.argmax_class()).collect();
    let mut output = NORMAL_CLASS;
    let marks = frames.iter().enumerate().map(|(i, f)| {
        let lo = (i + 1).saturating_sub(cfg.w);
        let mut counts = [0u32; crate::types::CLASS_COUNT];
        for &h in &hard[lo..=i] {
            counts[h as usize - 1] += 1;
        }
        let max = *counts.iter().max().expect("non-empty counts");
        let winners: Vec<usize> = counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == max)
            .map(|(idx, _)| idx)
            .collect();
        if winners.len() == 1 {
            output = winners[0] as u8 + 1;
        }
        (f.t, (output != NORMAL_CLASS).then_some(output))
    });
    Ok(merge_alert_frames(marks))
}

/// EMA-smoothed probability stream, seeded with the first observation.
/// Each output vector is a convex combination of inputs and so stays on
/// the simplex.
pub fn ema_smooth(frames: &[ProbabilityFrame], lambda: f64) -> Result<Vec<ProbabilityFrame>> {
    check_stream(frames)?;
    let mut smoothed: Vec<ProbabilityFrame> = Vec::with_capacity(frames.len());
    let mut state: Option<Vec<f64>> = None;
    for frame in frames {
        let next = match state.take() {
            None => frame.probs.clone(),
            Some(prev) => prev
                .iter()
                .zip(&frame.probs)
                .map(|(&s, &p)| lambda * s + (1.0 - lambda) * p)
                .collect(),
        };
        smoothed.push(ProbabilityFrame::new(frame.t, next.clone()));
        state = Some(next);
    }
    Ok(smoothed)
}

/// EMA baseline: smooth, then alert on frames where the smoothed argmax is
/// non-Normal and at or above `tau`.
pub fn ema_alerts(frames: &[ProbabilityFrame], cfg: &EmaConfig) -> Result<Vec<AlertEvent>> {
    cfg.validate()?;
    let smoothed = ema_smooth(frames, cfg.lambda)?;
    Ok(merge_alert_frames(smoothed.iter().map(|f| {
        let c = argmax_class(&f.probs);
        let mark = (c != NORMAL_CLASS && f.prob(c) >= cfg.tau).then_some(c);
        (f.t, mark)
    })))
}
