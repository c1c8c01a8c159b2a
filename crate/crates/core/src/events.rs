//! Event-level evaluation: ground-truth event construction from frame
//! labels, temporal IoU, greedy same-class matching, and the three
//! operational alert metrics (false alerts/min, time-to-detect,
//! fragmentation).
//!
//! Intervals are closed frame ranges, so a single-frame event has length 1
//! and tIoU counts frames, not span.

use crate::error::{Error, Result};
use crate::types::{AlertEvent, FrameRate, LabeledFrame, NORMAL_CLASS};

/// Default tIoU matching threshold.
pub const DEFAULT_ETA: f64 = 0.3;

/// One matched (pred, gt) pair with its tIoU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub pred: usize,
    pub gt: usize,
    pub tiou: f64,
}

/// Outcome of greedy event matching. Indices refer into the pred/gt slices
/// passed to [`greedy_match`]; each index appears at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub matches: Vec<MatchedPair>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

/// The three operational alert metrics for one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EventMetrics {
    pub false_alerts_per_min: f64,
    /// Mean of `pred.t_start - gt.t_start` over matches, in frames.
    /// `None` when nothing matched. Negative values are legitimate: the
    /// gate backdates event starts by the persistence window.
    pub mean_time_to_detect: Option<f64>,
    /// Mean number of same-class predicted segments overlapping each GT
    /// event. `None` when there are no GT events to average over.
    pub fragmentation: Option<f64>,
}

/// Merge maximal runs of identical non-Normal labels into events. Labels
/// must cover contiguous, increasing frames.
pub fn gt_events_from_labels(labels: &[LabeledFrame]) -> Result<Vec<AlertEvent>> {
    let mut events = Vec::new();
    let mut open: Option<AlertEvent> = None;
    let mut prev_t: Option<u64> = None;
    for l in labels {
        l.validate()?;
        if let Some(prev) = prev_t {
            if l.t != prev + 1 {
                return Err(Error::NonContiguousLabels { prev, t: l.t });
            }
        }
        prev_t = Some(l.t);
        open = match (open.take(), l.label) {
            (Some(ev), label) if label == ev.class_id => {
                Some(AlertEvent::new(label, ev.t_start, l.t))
            }
            (prev, label) => {
                if let Some(ev) = prev {
                    events.push(ev);
                }
                (label != NORMAL_CLASS).then(|| AlertEvent::new(label, l.t, l.t))
            }
        };
    }
    if let Some(ev) = open {
        events.push(ev);
    }
    Ok(events)
}

/// Expand events back onto a frame-label timeline of `duration` frames
/// starting at `t0` (inverse of [`gt_events_from_labels`] for
/// non-overlapping events).
pub fn events_to_labels(events: &[AlertEvent], t0: u64, duration: u64) -> Vec<LabeledFrame> {
    let mut labels: Vec<LabeledFrame> = (t0..t0 + duration)
        .map(|t| LabeledFrame {
            t,
            label: NORMAL_CLASS,
        })
        .collect();
    for ev in events {
        for t in ev.t_start..=ev.t_end {
            if t >= t0 && t < t0 + duration {
                labels[(t - t0) as usize].label = ev.class_id;
            }
        }
    }
    labels
}

fn interval_len(start: u64, end: u64) -> u64 {
    end - start + 1
}

/// Temporal intersection-over-union of two closed frame intervals, by
/// frame count.
pub fn tiou(a: &AlertEvent, b: &AlertEvent) -> f64 {
    let inter_start = a.t_start.max(b.t_start);
    let inter_end = a.t_end.min(b.t_end);
    let inter = if inter_start > inter_end {
        0
    } else {
        interval_len(inter_start, inter_end)
    };
    let union = interval_len(a.t_start, a.t_end) + interval_len(b.t_start, b.t_end) - inter;
    inter as f64 / union as f64
}

/// Greedy one-to-one matching: candidate pairs require the same class and
/// tIoU >= `eta`; pairs are consumed in descending tIoU order, ties broken
/// by earlier GT start, then earlier pred start (then indices, for full
/// determinism). Each pred and each gt matches at most once.
pub fn greedy_match(pred: &[AlertEvent], gt: &[AlertEvent], eta: f64) -> MatchResult {
    let mut candidates: Vec<MatchedPair> = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        for (gi, g) in gt.iter().enumerate() {
            if p.class_id != g.class_id {
                continue;
            }
            let overlap = tiou(p, g);
            if overlap >= eta {
                candidates.push(MatchedPair {
                    pred: pi,
                    gt: gi,
                    tiou: overlap,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.tiou
            .partial_cmp(&a.tiou)
            .expect("tiou is finite")
            .then_with(|| gt[a.gt].t_start.cmp(&gt[b.gt].t_start))
            .then_with(|| pred[a.pred].t_start.cmp(&pred[b.pred].t_start))
            .then_with(|| a.gt.cmp(&b.gt))
            .then_with(|| a.pred.cmp(&b.pred))
    });

    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut matches = Vec::new();
    for pair in candidates {
        if pred_used[pair.pred] || gt_used[pair.gt] {
            continue;
        }
        pred_used[pair.pred] = true;
        gt_used[pair.gt] = true;
        matches.push(pair);
    }
    MatchResult {
        matches,
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
        unmatched_gt: (0..gt.len()).filter(|&i| !gt_used[i]).collect(),
    }
}

/// Unmatched predicted alert events (non-Normal classes) per minute of
/// evaluated stream.
pub fn false_alerts_per_min(
    result: &MatchResult,
    pred: &[AlertEvent],
    duration_frames: u64,
    rate: FrameRate,
) -> Result<f64> {
    if duration_frames == 0 {
        return Err(Error::ZeroDuration);
    }
    let false_alerts = result
        .unmatched_pred
        .iter()
        .filter(|&&i| pred[i].class_id != NORMAL_CLASS)
        .count();
    let minutes = duration_frames as f64 / rate.fps() / 60.0;
    Ok(false_alerts as f64 / minutes)
}

/// Per-match onset delays (`pred.t_start - gt.t_start`, frames) and their
/// mean. The mean is `None` when nothing matched.
pub fn time_to_detect(
    result: &MatchResult,
    pred: &[AlertEvent],
    gt: &[AlertEvent],
) -> (Vec<i64>, Option<f64>) {
    let delays: Vec<i64> = result
        .matches
        .iter()
        .map(|m| pred[m.pred].t_start as i64 - gt[m.gt].t_start as i64)
        .collect();
    let mean = if delays.is_empty() {
        None
    } else {
        Some(delays.iter().sum::<i64>() as f64 / delays.len() as f64)
    };
    (delays, mean)
}

/// Mean number of same-class predicted segments intersecting each GT event
/// (any overlap, no tIoU threshold). Errors when there are no GT events.
pub fn fragmentation(pred: &[AlertEvent], gt: &[AlertEvent]) -> Result<f64> {
    if gt.is_empty() {
        return Err(Error::NoGtEvents);
    }
    let total: usize = gt
        .iter()
        .map(|g| {
            pred.iter()
                .filter(|p| {
                    p.class_id == g.class_id && p.t_start <= g.t_end && g.t_start <= p.t_end
                })
                .count()
        })
        .sum();
    Ok(total as f64 / gt.len() as f64)
}

/// Convenience wrapper computing all three metrics for one run.
pub fn event_metrics(
    pred: &[AlertEvent],
    gt: &[AlertEvent],
    eta: f64,
    duration_frames: u64,
    rate: FrameRate,
) -> Result<(MatchResult, EventMetrics)> {
    let result = greedy_match(pred, gt, eta);
    let false_alerts = false_alerts_per_min(&result, pred, duration_frames, rate)?;
    let (_, mean_ttd) = time_to_detect(&result, pred, gt);
    let frag = if gt.is_empty() {
        None
    } else {
        Some(fragmentation(pred, gt)?)
    };
    Ok((
        result,
        EventMetrics {
            false_alerts_per_min: false_alerts,
            mean_time_to_detect: mean_ttd,
            fragmentation: frag,
        },
    ))
}
