//! Stage-aware runtime profiling: end-to-end latency decomposition over
//! capture/preprocess/inference/postprocess/io, throughput, and tail
//! statistics.
//!
//! Percentiles use the nearest-rank definition (the `ceil(q*n)`-th order
//! statistic), so the reported median is the nearest-rank p50. Throughput
//! is `1000 / median(e2e ms)` and jitter is `p95 - median` of the
//! end-to-end latency. Milliseconds are the canonical unit throughout.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{persistence_window_seconds, FrameRate, GateConfig};

/// Per-frame stage latency record, milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub t: u64,
    pub cap_ms: f64,
    pub pre_ms: f64,
    pub inf_ms: f64,
    pub post_ms: f64,
    pub io_ms: f64,
}

impl StageTiming {
    pub fn validate(&self) -> Result<()> {
        for (stage, value) in self.stages() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidStageTiming {
                    t: self.t,
                    stage,
                    value,
                });
            }
        }
        Ok(())
    }

    fn stages(&self) -> [(&'static str, f64); 5] {
        [
            ("cap_ms", self.cap_ms),
            ("pre_ms", self.pre_ms),
            ("inf_ms", self.inf_ms),
            ("post_ms", self.post_ms),
            ("io_ms", self.io_ms),
        ]
    }

    /// End-to-end latency: the sum of the five stage latencies.
    pub fn e2e_ms(&self) -> f64 {
        self.cap_ms + self.pre_ms + self.inf_ms + self.post_ms + self.io_ms
    }
}

/// Mean/median/p95 for one stage (or the end-to-end sum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageStats {
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
}

/// Aggregated timing report over a log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub frames: usize,
    pub capture: StageStats,
    pub preprocess: StageStats,
    pub inference: StageStats,
    pub postprocess: StageStats,
    pub io: StageStats,
    pub e2e: StageStats,
    /// Sustained throughput estimate: 1000 / median(e2e).
    pub fps: f64,
    /// Tail spread of the end-to-end latency: p95 - median.
    pub jitter_ms: f64,
}

/// Nearest-rank percentile on a sorted sample: the `ceil(q*n)`-th order
/// statistic (1-indexed). `q` must be in (0, 1].
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!(q > 0.0 && q <= 1.0);
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn stats_of(mut values: Vec<f64>) -> StageStats {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite latencies"));
    StageStats {
        mean_ms: mean,
        median_ms: nearest_rank(&values, 0.5),
        p95_ms: nearest_rank(&values, 0.95),
    }
}

/// Aggregate a timing log into per-stage and end-to-end statistics.
pub fn aggregate(records: &[StageTiming]) -> Result<TimingReport> {
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    for rec in records {
        rec.validate()?;
    }
    let collect = |f: fn(&StageTiming) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let e2e = stats_of(collect(StageTiming::e2e_ms));
    Ok(TimingReport {
        frames: records.len(),
        capture: stats_of(collect(|r| r.cap_ms)),
        preprocess: stats_of(collect(|r| r.pre_ms)),
        inference: stats_of(collect(|r| r.inf_ms)),
        postprocess: stats_of(collect(|r| r.post_ms)),
        io: stats_of(collect(|r| r.io_ms)),
        fps: 1000.0 / e2e.median_ms,
        jitter_ms: e2e.p95_ms - e2e.median_ms,
        e2e,
    })
}

/// Wall-clock persistence window implied by a gate config at the measured
/// throughput.
pub fn effective_window_seconds(cfg: &GateConfig, report: &TimingReport) -> Result<f64> {
    let rate = FrameRate::new(report.fps)?;
    Ok(persistence_window_seconds(cfg.k, rate))
}

/// Monotonic-clock stopwatch for instrumenting a live pipeline frame.
/// Mark the stages in order, then [`finish`](Self::finish); whatever time
/// remains since the last mark is booked as overlay/io.
///
/// ```
/// # use alertgate::profile::FrameStopwatch;
/// let mut sw = FrameStopwatch::start(0);
/// // ... capture ...
/// sw.mark_capture();
/// // ... preprocess ...
/// sw.mark_preprocess();
/// // ... inference ...
/// sw.mark_inference();
/// // ... postprocess / gating ...
/// sw.mark_postprocess();
/// // ... overlay + event emission ...
/// let record = sw.finish();
/// assert_eq!(record.t, 0);
/// ```
#[derive(Debug)]
pub struct FrameStopwatch {
    t: u64,
    last: Instant,
    cap_ms: f64,
    pre_ms: f64,
    inf_ms: f64,
    post_ms: f64,
}

impl FrameStopwatch {
    pub fn start(t: u64) -> Self {
        Self {
            t,
            last: Instant::now(),
            cap_ms: 0.0,
            pre_ms: 0.0,
            inf_ms: 0.0,
            post_ms: 0.0,
        }
    }

    fn lap(&mut self) -> f64 {
        let now = Instant::now();
        let ms = now.duration_since(self.last).as_secs_f64() * 1000.0;
        self.last = now;
        ms
    }

    pub fn mark_capture(&mut self) {
        self.cap_ms = self.lap();
    }

    pub fn mark_preprocess(&mut self) {
        self.pre_ms = self.lap();
    }

    pub fn mark_inference(&mut self) {
        self.inf_ms = self.lap();
    }

    pub fn mark_postprocess(&mut self) {
        self.post_ms = self.lap();
    }

    /// Book the remaining time as overlay/io and produce the record.
    pub fn finish(mut self) -> StageTiming {
        let io_ms = self.lap();
        StageTiming {
            t: self.t,
            cap_ms: self.cap_ms,
            pre_ms: self.pre_ms,
            inf_ms: self.inf_ms,
            post_ms: self.post_ms,
            io_ms,
        }
    }
}
