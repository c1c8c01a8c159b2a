//! Canonical domain types shared by the whole pipeline: the 17-class
//! behavior taxonomy, per-frame probability vectors, frame labels, alert
//! events, and gate/rate configuration.
//!
//! All types here are immutable values and safe to copy across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of behavior classes in the taxonomy.
pub const CLASS_COUNT: usize = 17;

/// Class id of the non-alerting "Normal (Safe driving)" behavior.
/// Everything that distinguishes alerting from non-alerting keys off
/// `class_id != NORMAL_CLASS`.
pub const NORMAL_CLASS: u8 = 1;

/// Absolute tolerance for the probability-simplex sum check. Wide enough to
/// absorb serialization rounding, tight enough to catch malformed inputs.
pub const SIMPLEX_TOLERANCE: f64 = 1e-6;

/// Display names for the 17 supported behavior classes, indexed by `id - 1`.
pub const CLASS_NAMES: [&str; CLASS_COUNT] = [
    "Normal (Safe driving)",
    "Phone - Talk Left",
    "Phone - Talk Right",
    "Phone - Text Left",
    "Phone - Text Right",
    "Eating",
    "Drinking",
    "Smoking Right",
    "Smoking Left",
    "Reaching Behind",
    "Look Left",
    "Look Down",
    "Talking to Passengers / Look Right",
    "Makeup / Hand on Hair",
    "Control Panel / GPS",
    "Yawning",
    "Sleep / Eyes Closed",
];

/// One entry of the behavior taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BehaviorClass {
    pub id: u8,
    pub name: &'static str,
}

impl BehaviorClass {
    /// Look up a class by id (1..=17).
    pub fn from_id(id: u8) -> Result<Self> {
        if id == 0 || id as usize > CLASS_COUNT {
            return Err(Error::InvalidClassId(id));
        }
        Ok(Self {
            id,
            name: CLASS_NAMES[id as usize - 1],
        })
    }

    /// All 17 classes in id order.
    pub fn all() -> impl Iterator<Item = BehaviorClass> {
        (1..=CLASS_COUNT as u8).map(|id| Self::from_id(id).expect("static taxonomy"))
    }

    pub fn is_normal(&self) -> bool {
        self.id == NORMAL_CLASS
    }
}

/// Frames-per-second of a stream. Always finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FrameRate(f64);

impl FrameRate {
    pub fn new(fps: f64) -> Result<Self> {
        if !fps.is_finite() || fps <= 0.0 {
            return Err(Error::InvalidFrameRate(fps));
        }
        Ok(Self(fps))
    }

    pub fn fps(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for FrameRate {
    type Error = Error;
    fn try_from(fps: f64) -> Result<Self> {
        Self::new(fps)
    }
}

impl From<FrameRate> for f64 {
    fn from(rate: FrameRate) -> f64 {
        rate.0
    }
}

/// One timestep's class-probability simplex vector plus frame index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityFrame {
    pub t: u64,
    pub probs: Vec<f64>,
}

impl ProbabilityFrame {
    pub fn new(t: u64, probs: Vec<f64>) -> Self {
        Self { t, probs }
    }

    /// Check arity, per-entry range, and the simplex sum.
    pub fn validate(&self) -> Result<()> {
        if self.probs.len() != CLASS_COUNT {
            return Err(Error::WrongArity {
                len: self.probs.len(),
                expected: CLASS_COUNT,
            });
        }
        for (i, &p) in self.probs.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfRange {
                    t: self.t,
                    class_id: i as u8 + 1,
                    value: p,
                });
            }
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::NotASimplex {
                t: self.t,
                sum,
                tolerance: SIMPLEX_TOLERANCE,
            });
        }
        Ok(())
    }

    /// Probability assigned to a class id (1-based). Panics on id 0 or out
    /// of bounds; callers validate upstream.
    pub fn prob(&self, class_id: u8) -> f64 {
        self.probs[class_id as usize - 1]
    }

    /// Argmax class id; ties break toward the lowest id so results are
    /// reproducible.
    pub fn argmax_class(&self) -> u8 {
        argmax_class(&self.probs)
    }
}

/// Argmax over a probability (or logit) vector, returning a 1-based class
/// id. Ties break toward the lowest id.
pub fn argmax_class(values: &[f64]) -> u8 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u8 + 1
}

/// Frame-level ground-truth label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub t: u64,
    pub label: u8,
}

impl LabeledFrame {
    pub fn validate(&self) -> Result<()> {
        if self.label == 0 || self.label as usize > CLASS_COUNT {
            return Err(Error::InvalidClassId(self.label));
        }
        Ok(())
    }
}

/// One detected behavior instance over the closed frame interval
/// `[t_start, t_end]`. Alerts are never emitted for the Normal class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AlertEvent {
    pub class_id: u8,
    pub t_start: u64,
    pub t_end: u64,
}

impl AlertEvent {
    pub fn new(class_id: u8, t_start: u64, t_end: u64) -> Self {
        Self {
            class_id,
            t_start,
            t_end,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.class_id == 0 || self.class_id as usize > CLASS_COUNT {
            return Err(Error::InvalidClassId(self.class_id));
        }
        if self.class_id == NORMAL_CLASS {
            return Err(Error::InvalidClassId(NORMAL_CLASS));
        }
        if self.t_start > self.t_end {
            return Err(Error::InvalidInterval {
                t_start: self.t_start,
                t_end: self.t_end,
            });
        }
        Ok(())
    }

    /// Event length in frames (closed interval, so always >= 1).
    pub fn len_frames(&self) -> u64 {
        self.t_end - self.t_start + 1
    }
}

/// Operating point of the temporal decision head.
///
/// * `tau` — trigger confidence threshold.
/// * `k` — persistence window length in frames.
/// * `tau_off` — hysteresis release threshold (`tau_off <= tau`).
/// * `m` — consecutive sub-`tau_off` frames required to close an event.
/// * `cooldown` — frames after an event closes during which the same class
///   may not re-trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GateConfig {
    pub tau: f64,
    pub k: usize,
    pub tau_off: f64,
    pub m: usize,
    pub cooldown: usize,
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            tau: 0.75,
            k: 25,
            tau_off: 0.60,
            m: 3,
            cooldown: 0,
        }
    }
}

impl GateConfig {
    /// Enforce the documented operating-point invariants. Intended for
    /// configs arriving from files or flags; library callers constructing
    /// degenerate configs on purpose (e.g. `tau = 0` frame mode in tests)
    /// may skip it.
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if self.m < 1 {
            return Err(Error::InvalidConfig("m must be >= 1".into()));
        }
        if !self.tau.is_finite() || self.tau <= 0.0 || self.tau > 1.0 {
            return Err(Error::InvalidConfig(format!(
                "tau must be in (0, 1], got {}",
                self.tau
            )));
        }
        if !self.tau_off.is_finite() || self.tau_off <= 0.0 || self.tau_off > self.tau {
            return Err(Error::InvalidConfig(format!(
                "tau_off must be in (0, tau], got {}",
                self.tau_off
            )));
        }
        if self.tau_off >= self.tau && self.k != 1 {
            return Err(Error::InvalidConfig(
                "tau_off must be strictly below tau unless k = 1 (frame-only mode)".into(),
            ));
        }
        Ok(())
    }

    /// Degenerate frame-only operating point: single-frame window, no
    /// hysteresis band. In this mode an event stays open exactly while its
    /// class remains the confident argmax.
    pub fn is_frame_mode(&self) -> bool {
        self.k == 1 && self.m == 1 && self.tau_off == self.tau
    }
}

/// Wall-clock length of a `k`-frame persistence window at a given rate.
pub fn persistence_window_seconds(k: usize, rate: FrameRate) -> f64 {
    k as f64 / rate.fps()
}
