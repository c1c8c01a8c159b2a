//! Temporal decision head: a per-stream finite state machine that converts
//! frame-level class probabilities into event-level alerts.
//!
//! An alert for class `c` opens once `c` has been the confident argmax
//! (`p >= tau` and dominant) for `k` consecutive frames; the event is
//! backdated to the first frame of that window. Once open, the event
//! survives until evidence for `c` drops below the release threshold
//! `tau_off` for `m` consecutive frames (hysteresis); it then closes on the
//! last frame that still had `p >= tau_off` and the class enters a cooldown
//! during which it may not re-trigger.
//!
//! ```text
//!            k consecutive frames with
//!            argmax = c and p(c) >= tau            m consecutive frames
//!   Idle ───────────────────────────────► Active(c) ────────────────────► Cooldown(c)
//!    ▲                                     (event open,                    (event emitted,│
//!    │                                      backdated start)               same class      │
//!    │                                                                     suppressed)     │
//!    └───────────────────── cooldown frames elapsed ◄───────────────────────────────────┘
//! ```
//!
//! The Normal class never opens an event, and at most one event is open at
//! a time: while an event is active, trigger conditions for other classes
//! are ignored (no preemption). A class *other* than the cooling-down one
//! may trigger straight out of Cooldown.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::types::{AlertEvent, GateConfig, ProbabilityFrame, NORMAL_CLASS};

/// Externally visible mode of the gate state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateMode {
    Idle,
    Active {
        class_id: u8,
    },
    Cooldown {
        class_id: u8,
        frames_remaining: usize,
    },
}

#[derive(Debug, Clone)]
enum Mode {
    Idle,
    Active {
        class_id: u8,
        t_start: u64,
        /// Most recent frame that still supported the active class.
        last_ok_t: u64,
        /// Consecutive frames violating the release condition.
        release_run: usize,
    },
    Cooldown {
        class_id: u8,
        frames_remaining: usize,
    },
}

/// Streaming gate over one probability stream. Strictly sequential; use one
/// gate per stream. Distinct gates share nothing and may run in parallel.
#[derive(Debug, Clone)]
pub struct Gate {
    cfg: GateConfig,
    mode: Mode,
    /// Last `k` per-frame trigger decisions: `(t, Some(class))` when that
    /// frame's argmax was a confident non-Normal class.
    decisions: VecDeque<(u64, Option<u8>)>,
    last_t: Option<u64>,
    /// End of the most recently emitted event; trigger windows must start
    /// after it so events never overlap.
    last_event_end: Option<u64>,
}

impl Gate {
    /// Build a gate. Rejects configs the machine cannot run on (`k`/`m`
    /// zero, non-finite or inverted thresholds); the stricter operating
    /// point rules live in [`GateConfig::validate`].
    pub fn new(cfg: GateConfig) -> Result<Self> {
        if cfg.k < 1 || cfg.m < 1 {
            return Err(Error::InvalidConfig("k and m must be >= 1".into()));
        }
        if !cfg.tau.is_finite() || !cfg.tau_off.is_finite() {
            return Err(Error::InvalidConfig("thresholds must be finite".into()));
        }
        if cfg.tau_off > cfg.tau {
            return Err(Error::InvalidConfig("tau_off must not exceed tau".into()));
        }
        Ok(Self {
            cfg,
            mode: Mode::Idle,
            decisions: VecDeque::with_capacity(cfg.k + 1),
            last_t: None,
            last_event_end: None,
        })
    }

    pub fn config(&self) -> &GateConfig {
        &self.cfg
    }

    pub fn mode(&self) -> GateMode {
        match self.mode {
            Mode::Idle => GateMode::Idle,
            Mode::Active { class_id, .. } => GateMode::Active { class_id },
            Mode::Cooldown {
                class_id,
                frames_remaining,
            } => GateMode::Cooldown {
                class_id,
                frames_remaining,
            },
        }
    }

    /// Per-frame trigger decision: the argmax class when it is confident
    /// and non-Normal.
    fn decision(&self, frame: &ProbabilityFrame) -> Option<u8> {
        let c = frame.argmax_class();
        if c != NORMAL_CLASS && frame.prob(c) >= self.cfg.tau {
            Some(c)
        } else {
            None
        }
    }

    /// Advance the machine by one frame. Returns the event emitted by this
    /// step, if any. Frames must arrive in strictly increasing `t` order
    /// and must be valid probability frames (fail-fast: a malformed frame
    /// aborts the run rather than silently desynchronizing the window).
    pub fn step(&mut self, frame: &ProbabilityFrame) -> Result<Option<AlertEvent>> {
        frame.validate()?;
        if let Some(prev) = self.last_t {
            if frame.t <= prev {
                return Err(Error::NonMonotonicTime { prev, t: frame.t });
            }
        }
        self.last_t = Some(frame.t);
        let started_in_cooldown = matches!(self.mode, Mode::Cooldown { .. });

        let decision = self.decision(frame);
        self.decisions.push_back((frame.t, decision));
        if self.decisions.len() > self.cfg.k {
            self.decisions.pop_front();
        }

        let mut emitted = None;

        // Release: hysteresis on the active class. In frame mode the event
        // tracks the confident-argmax condition itself; otherwise only the
        // release threshold matters (dominance is not required to continue).
        if let Mode::Active {
            class_id,
            t_start,
            last_ok_t,
            release_run,
        } = &mut self.mode
        {
            let violated = if self.cfg.is_frame_mode() {
                decision != Some(*class_id)
            } else {
                frame.prob(*class_id) < self.cfg.tau_off
            };
            if violated {
                *release_run += 1;
                if *release_run >= self.cfg.m {
                    let event = AlertEvent::new(*class_id, *t_start, *last_ok_t);
                    self.last_event_end = Some(event.t_end);
                    self.mode = if self.cfg.cooldown > 0 {
                        Mode::Cooldown {
                            class_id: *class_id,
                            frames_remaining: self.cfg.cooldown,
                        }
                    } else {
                        Mode::Idle
                    };
                    emitted = Some(event);
                }
            } else {
                *release_run = 0;
                *last_ok_t = frame.t;
            }
        }

        // Trigger: the last k decisions must all name the same class, the
        // window must not reach back into the previous event, and the class
        // must not be the one cooling down.
        if !matches!(self.mode, Mode::Active { .. }) {
            if let Some(c) = decision {
                let window_full = self.decisions.len() == self.cfg.k
                    && self.decisions.iter().all(|&(_, d)| d == Some(c));
                if window_full {
                    let window_start = self.decisions.front().expect("window non-empty").0;
                    let clears_previous = self.last_event_end.is_none_or(|end| window_start > end);
                    let eligible = match self.mode {
                        Mode::Idle => true,
                        Mode::Cooldown { class_id, .. } => class_id != c,
                        Mode::Active { .. } => unreachable!(),
                    };
                    if eligible && clears_previous {
                        self.mode = Mode::Active {
                            class_id: c,
                            t_start: window_start,
                            last_ok_t: frame.t,
                            release_run: 0,
                        };
                    }
                }
            }
        }

        // Cooldown counts down once per frame processed while in cooldown;
        // a cooldown entered this very step starts counting next frame.
        if started_in_cooldown {
            if let Mode::Cooldown {
                frames_remaining, ..
            } = &mut self.mode
            {
                *frames_remaining -= 1;
                if *frames_remaining == 0 {
                    self.mode = Mode::Idle;
                }
            }
        }

        Ok(emitted)
    }

    /// Close out the stream. An event still open is force-closed at the
    /// last observed frame and emitted exactly once.
    pub fn finalize(self) -> Option<AlertEvent> {
        match (self.mode, self.last_t) {
            (
                Mode::Active {
                    class_id, t_start, ..
                },
                Some(last_t),
            ) => Some(AlertEvent::new(class_id, t_start, last_t)),
            _ => None,
        }
    }
}

/// Run the gate over a whole stream: fold [`Gate::step`] and then
/// [`Gate::finalize`]. The result is sorted by start time and events never
/// overlap.
pub fn run_gate(frames: &[ProbabilityFrame], cfg: &GateConfig) -> Result<Vec<AlertEvent>> {
    let mut gate = Gate::new(*cfg)?;
    let mut events = Vec::new();
    for frame in frames {
        if let Some(event) = gate.step(frame)? {
            events.push(event);
        }
    }
    if let Some(event) = gate.finalize() {
        events.push(event);
    }
    Ok(events)
}

/// Frames `t` at which the k-window trigger condition holds for some
/// non-Normal class, independent of gate state. Diagnostic surface for
/// sensitivity analysis: the sets shrink monotonically as `k` or `tau`
/// grow.
pub fn trigger_set(frames: &[ProbabilityFrame], k: usize, tau: f64) -> Result<Vec<u64>> {
    if k < 1 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let mut decisions: Vec<Option<u8>> = Vec::with_capacity(frames.len());
    let mut prev_t: Option<u64> = None;
    for frame in frames {
        frame.validate()?;
        if let Some(prev) = prev_t {
            if frame.t <= prev {
                return Err(Error::NonMonotonicTime { prev, t: frame.t });
            }
        }
        prev_t = Some(frame.t);
        let c = frame.argmax_class();
        decisions.push(if c != NORMAL_CLASS && frame.prob(c) >= tau {
            Some(c)
        } else {
            None
        });
    }
    let mut hits = Vec::new();
    for i in 0..frames.len() {
        if i + 1 < k {
            continue;
        }
        if let Some(c) = decisions[i] {
            if decisions[i + 1 - k..=i].iter().all(|&d| d == Some(c)) {
                hits.push(frames[i].t);
            }
        }
    }
    Ok(hits)
}
