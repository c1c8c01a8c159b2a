//! Streaming behavior-alert engine and evaluation toolkit.
//!
//! Converts per-frame behavior-class probability streams into stable
//! event-level alerts (persistence gating + hysteresis + cooldown) and
//! measures alert quality (temporal-IoU matching, false alerts/min,
//! time-to-detect, fragmentation) and runtime timing (stage-wise latency,
//! throughput, jitter). A seeded synthetic stream simulator stands in for
//! live camera data at desk scale.

pub mod baselines;
pub mod error;
pub mod events;
pub mod gate;
pub mod io;
pub mod loss;
pub mod mapping;
pub mod profile;
pub mod simulate;
pub mod types;

pub use error::{Error, Result};
