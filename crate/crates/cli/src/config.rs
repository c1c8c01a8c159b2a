//! Run configuration: which alerting variant converts frames into events,
//! its parameters, and the optional class-mapping stage.
//!
//! The JSON config file mirrors this struct field-for-field; CLI flags
//! override file values, which override the defaults.

use std::path::PathBuf;

use alertgate::baselines::{EmaConfig, MajorityConfig};
use alertgate::types::GateConfig;
use serde::{Deserialize, Serialize};

/// How frame-level predictions are converted into alerts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Gate,
    #[value(name = "frame_only", alias = "frame-only")]
    FrameOnly,
    Majority,
    Ema,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Gate => "gate",
            Variant::FrameOnly => "frame_only",
            Variant::Majority => "majority",
            Variant::Ema => "ema",
        }
    }
}

/// Where the class map applies in the run pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MapMode {
    /// Map probability frames before the variant runs.
    Frames,
    /// Map the emitted events after the variant runs.
    Events,
    /// Both stages (sensible for endomaps like the confounder absorption).
    Both,
}

/// Which side of an evaluation gets mapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MapSide {
    /// Map predictions and ground-truth labels consistently (default).
    Both,
    Pred,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub variant: Variant,
    pub gate: GateConfig,
    pub majority: MajorityConfig,
    pub ema: EmaConfig,
    /// Path to a map file, or a bundled preset name
    /// (`no-confounders`, `deployment-groups`).
    pub map_file: Option<PathBuf>,
    pub map_mode: MapMode,
    pub eta: f64,
    pub fps: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Gate,
            gate: GateConfig::default(),
            majority: MajorityConfig::default(),
            ema: EmaConfig::default(),
            map_file: None,
            map_mode: MapMode::Frames,
            eta: 0.3,
            fps: 25.0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.gate.validate()?;
        self.majority.validate()?;
        self.ema.validate()?;
        if !self.eta.is_finite() || self.eta <= 0.0 || self.eta > 1.0 {
            anyhow::bail!("eta must be in (0, 1], got {}", self.eta);
        }
        if !self.fps.is_finite() || self.fps <= 0.0 {
            anyhow::bail!("fps must be positive, got {}", self.fps);
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        Ok(cfg)
    }
}
