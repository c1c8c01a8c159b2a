//! Reference math for the training-side loss: capped inverse-frequency
//! class weights and the class-weighted focal loss
//! `-alpha * (1 - p)^gamma * ln(p)`.
//!
//! No training loop lives here; these functions exist so the exact numbers
//! the pipeline assumes can be verified independently (see the `loss-check`
//! CLI subcommand).

use crate::error::{Error, Result};
use crate::types::CLASS_COUNT;

/// Default focusing parameter.
pub const DEFAULT_GAMMA: f64 = 1.5;

/// Default cap on per-class weights.
pub const DEFAULT_WEIGHT_CAP: f64 = 10.0;

/// Capped inverse-frequency class weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    /// One positive weight per class, each at most `cap`.
    pub alpha: Vec<f64>,
    pub cap: f64,
}

impl ClassWeights {
    pub fn for_class(&self, class_id: u8) -> f64 {
        self.alpha[class_id as usize - 1]
    }
}

/// `alpha_c = min(cap, N / (C * n_c))` over the 17 per-class frame counts.
/// Balanced counts give weight 1 for every class, which makes the cap
/// directly interpretable.
pub fn class_weights(counts: &[u64], cap: f64) -> Result<ClassWeights> {
    if counts.len() != CLASS_COUNT {
        return Err(Error::WrongArity {
            len: counts.len(),
            expected: CLASS_COUNT,
        });
    }
    if !cap.is_finite() || cap <= 0.0 {
        return Err(Error::InvalidLossParameter(format!(
            "cap must be finite and positive, got {cap}"
        )));
    }
    for (i, &n) in counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::ZeroCount {
                class_id: i as u8 + 1,
            });
        }
    }
    let total: u64 = counts.iter().sum();
    let alpha = counts
        .iter()
        .map(|&n| (total as f64 / (CLASS_COUNT as f64 * n as f64)).min(cap))
        .collect();
    Ok(ClassWeights { alpha, cap })
}

fn check_params(p_true: f64, alpha: f64, gamma: f64) -> Result<()> {
    if !p_true.is_finite() || p_true <= 0.0 || p_true > 1.0 {
        return Err(Error::DegenerateProbability(p_true));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidLossParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidLossParameter(format!(
            "gamma must be >= 0, got {gamma}"
        )));
    }
    Ok(())
}

/// Class-weighted focal loss `-alpha * (1 - p)^gamma * ln(p)` (natural
/// logarithm). Collapses to weighted cross-entropy at `gamma = 0` and to 0
/// at `p = 1`.
pub fn focal_loss(p_true: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_params(p_true, alpha, gamma)?;
    Ok(-alpha * (1.0 - p_true).powf(gamma) * p_true.ln())
}

/// Analytic derivative of [`focal_loss`] with respect to `p_true`:
/// `alpha * gamma * (1-p)^(gamma-1) * ln(p) - alpha * (1-p)^gamma / p`.
/// Used to cross-check the loss shape against finite differences.
pub fn focal_loss_dp(p_true: f64, alpha: f64, gamma: f64) -> Result<f64> {
    check_params(p_true, alpha, gamma)?;
    let one_minus = 1.0 - p_true;
    let first = if gamma == 0.0 {
        0.0
    } else {
        alpha * gamma * one_minus.powf(gamma - 1.0) * p_true.ln()
    };
    Ok(first - alpha * one_minus.powf(gamma) / p_true)
}
