//! Frame-level recognition metrics: macro-F1 (unweighted mean of per-class
//! F1) and balanced accuracy (mean per-class recall).
//!
//! The macro averages run over the classes present in the ground truth;
//! classes absent from both sides are excluded so short scenarios are not
//! diluted by behaviors they never exhibit, and prediction-only classes
//! still cost precision through the false positives they create.

use alertgate::types::CLASS_COUNT;
use anyhow::bail;

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub macro_f1: f64,
    pub balanced_accuracy: f64,
    /// `(class_id, f1)` for every class present in the ground truth,
    /// ascending by id.
    pub per_class_f1: Vec<(u8, f64)>,
}

pub fn frame_metrics(pred: &[u8], gt: &[u8]) -> anyhow::Result<FrameMetrics> {
    if pred.len() != gt.len() {
        bail!(
            "label sequences differ in length ({} predictions vs {} ground-truth frames)",
            pred.len(),
            gt.len()
        );
    }
    if gt.is_empty() {
        bail!("cannot compute frame metrics over an empty sequence");
    }
    for &label in pred.iter().chain(gt) {
        if label == 0 || label as usize > CLASS_COUNT {
            bail!("label {label} outside 1..=17");
        }
    }

    let mut tp = [0u64; CLASS_COUNT];
    let mut fp = [0u64; CLASS_COUNT];
    let mut fn_ = [0u64; CLASS_COUNT];
    for (&p, &g) in pred.iter().zip(gt) {
        if p == g {
            tp[p as usize - 1] += 1;
        } else {
            fp[p as usize - 1] += 1;
            fn_[g as usize - 1] += 1;
        }
    }

    let mut per_class_f1 = Vec::new();
    let mut recall_sum = 0.0;
    for class in 1..=CLASS_COUNT as u8 {
        let i = class as usize - 1;
        let present_in_gt = tp[i] + fn_[i] > 0;
        if !present_in_gt {
            continue;
        }
        let denom = 2 * tp[i] + fp[i] + fn_[i];
        let f1 = if denom == 0 {
            0.0
        } else {
            2.0 * tp[i] as f64 / denom as f64
        };
        per_class_f1.push((class, f1));
        recall_sum += tp[i] as f64 / (tp[i] + fn_[i]) as f64;
    }
    let n_classes = per_class_f1.len() as f64;
    Ok(FrameMetrics {
        macro_f1: per_class_f1.iter().map(|(_, f1)| f1).sum::<f64>() / n_classes,
        balanced_accuracy: recall_sum / n_classes,
        per_class_f1,
    })
}
