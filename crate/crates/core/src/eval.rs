//! Instance-level precision, recall and F-measure of moving-object masks.
//!
//! Each nonzero label forms one instance tube over the whole video.
//! Predicted and reference tubes are matched one-to-one to maximize the
//! summed tube F-score `2|p∩g| / (|p| + |g|)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::max_weight_matching;
use crate::types::LabelMap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("prediction has {pred} frames, reference has {gt}")]
    FrameCount { pred: usize, gt: usize },
    #[error("frame {frame}: prediction is {pred:?}, reference is {gt:?}")]
    ShapeMismatch { frame: usize, pred: (usize, usize), gt: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMatch {
    pub pred: u16,
    pub gt: u16,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    #[serde(rename = "Pu")]
    pub pu: f64,
    #[serde(rename = "Ru")]
    pub ru: f64,
    #[serde(rename = "Fu")]
    pub fu: f64,
    pub pred_instances: usize,
    pub gt_instances: usize,
    pub matches: Vec<InstanceMatch>,
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

pub fn evaluate(pred: &[LabelMap], gt: &[LabelMap]) -> Result<MetricReport, EvalError> {
    if pred.len() != gt.len() {
        return Err(EvalError::FrameCount { pred: pred.len(), gt: gt.len() });
    }
    let mut pred_size: BTreeMap<u16, u64> = BTreeMap::new();
    let mut gt_size: BTreeMap<u16, u64> = BTreeMap::new();
    let mut overlap: BTreeMap<(u16, u16), u64> = BTreeMap::new();
    for (frame, (p, g)) in pred.iter().zip(gt).enumerate() {
        if (p.width, p.height) != (g.width, g.height) || p.labels.len() != g.labels.len() {
            return Err(EvalError::ShapeMismatch { frame, pred: (p.width, p.height), gt: (g.width, g.height) });
        }
        for (&a, &b) in p.labels.iter().zip(&g.labels) {
            if a != 0 {
                *pred_size.entry(a).or_default() += 1;
            }
            if b != 0 {
                *gt_size.entry(b).or_default() += 1;
            }
            if a != 0 && b != 0 {
                *overlap.entry((a, b)).or_default() += 1;
            }
        }
    }
    let (np, ng) = (pred_size.len(), gt_size.len());
    let report = |pu: f64, ru: f64, fu: f64, matches: Vec<InstanceMatch>| MetricReport {
        pu,
        ru,
        fu,
        pred_instances: np,
        gt_instances: ng,
        matches,
    };
    match (np, ng) {
        (0, 0) => return Ok(report(1.0, 1.0, 1.0, Vec::new())),
        (0, _) => return Ok(report(1.0, 0.0, 0.0, Vec::new())),
        (_, 0) => return Ok(report(0.0, 1.0, 0.0, Vec::new())),
        _ => {}
    }
    let pred_ids: Vec<u16> = pred_size.keys().copied().collect();
    let gt_ids: Vec<u16> = gt_size.keys().copied().collect();
    let scores: Vec<Vec<f64>> = pred_ids
        .iter()
        .map(|p| {
            gt_ids
                .iter()
                .map(|g| {
                    let inter = overlap.get(&(*p, *g)).copied().unwrap_or(0) as f64;
                    2.0 * inter / (pred_size[p] + gt_size[g]) as f64
                })
                .collect()
        })
        .collect();
    let matches: Vec<InstanceMatch> = max_weight_matching(&scores)
        .into_iter()
        .map(|(i, j)| InstanceMatch { pred: pred_ids[i], gt: gt_ids[j], f: scores[i][j] })
        .collect();
    let total: f64 = matches.iter().map(|m| m.f).sum();
    let (pu, ru) = (total / np as f64, total / ng as f64);
    Ok(report(pu, ru, harmonic(pu, ru), matches))
}
