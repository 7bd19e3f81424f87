//! Box overlap, detection matching and F1 bookkeeping.

use alloc::vec::Vec;
use core::ops::{Add, AddAssign};

use crate::region::BoundingBox;

/// Intersection over union with inclusive-coordinate areas.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchOutcome {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// `(gt index, pred index)` for each match, in the order they were made.
    pub pairs: Vec<(usize, usize)>,
}

impl MatchOutcome {
    pub fn tally(&self) -> Tally {
        Tally {
            tp: self.tp as u64,
            fp: self.fp as u64,
            fn_: self.fn_ as u64,
        }
    }
}

/// Greedy one-to-one matching: candidate pairs with IoU at or above the
/// threshold are taken in descending IoU order, ties by gt index then pred
/// index.
pub fn match_boxes(pred: &[BoundingBox], gt: &[BoundingBox], iou_threshold: f64) -> MatchOutcome {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        for (pi, p) in pred.iter().enumerate() {
            let score = iou(p, g);
            if score > 0.0 && score >= iou_threshold {
                candidates.push((score, gi, pi));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut gt_used = alloc::vec![false; gt.len()];
    let mut pred_used = alloc::vec![false; pred.len()];
    let mut pairs = Vec::new();
    for (_, gi, pi) in candidates {
        if !gt_used[gi] && !pred_used[pi] {
            gt_used[gi] = true;
            pred_used[pi] = true;
            pairs.push((gi, pi));
        }
    }
    MatchOutcome {
        tp: pairs.len(),
        fp: pred.len() - pairs.len(),
        fn_: gt.len() - pairs.len(),
        pairs,
    }
}

/// Integer detection counts. Addition is associative and commutative, so
/// any reduction order gives the same totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl Tally {
    /// Precision; 1.0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// Recall; 1.0 when there was nothing to find.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, rhs: Tally) -> Tally {
        Tally {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl AddAssign for Tally {
    fn add_assign(&mut self, rhs: Tally) {
        *self = *self + rhs;
    }
}

/// Accumulates per-frame scores at one IoU threshold.
///
/// Micro scores come from the summed [`Tally`]. The weighted scores average
/// each frame's precision, recall and F1 with the frame's ground-truth count
/// as weight; frames are folded in the order given.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScoreAccumulator {
    pub tally: Tally,
    weight: u64,
    precision_sum: f64,
    recall_sum: f64,
    f1_sum: f64,
}

impl ScoreAccumulator {
    pub fn push(&mut self, frame: Tally, gt_count: usize) {
        let w = gt_count as f64;
        self.tally += frame;
        self.weight += gt_count as u64;
        self.precision_sum += w * frame.precision();
        self.recall_sum += w * frame.recall();
        self.f1_sum += w * frame.f1();
    }

    pub fn report(&self, iou_threshold: f64) -> EvalReport {
        let t = self.tally;
        let (wp, wr, wf) = if self.weight == 0 {
            (t.precision(), t.recall(), t.f1())
        } else {
            let w = self.weight as f64;
            (self.precision_sum / w, self.recall_sum / w, self.f1_sum / w)
        };
        EvalReport {
            iou_threshold,
            tp: t.tp,
            fp: t.fp,
            fn_: t.fn_,
            precision: t.precision(),
            recall: t.recall(),
            f1: t.f1(),
            weighted_precision: wp,
            weighted_recall: wr,
            weighted_f1: wf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    /// Micro-averaged over all frames.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth-count weighted macro averages. When no frame has ground
    /// truth these repeat the micro values.
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}
