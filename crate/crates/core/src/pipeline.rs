//! Restoration followed by region proposal, and the scoring loop built on it.

use alloc::vec::Vec;

use crate::diffusion::{restore_image, DiffusionConfig};
use crate::error::{Error, Result};
use crate::frame::{BinaryFrame, DEFAULT_RING};
use crate::metrics::{match_boxes, EvalReport, ScoreAccumulator, Tally};
use crate::region::{controller_trace, iss, rp_update, sort_boxes, BoundingBox, RpConfig};
use crate::timing::{trace_cycles, CostTable, CycleTrace, OpCount};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub diffusion: DiffusionConfig,
    /// Run the diffusion pulse train before proposing regions.
    pub restore: bool,
    pub ring: usize,
    pub rp: RpConfig,
    /// Run the controller consolidation after the in-memory search.
    pub consolidate: bool,
    pub costs: CostTable,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            diffusion: DiffusionConfig::default(),
            restore: true,
            ring: DEFAULT_RING,
            rp: RpConfig::default(),
            consolidate: true,
            costs: CostTable::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.diffusion.validate()?;
        self.rp.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    /// Frame handed to the search (the input when restoration is off).
    pub restored: BinaryFrame,
    pub boxes: Vec<BoundingBox>,
    pub trace: CycleTrace,
    pub iss_iterations: u32,
    pub ops: OpCount,
}

impl PipelineRun {
    pub fn imc_cycles(&self, costs: &CostTable) -> u64 {
        self.trace.imc_cycles(costs)
    }

    pub fn total_cycles(&self, costs: &CostTable) -> u64 {
        trace_cycles(&self.trace, costs)
    }
}

pub fn run_pipeline(frame: &BinaryFrame, cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let mut ops = OpCount::default();
    let restored = if cfg.restore {
        let d = &cfg.diffusion;
        let cells = (frame.width() + 2 * cfg.ring) * (frame.height() + 2 * cfg.ring);
        ops.diffusion_ops =
            OpCount::diffusion(d.pulses as u64, d.substeps_per_pulse as u64, cells as u64);
        restore_image(frame, d, cfg.ring)?
    } else {
        frame.clone()
    };

    let found = iss(&restored, &cfg.rp)?;
    ops.projection_ops = found.cells_sensed;
    let mut trace = found.trace;
    let boxes = if cfg.consolidate {
        trace.append(&controller_trace(found.boxes.len()));
        rp_update(&found.boxes, &cfg.rp)
    } else {
        let mut boxes = found.boxes;
        sort_boxes(&mut boxes);
        boxes
    };
    Ok(PipelineRun {
        restored,
        boxes,
        trace,
        iss_iterations: found.iterations,
        ops,
    })
}

/// Per-threshold detection counts for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameScore {
    pub tallies: Vec<Tally>,
    pub gt_count: usize,
}

pub fn score_frame(
    frame: &BinaryFrame,
    gt: &[BoundingBox],
    cfg: &PipelineConfig,
    iou_thresholds: &[f64],
) -> Result<FrameScore> {
    let run = run_pipeline(frame, cfg)?;
    let tallies = iou_thresholds
        .iter()
        .map(|&t| match_boxes(&run.boxes, gt, t).tally())
        .collect();
    Ok(FrameScore {
        tallies,
        gt_count: gt.len(),
    })
}

/// Folds frame scores, in order, into one report per threshold.
pub fn reports_from_scores<'a>(
    scores: impl IntoIterator<Item = &'a FrameScore>,
    iou_thresholds: &[f64],
) -> Vec<EvalReport> {
    let mut acc = alloc::vec![ScoreAccumulator::default(); iou_thresholds.len()];
    for score in scores {
        for (a, t) in acc.iter_mut().zip(&score.tallies) {
            a.push(*t, score.gt_count);
        }
    }
    acc.iter()
        .zip(iou_thresholds)
        .map(|(a, &t)| a.report(t))
        .collect()
}

pub fn validate_thresholds(iou_thresholds: &[f64]) -> Result<()> {
    if iou_thresholds.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::InvalidConfig(
            "IoU thresholds must lie in (0, 1]".into(),
        ));
    }
    Ok(())
}

/// Runs the pipeline on every `(frame, ground truth)` pair and reports
/// micro-averaged scores per IoU threshold.
pub fn evaluate(
    frames: &[(BinaryFrame, Vec<BoundingBox>)],
    cfg: &PipelineConfig,
    iou_thresholds: &[f64],
) -> Result<Vec<EvalReport>> {
    if frames.is_empty() {
        return Err(Error::InvalidConfig(
            "evaluation needs at least one frame".into(),
        ));
    }
    validate_thresholds(iou_thresholds)?;
    let scores = frames
        .iter()
        .map(|(f, gt)| score_frame(f, gt, cfg, iou_thresholds))
        .collect::<Result<Vec<_>>>()?;
    Ok(reports_from_scores(&scores, iou_thresholds))
}
