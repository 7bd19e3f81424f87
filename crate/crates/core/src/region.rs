//! Region proposal: iterative selective search over projections, then
//! controller-side consolidation.
//!
//! The search starts with one row projection over the whole frame. Each row
//! run becomes a candidate spanning all columns. Every later iteration flips
//! the axis and, for each candidate, projects with the mask restricted to the
//! candidate's extent on the fixed axis; the runs found inside the
//! candidate's current extent on the projected axis replace that extent,
//! splitting the candidate when there is more than one. The search stops as
//! soon as an iteration ends with as many candidates as the one before it.
//!
//! Consolidation drops undersized boxes and then merges any two boxes whose
//! row gap and column gap are both below the slot thresholds, until no pair
//! qualifies.

use alloc::vec::Vec;
use core::cmp::{max, min};

use crate::error::{Error, Result};
use crate::frame::BinaryFrame;
use crate::projection::{pixel, runs_from_bits, Axis, ProjectionConfig};
use crate::timing::{CycleTrace, OpKind};

/// Inclusive rectangle in `(row, col)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundingBox {
    pub r0: usize,
    pub r1: usize,
    pub c0: usize,
    pub c1: usize,
}

impl BoundingBox {
    pub fn new(r0: usize, r1: usize, c0: usize, c1: usize) -> Self {
        debug_assert!(r0 <= r1 && c0 <= c1, "inverted box");
        BoundingBox { r0, r1, c0, c1 }
    }

    pub fn height(&self) -> usize {
        self.r1 - self.r0 + 1
    }

    pub fn width(&self) -> usize {
        self.c1 - self.c0 + 1
    }

    pub fn area(&self) -> usize {
        self.height() * self.width()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.r0..=self.r1).contains(&row) && (self.c0..=self.c1).contains(&col)
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            r0: min(self.r0, other.r0),
            r1: max(self.r1, other.r1),
            c0: min(self.c0, other.c0),
            c1: max(self.c1, other.c1),
        }
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> usize {
        let h = overlap(self.r0, self.r1, other.r0, other.r1);
        let w = overlap(self.c0, self.c1, other.c0, other.c1);
        h * w
    }

    /// Empty lines between the two row extents; 0 when they touch or overlap.
    pub fn row_gap(&self, other: &BoundingBox) -> usize {
        gap(self.r0, self.r1, other.r0, other.r1)
    }

    pub fn col_gap(&self, other: &BoundingBox) -> usize {
        gap(self.c0, self.c1, other.c0, other.c1)
    }

    fn extent(&self, axis: Axis) -> (usize, usize) {
        match axis {
            Axis::Rows => (self.r0, self.r1),
            Axis::Cols => (self.c0, self.c1),
        }
    }

    fn with_extent(mut self, axis: Axis, (lo, hi): (usize, usize)) -> Self {
        match axis {
            Axis::Rows => (self.r0, self.r1) = (lo, hi),
            Axis::Cols => (self.c0, self.c1) = (lo, hi),
        }
        self
    }

    /// Sort key used for every box list this crate emits.
    fn order_key(&self) -> (usize, usize, usize, usize) {
        (self.r0, self.c0, self.r1, self.c1)
    }
}

fn overlap(a0: usize, a1: usize, b0: usize, b1: usize) -> usize {
    let lo = max(a0, b0);
    let hi = min(a1, b1);
    if lo <= hi {
        hi - lo + 1
    } else {
        0
    }
}

fn gap(a0: usize, a1: usize, b0: usize, b1: usize) -> usize {
    if b0 > a1 {
        b0 - a1 - 1
    } else if a0 > b1 {
        a0 - b1 - 1
    } else {
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SizeMetric {
    /// `height * width`
    #[default]
    Area,
    /// `max(height, width)`
    MaxSide,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpConfig {
    pub size_min: usize,
    pub size_metric: SizeMetric,
    pub slot_r: usize,
    pub slot_c: usize,
    pub max_iters: u32,
    pub projection: ProjectionConfig,
}

impl Default for RpConfig {
    fn default() -> Self {
        RpConfig {
            size_min: 4,
            size_metric: SizeMetric::Area,
            slot_r: 4,
            slot_c: 4,
            max_iters: 16,
            projection: ProjectionConfig::default(),
        }
    }
}

impl RpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 2 {
            return Err(Error::InvalidConfig("max_iters must be at least 2".into()));
        }
        self.projection.validate()
    }

    fn size_of(&self, b: &BoundingBox) -> usize {
        match self.size_metric {
            SizeMetric::Area => b.area(),
            SizeMetric::MaxSide => max(b.height(), b.width()),
        }
    }

    fn mergeable(&self, a: &BoundingBox, b: &BoundingBox) -> bool {
        a.row_gap(b) < self.slot_r && a.col_gap(b) < self.slot_c
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssOutcome {
    pub boxes: Vec<BoundingBox>,
    pub iterations: u32,
    pub trace: CycleTrace,
    /// Cells sensed over all projections (mask size times sensed lines).
    pub cells_sensed: u64,
}

/// Iterative selective search. Returns candidate boxes in discovery order.
pub fn iss(frame: &BinaryFrame, cfg: &RpConfig) -> Result<IssOutcome> {
    cfg.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let mut trace = CycleTrace::new();
    if w == 0 || h == 0 {
        trace.push(OpKind::FullAxisProjection, 1);
        return Ok(IssOutcome {
            boxes: Vec::new(),
            iterations: 1,
            trace,
            cells_sensed: 0,
        });
    }

    let whole = BoundingBox::new(0, h - 1, 0, w - 1);
    let mut candidates = refine(frame, &whole, Axis::Rows, &cfg.projection);
    trace.push(OpKind::FullAxisProjection, 1);
    let mut cells_sensed = (w * h) as u64;
    let mut iterations = 1;
    let mut axis = Axis::Cols;

    while !candidates.is_empty() && iterations < cfg.max_iters {
        iterations += 1;
        let previous = candidates.len();
        let mut next = Vec::with_capacity(previous);
        for cand in &candidates {
            next.extend(refine(frame, cand, axis, &cfg.projection));
            let (lo, hi) = cand.extent(axis.other());
            cells_sensed += ((hi - lo + 1) * axis.lines(frame)) as u64;
        }
        trace.push(OpKind::RegionProjection, previous as u64);
        candidates = next;
        if candidates.len() == previous {
            break;
        }
        axis = axis.other();
    }

    Ok(IssOutcome {
        boxes: candidates,
        iterations,
        trace,
        cells_sensed,
    })
}

/// Projects one candidate onto `axis` with its fixed-axis extent as the mask
/// and splits it along the detected runs inside its current extent.
fn refine(
    frame: &BinaryFrame,
    cand: &BoundingBox,
    axis: Axis,
    cfg: &ProjectionConfig,
) -> Vec<BoundingBox> {
    let (lo, hi) = cand.extent(axis);
    let (mlo, mhi) = cand.extent(axis.other());
    let bits: Vec<bool> = (lo..=hi)
        .map(|line| cfg.detects((mlo..=mhi).filter(|&o| pixel(frame, axis, line, o)).count()))
        .collect();
    runs_from_bits(&bits)
        .into_iter()
        .map(|(a, b)| cand.with_extent(axis, (lo + a, lo + b)))
        .collect()
}

/// Consolidation: size filter, then gap merging to a fixpoint. Output is
/// sorted by `(r0, c0)` and does not depend on input order.
pub fn rp_update(new_boxes: &[BoundingBox], cfg: &RpConfig) -> Vec<BoundingBox> {
    let mut kept: Vec<BoundingBox> = new_boxes
        .iter()
        .copied()
        .filter(|b| cfg.size_of(b) >= cfg.size_min)
        .collect();

    // Growing a box only shrinks its gaps, so every merge stays valid and the
    // fixpoint is the same whichever qualifying pair is taken first.
    'scan: loop {
        for i in 0..kept.len() {
            for j in i + 1..kept.len() {
                if cfg.mergeable(&kept[i], &kept[j]) {
                    kept[i] = kept[i].union(&kept[j]);
                    kept.swap_remove(j);
                    continue 'scan;
                }
            }
        }
        break;
    }
    kept.sort_by_key(BoundingBox::order_key);
    kept
}

/// Controller work for consolidating `n_objects` candidates.
pub fn controller_trace(n_objects: usize) -> CycleTrace {
    let mut trace = CycleTrace::new();
    trace.push(OpKind::ControllerFixed, 1);
    trace.push(OpKind::ControllerObject, n_objects as u64);
    trace
}

/// Both phases: in-memory search followed by consolidation.
pub fn region_propose(
    frame: &BinaryFrame,
    cfg: &RpConfig,
) -> Result<(Vec<BoundingBox>, CycleTrace)> {
    let found = iss(frame, cfg)?;
    let boxes = rp_update(&found.boxes, cfg);
    let mut trace = found.trace;
    trace.append(&controller_trace(found.boxes.len()));
    Ok((boxes, trace))
}

pub(crate) fn sort_boxes(boxes: &mut [BoundingBox]) {
    boxes.sort_by_key(BoundingBox::order_key);
}
