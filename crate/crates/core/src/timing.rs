//! Cycle accounting for region proposal.
//!
//! The default cost table is calibrated so that the cheapest possible layout
//! (objects with pairwise disjoint row and column extents) costs `8N + 8`
//! cycles of in-memory projection and `10N + 12` once controller work is
//! added.

use alloc::vec::Vec;
use core::ops::Add;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OpKind {
    /// Projection with every orthogonal line enabled.
    FullAxisProjection,
    /// Projection masked to one candidate's extent.
    RegionProjection,
    /// Controller bookkeeping for one object in consolidation.
    ControllerObject,
    /// Fixed controller overhead per frame.
    ControllerFixed,
}

impl OpKind {
    pub fn is_imc(self) -> bool {
        matches!(self, OpKind::FullAxisProjection | OpKind::RegionProjection)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostTable {
    pub full_axis_projection: u64,
    pub region_projection: u64,
    pub controller_object: u64,
    pub controller_fixed: u64,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            full_axis_projection: 8,
            region_projection: 8,
            controller_object: 2,
            controller_fixed: 4,
        }
    }
}

impl CostTable {
    pub fn cost(&self, kind: OpKind) -> u64 {
        match kind {
            OpKind::FullAxisProjection => self.full_axis_projection,
            OpKind::RegionProjection => self.region_projection,
            OpKind::ControllerObject => self.controller_object,
            OpKind::ControllerFixed => self.controller_fixed,
        }
    }
}

/// Ordered record of primitive operations. Entries always carry a count of at
/// least one; pushing a zero count is a no-op.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CycleTrace {
    entries: Vec<(OpKind, u64)>,
}

impl CycleTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, kind: OpKind, count: u64) {
        if count > 0 {
            self.entries.push((kind, count));
        }
    }

    pub fn append(&mut self, other: &CycleTrace) {
        self.entries.extend_from_slice(&other.entries);
    }

    pub fn entries(&self) -> &[(OpKind, u64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total occurrences of `kind`.
    pub fn count(&self, kind: OpKind) -> u64 {
        self.entries
            .iter()
            .filter(|(k, _)| *k == kind)
            .map(|(_, n)| n)
            .sum()
    }

    /// Cycles spent in projection operations only.
    pub fn imc_cycles(&self, costs: &CostTable) -> u64 {
        self.entries
            .iter()
            .filter(|(k, _)| k.is_imc())
            .map(|&(k, n)| n * costs.cost(k))
            .sum()
    }
}

impl Add for CycleTrace {
    type Output = CycleTrace;

    fn add(mut self, rhs: CycleTrace) -> CycleTrace {
        self.entries.extend(rhs.entries);
        self
    }
}

/// Sum of `count * cost` over every entry.
pub fn trace_cycles(trace: &CycleTrace, costs: &CostTable) -> u64 {
    trace.entries.iter().map(|&(k, n)| n * costs.cost(k)).sum()
}

/// Best-case projection cycles for `n_objects` objects.
pub fn minimal_cycles_imc(n_objects: u64) -> u64 {
    8 * n_objects + 8
}

/// Best-case cycles including controller consolidation.
pub fn minimal_cycles_total(n_objects: u64) -> u64 {
    10 * n_objects + 12
}

/// Primitive operation totals for throughput reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    /// Four neighbor additions and one scale per cell per substep.
    pub diffusion_ops: u64,
    /// Cells sensed across all projections.
    pub projection_ops: u64,
}

impl OpCount {
    pub const OPS_PER_CELL_SUBSTEP: u64 = 5;

    pub fn diffusion(pulses: u64, substeps_per_pulse: u64, cells: u64) -> u64 {
        pulses * substeps_per_pulse * cells * Self::OPS_PER_CELL_SUBSTEP
    }

    pub fn total(&self) -> u64 {
        self.diffusion_ops + self.projection_ops
    }
}

impl Add for OpCount {
    type Output = OpCount;

    fn add(self, rhs: OpCount) -> OpCount {
        OpCount {
            diffusion_ops: self.diffusion_ops + rhs.diffusion_ops,
            projection_ops: self.projection_ops + rhs.projection_ops,
        }
    }
}
