//! Behavioral model of a collocated SRAM/DRAM in-memory computing macro for
//! event-based binary vision.
//!
//! The crate covers the three things the macro does to a stored frame:
//!
//! * [`diffusion`]: the bit-cell array as a 2-D RC network. Charge spreads
//!   between neighbors while diffusion is enabled and an inverter re-digitizes
//!   the result, which removes isolated noise and fills small holes.
//! * [`projection`] and [`region`]: row/column projection lines sensed
//!   against a DAC reference, the iterative selective search that turns
//!   projections into bounding boxes, and the controller-side consolidation
//!   (size filter plus gap merging).
//! * [`timing`]: cycle and operation accounting for a region-proposal run.
//!
//! [`ccl`] and [`metrics`] provide the ground-truth labeling and the
//! detection scoring used to judge the pipeline. Everything here is pure and
//! allocation-only; file formats and the command line live in `cram-sim`.
#![no_std]

extern crate alloc;

pub mod ccl;
pub mod diffusion;
pub mod error;
pub mod frame;
pub mod metrics;
pub mod pipeline;
pub mod projection;
pub mod region;
pub mod timing;

pub use ccl::{ccl, component_boxes, Component, Connectivity};
pub use diffusion::{
    apply_pulses, blank_frame_detect, diffuse_substep, probe_diffusion_speed, restore_image,
    threshold_restore, BlobLocation, DiffusionConfig, ProbeResult,
};
pub use error::Error;
pub use frame::{embed, frame_from_events, AnalogState, BinaryFrame, Event, PolarityMode};
pub use metrics::{iou, match_boxes, EvalReport, MatchOutcome, ScoreAccumulator, Tally};
pub use pipeline::{evaluate, run_pipeline, PipelineConfig, PipelineRun};
pub use projection::{line_voltage, project, runs_from_bits, Axis, LineMask, ProjectionConfig};
pub use region::{iss, region_propose, rp_update, BoundingBox, IssOutcome, RpConfig, SizeMetric};
pub use timing::{
    minimal_cycles_imc, minimal_cycles_total, trace_cycles, CostTable, CycleTrace, OpCount, OpKind,
};
