//! Projection mode: a line is precharged low, the orthogonal enabled lines
//! are pulled to VDD, and every enabled cell storing 1 charges the floating
//! line. A sense amplifier compares the settled line against a 4-bit DAC
//! reference.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frame::BinaryFrame;

pub const DAC_MAX: u8 = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    /// 4-bit reference DAC code, `0..=15`.
    pub dac_code: u8,
    /// Saturation constant of the line voltage, in cells.
    pub lambda: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            dac_code: 7,
            lambda: 0.7,
        }
    }
}

impl ProjectionConfig {
    /// Reference voltage as a fraction of VDD.
    pub fn vref(&self) -> f64 {
        self.dac_code as f64 / DAC_MAX as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.dac_code > DAC_MAX {
            return Err(Error::InvalidConfig(alloc::format!(
                "dac code {} does not fit in 4 bits",
                self.dac_code
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(
                "line charge constant must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Whether a line with `n_ones` charging cells trips the sense amplifier.
    #[inline]
    pub fn detects(&self, n_ones: usize) -> bool {
        line_voltage(n_ones, self) > self.vref()
    }
}

/// Settled voltage of a projection line charged by `n_ones` cells:
/// `1 - exp(-n / lambda)`. Zero cells leave the line at ground.
pub fn line_voltage(n_ones: usize, cfg: &ProjectionConfig) -> f64 {
    1.0 - libm::exp(-(n_ones as f64) / cfg.lambda)
}

/// Which set of lines is sensed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    /// Horizontal lines: one detection bit per row, mask over columns.
    Rows,
    /// Vertical lines: one detection bit per column, mask over rows.
    Cols,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::Rows => Axis::Cols,
            Axis::Cols => Axis::Rows,
        }
    }

    /// Number of sensed lines for this axis on `frame`.
    pub fn lines(self, frame: &BinaryFrame) -> usize {
        match self {
            Axis::Rows => frame.height(),
            Axis::Cols => frame.width(),
        }
    }
}

/// Set of enabled lines on the axis orthogonal to the projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineMask {
    enabled: Vec<bool>,
}

impl LineMask {
    pub fn full(len: usize) -> Self {
        LineMask {
            enabled: vec![true; len],
        }
    }

    /// Lines `lo..=hi` enabled out of `len`.
    pub fn span(len: usize, lo: usize, hi: usize) -> Self {
        let enabled = (0..len).map(|i| i >= lo && i <= hi).collect();
        LineMask { enabled }
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Result<Self> {
        let mut enabled = vec![false; len];
        for &i in indices {
            *enabled.get_mut(i).ok_or_else(|| {
                Error::InvalidConfig(alloc::format!("mask index {i} out of range"))
            })? = true;
        }
        Ok(LineMask { enabled })
    }

    pub fn len(&self) -> usize {
        self.enabled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.enabled.is_empty()
    }

    pub fn count(&self) -> usize {
        self.enabled.iter().filter(|&&e| e).count()
    }

    pub fn is_enabled(&self, i: usize) -> bool {
        self.enabled[i]
    }
}

/// Senses every line on `axis`, counting only cells whose orthogonal index is
/// enabled in `mask`.
pub fn project(
    frame: &BinaryFrame,
    axis: Axis,
    mask: &LineMask,
    cfg: &ProjectionConfig,
) -> Result<Vec<bool>> {
    cfg.validate()?;
    if mask.len() != axis.other().lines(frame) {
        return Err(Error::InvalidConfig(
            "mask length does not match the orthogonal axis".into(),
        ));
    }
    if mask.count() == 0 {
        return Err(Error::InvalidConfig(
            "projection mask enables no lines".into(),
        ));
    }
    let bits = (0..axis.lines(frame))
        .map(|line| {
            let n = (0..mask.len())
                .filter(|&o| mask.is_enabled(o) && pixel(frame, axis, line, o))
                .count();
            cfg.detects(n)
        })
        .collect();
    Ok(bits)
}

/// Pixel at `line` on `axis` and index `ortho` on the other axis.
#[inline]
pub(crate) fn pixel(frame: &BinaryFrame, axis: Axis, line: usize, ortho: usize) -> bool {
    match axis {
        Axis::Rows => frame.get(line, ortho),
        Axis::Cols => frame.get(ortho, line),
    }
}

/// Maximal runs of set bits as inclusive `(start, end)` pairs, ascending.
pub fn runs_from_bits(bits: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, bits.len() - 1));
    }
    runs
}
