//! Frame and analog-state containers plus AER event accumulation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 320;
pub const DEFAULT_HEIGHT: usize = 240;
pub const DEFAULT_RING: usize = 1;

/// One address event: timestamp in microseconds, pixel column `x`, row `y`,
/// and polarity bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u32,
    pub x: u16,
    pub y: u16,
    pub p: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PolarityMode {
    /// Both polarities mark the pixel.
    #[default]
    Any,
    PositiveOnly,
}

/// Event-based binary image, row-major, one `0`/`1` byte per pixel.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryFrame {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryFrame {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryFrame {
            width,
            height,
            bits: vec![0; width * height],
        }
    }

    /// Wraps an existing bit buffer. Any nonzero byte is rejected so the
    /// `{0,1}` invariant never has to be re-checked downstream.
    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::ShapeMismatch);
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidConfig("frame bits must be 0 or 1".into()));
        }
        Ok(BinaryFrame {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut frame = BinaryFrame::new(width, height);
        for row in 0..height {
            for col in 0..width {
                frame.bits[row * width + col] = f(row, col) as u8;
            }
        }
        frame
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col] != 0
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value as u8;
    }

    /// Sets every pixel inside the inclusive rectangle.
    pub fn fill_rect(&mut self, r0: usize, r1: usize, c0: usize, c1: usize, value: bool) {
        for row in r0..=r1 {
            for col in c0..=c1 {
                self.set(row, col, value);
            }
        }
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    /// Pixelwise OR; both frames must share a geometry.
    pub fn union(&self, other: &BinaryFrame) -> Result<BinaryFrame> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch);
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a | b)
            .collect();
        Ok(BinaryFrame {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn transpose(&self) -> BinaryFrame {
        BinaryFrame::from_fn(self.height, self.width, |r, c| self.get(c, r))
    }

    /// Count of pixels on which the two frames agree.
    pub fn agreement(&self, other: &BinaryFrame) -> Result<usize> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch);
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a == b)
            .count())
    }
}

/// Voltages of the cell array plus its dummy ring, normalized so VDD is 1.0.
///
/// Storage is row-major over the extended grid of
/// `(width + 2 * ring) x (height + 2 * ring)` cells; interior pixel `(r, c)`
/// lives at extended position `(r + ring, c + ring)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogState {
    width: usize,
    height: usize,
    ring: usize,
    volts: Vec<f64>,
}

impl AnalogState {
    pub fn zeros(width: usize, height: usize, ring: usize) -> Self {
        let len = (width + 2 * ring) * (height + 2 * ring);
        AnalogState {
            width,
            height,
            ring,
            volts: vec![0.0; len],
        }
    }

    /// Wraps raw extended-grid voltages. Values must lie in `[0, 1]`.
    pub fn from_volts(width: usize, height: usize, ring: usize, volts: Vec<f64>) -> Result<Self> {
        if volts.len() != (width + 2 * ring) * (height + 2 * ring) {
            return Err(Error::ShapeMismatch);
        }
        if volts.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidConfig("voltages must lie in [0, 1]".into()));
        }
        Ok(AnalogState {
            width,
            height,
            ring,
            volts,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn ring(&self) -> usize {
        self.ring
    }

    #[inline]
    pub fn ext_width(&self) -> usize {
        self.width + 2 * self.ring
    }

    #[inline]
    pub fn ext_height(&self) -> usize {
        self.height + 2 * self.ring
    }

    #[inline]
    pub fn volts(&self) -> &[f64] {
        &self.volts
    }

    pub(crate) fn volts_mut(&mut self) -> &mut [f64] {
        &mut self.volts
    }

    /// Voltage of an extended-grid cell (ring included).
    #[inline]
    pub fn ext(&self, row: usize, col: usize) -> f64 {
        self.volts[row * self.ext_width() + col]
    }

    /// Voltage of interior pixel `(row, col)`.
    #[inline]
    pub fn interior(&self, row: usize, col: usize) -> f64 {
        self.ext(row + self.ring, col + self.ring)
    }

    pub fn total_charge(&self) -> f64 {
        self.volts.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.volts.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.volts.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn is_ring_cell(&self, row: usize, col: usize) -> bool {
        row < self.ring
            || col < self.ring
            || row >= self.ring + self.height
            || col >= self.ring + self.width
    }

    pub(crate) fn clear_ring(&mut self) {
        let w = self.ext_width();
        for row in 0..self.ext_height() {
            for col in 0..w {
                if self.is_ring_cell(row, col) {
                    self.volts[row * w + col] = 0.0;
                }
            }
        }
    }
}

/// Accumulates events whose timestamp falls in `[t_start, t_end)` into a
/// binary frame. Accumulation is set-like: order and multiplicity of events
/// do not matter.
pub fn frame_from_events(
    events: &[Event],
    t_start: u32,
    t_end: u32,
    width: usize,
    height: usize,
    polarity: PolarityMode,
) -> Result<BinaryFrame> {
    let mut frame = BinaryFrame::new(width, height);
    for (index, ev) in events.iter().enumerate() {
        if ev.x as usize >= width || ev.y as usize >= height {
            return Err(Error::EventOutOfBounds {
                index,
                x: ev.x,
                y: ev.y,
            });
        }
        if ev.t < t_start || ev.t >= t_end {
            continue;
        }
        if polarity == PolarityMode::PositiveOnly && ev.p == 0 {
            continue;
        }
        frame.set(ev.y as usize, ev.x as usize, true);
    }
    Ok(frame)
}

/// Loads a frame into the analog array: stored 1s become VDD, 0s and every
/// dummy ring cell start at ground.
pub fn embed(frame: &BinaryFrame, ring: usize) -> AnalogState {
    let mut state = AnalogState::zeros(frame.width(), frame.height(), ring);
    let w = state.ext_width();
    for row in 0..frame.height() {
        for col in 0..frame.width() {
            if frame.get(row, col) {
                state.volts[(row + ring) * w + col + ring] = 1.0;
            }
        }
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: u32, x: u16, y: u16, p: u8) -> Event {
        Event { t, x, y, p }
    }

    #[test]
    fn empty_events_give_blank_frame() {
        let f = frame_from_events(&[], 0, 10, 8, 8, PolarityMode::Any).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn single_event_sets_one_pixel() {
        let f = frame_from_events(&[ev(5, 3, 7, 1)], 0, 10, 10, 10, PolarityMode::Any).unwrap();
        assert_eq!(f.popcount(), 1);
        assert!(f.get(7, 3));
    }

    #[test]
    fn repeated_events_are_idempotent() {
        let evs = [ev(1, 2, 2, 1), ev(2, 2, 2, 0)];
        let f = frame_from_events(&evs, 0, 10, 4, 4, PolarityMode::Any).unwrap();
        assert_eq!(f.popcount(), 1);
    }

    #[test]
    fn window_is_half_open_and_polarity_filters() {
        let evs = [ev(0, 0, 0, 1), ev(10, 1, 0, 1), ev(5, 2, 0, 0)];
        let any = frame_from_events(&evs, 0, 10, 4, 1, PolarityMode::Any).unwrap();
        assert_eq!(any.bits(), &[1, 0, 1, 0]);
        let pos = frame_from_events(&evs, 0, 10, 4, 1, PolarityMode::PositiveOnly).unwrap();
        assert_eq!(pos.bits(), &[1, 0, 0, 0]);
    }

    #[test]
    fn out_of_bounds_event_reports_index() {
        let evs = [ev(0, 0, 0, 1), ev(1, 4, 0, 1)];
        let err = frame_from_events(&evs, 0, 10, 4, 4, PolarityMode::Any).unwrap_err();
        assert_eq!(
            err,
            Error::EventOutOfBounds {
                index: 1,
                x: 4,
                y: 0
            }
        );
    }

    #[test]
    fn embed_zero_frame() {
        let s = embed(&BinaryFrame::new(5, 3), 1);
        assert_eq!((s.ext_width(), s.ext_height()), (7, 5));
        assert!(s.volts().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn embed_ones_leaves_ring_grounded() {
        let f = BinaryFrame::from_bits(2, 2, vec![1; 4]).unwrap();
        let s = embed(&f, 1);
        assert_eq!(s.volts().len(), 16);
        for r in 0..4 {
            for c in 0..4 {
                let expected = if (1..3).contains(&r) && (1..3).contains(&c) {
                    1.0
                } else {
                    0.0
                };
                assert_eq!(s.ext(r, c), expected);
            }
        }
    }

    #[test]
    fn embed_without_ring_matches_frame_extent() {
        let f = BinaryFrame::from_fn(4, 3, |r, c| (r + c) % 2 == 0);
        let s = embed(&f, 0);
        assert_eq!((s.ext_width(), s.ext_height()), (4, 3));
        for r in 0..3 {
            for c in 0..4 {
                assert_eq!(s.interior(r, c) > 0.5, f.get(r, c));
            }
        }
    }

    #[test]
    fn from_bits_rejects_non_binary() {
        assert!(BinaryFrame::from_bits(2, 1, vec![0, 2]).is_err());
        assert_eq!(
            BinaryFrame::from_bits(2, 2, vec![0; 3]),
            Err(Error::ShapeMismatch)
        );
    }
}
