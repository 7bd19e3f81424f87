//! Netpbm encoding: P4 (packed bitmap) for binary frames and P5 (8-bit
//! graymap) for analog voltage snapshots.
//!
//! Set pixels are stored as 1 bits, most significant bit first, each row
//! padded to a whole byte. Headers are written as `P4\n<w> <h>\n`; the reader
//! also accepts arbitrary whitespace and `#` comments between header fields.

use std::path::Path;

use cram_core::{AnalogState, BinaryFrame};

use crate::error::{Result, SimError};
use crate::output::write_atomic;

pub const MAX_DIMENSION: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmError {
    pub offset: u64,
    pub message: String,
}

impl PnmError {
    fn at(offset: usize, message: impl Into<String>) -> Self {
        PnmError {
            offset: offset as u64,
            message: message.into(),
        }
    }

    fn with_path(self, path: &Path) -> SimError {
        SimError::Parse {
            path: path.to_path_buf(),
            offset: self.offset,
            message: self.message,
        }
    }
}

pub fn encode_pbm(frame: &BinaryFrame) -> Vec<u8> {
    let (w, h) = (frame.width(), frame.height());
    let stride = w.div_ceil(8);
    let mut out = format!("P4\n{w} {h}\n").into_bytes();
    out.reserve(stride * h);
    for row in 0..h {
        let mut packed = vec![0u8; stride];
        for col in 0..w {
            if frame.get(row, col) {
                packed[col / 8] |= 0x80 >> (col % 8);
            }
        }
        out.extend_from_slice(&packed);
    }
    out
}

/// Header cursor over the raw bytes.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Returns the value and the offset of its first digit.
    fn number(&mut self, what: &str) -> std::result::Result<(usize, usize), PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .ok_or_else(|| PnmError::at(start, format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(PnmError::at(start, format!("expected {what}")));
        }
        Ok((value, start))
    }

    /// Exactly one whitespace byte separates the header from the payload.
    fn end_of_header(&mut self) -> std::result::Result<(), PnmError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => Err(PnmError::at(self.pos, "expected whitespace after header")),
            None => Err(PnmError::at(self.pos, "header ends before payload")),
        }
    }
}

fn parse_header(
    bytes: &[u8],
    magic: &[u8; 2],
    with_maxval: bool,
) -> std::result::Result<(usize, usize, Option<usize>, usize), PnmError> {
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(PnmError::at(
            0,
            format!("expected magic {}", String::from_utf8_lossy(magic)),
        ));
    }
    let mut cur = Header { bytes, pos: 2 };
    let (width, width_at) = cur.number("width")?;
    let (height, height_at) = cur.number("height")?;
    for (dim, at) in [(width, width_at), (height, height_at)] {
        if dim == 0 || dim > MAX_DIMENSION {
            return Err(PnmError::at(
                at,
                format!("dimension {dim} outside 1..={MAX_DIMENSION}"),
            ));
        }
    }
    let maxval = if with_maxval {
        Some(cur.number("maxval")?.0)
    } else {
        None
    };
    cur.end_of_header()?;
    Ok((width, height, maxval, cur.pos))
}

pub fn decode_pbm(bytes: &[u8]) -> std::result::Result<BinaryFrame, PnmError> {
    let (w, h, _, start) = parse_header(bytes, b"P4", false)?;
    let stride = w.div_ceil(8);
    let need = stride * h;
    let payload = &bytes[start..];
    if payload.len() < need {
        return Err(PnmError::at(
            bytes.len(),
            format!("payload truncated: {} of {need} bytes", payload.len()),
        ));
    }
    let frame = BinaryFrame::from_fn(w, h, |row, col| {
        payload[row * stride + col / 8] & (0x80 >> (col % 8)) != 0
    });
    Ok(frame)
}

pub fn load_frame(path: &Path) -> Result<BinaryFrame> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    decode_pbm(&bytes).map_err(|e| e.with_path(path))
}

pub fn save_frame(frame: &BinaryFrame, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pbm(frame))
}

/// 8-bit levels `round(v * 255)` of the interior cells.
pub fn analog_levels(state: &AnalogState) -> Vec<u8> {
    let mut out = Vec::with_capacity(state.width() * state.height());
    for r in 0..state.height() {
        for c in 0..state.width() {
            let v = state.interior(r, c).clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

/// P5 graymap (maxval 255) of the interior voltages.
pub fn encode_pgm(state: &AnalogState) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", state.width(), state.height()).into_bytes();
    out.extend(analog_levels(state));
    out
}

/// Returns `(width, height, levels)` of an 8-bit P5 graymap.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<u8>), PnmError> {
    let (w, h, maxval, start) = parse_header(bytes, b"P5", true)?;
    if maxval != Some(255) {
        return Err(PnmError::at(start, "only maxval 255 is supported"));
    }
    let payload = &bytes[start..];
    if payload.len() < w * h {
        return Err(PnmError::at(bytes.len(), "payload truncated"));
    }
    Ok((w, h, payload[..w * h].to_vec()))
}

pub fn save_analog(state: &AnalogState, path: &Path) -> Result<()> {
    write_atomic(path, &encode_pgm(state))
}
