//! Box lists as JSON: `[{"x0":c0,"y0":r0,"x1":c1,"y1":r1}, ...]`, with `x`
//! the column, sorted by `(y0, x0)`.

use std::path::Path;

use cram_core::BoundingBox;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::output::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl From<BoundingBox> for JsonBox {
    fn from(b: BoundingBox) -> Self {
        JsonBox {
            x0: b.c0,
            y0: b.r0,
            x1: b.c1,
            y1: b.r1,
        }
    }
}

impl JsonBox {
    pub fn to_box(self) -> Option<BoundingBox> {
        (self.x0 <= self.x1 && self.y0 <= self.y1)
            .then(|| BoundingBox::new(self.y0, self.y1, self.x0, self.x1))
    }
}

pub fn encode_boxes(boxes: &[BoundingBox]) -> Vec<u8> {
    let mut sorted: Vec<JsonBox> = boxes.iter().copied().map(JsonBox::from).collect();
    sorted.sort_by_key(|b| (b.y0, b.x0, b.y1, b.x1));
    let mut out = serde_json::to_vec(&sorted).expect("boxes serialize");
    out.push(b'\n');
    out
}

pub fn decode_boxes(path: &Path, bytes: &[u8]) -> Result<Vec<BoundingBox>> {
    let raw: Vec<JsonBox> = serde_json::from_slice(bytes).map_err(|e| SimError::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    raw.into_iter()
        .map(|b| {
            b.to_box().ok_or_else(|| SimError::Parse {
                path: path.to_path_buf(),
                offset: 0,
                message: format!("inverted box {b:?}"),
            })
        })
        .collect()
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> u64 {
    let line_start: usize = bytes
        .split(|&b| b == b'\n')
        .take(line.saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum();
    (line_start + column.saturating_sub(1)) as u64
}

pub fn load_boxes(path: &Path) -> Result<Vec<BoundingBox>> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    decode_boxes(path, &bytes)
}

pub fn save_boxes(boxes: &[BoundingBox], path: &Path) -> Result<()> {
    write_atomic(path, &encode_boxes(boxes))
}
