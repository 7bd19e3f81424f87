//! Address-event files.
//!
//! Two encodings are supported:
//!
//! * CSV with the header `t,x,y,p`, one event per line.
//! * Packed little-endian binary records of 9 bytes: `u32 t`, `u16 x`,
//!   `u16 y`, `u8 p`, no header and no padding.
//!
//! Timestamps must be non-decreasing and polarity must be 0 or 1.

use std::path::Path;

use cram_core::Event;
use serde::Deserialize;

use crate::error::{Result, SimError};
use crate::output::write_atomic;

pub const RECORD_LEN: usize = 9;

#[derive(Debug, Deserialize)]
struct CsvEvent {
    t: u32,
    x: u16,
    y: u16,
    p: u8,
}

fn parse_err(path: &Path, offset: u64, message: impl Into<String>) -> SimError {
    SimError::Parse {
        path: path.to_path_buf(),
        offset,
        message: message.into(),
    }
}

fn check_event(path: &Path, offset: u64, ev: &Event, prev_t: Option<u32>) -> Result<()> {
    if ev.p > 1 {
        return Err(parse_err(
            path,
            offset,
            format!("polarity {} is not a bit", ev.p),
        ));
    }
    if prev_t.is_some_and(|t| ev.t < t) {
        return Err(parse_err(path, offset, "timestamps must be non-decreasing"));
    }
    Ok(())
}

pub fn decode_csv(path: &Path, bytes: &[u8]) -> Result<Vec<Event>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| parse_err(path, 0, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "x", "y", "p"] {
        return Err(parse_err(path, 0, "expected header t,x,y,p"));
    }
    let mut events = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut prev_t = None;
    loop {
        let offset = reader.position().byte();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(parse_err(path, offset, e.to_string())),
        }
        let row: CsvEvent = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(path, offset, e.to_string()))?;
        let ev = Event {
            t: row.t,
            x: row.x,
            y: row.y,
            p: row.p,
        };
        check_event(path, offset, &ev, prev_t)?;
        prev_t = Some(ev.t);
        events.push(ev);
    }
    Ok(events)
}

pub fn encode_csv(events: &[Event]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "x", "y", "p"]).expect("in-memory csv");
    for ev in events {
        w.write_record([
            ev.t.to_string(),
            ev.x.to_string(),
            ev.y.to_string(),
            ev.p.to_string(),
        ])
        .expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn decode_binary(path: &Path, bytes: &[u8]) -> Result<Vec<Event>> {
    let full = bytes.len() / RECORD_LEN * RECORD_LEN;
    if full != bytes.len() {
        return Err(parse_err(path, full as u64, "truncated event record"));
    }
    let mut events = Vec::with_capacity(bytes.len() / RECORD_LEN);
    let mut prev_t = None;
    for (i, rec) in bytes.chunks_exact(RECORD_LEN).enumerate() {
        let ev = Event {
            t: u32::from_le_bytes([rec[0], rec[1], rec[2], rec[3]]),
            x: u16::from_le_bytes([rec[4], rec[5]]),
            y: u16::from_le_bytes([rec[6], rec[7]]),
            p: rec[8],
        };
        check_event(path, (i * RECORD_LEN) as u64, &ev, prev_t)?;
        prev_t = Some(ev.t);
        events.push(ev);
    }
    Ok(events)
}

pub fn encode_binary(events: &[Event]) -> Vec<u8> {
    let mut out = Vec::with_capacity(events.len() * RECORD_LEN);
    for ev in events {
        out.extend_from_slice(&ev.t.to_le_bytes());
        out.extend_from_slice(&ev.x.to_le_bytes());
        out.extend_from_slice(&ev.y.to_le_bytes());
        out.push(ev.p);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Csv,
    Binary,
}

impl EventFormat {
    /// `.csv` files are CSV events, `.aer` files are binary records.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "csv" => Some(EventFormat::Csv),
            "aer" => Some(EventFormat::Binary),
            _ => None,
        }
    }
}

pub fn load_events(path: &Path, format: EventFormat) -> Result<Vec<Event>> {
    let bytes = std::fs::read(path).map_err(|e| SimError::io(path, e))?;
    match format {
        EventFormat::Csv => decode_csv(path, &bytes),
        EventFormat::Binary => decode_binary(path, &bytes),
    }
}

pub fn save_events(events: &[Event], path: &Path, format: EventFormat) -> Result<()> {
    let bytes = match format {
        EventFormat::Csv => encode_csv(events),
        EventFormat::Binary => encode_binary(events),
    };
    write_atomic(path, &bytes)
}
