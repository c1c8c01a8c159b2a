//! Readers and writers for the pipeline's file formats.
//!
//! JSON Lines, one object per line, UTF-8, no BOM:
//!
//! * frames — `{"t": 0, "probs": [..17 reals..]}`
//! * labels — `{"t": 0, "label": 4}`
//! * events — `{"class_id": 4, "t_start": 0, "t_end": 9}`
//! * timing — `{"t": 0, "cap_ms": 6.0, "pre_ms": 4.0, "inf_ms": 38.0,
//!   "post_ms": 5.0, "io_ms": 4.0}`
//!
//! Events are also available as CSV with a `class_id,t_start,t_end` header.
//! Parse failures carry the 1-based line number.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profile::StageTiming;
use crate::types::{AlertEvent, LabeledFrame, ProbabilityFrame};

fn read_jsonl<T, R, F>(reader: R, mut check: F) -> Result<Vec<T>>
where
    T: DeserializeOwned,
    R: BufRead,
    F: FnMut(&T) -> Result<()>,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        check(&record).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

fn write_jsonl<T: Serialize, W: Write>(mut writer: W, records: &[T]) -> Result<()> {
    for record in records {
        serde_json::to_writer(&mut writer, record).map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_frames_jsonl<R: BufRead>(reader: R) -> Result<Vec<ProbabilityFrame>> {
    read_jsonl(reader, ProbabilityFrame::validate)
}

pub fn write_frames_jsonl<W: Write>(writer: W, frames: &[ProbabilityFrame]) -> Result<()> {
    write_jsonl(writer, frames)
}

pub fn read_labels_jsonl<R: BufRead>(reader: R) -> Result<Vec<LabeledFrame>> {
    read_jsonl(reader, LabeledFrame::validate)
}

pub fn write_labels_jsonl<W: Write>(writer: W, labels: &[LabeledFrame]) -> Result<()> {
    write_jsonl(writer, labels)
}

pub fn read_events_jsonl<R: BufRead>(reader: R) -> Result<Vec<AlertEvent>> {
    read_jsonl(reader, AlertEvent::validate)
}

pub fn write_events_jsonl<W: Write>(writer: W, events: &[AlertEvent]) -> Result<()> {
    write_jsonl(writer, events)
}

pub fn read_timing_jsonl<R: BufRead>(reader: R) -> Result<Vec<StageTiming>> {
    read_jsonl(reader, StageTiming::validate)
}

pub fn write_timing_jsonl<W: Write>(writer: W, records: &[StageTiming]) -> Result<()> {
    write_jsonl(writer, records)
}

/// Quote a CSV field per RFC 4180 (only when it contains a comma, quote,
/// or newline).
pub fn csv_field(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

pub const EVENTS_CSV_HEADER: &str = "class_id,t_start,t_end";

pub fn write_events_csv<W: Write>(mut writer: W, events: &[AlertEvent]) -> Result<()> {
    writeln!(writer, "{EVENTS_CSV_HEADER}")?;
    for ev in events {
        writeln!(writer, "{},{},{}", ev.class_id, ev.t_start, ev.t_end)?;
    }
    Ok(())
}

pub fn read_events_csv<R: BufRead>(reader: R) -> Result<Vec<AlertEvent>> {
    let mut events = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (idx == 0 && trimmed == EVENTS_CSV_HEADER) {
            continue;
        }
        let parse = |s: Option<&str>, name: &str| -> Result<u64> {
            s.ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: format!("missing {name}"),
            })?
            .trim()
            .parse()
            .map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("bad {name}: {e}"),
            })
        };
        let mut fields = trimmed.split(',');
        let class_id = parse(fields.next(), "class_id")? as u8;
        let t_start = parse(fields.next(), "t_start")?;
        let t_end = parse(fields.next(), "t_end")?;
        let event = AlertEvent::new(class_id, t_start, t_end);
        event.validate().map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}
