//! Line-delimited JSON streams.
//!
//! The first line is a header `{"format_version":1,"kind":"event-stream"}`,
//! followed by one record per event:
//!
//! ```text
//! {"case:concept:name":"v1","concept:name":"a","time:timestamp":"2024-01-01T00:00:00.000Z","concept:origin":"p","gt":1.0}
//! ```
//!
//! `concept:origin` and `gt` are optional; unknown keys are kept in
//! [`Event::attributes`]. Readers accept files without a header.

use std::io::{BufRead, Write};

use serde_json::{Map, Value};

use super::{Event, LabeledStream, StreamError, ACTIVITY_KEY, CASE_KEY, GT_KEY, TIMESTAMP_KEY};

pub const STREAM_FORMAT_VERSION: u64 = 1;

pub fn write_stream<W: Write>(stream: &LabeledStream, mut sink: W) -> Result<(), StreamError> {
    writeln!(
        sink,
        "{}",
        serde_json::json!({"format_version": STREAM_FORMAT_VERSION, "kind": "event-stream"})
    )?;
    for (event, gt) in stream.events.iter().zip(&stream.gt) {
        let mut record = match serde_json::to_value(event).map_err(std::io::Error::other)? {
            Value::Object(m) => m,
            _ => unreachable!("events serialize to objects"),
        };
        record.insert(GT_KEY.to_string(), Value::from(*gt));
        serde_json::to_writer(&mut sink, &record).map_err(std::io::Error::other)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Parses records; returns each event with its `gt` key split off.
fn read_records<R: BufRead>(source: R) -> Result<Vec<(Event, Option<f64>, usize)>, StreamError> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut record: Map<String, Value> =
            serde_json::from_str(&line).map_err(|e| StreamError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        if out.is_empty()
            && record.contains_key("format_version")
            && !record.contains_key(ACTIVITY_KEY)
        {
            match record["format_version"].as_u64() {
                Some(STREAM_FORMAT_VERSION) => continue,
                Some(v) => return Err(StreamError::Version(v)),
                None => {
                    return Err(StreamError::Schema {
                        line: line_no,
                        message: "format_version must be an integer".into(),
                    })
                }
            }
        }
        for key in [CASE_KEY, ACTIVITY_KEY, TIMESTAMP_KEY] {
            if !record.contains_key(key) {
                return Err(StreamError::MissingKey {
                    line: line_no,
                    key: key.to_string(),
                });
            }
        }
        let gt = match record.remove(GT_KEY) {
            None => None,
            Some(v) => match v.as_f64() {
                Some(g) if (0.0..=1.0).contains(&g) => Some(g),
                _ => {
                    return Err(StreamError::Schema {
                        line: line_no,
                        message: format!("gt must be a number in [0, 1], got {v}"),
                    })
                }
            },
        };
        let event: Event =
            serde_json::from_value(Value::Object(record)).map_err(|e| StreamError::Schema {
                line: line_no,
                message: e.to_string(),
            })?;
        if event.case_id.is_empty() || event.activity.is_empty() {
            return Err(StreamError::Schema {
                line: line_no,
                message: "case id and activity must be non-empty".into(),
            });
        }
        out.push((event, gt, line_no));
    }
    Ok(out)
}

/// Reads a stream in which every record carries `gt`.
pub fn read_stream<R: BufRead>(source: R) -> Result<LabeledStream, StreamError> {
    let records = read_records(source)?;
    let mut stream = LabeledStream::default();
    for (event, gt, line) in records {
        let gt = gt.ok_or(StreamError::MissingKey {
            line,
            key: GT_KEY.to_string(),
        })?;
        stream.events.push(event);
        stream.gt.push(gt);
    }
    Ok(stream)
}

/// Reads events only; any `gt` values are discarded.
pub fn read_events<R: BufRead>(source: R) -> Result<Vec<Event>, StreamError> {
    Ok(read_records(source)?
        .into_iter()
        .map(|(e, _, _)| e)
        .collect())
}
