//! Labeled event streams.
//!
//! Streams are composed from model play-outs. Each event carries the
//! ground-truth conformance of the segment its case was drawn from.

mod compose;
mod io;
mod scenario;

use std::collections::BTreeMap;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::model::ModelError;

pub use compose::{generate_train_stream, generate_validation_stream, DEFAULT_TRAIN_CASES};
pub use io::{read_events, read_stream, write_stream, STREAM_FORMAT_VERSION};
pub use scenario::{
    build_scenario, DriftScenario, DriftType, Interleaving, ScenarioParams, StreamSegment,
    SCENARIO_FORMAT_VERSION,
};

pub const CASE_KEY: &str = "case:concept:name";
pub const ACTIVITY_KEY: &str = "concept:name";
pub const TIMESTAMP_KEY: &str = "time:timestamp";
pub const ORIGIN_KEY: &str = "concept:origin";
pub const GT_KEY: &str = "gt";

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: missing mandatory key {key:?}")]
    MissingKey { line: usize, key: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("unsupported stream format_version {0}")]
    Version(u64),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// First timestamp of every generated stream.
pub fn stream_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0)
        .single()
        .expect("valid epoch")
}

mod timestamp_millis {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// One stream element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "case:concept:name")]
    pub case_id: String,
    #[serde(rename = "concept:name")]
    pub activity: String,
    #[serde(rename = "time:timestamp", with = "timestamp_millis")]
    pub timestamp: DateTime<Utc>,
    #[serde(
        rename = "concept:origin",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub origin: Option<String>,
    /// Any further keys of the record, preserved as-is.
    #[serde(flatten)]
    pub attributes: BTreeMap<String, Value>,
}

impl Event {
    pub fn new(
        case_id: impl Into<String>,
        activity: impl Into<String>,
        timestamp: DateTime<Utc>,
    ) -> Self {
        Self {
            case_id: case_id.into(),
            activity: activity.into(),
            timestamp,
            origin: None,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_origin(mut self, origin: impl Into<String>) -> Self {
        self.origin = Some(origin.into());
        self
    }

    /// Ground truth attached for unscored runs, if any.
    pub fn gt(&self) -> Option<f64> {
        self.attributes.get(GT_KEY).and_then(Value::as_f64)
    }
}

/// Events plus one ground-truth value per event.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledStream {
    pub events: Vec<Event>,
    pub gt: Vec<f64>,
}

impl LabeledStream {
    pub fn new(events: Vec<Event>, gt: Vec<f64>) -> Result<Self, StreamError> {
        if events.len() != gt.len() {
            return Err(StreamError::Scenario(format!(
                "{} events but {} ground-truth values",
                events.len(),
                gt.len()
            )));
        }
        if let Some(g) = gt.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(StreamError::Scenario(format!(
                "ground truth {g} outside [0, 1]"
            )));
        }
        Ok(Self { events, gt })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `(case id, ground truth)` per case, in order of first appearance.
    pub fn per_case_gt(&self) -> Vec<(String, f64)> {
        let mut seen = std::collections::HashSet::new();
        self.events
            .iter()
            .zip(&self.gt)
            .filter(|(e, _)| seen.insert(e.case_id.clone()))
            .map(|(e, g)| (e.case_id.clone(), *g))
            .collect()
    }

    /// Events as handed to an algorithm. Scored delivery strips the origin
    /// and any ground truth; unscored delivery attaches ground truth as a
    /// `gt` attribute.
    pub fn delivery_events(&self, scored: bool) -> Vec<Event> {
        self.events
            .iter()
            .zip(&self.gt)
            .map(|(e, g)| {
                let mut e = e.clone();
                if scored {
                    e.origin = None;
                    e.attributes.remove(GT_KEY);
                } else {
                    e.attributes.insert(GT_KEY.to_string(), Value::from(*g));
                }
                e
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(case: &str, a: &str) -> Event {
        Event::new(case, a, stream_epoch()).with_origin("p")
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(LabeledStream::new(vec![ev("1", "a")], vec![]).is_err());
        assert!(LabeledStream::new(vec![ev("1", "a")], vec![1.5]).is_err());
    }

    #[test]
    fn scored_delivery_strips_labels() {
        let s = LabeledStream::new(vec![ev("1", "a"), ev("1", "b")], vec![1.0, 0.5]).unwrap();
        let scored = s.delivery_events(true);
        assert!(scored
            .iter()
            .all(|e| e.origin.is_none() && e.gt().is_none()));
        let open = s.delivery_events(false);
        assert_eq!(open[1].gt(), Some(0.5));
        assert_eq!(open[1].origin.as_deref(), Some("p"));
    }

    #[test]
    fn per_case_view() {
        let s = LabeledStream::new(
            vec![ev("1", "a"), ev("2", "a"), ev("1", "b")],
            vec![1.0, 0.0, 1.0],
        )
        .unwrap();
        assert_eq!(s.per_case_gt(), vec![("1".into(), 1.0), ("2".into(), 0.0)]);
    }
}
