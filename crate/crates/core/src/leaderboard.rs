//! Append-only local leaderboard.
//!
//! The store is a JSON-lines file: a header
//! `{"format_version":1,"kind":"leaderboard"}` followed by one
//! [`LeaderboardEntry`] per line. Writers hold an exclusive lock on the file
//! while appending; readers take a shared lock.

use std::cmp::Ordering;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithm::AlgorithmKind;
use crate::evaluation::{MetricsReport, RunStatus, RunSummary};

pub const STORE_FILE: &str = "leaderboard.jsonl";
pub const STORE_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum LeaderboardError {
    #[error("invalid entry: {0}")]
    Invalid(String),
    #[error("{path}: record {record} (line {line}) is corrupt: {message}")]
    Corrupt {
        path: String,
        record: usize,
        line: usize,
        message: String,
    },
    #[error("{path}: unsupported store format_version {found}")]
    Version { path: String, found: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryStatus {
    Completed,
    Failed,
}

/// Team metadata given at submission time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Submission {
    pub team_name: String,
    pub contact: String,
    pub algorithm_name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    /// Assigned by [`Leaderboard::record`]; any value given is overwritten.
    pub id: u64,
    #[serde(flatten)]
    pub submission: Submission,
    pub scenario_id: String,
    pub seed: Option<u64>,
    pub kind: AlgorithmKind,
    pub status: EntryStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub submitted_at: DateTime<Utc>,
}

impl LeaderboardEntry {
    /// Entry for a run summary as written by the evaluation reports.
    pub fn from_summary(
        submission: Submission,
        summary: &RunSummary,
        submitted_at: DateTime<Utc>,
    ) -> Self {
        let status = match summary.status {
            RunStatus::Completed => EntryStatus::Completed,
            RunStatus::Failed => EntryStatus::Failed,
        };
        Self {
            id: 0,
            submission,
            scenario_id: summary.meta.stream_id.clone(),
            seed: summary.meta.seed,
            kind: summary.meta.kind,
            status,
            metrics: summary.metrics.clone(),
            error: summary.error.clone(),
            submitted_at,
        }
    }

    pub fn validate(&self) -> Result<(), LeaderboardError> {
        let s = &self.submission;
        let mut empty = Vec::new();
        for (name, value) in [
            ("team_name", &s.team_name),
            ("contact", &s.contact),
            ("algorithm_name", &s.algorithm_name),
            ("scenario_id", &self.scenario_id),
        ] {
            if value.trim().is_empty() {
                empty.push(name);
            }
        }
        if !empty.is_empty() {
            return Err(LeaderboardError::Invalid(format!(
                "empty fields: {}",
                empty.join(", ")
            )));
        }
        match (self.status, &self.metrics, &self.error) {
            (EntryStatus::Completed, None, _) => Err(LeaderboardError::Invalid(
                "completed entry without metrics".into(),
            )),
            (EntryStatus::Failed, _, None) => Err(LeaderboardError::Invalid(
                "failed entry without error".into(),
            )),
            _ => Ok(()),
        }
    }

    fn avg_latency_nanos(&self) -> u128 {
        self.metrics
            .as_ref()
            .map_or(u128::MAX, |m| m.avg_latency.as_nanos())
    }
}

pub struct Leaderboard {
    path: PathBuf,
}

fn header_line() -> String {
    serde_json::json!({"format_version": STORE_FORMAT_VERSION, "kind": "leaderboard"}).to_string()
}

impl Leaderboard {
    /// The store inside `workspace`.
    pub fn open(workspace: &Path) -> Self {
        Self::at(workspace.join(STORE_FILE))
    }

    pub fn at(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn parse(&self, file: &File) -> Result<Vec<LeaderboardEntry>, LeaderboardError> {
        let path = self.path.display().to_string();
        let mut entries = Vec::new();
        let mut seen_header = false;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if !seen_header && entries.is_empty() {
                seen_header = true;
                if let Ok(v) = serde_json::from_str::<serde_json::Value>(&line) {
                    if v.get("kind").and_then(|k| k.as_str()) == Some("leaderboard") {
                        match v.get("format_version").and_then(|k| k.as_u64()) {
                            Some(STORE_FORMAT_VERSION) => continue,
                            found => {
                                return Err(LeaderboardError::Version {
                                    path,
                                    found: found.unwrap_or(0),
                                })
                            }
                        }
                    }
                }
            }
            let record = entries.len() + 1;
            let entry: LeaderboardEntry =
                serde_json::from_str(&line).map_err(|e| LeaderboardError::Corrupt {
                    path: path.clone(),
                    record,
                    line: i + 1,
                    message: e.to_string(),
                })?;
            entries.push(entry);
        }
        Ok(entries)
    }

    /// All entries in append order. A missing store is empty.
    pub fn load(&self) -> Result<Vec<LeaderboardEntry>, LeaderboardError> {
        let file = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        file.lock_shared()?;
        let entries = self.parse(&file);
        file.unlock()?;
        entries
    }

    pub fn get(&self, id: u64) -> Result<Option<LeaderboardEntry>, LeaderboardError> {
        Ok(self.load()?.into_iter().find(|e| e.id == id))
    }

    /// Appends `entry` and returns its id.
    pub fn record(&self, mut entry: LeaderboardEntry) -> Result<u64, LeaderboardError> {
        entry.validate()?;
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&self.path)?;
        file.lock()?;
        let result = (|| {
            let existing = self.parse(&file)?;
            entry.id = existing.iter().map(|e| e.id).max().unwrap_or(0) + 1;
            let mut out = String::new();
            if file.seek(SeekFrom::End(0))? == 0 {
                out.push_str(&header_line());
                out.push('\n');
            }
            out.push_str(&serde_json::to_string(&entry).expect("entries serialize"));
            out.push('\n');
            file.write_all(out.as_bytes())?;
            file.sync_data()?;
            Ok(entry.id)
        })();
        file.unlock()?;
        result
    }

    pub fn rank(&self, scenario_id: &str) -> Result<Ranking, LeaderboardError> {
        Ok(rank_entries(self.load()?, scenario_id))
    }
}

/// Completed entries in rank order, then failed ones in submission order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Ranking {
    pub scenario_id: String,
    pub ranked: Vec<LeaderboardEntry>,
    pub failed: Vec<LeaderboardEntry>,
}

impl Ranking {
    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty() && self.failed.is_empty()
    }
}

fn rank_order(a: &LeaderboardEntry, b: &LeaderboardEntry) -> Ordering {
    let score = |e: &LeaderboardEntry| e.metrics.as_ref().map_or(f64::NEG_INFINITY, |m| m.score);
    score(b)
        .total_cmp(&score(a))
        .then_with(|| a.avg_latency_nanos().cmp(&b.avg_latency_nanos()))
        .then_with(|| a.submitted_at.cmp(&b.submitted_at))
        .then_with(|| a.id.cmp(&b.id))
}

pub fn rank_entries(entries: Vec<LeaderboardEntry>, scenario_id: &str) -> Ranking {
    let (mut ranked, mut failed): (Vec<_>, Vec<_>) = entries
        .into_iter()
        .filter(|e| e.scenario_id == scenario_id)
        .partition(|e| e.status == EntryStatus::Completed && e.metrics.is_some());
    ranked.sort_by(rank_order);
    failed.sort_by(|a, b| a.submitted_at.cmp(&b.submitted_at).then(a.id.cmp(&b.id)));
    Ranking {
        scenario_id: scenario_id.to_string(),
        ranked,
        failed,
    }
}

const COLUMNS: [&str; 12] = [
    "rank",
    "id",
    "team",
    "algorithm",
    "kind",
    "score",
    "accuracy",
    "mae",
    "rmse",
    "latency",
    "robustness",
    "avg_latency_ms",
];

fn kind_name(kind: AlgorithmKind) -> &'static str {
    match kind {
        AlgorithmKind::InProcess => "in-process",
        AlgorithmKind::External => "external",
    }
}

fn rows(ranking: &Ranking) -> Vec<Vec<String>> {
    ranking
        .ranked
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let m = e.metrics.as_ref().expect("ranked entries have metrics");
            vec![
                (i + 1).to_string(),
                e.id.to_string(),
                e.submission.team_name.clone(),
                e.submission.algorithm_name.clone(),
                kind_name(e.kind).to_string(),
                format!("{:.4}", m.score),
                format!("{:.4}", m.accuracy),
                format!("{:.4}", m.mae),
                format!("{:.4}", m.rmse),
                format!("{:.4}", m.latency_score),
                format!("{:.4}", m.robustness),
                format!("{:.4}", m.avg_latency.as_secs_f64() * 1e3),
            ]
        })
        .collect()
}

/// Aligned plain-text table. Failed runs are listed below the ranking.
pub fn render_table(ranking: &Ranking) -> String {
    let body = rows(ranking);
    let mut widths: Vec<usize> = COLUMNS.iter().map(|c| c.len()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let fmt_row = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = String::new();
    out.push_str(&format!("scenario {}\n", ranking.scenario_id));
    if body.is_empty() {
        out.push_str("no ranked submissions\n");
    } else {
        out.push_str(&fmt_row(&COLUMNS.map(String::from)));
        out.push('\n');
        for row in &body {
            out.push_str(&fmt_row(row));
            out.push('\n');
        }
    }
    if !ranking.failed.is_empty() {
        out.push_str("\nfailed runs (unranked)\n");
        for e in &ranking.failed {
            out.push_str(&format!(
                "  #{} {} / {} at {}: {}\n",
                e.id,
                e.submission.team_name,
                e.submission.algorithm_name,
                e.submitted_at.to_rfc3339_opts(SecondsFormat::Secs, true),
                e.error.as_deref().unwrap_or("")
            ));
        }
    }
    out
}

/// CSV export of the ranked section with full-precision values.
pub fn write_csv<W: Write>(ranking: &Ranking, sink: W) -> Result<(), LeaderboardError> {
    let mut w = csv::Writer::from_writer(sink);
    let csv_err = |e: csv::Error| LeaderboardError::Io(std::io::Error::other(e));
    w.write_record([
        "rank",
        "id",
        "team",
        "contact",
        "algorithm",
        "kind",
        "score",
        "accuracy",
        "mae",
        "rmse",
        "latency_score",
        "robustness",
        "avg_latency_ns",
        "submitted_at",
    ])
    .map_err(csv_err)?;
    for (i, e) in ranking.ranked.iter().enumerate() {
        let m = e.metrics.as_ref().expect("ranked entries have metrics");
        w.write_record([
            (i + 1).to_string(),
            e.id.to_string(),
            e.submission.team_name.clone(),
            e.submission.contact.clone(),
            e.submission.algorithm_name.clone(),
            kind_name(e.kind).to_string(),
            m.score.to_string(),
            m.accuracy.to_string(),
            m.mae.to_string(),
            m.rmse.to_string(),
            m.latency_score.to_string(),
            m.robustness.to_string(),
            m.avg_latency.as_nanos().to_string(),
            e.submitted_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::time::Duration;

    use super::*;
    use crate::evaluation::{metrics_from_columns, ScoreWeights, DEFAULT_LATENCY_BUDGET};

    fn entry(team: &str, score_pred: f64, latency_ms: u64, minute: u32) -> LeaderboardEntry {
        let metrics = metrics_from_columns(
            &[1.0],
            &[score_pred],
            Duration::from_millis(latency_ms),
            &ScoreWeights::default(),
            DEFAULT_LATENCY_BUDGET,
        )
        .unwrap();
        LeaderboardEntry {
            id: 0,
            submission: Submission {
                team_name: team.into(),
                contact: format!("{team}@example.org"),
                algorithm_name: "algo".into(),
                description: "d".into(),
            },
            scenario_id: "sudden".into(),
            seed: Some(42),
            kind: AlgorithmKind::InProcess,
            status: EntryStatus::Completed,
            metrics: Some(metrics),
            error: None,
            submitted_at: "2024-05-01T10:00:00.123456789Z"
                .parse::<DateTime<Utc>>()
                .unwrap()
                + chrono::Duration::minutes(minute.into()),
        }
    }

    fn failed(team: &str) -> LeaderboardEntry {
        LeaderboardEntry {
            status: EntryStatus::Failed,
            metrics: None,
            error: Some("deadline".into()),
            ..entry(team, 0.0, 0, 0)
        }
    }

    #[test]
    fn record_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let lb = Leaderboard::open(dir.path());
        assert!(lb.load().unwrap().is_empty());
        let e = entry("a", 1.0 / 3.0, 1, 0);
        let id = lb.record(e.clone()).unwrap();
        let id2 = lb.record(e.clone()).unwrap();
        assert_eq!((id, id2), (1, 2));
        let got = lb.get(1).unwrap().unwrap();
        assert_eq!(got, LeaderboardEntry { id: 1, ..e });
        assert_eq!(lb.load().unwrap().len(), 2);
        let text = fs::read_to_string(lb.path()).unwrap();
        assert!(text.starts_with("{\"format_version\":1,\"kind\":\"leaderboard\"}\n"));
    }

    #[test]
    fn corrupt_record_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let lb = Leaderboard::open(dir.path());
        lb.record(entry("a", 1.0, 1, 0)).unwrap();
        lb.record(entry("b", 1.0, 1, 0)).unwrap();
        let mut text = fs::read_to_string(lb.path()).unwrap();
        text.push_str("{\"id\":3,\"team_name\":\n");
        fs::write(lb.path(), text).unwrap();
        match lb.load() {
            Err(LeaderboardError::Corrupt {
                record: 3, line: 4, ..
            }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_entries_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let lb = Leaderboard::open(dir.path());
        let mut e = entry("", 1.0, 1, 0);
        assert!(lb.record(e.clone()).is_err());
        e.submission.team_name = "t".into();
        e.metrics = None;
        assert!(lb.record(e).is_err());
    }

    #[test]
    fn ranking_order() {
        // prediction p on gt 1 gives score decreasing in 1 - p
        let a = entry("a", 0.9, 1, 0);
        let b = entry("b", 0.7, 1, 1);
        let c = entry("c", 0.8, 1, 2);
        let mut entries = vec![a, b, c, failed("x")];
        for (i, e) in entries.iter_mut().enumerate() {
            e.id = i as u64 + 1;
        }
        let r = rank_entries(entries, "sudden");
        let teams: Vec<&str> = r
            .ranked
            .iter()
            .map(|e| e.submission.team_name.as_str())
            .collect();
        assert_eq!(teams, ["a", "c", "b"]);
        assert_eq!(r.failed.len(), 1);

        let slow = LeaderboardEntry {
            id: 1,
            ..entry("slow", 1.0, 2, 0)
        };
        let fast = LeaderboardEntry {
            id: 2,
            ..entry("fast", 1.0, 1, 5)
        };
        let mut tie = vec![slow, fast];
        for e in &mut tie {
            // force equal scores so only latency decides
            e.metrics.as_mut().unwrap().score = 0.5;
        }
        let r = rank_entries(tie, "sudden");
        assert_eq!(r.ranked[0].submission.team_name, "fast");

        let r = rank_entries(vec![failed("y")], "sudden");
        assert!(r.ranked.is_empty());
        assert!(render_table(&r).contains("no ranked submissions"));
        assert!(rank_entries(vec![failed("y")], "gradual").is_empty());
    }

    #[test]
    fn table_and_csv() {
        let mut e = entry("team-with-long-name", 0.9, 1, 0);
        e.id = 7;
        let r = rank_entries(vec![e], "sudden");
        let t = render_table(&r);
        assert!(t.contains("team-with-long-name"));
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[1].find("id"), lines[2].find('7'));
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 2);
    }
}
