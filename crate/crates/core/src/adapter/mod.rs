//! Runs an algorithm in a separate process behind the [`Algorithm`]
//! contract.
//!
//! The harness and the child exchange one JSON object per line over the
//! child's stdin/stdout. The child speaks first with
//! `{"type":"hello","protocol_version":"1"}`; afterwards every `learn` or
//! `conformance` request gets exactly one `result` (or `error`) reply. See
//! `docs/protocol.md` for the full description.

mod protocol;

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;
use thiserror::Error;

use crate::algorithm::{Algorithm, AlgorithmError, AlgorithmKind};
use crate::stream::Event;

pub use protocol::{serve, MessageType, ProtocolMessage, ServeOptions, PROTOCOL_VERSION};

pub const DEFAULT_EVENT_DEADLINE: Duration = Duration::from_millis(1000);
pub const DEFAULT_STARTUP_TIMEOUT: Duration = Duration::from_secs(10);
const STDERR_CAP: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum SpawnError {
    #[error("empty command line")]
    EmptyCommand,
    #[error("failed to launch {program:?}: {source}")]
    Launch {
        program: String,
        source: std::io::Error,
    },
    #[error("handshake timeout: {0}")]
    HandshakeTimeout(String),
    #[error("protocol version mismatch: expected {expected:?}, child sent {found:?}")]
    VersionMismatch { expected: String, found: String },
    #[error("bad handshake: {0}")]
    Handshake(String),
}

impl From<SpawnError> for AlgorithmError {
    fn from(e: SpawnError) -> Self {
        AlgorithmError::Transport(e.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct AdapterConfig {
    pub startup_timeout: Duration,
    pub event_deadline: Duration,
}

impl Default for AdapterConfig {
    fn default() -> Self {
        Self {
            startup_timeout: DEFAULT_STARTUP_TIMEOUT,
            event_deadline: DEFAULT_EVENT_DEADLINE,
        }
    }
}

/// A live child process speaking the protocol.
pub struct ExternalAlgorithm {
    name: String,
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<String>,
    stderr: Arc<Mutex<String>>,
    deadline: Duration,
    broken: Option<String>,
}

fn capture_stderr<R: Read + Send + 'static>(source: R) -> Arc<Mutex<String>> {
    let buf = Arc::new(Mutex::new(String::new()));
    let sink = Arc::clone(&buf);
    thread::spawn(move || {
        for line in BufReader::new(source).lines() {
            let Ok(line) = line else { break };
            let mut s = sink.lock().unwrap_or_else(|p| p.into_inner());
            if s.len() + line.len() < STDERR_CAP {
                s.push_str(&line);
                s.push('\n');
            }
        }
    });
    buf
}

fn forward_stdout<R: Read + Send + 'static>(source: R) -> Receiver<String> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in BufReader::new(source).lines() {
            let Ok(line) = line else { break };
            if line.trim().is_empty() {
                continue;
            }
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    rx
}

/// Launches `command` (program followed by its arguments) and waits for its
/// hello.
pub fn spawn(command: &[String], config: &AdapterConfig) -> Result<ExternalAlgorithm, SpawnError> {
    let (program, args) = command.split_first().ok_or(SpawnError::EmptyCommand)?;
    let mut child = Command::new(program)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|source| SpawnError::Launch {
            program: program.clone(),
            source,
        })?;
    let replies = forward_stdout(child.stdout.take().expect("piped stdout"));
    let stderr = capture_stderr(child.stderr.take().expect("piped stderr"));
    let stdin = child.stdin.take();
    let mut handle = ExternalAlgorithm {
        name: command.join(" "),
        child,
        stdin,
        replies,
        stderr,
        deadline: config.event_deadline,
        broken: None,
    };
    let hello = match handle.replies.recv_timeout(config.startup_timeout) {
        Ok(line) => line,
        Err(RecvTimeoutError::Timeout) => {
            handle.kill();
            return Err(SpawnError::HandshakeTimeout(format!(
                "no hello within {} ms",
                config.startup_timeout.as_millis()
            )));
        }
        Err(RecvTimeoutError::Disconnected) => {
            handle.kill();
            return Err(SpawnError::HandshakeTimeout(
                "child closed its output before hello".into(),
            ));
        }
    };
    let msg: Value = serde_json::from_str(&hello)
        .map_err(|e| SpawnError::Handshake(format!("unparsable hello {hello:?}: {e}")))?;
    if msg.get("type").and_then(Value::as_str) != Some("hello") {
        handle.kill();
        return Err(SpawnError::Handshake(format!(
            "expected hello, got {hello}"
        )));
    }
    let found = match msg.get("protocol_version") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => String::new(),
    };
    if found != PROTOCOL_VERSION {
        handle.kill();
        return Err(SpawnError::VersionMismatch {
            expected: PROTOCOL_VERSION.into(),
            found,
        });
    }
    Ok(handle)
}

impl ExternalAlgorithm {
    pub fn set_event_deadline(&mut self, deadline: Duration) {
        self.deadline = deadline;
    }

    fn kill(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn fail(&mut self, reason: String) -> AlgorithmError {
        self.kill();
        self.broken = Some(reason.clone());
        AlgorithmError::Transport(reason)
    }

    /// Sends one request and returns the parsed reply object.
    fn request(
        &mut self,
        msg: ProtocolMessage,
    ) -> Result<serde_json::Map<String, Value>, AlgorithmError> {
        if let Some(reason) = &self.broken {
            return Err(AlgorithmError::Transport(format!(
                "adapter unusable after earlier failure: {reason}"
            )));
        }
        let line = msg.to_line();
        let written = match self.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{line}").and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        if let Err(e) = written {
            return Err(self.fail(format!("write to child failed: {e}")));
        }
        let reply = match self.replies.recv_timeout(self.deadline) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                return Err(self.fail(format!(
                    "no reply within the {} ms deadline",
                    self.deadline.as_millis()
                )))
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(self.fail("child closed its output (broken pipe)".into()))
            }
        };
        match serde_json::from_str::<Value>(&reply) {
            Ok(Value::Object(m)) => match m.get("type").and_then(Value::as_str) {
                Some("result") => Ok(m),
                Some("error") => Err(AlgorithmError::Failed(
                    m.get("message")
                        .and_then(Value::as_str)
                        .unwrap_or("child reported an error")
                        .to_string(),
                )),
                _ => Err(self.fail(format!("malformed reply {reply:?}"))),
            },
            _ => Err(self.fail(format!("malformed reply {reply:?}"))),
        }
    }
}

impl Algorithm for ExternalAlgorithm {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> AlgorithmKind {
        AlgorithmKind::External
    }

    fn learn(&mut self, event: &Event) -> Result<(), AlgorithmError> {
        self.request(ProtocolMessage::learn(event.clone()))
            .map(|_| ())
    }

    /// A `result` whose `conformance` is present but not a number (for
    /// example `null`, which is how NaN goes over the wire) yields NaN and is
    /// penalized by the harness; a missing field is a protocol error.
    fn conformance(&mut self, event: &Event) -> Result<f64, AlgorithmError> {
        let reply = self.request(ProtocolMessage::conformance(event.clone()))?;
        match reply.get("conformance") {
            Some(v) => Ok(v.as_f64().unwrap_or(f64::NAN)),
            None => Err(self.fail("result without conformance value".into())),
        }
    }

    fn diagnostics(&self) -> Option<String> {
        let s = self.stderr.lock().unwrap_or_else(|p| p.into_inner());
        (!s.is_empty()).then(|| s.clone())
    }
}

impl Drop for ExternalAlgorithm {
    fn drop(&mut self) {
        if let Some(mut stdin) = self.stdin.take() {
            let _ = writeln!(stdin, "{}", ProtocolMessage::shutdown().to_line());
            let _ = stdin.flush();
        }
        let until = Instant::now() + Duration::from_millis(500);
        while Instant::now() < until {
            match self.child.try_wait() {
                Ok(Some(_)) | Err(_) => return,
                Ok(None) => thread::sleep(Duration::from_millis(5)),
            }
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
