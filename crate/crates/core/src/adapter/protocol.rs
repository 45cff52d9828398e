use std::io::{BufRead, Write};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::algorithm::{Algorithm, AlgorithmError};
use crate::stream::Event;

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageType {
    Hello,
    Learn,
    Conformance,
    Result,
    Error,
    Shutdown,
}

/// One line of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolMessage {
    #[serde(rename = "type")]
    pub kind: MessageType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Event>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conformance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl ProtocolMessage {
    fn bare(kind: MessageType) -> Self {
        Self {
            kind,
            protocol_version: None,
            event: None,
            conformance: None,
            message: None,
        }
    }

    pub fn hello() -> Self {
        Self {
            protocol_version: Some(PROTOCOL_VERSION.into()),
            ..Self::bare(MessageType::Hello)
        }
    }

    pub fn learn(event: Event) -> Self {
        Self {
            event: Some(event),
            ..Self::bare(MessageType::Learn)
        }
    }

    pub fn conformance(event: Event) -> Self {
        Self {
            event: Some(event),
            ..Self::bare(MessageType::Conformance)
        }
    }

    /// Acknowledges a learn request.
    pub fn ack() -> Self {
        Self::bare(MessageType::Result)
    }

    pub fn result(value: f64) -> Self {
        Self {
            conformance: Some(value),
            ..Self::bare(MessageType::Result)
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        Self {
            message: Some(message.into()),
            ..Self::bare(MessageType::Error)
        }
    }

    pub fn shutdown() -> Self {
        Self::bare(MessageType::Shutdown)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("protocol messages serialize")
    }
}

/// Options for [`serve`].
#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Sleep before answering each conformance request.
    pub conformance_delay: Duration,
}

/// Runs `algorithm` as the child side of the protocol: greets with a hello,
/// then answers requests from `input` until shutdown or end of input.
pub fn serve<A, R, W>(
    algorithm: &mut A,
    input: R,
    mut output: W,
    options: &ServeOptions,
) -> std::io::Result<()>
where
    A: Algorithm + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut send = |msg: ProtocolMessage| -> std::io::Result<()> {
        writeln!(output, "{}", msg.to_line())?;
        output.flush()
    };
    send(ProtocolMessage::hello())?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: ProtocolMessage = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => {
                send(ProtocolMessage::error(format!("malformed request: {e}")))?;
                continue;
            }
        };
        let reply = match (request.kind, request.event) {
            (MessageType::Shutdown, _) => return Ok(()),
            (MessageType::Learn, Some(e)) => match algorithm.learn(&e) {
                Ok(()) => ProtocolMessage::ack(),
                Err(err) => ProtocolMessage::error(error_text(err)),
            },
            (MessageType::Conformance, Some(e)) => {
                let reply = match algorithm.conformance(&e) {
                    Ok(v) => ProtocolMessage::result(v),
                    Err(err) => ProtocolMessage::error(error_text(err)),
                };
                if !options.conformance_delay.is_zero() {
                    std::thread::sleep(options.conformance_delay);
                }
                reply
            }
            (MessageType::Learn | MessageType::Conformance, None) => {
                ProtocolMessage::error("request without event")
            }
            (other, _) => ProtocolMessage::error(format!("unexpected message type {other:?}")),
        };
        send(reply)?;
    }
    Ok(())
}

fn error_text(err: AlgorithmError) -> String {
    err.to_string()
}
