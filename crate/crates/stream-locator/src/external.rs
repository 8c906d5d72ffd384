//! Scorers living in a child process.
//!
//! Wire protocol, one UTF-8 JSON object per line:
//!
//! ```text
//! request:  {"id": <u64>, "question": "<text>", "frame": <u64>}
//! response: {"id": <u64>, "confidence": <real in [-1, 1]>}
//! ```
//!
//! Ids start at 0 and increase by one per request. Each request waits for its
//! response before the next is sent.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use stream_locator_core::{FrameIndex, FrameScorer, QuestionContext, ScoreError};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub question: String,
    pub frame: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub confidence: f64,
}

pub struct ExternalScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    timeout: Duration,
}

fn protocol(reason: impl Into<String>, line: impl Into<String>) -> ScoreError {
    ScoreError::Protocol {
        reason: reason.into(),
        line: line.into(),
    }
}

/// Parse and validate one response line against the expected id.
pub fn parse_response(line: &str, expected_id: u64) -> Result<f64, ScoreError> {
    let resp: Response =
        serde_json::from_str(line).map_err(|e| protocol(format!("malformed response: {e}"), line))?;
    if resp.id != expected_id {
        return Err(protocol(
            format!("response id {} does not match request id {expected_id}", resp.id),
            line,
        ));
    }
    if !(-1.0..=1.0).contains(&resp.confidence) {
        return Err(protocol("confidence outside [-1, 1]", line));
    }
    Ok(resp.confidence)
}

impl ExternalScorer {
    /// Spawn `argv[0]` with the remaining arguments.
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, ScoreError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ScoreError::Io("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScoreError::Io(format!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            child,
            stdin,
            lines: rx,
            next_id: 0,
            timeout,
        })
    }

    fn request(&mut self, question: &str, frame: u64) -> Result<f64, ScoreError> {
        let id = self.next_id;
        self.next_id += 1;
        let req = Request {
            id,
            question: question.to_owned(),
            frame,
        };
        let mut line = serde_json::to_string(&req).expect("request serializes");
        line.push('\n');
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| protocol("scorer input already closed", ""))?;
        if let Err(e) = stdin.write_all(line.as_bytes()).and_then(|()| stdin.flush()) {
            self.stdin = None;
            return Err(protocol(format!("scorer process exited ({e})"), ""));
        }
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(resp)) => parse_response(&resp, id),
            Ok(Err(e)) => Err(protocol(format!("unreadable response: {e}"), "")),
            Err(RecvTimeoutError::Timeout) => Err(ScoreError::Timeout {
                millis: self.timeout.as_millis() as u64,
            }),
            Err(RecvTimeoutError::Disconnected) => {
                Err(protocol("scorer process exited", "<end of output>"))
            }
        }
    }
}

impl FrameScorer for ExternalScorer {
    fn frame_count(&self) -> Option<u64> {
        None
    }

    fn score(&mut self, question: &QuestionContext, frame: FrameIndex) -> Result<f64, ScoreError> {
        self.request(&question.question_text, frame.get())
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
