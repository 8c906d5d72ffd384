//! Reference scorer processes speaking the line protocol, for tests and demos.

use std::io::{BufRead, Write};
use std::thread;
use std::time::Duration;

use stream_locator_core::composer::CompositionManifest;
use stream_locator_core::scorer::{synthetic_score, SyntheticProfile};
use stream_locator_core::FrameIndex;

use crate::external::{Request, Response};

#[derive(Debug, Clone)]
pub enum StubMode {
    Constant(f64),
    /// `1 / (1 + frame)`.
    Reciprocal,
    /// Answers every request with a line that is not a response.
    Garbage,
    Synthetic(SyntheticProfile),
}

#[derive(Debug, Clone)]
pub struct StubOptions {
    pub mode: StubMode,
    pub delay: Option<Duration>,
    /// Exit after answering this many requests.
    pub exit_after: Option<u64>,
}

/// Serve requests until end of input.
pub fn serve(opts: &StubOptions, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    let mut answered = 0u64;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if opts.exit_after.is_some_and(|n| answered >= n) {
            return Ok(());
        }
        if let Some(d) = opts.delay {
            thread::sleep(d);
        }
        let req: Request = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("stub: bad request {line:?}: {e}");
                continue;
            }
        };
        let confidence = match &opts.mode {
            StubMode::Constant(c) => *c,
            StubMode::Reciprocal => 1.0 / (1.0 + req.frame as f64),
            StubMode::Garbage => {
                writeln!(output, "this is not json")?;
                output.flush()?;
                answered += 1;
                continue;
            }
            StubMode::Synthetic(p) => match synthetic_score(p, FrameIndex(req.frame)) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("stub: {e}");
                    return Ok(());
                }
            },
        };
        let resp = Response {
            id: req.id,
            confidence,
        };
        writeln!(output, "{}", serde_json::to_string(&resp).expect("response serializes"))?;
        output.flush()?;
        answered += 1;
    }
    Ok(())
}

/// Find `video_id` in `manifests`.
pub fn find_manifest<'a>(manifests: &'a [CompositionManifest], video_id: &str) -> Option<&'a CompositionManifest> {
    manifests.iter().find(|m| m.video_id() == video_id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_answers_in_order() {
        let input = b"{\"id\":0,\"question\":\"q\",\"frame\":0}\n{\"id\":1,\"question\":\"q\",\"frame\":3}\n";
        let mut out = Vec::new();
        let opts = StubOptions { mode: StubMode::Reciprocal, delay: None, exit_after: None };
        serve(&opts, &input[..], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "{\"id\":0,\"confidence\":1.0}\n{\"id\":1,\"confidence\":0.25}\n");
    }
}
