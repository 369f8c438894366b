//! Line-delimited JSON bridge to a scorer running in another process.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{CoherenceScorer, PairInput, PairQuery};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub query_id: String,
    pub vuln: String,
    pub library: String,
    pub lib_desc: String,
    /// Stage-one score of the pair, for scorers that use it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screener_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub query_id: String,
    pub score: f64,
}

struct Channel {
    child: Child,
    stdin: Option<ChildStdin>,
    stdout: BufReader<ChildStdout>,
}

/// Spawns `program args...` and exchanges one request/response line per pair.
pub struct ExternalScorer {
    program: String,
    channel: Mutex<Channel>,
}

impl ExternalScorer {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("cannot start scorer {program:?}: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child
            .stdout
            .take()
            .map(BufReader::new)
            .ok_or_else(|| Error::External("scorer stdout unavailable".into()))?;
        Ok(Self {
            program: program.to_string(),
            channel: Mutex::new(Channel {
                child,
                stdin,
                stdout,
            }),
        })
    }

    fn request(&self, ch: &mut Channel, req: &ScoreRequest) -> Result<f64> {
        let err = |m: String| Error::External(format!("scorer {:?}: {m}", self.program));
        let mut line = serde_json::to_string(req).map_err(|e| err(e.to_string()))?;
        line.push('\n');
        let stdin = ch
            .stdin
            .as_mut()
            .ok_or_else(|| err("stdin closed".into()))?;
        stdin
            .write_all(line.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| err(e.to_string()))?;
        let mut reply = String::new();
        let n = ch
            .stdout
            .read_line(&mut reply)
            .map_err(|e| err(e.to_string()))?;
        if n == 0 {
            return Err(err("closed its output".into()));
        }
        let resp: ScoreResponse = serde_json::from_str(reply.trim_end())
            .map_err(|e| err(format!("bad response: {e}")))?;
        if resp.query_id != req.query_id {
            return Err(err(format!(
                "response for {:?} while waiting for {:?}",
                resp.query_id, req.query_id
            )));
        }
        if !resp.score.is_finite() {
            return Err(Error::Numerical(format!("scorer returned {}", resp.score)));
        }
        Ok(resp.score)
    }
}

impl CoherenceScorer for ExternalScorer {
    fn score_pairs(&self, query: &PairQuery<'_>, pairs: &[PairInput<'_>]) -> Result<Vec<f64>> {
        let mut ch = self
            .channel
            .lock()
            .map_err(|_| Error::External("scorer channel poisoned".into()))?;
        pairs
            .iter()
            .map(|p| {
                let req = ScoreRequest {
                    query_id: query.id.to_string(),
                    vuln: query.description.to_string(),
                    library: p.doc.library.clone(),
                    lib_desc: p.doc.description.clone(),
                    screener_score: Some(p.screener_score),
                };
                self.request(&mut ch, &req)
            })
            .collect()
    }
}

impl Drop for ExternalScorer {
    fn drop(&mut self) {
        if let Ok(ch) = self.channel.get_mut() {
            ch.stdin.take();
            let _ = ch.child.wait();
        }
    }
}

/// Answers requests from `input` until end of stream; returns the count served.
pub fn serve<R: BufRead, W: Write>(
    input: R,
    mut output: W,
    mut score: impl FnMut(&ScoreRequest) -> Result<f64>,
) -> Result<usize> {
    let mut served = 0;
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::External(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let req: ScoreRequest = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: "<stdin>".into(),
            line: n + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        let resp = ScoreResponse {
            query_id: req.query_id.clone(),
            score: score(&req)?,
        };
        let text = serde_json::to_string(&resp).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(output, "{text}")
            .and_then(|_| output.flush())
            .map_err(|e| Error::External(e.to_string()))?;
        served += 1;
    }
    Ok(served)
}
