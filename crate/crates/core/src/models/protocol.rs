//! Wire protocol for external models: one JSON object per line.
//!
//! The server opens with `{"classes": [...]}`. Each request
//! `{"id": n, "series": [[...], ...]}` is answered by
//! `{"id": n, "probs": [[...], ...]}`, or by `{"id": n, "error": "..."}` when
//! the request cannot be served. Unknown fields are ignored.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::Estimator;
use crate::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub series: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn write_message<W: Write, M: Serialize>(out: &mut W, message: &M) -> io::Result<()> {
    serde_json::to_writer(&mut *out, message)?;
    out.write_all(b"\n")?;
    out.flush()
}

fn answer<M: Estimator<f64> + ?Sized>(model: &M, line: &str) -> Response {
    let request: Request = match serde_json::from_str(line) {
        Ok(r) => r,
        Err(e) => {
            // salvage the id when only the payload is malformed
            let id = serde_json::from_str::<serde_json::Value>(line).ok().and_then(|v| v.get("id")?.as_u64());
            return Response { id, probs: None, error: Some(format!("malformed request: {e}")) };
        }
    };
    let fail = |msg: String| Response { id: Some(request.id), probs: None, error: Some(msg) };
    if let Some(first) = request.series.first() {
        if request.series.iter().any(|s| s.len() != first.len()) {
            return fail("ragged batch: series lengths differ".into());
        }
    }
    let batch = match request.series.iter().map(|s| TimeSeries::new(s.clone())).collect::<Result<Vec<_>, _>>() {
        Ok(b) => b,
        Err(e) => return fail(e.to_string()),
    };
    match model.predict(&batch) {
        Ok(probs) => Response { id: Some(request.id), probs: Some(probs), error: None },
        Err(e) => fail(e.to_string()),
    }
}

/// Serves `model` until `input` ends: handshake first, then one response
/// per non-blank request line. Bad requests get an error response and the
/// loop continues.
pub fn serve<M: Estimator<f64> + ?Sized, R: BufRead, W: Write>(model: &M, input: R, mut output: W) -> io::Result<()> {
    write_message(&mut output, &Handshake { classes: model.output_names() })?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        write_message(&mut output, &answer(model, &line))?;
    }
    Ok(())
}
