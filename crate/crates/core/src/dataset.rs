//! JSON Lines datasets: one `{"x":"0101...","y":0}` object per line.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{BitString, LabeledExample, LabeledSample};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    x: String,
    y: u8,
}

/// Parses a dataset; `origin` names the source in error messages.
pub fn parse_jsonl<R: BufRead>(reader: R, origin: &str) -> Result<LabeledSample> {
    let mut examples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Parse(format!("{origin}:{}: {msg}", i + 1));
        let row: Row = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let x: BitString = row.x.parse().map_err(|e: Error| bad(e.to_string()))?;
        let y = match row.y {
            0 => false,
            1 => true,
            other => return Err(bad(format!("label {other} is not 0 or 1"))),
        };
        examples.push(LabeledExample::new(x, y));
    }
    LabeledSample::new(examples).map_err(|_| Error::Parse(format!("{origin}: no examples")))
}

pub fn read_jsonl(path: &Path) -> Result<LabeledSample> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(file), &path.display().to_string())
}

pub fn write_jsonl<W: Write>(mut out: W, sample: &LabeledSample) -> std::io::Result<()> {
    for e in sample.examples() {
        let row = Row {
            x: e.x.to_string(),
            y: u8::from(e.y),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
