//! Plain-text parameter files.
//!
//! ```text
//! htgtriage-params 1
//! meta <key> <value...>
//! param <name> <rows> <cols>
//! <cols values>            (one line per row)
//! end
//! ```
//!
//! Values use Rust's shortest round-trip `f64` formatting, so a write/read
//! cycle is bit-exact.

use std::io::{BufRead, Write};

use super::{AutogradError, DenseMatrix, Params};

pub const CHECKPOINT_MAGIC: &str = "htgtriage-params";
const VERSION: u32 = 1;

/// Parameters plus ordered free-form metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub meta: Vec<(String, String)>,
    pub params: Params,
}

impl Checkpoint {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

pub fn write_params<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<(), AutogradError> {
    writeln!(w, "{CHECKPOINT_MAGIC} {VERSION}")?;
    for (k, v) in &ckpt.meta {
        writeln!(w, "meta {k} {v}")?;
    }
    for (_, name, m) in ckpt.params.iter() {
        writeln!(w, "param {name} {} {}", m.rows(), m.cols())?;
        for r in 0..m.rows() {
            let line: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    writeln!(w, "end")?;
    Ok(())
}

pub fn read_params<R: BufRead>(r: R) -> Result<Checkpoint, AutogradError> {
    let err = |line: usize, msg: String| AutogradError::Checkpoint { line, msg };
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty checkpoint".into()))?;
    let header = header?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(CHECKPOINT_MAGIC) {
        return Err(err(1, format!("bad magic in `{header}`")));
    }
    match parts.next().map(str::parse::<u32>) {
        Some(Ok(VERSION)) => {}
        other => return Err(err(1, format!("unsupported version {other:?}"))),
    }

    let mut ckpt = Checkpoint::default();
    let mut saw_end = false;
    while let Some((no, line)) = lines.next() {
        let line = line?;
        if line == "end" {
            saw_end = true;
            break;
        }
        if let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            ckpt.meta.push((k.to_string(), v.to_string()));
        } else if let Some(rest) = line.strip_prefix("param ") {
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let [name, rows, cols] = fields[..] else {
                return Err(err(no, format!("malformed param header `{line}`")));
            };
            let rows: usize = rows.parse().map_err(|e| err(no, format!("rows: {e}")))?;
            let cols: usize = cols.parse().map_err(|e| err(no, format!("cols: {e}")))?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (rno, row) = lines
                    .next()
                    .ok_or_else(|| err(no, format!("truncated values for `{name}`")))?;
                let row = row?;
                let before = values.len();
                for tok in row.split_whitespace() {
                    values.push(
                        tok.parse::<f64>()
                            .map_err(|e| err(rno, format!("value `{tok}`: {e}")))?,
                    );
                }
                if values.len() - before != cols {
                    return Err(err(rno, format!("expected {cols} values")));
                }
            }
            if ckpt.params.id(name).is_some() {
                return Err(err(no, format!("duplicate parameter `{name}`")));
            }
            ckpt.params
                .insert(name, DenseMatrix::from_vec(rows, cols, values));
        } else if !line.trim().is_empty() {
            return Err(err(no, format!("unexpected line `{line}`")));
        }
    }
    if !saw_end {
        return Err(err(0, "missing `end` marker".into()));
    }
    Ok(ckpt)
}
