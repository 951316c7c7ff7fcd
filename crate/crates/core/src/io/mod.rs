//! On-disk formats.
//!
//! Text formats print numbers rounded to 9 significant digits in their
//! shortest decimal form, so a write → read → write cycle reproduces the
//! same bytes.

mod assoc;
mod config;
mod manifest;
mod map_file;
mod metrics;
mod scan;
mod trajectory;

use std::fs;
use std::path::Path;

pub use assoc::{parse_association_log, read_association_log, render_association_log, write_association_log};
pub use config::{load_config, parse_config, EvalConfig, RunConfig, SensorConfig, SplitConfig, SweepConfig, SEED_ENV};
pub use manifest::{sha256_hex, Manifest};
pub use map_file::{parse_map, read_map, render_map, write_map};
pub use metrics::{parse_metrics, read_metrics, render_metrics, write_metrics, METRICS_COLUMNS};
pub use scan::{parse_scans, read_scans, render_scans, write_scans, Scan};
pub use trajectory::{parse_trajectory, read_trajectory, render_trajectory, write_trajectory, Trajectory};

use crate::error::{Error, Result};

/// `v` rounded to 9 significant digits; `-0` becomes `0`.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { 0.0 } else { v };
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

/// Shortest decimal text of `round_sig(v)`.
pub fn fmt_num(v: f64) -> String {
    let r = round_sig(v);
    let a = r.abs();
    if a != 0.0 && r.is_finite() && !(1e-6..1e16).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text_file(path: &Path, text: &str) -> Result<()> {
    write_text(path, text)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Line-oriented parse state shared by the text readers.
pub(crate) struct Lines<'a> {
    source: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(source: &'a str, text: &'a str) -> Self {
        Self {
            source,
            inner: text.lines().enumerate(),
        }
    }

    pub(crate) fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.source.into(),
            line,
            message: message.into(),
        }
    }

    /// Next non-empty line as `(1-based number, text)`.
    pub(crate) fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            if !l.trim().is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }
}

pub(crate) fn parse_f64(lines: &Lines, line: usize, tok: Option<&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| lines.error(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| lines.error(line, format!("bad {what} `{tok}`")))
}

pub(crate) fn parse_usize(lines: &Lines, line: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| lines.error(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| lines.error(line, format!("bad {what} `{tok}`")))
}

/// Rounds every float of a serializable value the way the text formats do.
pub(crate) fn round_json(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|f| serde_json::Number::from_f64(round_sig(f))) {
                *n = r;
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_json),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}
