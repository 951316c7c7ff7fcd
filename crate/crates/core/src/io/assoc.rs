//! Association logs: one JSON object per line, one line per filter step.

use std::path::Path;

use crate::error::{Error, Result};
use crate::localization::AssociationFrame;

use super::{read_text, round_json, write_text};

pub fn render_association_log(log: &[AssociationFrame]) -> String {
    let mut out = String::new();
    for frame in log {
        let mut v = serde_json::to_value(frame).expect("frame serializes");
        round_json(&mut v);
        out.push_str(&serde_json::to_string(&v).expect("frame serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_association_log(source: &str, text: &str) -> Result<Vec<AssociationFrame>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: source.into(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn read_association_log(path: &Path) -> Result<Vec<AssociationFrame>> {
    parse_association_log(&path.display().to_string(), &read_text(path)?)
}

pub fn write_association_log(path: &Path, log: &[AssociationFrame]) -> Result<()> {
    write_text(path, &render_association_log(log))
}
