//! Scan files: a sequence of frames, each a header line followed by
//! observation (`obs`) and labeled point (`pt`) records.
//!
//! ```text
//! # poleloc scans v1
//! frame 12 k 2 d 3 pose 4.5 1 0.25
//! obs <class> <lx> <ly> <r> <support> <truth> <K probs> <d features>
//! pt <x> <y> <z> <class> <K probs> <d features>
//! ```
//!
//! `truth` is `-` or `<landmark>:<class>`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::extract::{GroundTruth, LabeledPoint};
use crate::geometry::{Circle, Pose2};
use crate::localization::Observation;

use super::{fmt_num, parse_f64, parse_usize, read_text, write_text, Lines};

pub const SCAN_MAGIC: &str = "# poleloc scans v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub frame: u64,
    pub k: usize,
    pub d: usize,
    /// Sensor pose in the world; ground truth for simulated data.
    pub pose: Pose2,
    pub observations: Vec<Observation>,
    pub points: Vec<LabeledPoint>,
}

fn push_nums(out: &mut String, values: &[f64]) {
    for v in values {
        out.push(' ');
        out.push_str(&fmt_num(*v));
    }
}

pub fn render_scans(scans: &[Scan]) -> String {
    let mut out = String::from(SCAN_MAGIC);
    out.push('\n');
    for s in scans {
        let p = s.pose;
        let _ = writeln!(
            out,
            "frame {} k {} d {} pose {} {} {}",
            s.frame,
            s.k,
            s.d,
            fmt_num(p.x),
            fmt_num(p.y),
            fmt_num(p.theta)
        );
        for o in &s.observations {
            let truth = o.truth.map_or("-".to_string(), |t| format!("{}:{}", t.landmark, t.class_id));
            out.push_str(&format!("obs {}", o.class_id));
            push_nums(&mut out, &[o.circle.lx, o.circle.ly, o.circle.r]);
            let _ = write!(out, " {} {}", o.support, truth);
            push_nums(&mut out, &o.prob);
            push_nums(&mut out, &o.feature);
            out.push('\n');
        }
        for pt in &s.points {
            out.push_str("pt");
            push_nums(&mut out, &[pt.x, pt.y, pt.z]);
            let _ = write!(out, " {}", pt.class_id);
            push_nums(&mut out, &pt.prob);
            push_nums(&mut out, &pt.feature);
            out.push('\n');
        }
    }
    out
}

fn parse_vec<'a>(lines: &Lines, line: usize, toks: &mut impl Iterator<Item = &'a str>, n: usize, what: &str) -> Result<Vec<f64>> {
    (0..n).map(|_| parse_f64(lines, line, toks.next(), what)).collect()
}

fn parse_truth(lines: &Lines, line: usize, tok: Option<&str>) -> Result<Option<GroundTruth>> {
    match tok {
        Some("-") => Ok(None),
        Some(t) => {
            let (a, b) = t.split_once(':').ok_or_else(|| lines.error(line, format!("bad truth `{t}`")))?;
            Ok(Some(GroundTruth {
                landmark: parse_usize(lines, line, Some(a), "truth landmark")?,
                class_id: parse_usize(lines, line, Some(b), "truth class")?,
            }))
        }
        None => Err(lines.error(line, "missing truth")),
    }
}

fn expect_end<'a>(lines: &Lines, line: usize, mut toks: impl Iterator<Item = &'a str>) -> Result<()> {
    match toks.next() {
        Some(extra) => Err(lines.error(line, format!("unexpected trailing token `{extra}`"))),
        None => Ok(()),
    }
}

fn keyword<'a>(lines: &Lines, line: usize, toks: &mut impl Iterator<Item = &'a str>, word: &str) -> Result<()> {
    match toks.next() {
        Some(w) if w == word => Ok(()),
        other => Err(lines.error(line, format!("expected `{word}`, found `{}`", other.unwrap_or("")))),
    }
}

pub fn parse_scans(source: &str, text: &str) -> Result<Vec<Scan>> {
    let mut lines = Lines::new(source, text);
    match lines.next_line() {
        Some((_, l)) if l.trim() == SCAN_MAGIC => {}
        Some((n, _)) => return Err(lines.error(n, format!("expected `{SCAN_MAGIC}`"))),
        None => return Err(lines.error(0, "empty scan file")),
    }
    let mut scans: Vec<Scan> = Vec::new();
    while let Some((n, l)) = lines.next_line() {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("frame") => {
                let frame = parse_usize(&lines, n, toks.next(), "frame id")? as u64;
                keyword(&lines, n, &mut toks, "k")?;
                let k = parse_usize(&lines, n, toks.next(), "k")?;
                keyword(&lines, n, &mut toks, "d")?;
                let d = parse_usize(&lines, n, toks.next(), "d")?;
                keyword(&lines, n, &mut toks, "pose")?;
                let p = parse_vec(&lines, n, &mut toks, 3, "pose")?;
                expect_end(&lines, n, toks)?;
                scans.push(Scan {
                    frame,
                    k,
                    d,
                    pose: Pose2::new(p[0], p[1], p[2]),
                    observations: Vec::new(),
                    points: Vec::new(),
                });
            }
            Some(kind @ ("obs" | "pt")) => {
                let Some(scan) = scans.last_mut() else {
                    return Err(lines.error(n, "record before any frame header"));
                };
                let (k, d) = (scan.k, scan.d);
                if kind == "obs" {
                    let class_id = parse_usize(&lines, n, toks.next(), "class")?;
                    let c = parse_vec(&lines, n, &mut toks, 3, "circle")?;
                    let support = parse_usize(&lines, n, toks.next(), "support")?;
                    let truth = parse_truth(&lines, n, toks.next())?;
                    let prob = parse_vec(&lines, n, &mut toks, k, "prob")?;
                    let feature = parse_vec(&lines, n, &mut toks, d, "feature")?;
                    expect_end(&lines, n, toks)?;
                    scan.observations.push(Observation {
                        circle: Circle::new(c[0], c[1], c[2]),
                        feature,
                        prob,
                        class_id,
                        support,
                        truth,
                    });
                } else {
                    let xyz = parse_vec(&lines, n, &mut toks, 3, "point")?;
                    let class_id = parse_usize(&lines, n, toks.next(), "class")?;
                    let prob = parse_vec(&lines, n, &mut toks, k, "prob")?;
                    let feature = parse_vec(&lines, n, &mut toks, d, "feature")?;
                    expect_end(&lines, n, toks)?;
                    scan.points.push(LabeledPoint {
                        x: xyz[0],
                        y: xyz[1],
                        z: xyz[2],
                        class_id,
                        prob,
                        feature,
                    });
                }
            }
            Some(other) => return Err(lines.error(n, format!("unknown record `{other}`"))),
            None => unreachable!("blank lines are skipped"),
        }
    }
    Ok(scans)
}

pub fn read_scans(path: &Path) -> Result<Vec<Scan>> {
    parse_scans(&path.display().to_string(), &read_text(path)?)
}

pub fn write_scans(path: &Path, scans: &[Scan]) -> Result<()> {
    write_text(path, &render_scans(scans))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn sample() -> Vec<Scan> {
        vec![
            Scan {
                frame: 3,
                k: 2,
                d: 2,
                pose: Pose2::new(1.0, 2.0, 0.5),
                observations: vec![Observation {
                    circle: Circle::new(1.0 / 3.0, -2.5, 0.2),
                    feature: vec![0.6, 0.8],
                    prob: vec![0.25, 0.75],
                    class_id: 1,
                    support: 12,
                    truth: Some(GroundTruth { landmark: 7, class_id: 1 }),
                }],
                points: vec![LabeledPoint {
                    x: 1.0,
                    y: 2.0,
                    z: 0.5,
                    class_id: 0,
                    prob: vec![1.0, 0.0],
                    feature: vec![0.0, 1.0],
                }],
            },
            Scan {
                frame: 4,
                k: 2,
                d: 2,
                pose: Pose2::IDENTITY,
                observations: vec![],
                points: vec![],
            },
        ]
    }

    #[test]
    fn round_trips_bytes() {
        let text = render_scans(&sample());
        let back = parse_scans("mem", &text).unwrap();
        assert_eq!(render_scans(&back), text);
        assert_eq!(back[0].observations[0].truth, sample()[0].observations[0].truth);
        assert_eq!(back.len(), 2);
    }

    #[test]
    fn reports_line_numbers() {
        let text = format!("{SCAN_MAGIC}\nframe 0 k 2 d 2 pose 0 0 0\nobs 0 1 2\n");
        match parse_scans("mem", &text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_scans("mem", "obs 1 2 3\n").is_err());
    }

    #[test]
    fn empty_sequence() {
        let text = render_scans(&[]);
        assert!(parse_scans("mem", &text).unwrap().is_empty());
    }
}
