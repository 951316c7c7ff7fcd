//! Trajectory files: a metadata header, a column header, then one
//! `step x y theta` row per pose.
//!
//! ```text
//! # poleloc trajectory v1 kind=estimate variant=pf
//! step x y theta
//! 0 1.5 2 0.1
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Pose2;

use super::{fmt_num, parse_f64, parse_usize, read_text, write_text, Lines};

pub const TRAJECTORY_MAGIC: &str = "# poleloc trajectory v1";
const COLUMNS: &str = "step x y theta";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    /// `key=value` header fields; keys and values contain no whitespace.
    pub meta: BTreeMap<String, String>,
    pub steps: Vec<u64>,
    pub poses: Vec<Pose2>,
}

impl Trajectory {
    pub fn new(steps: Vec<u64>, poses: Vec<Pose2>) -> Self {
        assert_eq!(steps.len(), poses.len(), "one step id per pose");
        Self {
            meta: BTreeMap::new(),
            steps,
            poses,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.insert(key.to_string(), value.to_string());
        self
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Checks that `other` covers exactly the same steps.
    pub fn check_aligned(&self, other: &Trajectory) -> Result<()> {
        if self.steps != other.steps {
            return Err(Error::TrajectoryMismatch(format!(
                "step ids differ ({} vs {} poses)",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.contains(char::is_whitespace) && !s.contains('=')
}

pub fn render_trajectory(t: &Trajectory) -> Result<String> {
    let mut out = String::from(TRAJECTORY_MAGIC);
    for (k, v) in &t.meta {
        if !valid_token(k) || !valid_token(v) {
            return Err(Error::InputMismatch(format!("trajectory metadata `{k}={v}` is not a plain token")));
        }
        let _ = write!(out, " {k}={v}");
    }
    out.push('\n');
    out.push_str(COLUMNS);
    out.push('\n');
    for (s, p) in t.steps.iter().zip(&t.poses) {
        let _ = writeln!(out, "{s} {} {} {}", fmt_num(p.x), fmt_num(p.y), fmt_num(p.theta));
    }
    Ok(out)
}

pub fn parse_trajectory(source: &str, text: &str) -> Result<Trajectory> {
    let mut lines = Lines::new(source, text);
    let mut meta = BTreeMap::new();
    match lines.next_line() {
        Some((n, l)) if l.starts_with(TRAJECTORY_MAGIC) => {
            for tok in l[TRAJECTORY_MAGIC.len()..].split_whitespace() {
                let (k, v) = tok.split_once('=').ok_or_else(|| lines.error(n, format!("bad metadata `{tok}`")))?;
                meta.insert(k.to_string(), v.to_string());
            }
        }
        Some((n, _)) => return Err(lines.error(n, format!("expected `{TRAJECTORY_MAGIC}`"))),
        None => return Err(lines.error(0, "empty trajectory file")),
    }
    match lines.next_line() {
        Some((_, l)) if l.split_whitespace().eq(COLUMNS.split_whitespace()) => {}
        Some((n, _)) => return Err(lines.error(n, format!("expected column header `{COLUMNS}`"))),
        None => return Err(lines.error(1, "missing column header")),
    }
    let mut steps = Vec::new();
    let mut poses = Vec::new();
    while let Some((n, l)) = lines.next_line() {
        let mut toks = l.split_whitespace();
        steps.push(parse_usize(&lines, n, toks.next(), "step")? as u64);
        let x = parse_f64(&lines, n, toks.next(), "x")?;
        let y = parse_f64(&lines, n, toks.next(), "y")?;
        let theta = parse_f64(&lines, n, toks.next(), "theta")?;
        if let Some(extra) = toks.next() {
            return Err(lines.error(n, format!("unexpected trailing token `{extra}`")));
        }
        poses.push(Pose2::new(x, y, theta));
    }
    Ok(Trajectory { meta, steps, poses })
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    parse_trajectory(&path.display().to_string(), &read_text(path)?)
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    write_text(path, &render_trajectory(t)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_bytes() {
        let t = Trajectory::new(vec![0, 5, 9], vec![Pose2::new(1.0, 2.0, 0.1), Pose2::new(-3.25, 1e-7, 3.0), Pose2::IDENTITY])
            .with_meta("variant", "in-pf")
            .with_meta("phi_odo", 0.4);
        let text = render_trajectory(&t).unwrap();
        assert!(text.starts_with("# poleloc trajectory v1 phi_odo=0.4 variant=in-pf\nstep x y theta\n0 1 2 0.1\n"));
        let back = parse_trajectory("mem", &text).unwrap();
        assert_eq!(render_trajectory(&back).unwrap(), text);
        assert_eq!(back.meta["variant"], "in-pf");
    }

    #[test]
    fn empty_has_valid_header() {
        let text = render_trajectory(&Trajectory::default()).unwrap();
        assert_eq!(text, "# poleloc trajectory v1\nstep x y theta\n");
        assert!(parse_trajectory("mem", &text).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_rows_and_meta() {
        assert!(parse_trajectory("mem", "# poleloc trajectory v1\nstep x y theta\n0 1 2\n").is_err());
        let bad = Trajectory::default().with_meta("a b", "c");
        assert!(render_trajectory(&bad).is_err());
    }

    #[test]
    fn alignment() {
        let a = Trajectory::new(vec![1, 2], vec![Pose2::IDENTITY; 2]);
        let b = Trajectory::new(vec![1, 3], vec![Pose2::IDENTITY; 2]);
        assert!(a.check_aligned(&a.clone()).is_ok());
        assert!(matches!(a.check_aligned(&b), Err(Error::TrajectoryMismatch(_))));
    }
}
