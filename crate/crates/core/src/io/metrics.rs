//! Metrics reports: CSV with a fixed column order. Absent values are empty
//! cells.

use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{AssocDiag, LocScore, MapScore, MetricsRow};

use super::{fmt_num, read_text, write_text};

pub const METRICS_COLUMNS: [&str; 19] = [
    "sequence",
    "variant",
    "phi_odo",
    "phi_obs_drop",
    "delta_d",
    "precision",
    "recall",
    "f1",
    "n_tp",
    "n_fp",
    "n_fn",
    "delta_pos",
    "rmse_pos",
    "delta_ang",
    "rmse_ang",
    "n_assoc_sets",
    "assoc_accuracy",
    "phi_A_cosine",
    "class_accuracy",
];

fn opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

fn record(row: &MetricsRow) -> Vec<String> {
    let m = row.map.as_ref();
    let a = row.assoc.as_ref();
    vec![
        row.sequence.clone(),
        row.variant.clone(),
        fmt_num(row.phi_odo),
        fmt_num(row.phi_obs_drop),
        fmt_num(row.delta_d),
        opt(m.map(|m| m.precision)),
        opt(m.map(|m| m.recall)),
        opt(m.map(|m| m.f1)),
        m.map(|m| m.n_tp.to_string()).unwrap_or_default(),
        m.map(|m| m.n_fp.to_string()).unwrap_or_default(),
        m.map(|m| m.n_fn.to_string()).unwrap_or_default(),
        fmt_num(row.loc.delta_pos),
        fmt_num(row.loc.rmse_pos),
        fmt_num(row.loc.delta_ang),
        fmt_num(row.loc.rmse_ang),
        opt(a.map(|a| a.n_assoc_sets)),
        opt(a.and_then(|a| a.assoc_accuracy)),
        opt(a.and_then(|a| a.phi_a_cosine)),
        opt(a.and_then(|a| a.class_accuracy)),
    ]
}

pub fn render_metrics(rows: &[MetricsRow]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(METRICS_COLUMNS).expect("in-memory write");
    for row in rows {
        w.write_record(record(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn parse_metrics(source: &str, text: &str) -> Result<Vec<MetricsRow>> {
    let err = |line: usize, message: String| Error::Parse {
        path: source.into(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| err(1, e.to_string()))?;
    if !header.iter().eq(METRICS_COLUMNS) {
        return Err(err(1, "unexpected metrics columns".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let cell = |c: usize| rec.get(c).unwrap_or("");
        let num = |c: usize| -> Result<Option<f64>> {
            match cell(c) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| err(line, format!("bad {} `{s}`", METRICS_COLUMNS[c]))),
            }
        };
        let count = |c: usize| -> Result<Option<usize>> {
            match cell(c) {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| err(line, format!("bad {} `{s}`", METRICS_COLUMNS[c]))),
            }
        };
        let need = |c: usize| -> Result<f64> { num(c)?.ok_or_else(|| err(line, format!("missing {}", METRICS_COLUMNS[c]))) };

        let map = match (num(5)?, num(6)?, num(7)?, count(8)?, count(9)?, count(10)?) {
            (Some(precision), Some(recall), Some(f1), Some(n_tp), Some(n_fp), Some(n_fn)) => Some(MapScore {
                precision,
                recall,
                f1,
                n_tp,
                n_fp,
                n_fn,
            }),
            (None, None, None, None, None, None) => None,
            _ => return Err(err(line, "partial map score".into())),
        };
        let assoc = num(15)?.map(|n_assoc_sets| -> Result<AssocDiag> {
            Ok(AssocDiag {
                n_assoc_sets,
                assoc_accuracy: num(16)?,
                phi_a_cosine: num(17)?,
                class_accuracy: num(18)?,
            })
        });
        rows.push(MetricsRow {
            sequence: cell(0).to_string(),
            variant: cell(1).to_string(),
            phi_odo: need(2)?,
            phi_obs_drop: need(3)?,
            delta_d: need(4)?,
            map,
            loc: LocScore {
                delta_pos: need(11)?,
                rmse_pos: need(12)?,
                delta_ang: need(13)?,
                rmse_ang: need(14)?,
            },
            assoc: assoc.transpose()?,
        });
    }
    Ok(rows)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    parse_metrics(&path.display().to_string(), &read_text(path)?)
}

pub fn write_metrics(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_text(path, &render_metrics(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_values_and_bytes() {
        let rows = vec![
            MetricsRow {
                sequence: "seed7".into(),
                variant: "pf".into(),
                phi_odo: 0.4,
                phi_obs_drop: 0.8,
                delta_d: 10.0,
                map: Some(MapScore { precision: 0.75, recall: 1.0, f1: 6.0 / 7.0, n_tp: 3, n_fp: 1, n_fn: 0 }),
                loc: LocScore { delta_pos: 0.25, rmse_pos: 0.3, delta_ang: 0.1, rmse_ang: 0.2 },
                assoc: Some(AssocDiag { n_assoc_sets: 2.5, assoc_accuracy: Some(0.9), phi_a_cosine: Some(0.8), class_accuracy: None }),
            },
            MetricsRow { sequence: "a,b".into(), variant: "in-pf".into(), ..Default::default() },
        ];
        let text = render_metrics(&rows);
        assert!(text.starts_with("sequence,variant,phi_odo,phi_obs_drop,delta_d,precision"));
        let back = parse_metrics("mem", &text).unwrap();
        assert_eq!(render_metrics(&back), text);
        assert_eq!(back[0].map.unwrap().n_tp, 3);
        assert_eq!(back[0].assoc.unwrap().class_accuracy, None);
        assert_eq!(back[1], rows[1]);
        assert_eq!(back[0].loc, rows[0].loc);
    }
}
