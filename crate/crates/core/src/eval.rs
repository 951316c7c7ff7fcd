//! Mapping, localization and association metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose2};
use crate::localization::{AssociationFrame, AssociationGroup};
use crate::map::KdTree2;

/// Default TP radius for map matching (meters).
pub const MATCH_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MapScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub n_tp: usize,
    pub n_fp: usize,
    pub n_fn: usize,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchMode {
    /// Each prediction is a TP when its nearest truth is within the radius;
    /// one truth may absorb several predictions.
    #[default]
    Nearest,
    /// Maximum cardinality one-to-one matching within the radius.
    OneToOne,
}

fn score(n_pred: usize, n_truth: usize, n_tp: usize, matched_truth: usize) -> MapScore {
    let precision = if n_pred > 0 { n_tp as f64 / n_pred as f64 } else { 0.0 };
    let recall = if n_truth > 0 { matched_truth as f64 / n_truth as f64 } else { 0.0 };
    MapScore {
        precision,
        recall,
        f1: f1_score(precision, recall),
        n_tp,
        n_fp: n_pred - n_tp,
        n_fn: n_truth - matched_truth,
    }
}

/// Precision, recall and F1 of predicted landmark positions against truth.
pub fn map_f1(pred: &[[f64; 2]], truth: &[[f64; 2]], match_radius: f64, mode: MatchMode) -> MapScore {
    match mode {
        MatchMode::Nearest => {
            let index = KdTree2::build(truth.iter().copied().enumerate());
            let mut hit = vec![false; truth.len()];
            let mut n_tp = 0;
            for p in pred {
                if let Some((id, d2)) = index.nearest(*p) {
                    if d2.sqrt() <= match_radius {
                        n_tp += 1;
                        hit[id] = true;
                    }
                }
            }
            score(pred.len(), truth.len(), n_tp, hit.iter().filter(|h| **h).count())
        }
        MatchMode::OneToOne => {
            let n = one_to_one_matches(pred, truth, match_radius);
            score(pred.len(), truth.len(), n, n)
        }
    }
}

/// Size of a maximum matching in the bipartite graph joining predictions and
/// truths closer than `radius` (augmenting paths).
fn one_to_one_matches(pred: &[[f64; 2]], truth: &[[f64; 2]], radius: f64) -> usize {
    let adj: Vec<Vec<usize>> = pred
        .iter()
        .map(|p| {
            (0..truth.len())
                .filter(|&t| (truth[t][0] - p[0]).hypot(truth[t][1] - p[1]) <= radius)
                .collect()
        })
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; truth.len()];

    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &t in &adj[u] {
            if seen[t] {
                continue;
            }
            seen[t] = true;
            if owner[t].is_none_or(|v| augment(v, adj, seen, owner)) {
                owner[t] = Some(u);
                return true;
            }
        }
        false
    }

    let mut matched = 0;
    for u in 0..pred.len() {
        let mut seen = vec![false; truth.len()];
        if augment(u, &adj, &mut seen, &mut owner) {
            matched += 1;
        }
    }
    matched
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LocScore {
    pub delta_pos: f64,
    pub rmse_pos: f64,
    /// Degrees.
    pub delta_ang: f64,
    /// Degrees.
    pub rmse_ang: f64,
}

fn mean_abs_and_rms(errors: &[f64]) -> (f64, f64) {
    if errors.is_empty() {
        return (0.0, 0.0);
    }
    let n = errors.len() as f64;
    let mean = errors.iter().map(|e| e.abs()).sum::<f64>() / n;
    let rms = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    (mean, rms)
}

/// Mean absolute and RMS errors of an estimated trajectory.
pub fn localization_errors(est: &[Pose2], truth: &[Pose2]) -> Result<LocScore> {
    if est.len() != truth.len() {
        return Err(Error::TrajectoryMismatch(format!(
            "estimate has {} poses, truth has {}",
            est.len(),
            truth.len()
        )));
    }
    let pos: Vec<f64> = est.iter().zip(truth).map(|(e, t)| (e.x - t.x).hypot(e.y - t.y)).collect();
    let ang: Vec<f64> = est.iter().zip(truth).map(|(e, t)| wrap_angle(e.theta - t.theta).to_degrees()).collect();
    let (delta_pos, rmse_pos) = mean_abs_and_rms(&pos);
    let (delta_ang, rmse_ang) = mean_abs_and_rms(&ang);
    Ok(LocScore {
        delta_pos,
        rmse_pos,
        delta_ang,
        rmse_ang,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AssocDiag {
    /// Mean number of distinct association sets per frame.
    pub n_assoc_sets: f64,
    /// Fraction of particle-observation pairs associated to their source.
    pub assoc_accuracy: Option<f64>,
    /// Mean feature cosine similarity of the associated pairs.
    pub phi_a_cosine: Option<f64>,
    /// Fraction of pairs whose landmark class equals the true class.
    pub class_accuracy: Option<f64>,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn push(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Per-frame pair fraction over flags, weighting each group by its particles.
/// Posterior-weighted fraction of pairs whose flag is set, over pairs with
/// a known answer.
fn frame_fraction(frame: &AssociationFrame, flags: impl Fn(&AssociationGroup) -> &[Option<bool>]) -> Option<f64> {
    let (mut good, mut total) = (0.0, 0.0);
    for g in &frame.groups {
        for ok in flags(g).iter().flatten() {
            total += g.weight;
            if *ok {
                good += g.weight;
            }
        }
    }
    (total > 0.0).then(|| good / total)
}

/// Averages `N_{A^k}`, `φ_Ā`, the cosine estimate and `φ_ȳ` over frames that
/// carry at least one observation. Set counts use the particles leaving each
/// step; the fractions weight every particle by its posterior weight.
pub fn association_diagnostics(log: &[AssociationFrame]) -> AssocDiag {
    let mut sets = Mean::default();
    let mut correct = Mean::default();
    let mut cosine = Mean::default();
    let mut class = Mean::default();
    for frame in log.iter().filter(|f| !f.observations.is_empty()) {
        sets.push(frame.n_sets() as f64);
        let mass: f64 = frame.groups.iter().filter(|g| !g.cosine.is_empty()).map(|g| g.weight).sum();
        if mass > 0.0 {
            let total: f64 = frame
                .groups
                .iter()
                .filter(|g| !g.cosine.is_empty())
                .map(|g| g.weight * g.cosine.iter().sum::<f64>() / g.cosine.len() as f64)
                .sum();
            cosine.push(total / mass);
        }
        if let Some(v) = frame_fraction(frame, |g| &g.correct) {
            correct.push(v);
        }
        if let Some(v) = frame_fraction(frame, |g| &g.class_match) {
            class.push(v);
        }
    }
    AssocDiag {
        n_assoc_sets: sets.get().unwrap_or(if log.iter().any(|f| f.n_particles > 0) { 1.0 } else { 0.0 }),
        assoc_accuracy: correct.get(),
        phi_a_cosine: cosine.get(),
        class_accuracy: class.get(),
    }
}

/// One metrics report row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsRow {
    pub sequence: String,
    pub variant: String,
    pub phi_odo: f64,
    pub phi_obs_drop: f64,
    pub delta_d: f64,
    pub map: Option<MapScore>,
    pub loc: LocScore,
    pub assoc: Option<AssocDiag>,
}
