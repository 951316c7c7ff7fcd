//! Pole extraction from semantically labeled points.
//!
//! Points of each pole-like class are grouped with DBSCAN in the XY plane,
//! every cluster is fitted with a least-squares circle, and the per-point
//! embeddings and class probabilities are pooled into one instance.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Circle;

/// Below this `|det|` the centered normal equations are treated as singular.
pub const DET_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub class_id: usize,
    pub prob: Vec<f64>,
    pub feature: Vec<f64>,
}

impl LabeledPoint {
    pub fn range(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Simulator-provided identity of the physical pole behind an observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundTruth {
    pub landmark: usize,
    pub class_id: usize,
}

/// One pole extracted from a single scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleInstance {
    pub circle: Circle,
    pub feature: Vec<f64>,
    pub prob: Vec<f64>,
    pub class_id: usize,
    /// Number of points the instance was fitted from.
    pub support: usize,
    /// Only populated by the simulator.
    pub truth: Option<GroundTruth>,
}

/// Entries closer than this count as tied in [`argmax`], so rounding in a
/// mean cannot break an exact tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Index of the maximum entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + TIE_TOLERANCE {
            best = i;
        }
    }
    best
}

/// DBSCAN over the XY projection of `points`.
///
/// Returns clusters as sorted index lists, ordered by their smallest index.
/// Border points reachable from several clusters join the cluster of their
/// nearest core point (ties by core coordinates), which keeps the result
/// independent of input order. A cluster left with fewer than `min_points`
/// members after border assignment is dropped as noise.
pub fn cluster_points(points: &[[f64; 2]], eps: f64, min_points: usize) -> Vec<Vec<usize>> {
    assert!(eps > 0.0, "eps must be positive");
    assert!(min_points >= 1, "min_points must be at least 1");
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }
    let eps2 = eps * eps;
    let dist2 = |a: usize, b: usize| {
        let dx = points[a][0] - points[b][0];
        let dy = points[a][1] - points[b][1];
        dx * dx + dy * dy
    };

    let neighbors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| dist2(i, j) <= eps2).collect())
        .collect();
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_points).collect();

    // Connected components over core points.
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    for seed in 0..n {
        if !is_core[seed] || label[seed].is_some() {
            continue;
        }
        let id = n_clusters;
        n_clusters += 1;
        label[seed] = Some(id);
        let mut stack = vec![seed];
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if is_core[q] && label[q].is_none() {
                    label[q] = Some(id);
                    stack.push(q);
                }
            }
        }
    }

    for p in 0..n {
        if is_core[p] {
            continue;
        }
        let nearest_core = neighbors[p].iter().copied().filter(|&q| is_core[q]).min_by(|&a, &b| {
            dist2(p, a)
                .total_cmp(&dist2(p, b))
                .then(points[a][0].total_cmp(&points[b][0]))
                .then(points[a][1].total_cmp(&points[b][1]))
        });
        label[p] = nearest_core.and_then(|q| label[q]);
    }

    let mut clusters = vec![Vec::new(); n_clusters];
    for (p, l) in label.iter().enumerate() {
        if let Some(id) = l {
            clusters[*id].push(p);
        }
    }
    clusters.retain(|c| c.len() >= min_points);
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Least-squares circle through `points`, solved on mean-centered coordinates.
/// The radius is the mean distance of the points to the fitted center.
pub fn fit_circle(points: &[[f64; 2]]) -> Result<Circle> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientSupport { needed: 3, got: n });
    }
    let nf = n as f64;
    let mean_u = points.iter().map(|p| p[0]).sum::<f64>() / nf;
    let mean_v = points.iter().map(|p| p[1]).sum::<f64>() / nf;

    let (mut suu, mut svv, mut suv) = (0.0, 0.0, 0.0);
    let (mut suuu, mut svvv, mut suuv, mut suvv) = (0.0, 0.0, 0.0, 0.0);
    for p in points {
        let u = p[0] - mean_u;
        let v = p[1] - mean_v;
        suu += u * u;
        svv += v * v;
        suv += u * v;
        suuu += u * u * u;
        svvv += v * v * v;
        suuv += u * u * v;
        suvv += u * v * v;
    }

    let det = suu * svv - suv * suv;
    if !(det.abs() >= DET_EPSILON) {
        return Err(Error::DegenerateGeometry { det });
    }
    let b1 = 0.5 * (suuu + suvv);
    let b2 = 0.5 * (svvv + suuv);
    let uc = (b1 * svv - suv * b2) / det;
    let vc = (suu * b2 - suv * b1) / det;

    let lx = uc + mean_u;
    let ly = vc + mean_v;
    let r = points.iter().map(|p| (p[0] - lx).hypot(p[1] - ly)).sum::<f64>() / nf;
    Ok(Circle::new(lx, ly, r))
}

/// Pooled semantics of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSemantics {
    pub feature: Vec<f64>,
    pub prob: Vec<f64>,
    pub class_id: usize,
}

/// Elementwise max of the features, mean of the probabilities, argmax class.
pub fn pool_semantics<F, P>(features: &[F], probs: &[P]) -> Result<PooledSemantics>
where
    F: AsRef<[f64]>,
    P: AsRef<[f64]>,
{
    if features.is_empty() || probs.is_empty() {
        return Err(Error::InsufficientSupport {
            needed: 1,
            got: features.len().min(probs.len()),
        });
    }
    if features.len() != probs.len() {
        return Err(Error::InputMismatch(format!(
            "{} feature rows vs {} probability rows",
            features.len(),
            probs.len()
        )));
    }

    let mut feature = features[0].as_ref().to_vec();
    for row in &features[1..] {
        for (acc, &v) in feature.iter_mut().zip(row.as_ref()) {
            *acc = acc.max(v);
        }
    }

    let k = probs[0].as_ref().len();
    let mut prob = vec![0.0; k];
    for row in probs {
        for (acc, &v) in prob.iter_mut().zip(row.as_ref()) {
            *acc += v;
        }
    }
    let n = probs.len() as f64;
    prob.iter_mut().for_each(|p| *p /= n);

    let class_id = argmax(&prob);
    Ok(PooledSemantics {
        feature,
        prob,
        class_id,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractConfig {
    /// Class ids treated as pole-like; other points are ignored.
    pub pole_classes: Vec<usize>,
    pub eps: f64,
    pub min_points: usize,
    pub max_range: f64,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            pole_classes: vec![0, 1, 2, 3],
            eps: 0.5,
            min_points: 3,
            max_range: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExtractDiagnostics {
    pub out_of_range: usize,
    pub clusters: usize,
    pub degenerate: usize,
    pub insufficient: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub instances: Vec<PoleInstance>,
    pub diagnostics: ExtractDiagnostics,
}

/// Per-class clustering, fitting and pooling of one scan.
///
/// Degenerate clusters are skipped and tallied, never reported as errors.
pub fn extract_poles(points: &[LabeledPoint], config: &ExtractConfig) -> Extraction {
    let mut diagnostics = ExtractDiagnostics::default();
    let in_range: Vec<&LabeledPoint> = points
        .iter()
        .filter(|p| {
            let keep = p.range() <= config.max_range;
            if !keep {
                diagnostics.out_of_range += 1;
            }
            keep
        })
        .collect();

    let mut classes = config.pole_classes.clone();
    classes.sort_unstable();
    classes.dedup();

    let mut instances = Vec::new();
    for class in classes {
        let members: Vec<&LabeledPoint> =
            in_range.iter().copied().filter(|p| p.class_id == class).collect();
        let xy: Vec<[f64; 2]> = members.iter().map(|p| [p.x, p.y]).collect();
        for cluster in cluster_points(&xy, config.eps, config.min_points) {
            diagnostics.clusters += 1;
            let pts: Vec<[f64; 2]> = cluster.iter().map(|&i| xy[i]).collect();
            let circle = match fit_circle(&pts) {
                Ok(c) => c,
                Err(Error::DegenerateGeometry { .. }) => {
                    diagnostics.degenerate += 1;
                    continue;
                }
                Err(_) => {
                    diagnostics.insufficient += 1;
                    continue;
                }
            };
            let features: Vec<&[f64]> = cluster.iter().map(|&i| members[i].feature.as_slice()).collect();
            let probs: Vec<&[f64]> = cluster.iter().map(|&i| members[i].prob.as_slice()).collect();
            let pooled = pool_semantics(&features, &probs).expect("cluster is nonempty");
            instances.push(PoleInstance {
                circle,
                feature: pooled.feature,
                prob: pooled.prob,
                class_id: pooled.class_id,
                support: cluster.len(),
                truth: None,
            });
        }
    }
    instances.sort_by(instance_order);
    Extraction {
        instances,
        diagnostics,
    }
}

pub(crate) fn instance_order(a: &PoleInstance, b: &PoleInstance) -> Ordering {
    a.class_id
        .cmp(&b.class_id)
        .then(a.circle.lx.total_cmp(&b.circle.lx))
        .then(a.circle.ly.total_cmp(&b.circle.ly))
}
