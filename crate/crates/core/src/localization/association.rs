use crate::error::{Error, Result};
use crate::geometry::Pose2;
use crate::map::SemanticPoleMap;

use super::Observation;

/// Per-observation correspondences for one particle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssociationResult {
    /// Associated landmark id; `None` marks a gated pair.
    pub pairs: Vec<Option<usize>>,
    /// Center distances, clamped at the gate distance.
    pub distances: Vec<f64>,
    /// Semantic inconsistency per pair, filled by [`semantic_inconsistency`].
    pub inconsistencies: Vec<f64>,
}

impl AssociationResult {
    pub fn is_gated(&self, j: usize) -> bool {
        self.pairs[j].is_none()
    }

    fn push(&mut self, hit: Option<(usize, f64)>, gate: f64) {
        match hit {
            Some((id, d)) if d <= gate => {
                self.pairs.push(Some(id));
                self.distances.push(d);
            }
            _ => {
                self.pairs.push(None);
                self.distances.push(gate);
            }
        }
    }
}

fn associate_with(
    obs: &[Observation],
    pose: &Pose2,
    map: &SemanticPoleMap,
    gate: f64,
    lookup: impl Fn(&Observation, [f64; 2]) -> Option<(usize, f64)>,
) -> Result<AssociationResult> {
    if map.is_empty() {
        return Err(Error::EmptyMap);
    }
    let mut out = AssociationResult {
        pairs: Vec::with_capacity(obs.len()),
        distances: Vec::with_capacity(obs.len()),
        inconsistencies: Vec::new(),
    };
    for o in obs {
        let world = pose.transform_point(o.circle.center());
        out.push(lookup(o, world), gate);
    }
    Ok(out)
}

/// Nearest landmark over every layer of the map.
pub fn associate_nn(obs: &[Observation], pose: &Pose2, map: &SemanticPoleMap, gate: f64) -> Result<AssociationResult> {
    associate_with(obs, pose, map, gate, |_, p| map.nearest(p))
}

/// Nearest landmark restricted to the layer of the observation's class.
pub fn associate_semantic_nn(
    obs: &[Observation],
    pose: &Pose2,
    map: &SemanticPoleMap,
    gate: f64,
) -> Result<AssociationResult> {
    associate_with(obs, pose, map, gate, |o, p| map.nearest_in_layer(p, o.class_id))
}

/// Oracle association through the simulator's ground-truth ids.
///
/// Observations without truth, or whose source is absent from the map, are
/// gated.
pub fn associate_truth(obs: &[Observation], pose: &Pose2, map: &SemanticPoleMap, gate: f64) -> Result<AssociationResult> {
    associate_with(obs, pose, map, gate, |o, p| {
        let id = map.find_by_truth(o.truth?.landmark)?;
        let c = map.landmark(id).circle;
        // Same arithmetic as the index search, so equal pairs give equal distances.
        let (dx, dy) = (c.lx - p[0], c.ly - p[1]);
        Some((id, (dx * dx + dy * dy).sqrt()))
    })
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroFeature);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// `1 - cos(landmark feature, observed feature)` per pair; gated pairs get 1.
pub fn semantic_inconsistency(assoc: &AssociationResult, obs: &[Observation], map: &SemanticPoleMap) -> Result<Vec<f64>> {
    assoc
        .pairs
        .iter()
        .zip(obs)
        .map(|(pair, o)| match pair {
            Some(id) => Ok(1.0 - cosine_similarity(&map.landmark(*id).feature, &o.feature)?),
            None => Ok(1.0),
        })
        .collect()
}
