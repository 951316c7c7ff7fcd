use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::extract::GroundTruth;
use crate::map::SemanticPoleMap;

use super::association::cosine_similarity;
use super::Observation;

/// Observation metadata kept alongside the association sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationTruth {
    pub class_id: usize,
    pub truth: Option<GroundTruth>,
}

/// Particles that produced the same association set `A^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationGroup {
    pub particles: Vec<usize>,
    /// Normalized posterior weight carried by these particles.
    pub weight: f64,
    /// Particles holding this set once the step's resampling is done.
    pub survivors: usize,
    pub landmarks: Vec<Option<usize>>,
    /// Associated landmark is the observation's source (None without truth).
    pub correct: Vec<Option<bool>>,
    /// Associated landmark class equals the source's true class.
    pub class_match: Vec<Option<bool>>,
    /// Feature cosine similarity per pair; 0 for gated pairs.
    pub cosine: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationFrame {
    pub step: u64,
    pub n_particles: usize,
    pub observations: Vec<ObservationTruth>,
    pub groups: Vec<AssociationGroup>,
}

impl AssociationFrame {
    pub fn from_sets(step: u64, sets: &[Vec<Option<usize>>], obs: &[Observation], map: &SemanticPoleMap) -> Self {
        let mut by_set: BTreeMap<&[Option<usize>], Vec<usize>> = BTreeMap::new();
        for (k, set) in sets.iter().enumerate() {
            by_set.entry(set.as_slice()).or_default().push(k);
        }
        let groups = by_set
            .into_iter()
            .map(|(set, particles)| {
                let mut correct = Vec::with_capacity(set.len());
                let mut class_match = Vec::with_capacity(set.len());
                let mut cosine = Vec::with_capacity(set.len());
                for (pair, o) in set.iter().zip(obs) {
                    let lm = pair.map(|id| map.landmark(id));
                    correct.push(o.truth.map(|t| lm.and_then(|l| l.truth).is_some_and(|lt| lt.landmark == t.landmark)));
                    class_match.push(o.truth.map(|t| lm.is_some_and(|l| l.class_id == t.class_id)));
                    cosine.push(lm.and_then(|l| cosine_similarity(&l.feature, &o.feature).ok()).unwrap_or(0.0));
                }
                let n = sets.len() as f64;
                AssociationGroup {
                    weight: particles.len() as f64 / n,
                    survivors: particles.len(),
                    particles,
                    landmarks: set.to_vec(),
                    correct,
                    class_match,
                    cosine,
                }
            })
            .collect();
        Self {
            step,
            n_particles: sets.len(),
            observations: obs
                .iter()
                .map(|o| ObservationTruth {
                    class_id: o.class_id,
                    truth: o.truth,
                })
                .collect(),
            groups,
        }
    }

    /// Replaces the uniform defaults of [`AssociationFrame::from_sets`] with
    /// per-particle posterior `weights` and offspring counts `survivors`.
    pub fn set_posterior(&mut self, weights: &[f64], survivors: &[usize]) {
        for g in &mut self.groups {
            g.weight = g.particles.iter().map(|&k| weights[k]).sum();
            g.survivors = g.particles.iter().map(|&k| survivors[k]).sum();
        }
    }

    /// Number of distinct association sets held by the particles leaving
    /// the step.
    pub fn n_sets(&self) -> usize {
        self.groups.iter().filter(|g| g.survivors > 0).count()
    }
}

pub type AssociationLog = Vec<AssociationFrame>;
