//! Semantic-aware Monte Carlo localization against a [`SemanticPoleMap`].
//!
//! Four weighting variants share one filter:
//!
//! | variant | association         | likelihood                      |
//! |---------|---------------------|---------------------------------|
//! | PF      | nearest neighbor    | geometric                       |
//! | I-PF    | nearest neighbor    | geometric × inconsistency       |
//! | N-PF    | same-class neighbor | geometric                       |
//! | I+N-PF  | same-class neighbor | geometric × inconsistency       |
//!
//! All weights live in log space. Random draws come from per-particle
//! streams keyed by `(seed, step, particle)`, so serial and parallel runs
//! are bit-identical.

mod association;
mod likelihood;
mod log;

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal, StandardNormal};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use association::{
    associate_nn, associate_semantic_nn, associate_truth, cosine_similarity, semantic_inconsistency,
    AssociationResult,
};
pub use likelihood::{
    geometric_log_likelihood, inconsistency_log_likelihood, log_normal_pdf, log_sum_exp, Aggregation,
};
pub use log::{AssociationFrame, AssociationGroup, AssociationLog, ObservationTruth};

use crate::error::{Error, Result};
use crate::extract::PoleInstance;
use crate::geometry::Pose2;
use crate::map::SemanticPoleMap;
use crate::rng::{stream, stream_rng};

/// A sensor-frame pole observation; same payload as an extracted instance.
pub type Observation = PoleInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "pf")]
    Pf,
    #[serde(rename = "i-pf")]
    IPf,
    #[serde(rename = "n-pf")]
    NPf,
    #[serde(rename = "in-pf")]
    InPf,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Pf, Variant::IPf, Variant::NPf, Variant::InPf];

    pub fn uses_inconsistency(self) -> bool {
        matches!(self, Variant::IPf | Variant::InPf)
    }

    pub fn uses_semantic_nn(self) -> bool {
        matches!(self, Variant::NPf | Variant::InPf)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Pf => "pf",
            Variant::IPf => "i-pf",
            Variant::NPf => "n-pf",
            Variant::InPf => "in-pf",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("i+n-pf") && *v == Variant::InPf))
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}` (expected pf, i-pf, n-pf or in-pf)")))
    }
}

/// Odometry noise model: per-axis std `proportional·|component| + floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MotionNoise {
    pub proportional: f64,
    pub floor_trans: f64,
    pub floor_rot: f64,
}

impl Default for MotionNoise {
    fn default() -> Self {
        Self {
            proportional: 0.0,
            floor_trans: 0.01,
            floor_rot: 0.002,
        }
    }
}

impl MotionNoise {
    pub fn std_for(&self, odom: &Pose2) -> [f64; 3] {
        [
            self.proportional * odom.x.abs() + self.floor_trans,
            self.proportional * odom.y.abs() + self.floor_trans,
            self.proportional * odom.theta.abs() + self.floor_rot,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub sigma_geo: f64,
    pub sigma_sem: f64,
    pub gate_distance: f64,
    pub variant: Variant,
    /// Resample when ESS drops below this fraction of the particle count.
    pub resample_threshold: f64,
    /// Initial per-axis std (x, y, theta).
    pub init_spread: [f64; 3],
    /// Set from the run seed, never from a config file.
    #[serde(skip)]
    pub seed: u64,
    /// Set from the odometry noise model, never from a config file.
    #[serde(skip)]
    pub motion: MotionNoise,
    /// Typical increment magnitude (meters, radians) whose proportional
    /// noise is added to the prediction floor. The proportional term alone
    /// is computed from the noisy increment and vanishes whenever that
    /// increment happens to be small.
    pub motion_reference: [f64; 2],
    pub inconsistency_aggregation: Aggregation,
    pub parallel: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            n_particles: 500,
            sigma_geo: 1.0,
            sigma_sem: 0.5,
            gate_distance: 5.0,
            variant: Variant::Pf,
            resample_threshold: 0.5,
            init_spread: [0.5, 0.5, 0.05],
            seed: 0,
            motion: MotionNoise::default(),
            motion_reference: [7.5, 0.375],
            inconsistency_aggregation: Aggregation::Sum,
            parallel: true,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_geo", self.sigma_geo),
            ("sigma_sem", self.sigma_sem),
            ("gate_distance", self.gate_distance),
            ("resample_threshold", self.resample_threshold),
        ];
        if self.n_particles == 0 {
            return Err(Error::Config("filter.n_particles must be positive".into()));
        }
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("filter.{name} must be positive, got {v}")));
            }
        }
        if self.init_spread.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("filter.init_spread must be non-negative".into()));
        }
        if self.motion_reference.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Config("filter.motion_reference must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub pose: Pose2,
    pub log_weight: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FilterEvents {
    pub degeneracy_resets: usize,
    pub antipodal_fallbacks: usize,
    pub resamples: usize,
}

/// Per-particle output of a measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRecord {
    pub associations: Vec<Vec<Option<usize>>>,
    pub log_likelihoods: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutput {
    pub estimate: Pose2,
    pub associations: AssociationFrame,
    pub resampled: bool,
}

/// Association and log-likelihood of one particle pose under `config.variant`.
pub fn particle_log_likelihood(
    pose: &Pose2,
    obs: &[Observation],
    map: &SemanticPoleMap,
    config: &FilterConfig,
) -> Result<(AssociationResult, f64)> {
    let mut assoc = if config.variant.uses_semantic_nn() {
        associate_semantic_nn(obs, pose, map, config.gate_distance)?
    } else {
        associate_nn(obs, pose, map, config.gate_distance)?
    };
    let mut ll = geometric_log_likelihood(&assoc.distances, config.sigma_geo);
    if config.variant.uses_inconsistency() {
        assoc.inconsistencies = semantic_inconsistency(&assoc, obs, map)?;
        ll += inconsistency_log_likelihood(&assoc.inconsistencies, config.sigma_sem, config.inconsistency_aggregation);
    }
    Ok((assoc, ll))
}

/// Systematic resampling: offspring indices for pointer `(u0 + i) / n`.
pub fn systematic_indices(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cumulative = weights.first().copied().unwrap_or(0.0);
    let mut j = 0;
    for i in 0..n {
        let pointer = (u0 + i as f64) / n as f64;
        while pointer > cumulative && j + 1 < n {
            j += 1;
            cumulative += weights[j];
        }
        out.push(j);
    }
    out
}

/// Effective sample size `1 / Σ w²` of normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct FilterState {
    particles: Vec<Particle>,
    config: FilterConfig,
    step: u64,
    events: FilterEvents,
}

impl FilterState {
    /// Samples particles from independent Gaussians around `initial_pose`.
    pub fn init(initial_pose: Pose2, config: FilterConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_particles;
        let log_w = -(n as f64).ln();
        let spread = config.init_spread;
        let particles = (0..n)
            .map(|k| {
                let mut rng = stream_rng(config.seed, stream::FILTER_INIT, 0, k as u64);
                let mut draw = |s: f64| s * rng.sample::<f64, _>(StandardNormal);
                let pose = Pose2::new(
                    initial_pose.x + draw(spread[0]),
                    initial_pose.y + draw(spread[1]),
                    initial_pose.theta + draw(spread[2]),
                );
                Particle { pose, log_weight: log_w }
            })
            .collect();
        Ok(Self {
            particles,
            config,
            step: 0,
            events: FilterEvents::default(),
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// Number of completed [`FilterState::step`] calls.
    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn events(&self) -> FilterEvents {
        self.events
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.log_weight.exp()).collect()
    }

    /// Moves every particle by `odom`, perturbed per axis with std `noise`.
    pub fn predict(&mut self, odom: &Pose2, noise: [f64; 3]) {
        let seed = self.config.seed;
        let step = self.step;
        let apply = |k: usize, p: &mut Particle| {
            let mut rng = stream_rng(seed, stream::FILTER_MOTION, step, k as u64);
            let mut jitter = |s: f64| {
                if s > 0.0 {
                    Normal::new(0.0, s).expect("finite std").sample(&mut rng)
                } else {
                    0.0
                }
            };
            let delta = Pose2 {
                x: odom.x + jitter(noise[0]),
                y: odom.y + jitter(noise[1]),
                theta: odom.theta + jitter(noise[2]),
            };
            p.pose = p.pose.compose(&delta);
        };
        if self.config.parallel {
            self.particles.par_iter_mut().enumerate().for_each(|(k, p)| apply(k, p));
        } else {
            self.particles.iter_mut().enumerate().for_each(|(k, p)| apply(k, p));
        }
    }

    /// Reweights particles by the observation likelihood and renormalizes.
    pub fn update_weights(&mut self, obs: &[Observation], map: &SemanticPoleMap) -> Result<UpdateRecord> {
        if obs.is_empty() {
            return Ok(UpdateRecord {
                associations: vec![Vec::new(); self.particles.len()],
                log_likelihoods: vec![0.0; self.particles.len()],
            });
        }
        if map.is_empty() {
            return Err(Error::EmptyMap);
        }
        let config = &self.config;
        let eval = |p: &Particle| particle_log_likelihood(&p.pose, obs, map, config).map(|(a, ll)| (a.pairs, ll));
        let results: Vec<(Vec<Option<usize>>, f64)> = if config.parallel {
            self.particles.par_iter().map(eval).collect::<Result<_>>()?
        } else {
            self.particles.iter().map(eval).collect::<Result<_>>()?
        };

        let (associations, log_likelihoods): (Vec<_>, Vec<_>) = results.into_iter().unzip();
        for (p, ll) in self.particles.iter_mut().zip(&log_likelihoods) {
            p.log_weight += ll;
        }
        self.normalize();
        Ok(UpdateRecord {
            associations,
            log_likelihoods,
        })
    }

    fn normalize(&mut self) {
        let logs: Vec<f64> = self.particles.iter().map(|p| p.log_weight).collect();
        let total = log_sum_exp(&logs);
        if total.is_finite() {
            self.particles.iter_mut().for_each(|p| p.log_weight -= total);
        } else {
            let uniform = -(self.particles.len() as f64).ln();
            self.particles.iter_mut().for_each(|p| p.log_weight = uniform);
            self.events.degeneracy_resets += 1;
        }
    }

    pub fn effective_sample_size(&self) -> f64 {
        effective_sample_size(&self.weights())
    }

    /// Systematic resampling when ESS falls below the configured fraction.
    pub fn resample(&mut self) -> bool {
        self.resample_parents().is_some()
    }

    /// Resamples when due and returns each new particle's parent index.
    fn resample_parents(&mut self) -> Option<Vec<usize>> {
        let n = self.particles.len();
        let weights = self.weights();
        if effective_sample_size(&weights) >= self.config.resample_threshold * n as f64 {
            return None;
        }
        let mut rng = stream_rng(self.config.seed, stream::FILTER_RESAMPLE, self.step, 0);
        let u0: f64 = rng.random();
        let uniform = -(n as f64).ln();
        let parents = systematic_indices(&weights, u0);
        self.particles = parents
            .iter()
            .map(|&j| Particle {
                pose: self.particles[j].pose,
                log_weight: uniform,
            })
            .collect();
        self.events.resamples += 1;
        Some(parents)
    }

    /// Weighted mean position and circular-mean heading.
    pub fn estimate_pose(&mut self) -> Pose2 {
        let (mut x, mut y, mut s, mut c) = (0.0, 0.0, 0.0, 0.0);
        for p in &self.particles {
            let w = p.log_weight.exp();
            x += w * p.pose.x;
            y += w * p.pose.y;
            s += w * p.pose.theta.sin();
            c += w * p.pose.theta.cos();
        }
        let theta = if s.hypot(c) < 1e-12 {
            self.events.antipodal_fallbacks += 1;
            let mut best = 0;
            for (k, p) in self.particles.iter().enumerate() {
                if p.log_weight > self.particles[best].log_weight {
                    best = k;
                }
            }
            self.particles[best].pose.theta
        } else {
            s.atan2(c)
        };
        Pose2::new(x, y, theta)
    }

    /// One filter cycle: predict (when `odom` is given), update, resample,
    /// estimate.
    pub fn step(&mut self, odom: Option<&Pose2>, obs: &[Observation], map: &SemanticPoleMap) -> Result<StepOutput> {
        if let Some(odom) = odom {
            let noise = self.config.motion.std_for(odom);
            self.predict(odom, noise);
        }
        let record = self.update_weights(obs, map)?;
        let mut associations = AssociationFrame::from_sets(self.step, &record.associations, obs, map);
        let weights = self.weights();
        let parents = self.resample_parents();
        let mut survivors = vec![1; weights.len()];
        if let Some(parents) = &parents {
            survivors.fill(0);
            parents.iter().for_each(|&j| survivors[j] += 1);
        }
        associations.set_posterior(&weights, &survivors);
        let resampled = parents.is_some();
        let estimate = self.estimate_pose();
        self.step += 1;
        Ok(StepOutput {
            estimate,
            associations,
            resampled,
        })
    }
}
