//! Seeded synthetic worlds, trajectories, scans and noise models.
//!
//! Every function is a pure function of its arguments: randomness comes from
//! [`crate::rng`] streams keyed by the seed, the step and the item index.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{GroundTruth, LabeledPoint};
use crate::geometry::{wrap_angle, Circle, Pose2};
use crate::localization::Observation;
use crate::map::{Landmark, MapConfig, SemanticPoleMap};
use crate::rng::{stream, stream_rng, StreamRng};

/// Placement attempts per landmark before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldSpec {
    /// Width and height of the rectangle `[0, w] × [0, h]`.
    pub extent: [f64; 2],
    pub n_landmarks: usize,
    pub k: usize,
    pub d: usize,
    /// Class probabilities; empty means uniform.
    pub class_mix: Vec<f64>,
    pub radius_range: [f64; 2],
    /// Per-dimension std of the feature perturbation, for landmarks and for
    /// each observation of them.
    pub feature_noise_std: f64,
    /// Probability that an observation reports a wrong class.
    pub label_flip_prob: f64,
    /// Each landmark is always mistaken for the same other class, drawn once
    /// per landmark; otherwise every flip draws a fresh wrong class.
    pub persistent_flips: bool,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            extent: [150.0, 150.0],
            n_landmarks: 100,
            k: 4,
            d: 16,
            class_mix: Vec::new(),
            radius_range: [0.1, 0.3],
            feature_noise_std: 0.2,
            label_flip_prob: 0.1,
            persistent_flips: true,
            seed: 0,
        }
    }
}

impl WorldSpec {
    pub fn class_weights(&self) -> Vec<f64> {
        if self.class_mix.is_empty() {
            vec![1.0 / self.k as f64; self.k]
        } else {
            self.class_mix.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_landmarks == 0 {
            return bad("world.n_landmarks must be at least 1".into());
        }
        if self.k == 0 || self.d == 0 {
            return bad("world.k and world.d must be positive".into());
        }
        if !(self.extent[0] > 0.0 && self.extent[1] > 0.0) {
            return bad("world.extent must be positive".into());
        }
        let [lo, hi] = self.radius_range;
        if !(lo > 0.0 && hi >= lo) {
            return bad(format!("world.radius_range must satisfy 0 < min <= max, got [{lo}, {hi}]"));
        }
        let mix = self.class_weights();
        if mix.len() != self.k {
            return bad(format!("world.class_mix has {} entries for k = {}", mix.len(), self.k));
        }
        if mix.iter().any(|p| *p < 0.0) || (mix.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return bad("world.class_mix must be a probability vector".into());
        }
        if !(0.0..=1.0).contains(&self.label_flip_prob) || self.feature_noise_std < 0.0 {
            return bad("world.label_flip_prob must lie in [0, 1] and feature_noise_std be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Odometry noise scale `φ_odo`.
    pub phi_odo: f64,
    /// Observation dropout fraction `φ_O`.
    pub phi_obs_drop: f64,
    pub obs_position_std: f64,
    pub odo_floor_trans: f64,
    pub odo_floor_rot: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            phi_odo: 0.0,
            phi_obs_drop: 0.0,
            obs_position_std: 0.05,
            odo_floor_trans: 0.01,
            odo_floor_rot: 0.002,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("phi_odo", self.phi_odo), ("phi_obs_drop", self.phi_obs_drop)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("noise.{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.obs_position_std < 0.0 || self.odo_floor_trans < 0.0 || self.odo_floor_rot < 0.0 {
            return Err(Error::Config("noise standard deviations must be non-negative".into()));
        }
        Ok(())
    }

    /// Per-axis odometry std for a ground-truth increment.
    pub fn odometry_std(&self, gt: &Pose2) -> [f64; 3] {
        [
            self.phi_odo * gt.x.abs() + self.odo_floor_trans,
            self.phi_odo * gt.y.abs() + self.odo_floor_trans,
            self.phi_odo * gt.theta.abs() + self.odo_floor_rot,
        ]
    }
}

/// Ground-truth landmarks plus the per-class canonical features.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub spec: WorldSpec,
    pub landmarks: Vec<Landmark>,
    pub class_features: Vec<Vec<f64>>,
    /// Wrong class each landmark is reported as when persistent flips are on.
    pub confusion: Vec<usize>,
}

impl World {
    /// The world as a map whose landmark truth ids are their own indices.
    pub fn to_map(&self) -> SemanticPoleMap {
        SemanticPoleMap::new(self.spec.k, self.spec.d, self.landmarks.clone(), MapConfig::default())
    }

    pub fn centers(&self) -> Vec<[f64; 2]> {
        self.landmarks.iter().map(|l| l.circle.center()).collect()
    }
}

fn gaussian(rng: &mut StreamRng, std: f64) -> f64 {
    std * rng.sample::<f64, _>(StandardNormal)
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

fn perturb(base: &[f64], std: f64, rng: &mut StreamRng) -> Vec<f64> {
    let v: Vec<f64> = base.iter().map(|b| b + gaussian(rng, std)).collect();
    // A vanishing perturbed vector keeps the base direction.
    if v.iter().all(|x| *x == 0.0) {
        return base.to_vec();
    }
    normalize(v)
}

fn categorical(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Unit-norm canonical feature of each class.
pub fn class_features(k: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            let mut rng = stream_rng(seed, stream::CLASS_FEATURE, 0, c as u64);
            loop {
                let v: Vec<f64> = (0..d).map(|_| gaussian(&mut rng, 1.0)).collect();
                if v.iter().any(|x| *x != 0.0) {
                    break normalize(v);
                }
            }
        })
        .collect()
}

/// Places landmarks uniformly with center separation at least twice the
/// maximum radius.
pub fn generate_world(spec: &WorldSpec) -> Result<World> {
    spec.validate()?;
    let min_sep = 2.0 * spec.radius_range[1];
    let cell = min_sep.max(1e-9);
    let mix = spec.class_weights();
    let canon = class_features(spec.k, spec.d, spec.seed);
    let mut grid: HashMap<(i64, i64), Vec<[f64; 2]>> = HashMap::new();
    let key = |p: [f64; 2]| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut landmarks = Vec::with_capacity(spec.n_landmarks);

    for i in 0..spec.n_landmarks {
        let mut rng = stream_rng(spec.seed, stream::WORLD, 0, i as u64);
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let p = [rng.random_range(0.0..=spec.extent[0]), rng.random_range(0.0..=spec.extent[1])];
            let (cx, cy) = key(p);
            let clear = (cx - 1..=cx + 1).all(|gx| {
                (cy - 1..=cy + 1).all(|gy| {
                    grid.get(&(gx, gy))
                        .is_none_or(|pts| pts.iter().all(|q| (q[0] - p[0]).hypot(q[1] - p[1]) >= min_sep))
                })
            });
            if clear {
                placed = Some(p);
                break;
            }
        }
        let Some(p) = placed else {
            return Err(Error::PackingFailed {
                attempts: MAX_PLACEMENT_ATTEMPTS,
                placed: i,
                requested: spec.n_landmarks,
            });
        };
        grid.entry(key(p)).or_default().push(p);

        let class_id = categorical(&mix, rng.random());
        let [lo, hi] = spec.radius_range;
        let r = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let mut prob = vec![0.0; spec.k];
        prob[class_id] = 1.0;
        landmarks.push(Landmark {
            circle: Circle::new(p[0], p[1], r),
            feature: perturb(&canon[class_id], spec.feature_noise_std, &mut rng),
            prob,
            class_id,
            obs_count: 1,
            truth: Some(GroundTruth { landmark: i, class_id }),
        });
    }
    let confusion = landmarks
        .iter()
        .enumerate()
        .map(|(i, lm)| {
            let mut rng = stream_rng(spec.seed, stream::CONFUSION, 0, i as u64);
            other_class(spec.k, lm.class_id, &mut rng)
        })
        .collect();
    Ok(World {
        spec: spec.clone(),
        landmarks,
        class_features: canon,
        confusion,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectorySpec {
    pub step_length: f64,
    pub n_steps: usize,
    /// Std of the per-step heading change (radians).
    pub turn_std: f64,
    /// Within this distance of a wall the heading steers toward the extent
    /// center (meters).
    pub boundary_margin: f64,
    /// Largest steering correction per step (radians); 0 disables steering.
    pub max_turn: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            step_length: 1.0,
            n_steps: 1001,
            turn_std: 0.02,
            boundary_margin: 40.0,
            max_turn: 0.06,
        }
    }
}

/// Smooth random walk of `n_steps` poses spaced exactly `step_length` apart.
///
/// The walk starts at the extent center. Near a wall the heading turns toward
/// the center by at most `max_turn` per step. Before each step the heading is
/// still mirrored off any wall the step would cross, so poses stay inside the
/// extent as long as `step_length` is below both side lengths.
pub fn generate_trajectory(extent: [f64; 2], spec: &TrajectorySpec, seed: u64) -> Vec<Pose2> {
    if spec.n_steps == 0 {
        return Vec::new();
    }
    debug_assert!(spec.step_length < extent[0] && spec.step_length < extent[1]);
    let mut rng = stream_rng(seed, stream::TRAJECTORY, 0, 0);
    let mut pose = Pose2::new(extent[0] / 2.0, extent[1] / 2.0, rng.random_range(-PI..PI));
    let mut out = Vec::with_capacity(spec.n_steps);
    out.push(pose);
    for _ in 1..spec.n_steps {
        let mut theta = pose.theta + gaussian(&mut rng, spec.turn_std);
        let wall = pose.x.min(pose.y).min(extent[0] - pose.x).min(extent[1] - pose.y);
        if wall < spec.boundary_margin && spec.max_turn > 0.0 {
            let home = (extent[1] / 2.0 - pose.y).atan2(extent[0] / 2.0 - pose.x);
            theta += wrap_angle(home - theta).clamp(-spec.max_turn, spec.max_turn);
        }
        let (s, c) = theta.sin_cos();
        let nx = pose.x + spec.step_length * c;
        let ny = pose.y + spec.step_length * s;
        if !(0.0..=extent[0]).contains(&nx) {
            theta = PI - theta;
        }
        if !(0.0..=extent[1]).contains(&ny) {
            theta = -theta;
        }
        theta = wrap_angle(theta);
        let (s, c) = theta.sin_cos();
        pose = Pose2::new(pose.x + spec.step_length * c, pose.y + spec.step_length * s, theta);
        out.push(pose);
    }
    out
}

fn soft_prob(k: usize, class_id: usize, rng: &mut StreamRng) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let conf = rng.random_range(0.6..0.95);
    let rest = (1.0 - conf) / (k - 1) as f64;
    (0..k).map(|c| if c == class_id { conf } else { rest }).collect()
}

/// A uniformly chosen class other than `class_id`; `class_id` itself when
/// there is no other.
fn other_class(k: usize, class_id: usize, rng: &mut StreamRng) -> usize {
    if k < 2 {
        return class_id;
    }
    let c = rng.random_range(0..k - 1);
    if c >= class_id {
        c + 1
    } else {
        c
    }
}

/// Draws the reported class and feature of landmark `i`'s observation. A
/// flip changes the label only; the feature still comes from the pole.
fn observed_semantics(world: &World, i: usize, rng: &mut StreamRng) -> (usize, Vec<f64>, bool) {
    let lm = &world.landmarks[i];
    let feature = perturb(&lm.feature, world.spec.feature_noise_std, rng);
    if world.spec.k > 1 && rng.random_bool(world.spec.label_flip_prob) {
        let c = if world.spec.persistent_flips {
            world.confusion[i]
        } else {
            other_class(world.spec.k, lm.class_id, rng)
        };
        (c, feature, true)
    } else {
        (lm.class_id, feature, false)
    }
}

/// Sensor-frame observations of every landmark within `max_range`.
pub fn simulate_scan(
    world: &World,
    pose: &Pose2,
    max_range: f64,
    noise: &NoiseSpec,
    seed: u64,
    step: u64,
) -> Vec<Observation> {
    let mut out = Vec::new();
    for (i, lm) in world.landmarks.iter().enumerate() {
        let [wx, wy] = lm.circle.center();
        if (wx - pose.x).hypot(wy - pose.y) > max_range {
            continue;
        }
        let mut rng = stream_rng(seed, stream::SCAN, step, i as u64);
        let [sx, sy] = pose.inverse_transform_point([wx, wy]);
        let lx = sx + gaussian(&mut rng, noise.obs_position_std);
        let ly = sy + gaussian(&mut rng, noise.obs_position_std);
        let (class_id, feature, _) = observed_semantics(world, i, &mut rng);
        out.push(Observation {
            circle: Circle::new(lx, ly, lm.circle.r),
            feature,
            prob: soft_prob(world.spec.k, class_id, &mut rng),
            class_id,
            support: 1,
            truth: lm.truth,
        });
    }
    out
}

/// Labeled points sampled on the surface of every visible landmark.
///
/// Each pole yields `points_per_pole` points around its circle with radial
/// noise `obs_position_std / 4` and heights in `[0, 3]` m. Points of one pole
/// share its reported class; per-point features jitter around the pole's
/// observed feature.
pub fn simulate_points(
    world: &World,
    pose: &Pose2,
    max_range: f64,
    noise: &NoiseSpec,
    points_per_pole: usize,
    seed: u64,
    step: u64,
) -> Vec<LabeledPoint> {
    let mut out = Vec::new();
    for (i, lm) in world.landmarks.iter().enumerate() {
        let [wx, wy] = lm.circle.center();
        if (wx - pose.x).hypot(wy - pose.y) > max_range {
            continue;
        }
        let mut rng = stream_rng(seed, stream::POINTS, step, i as u64);
        let [sx, sy] = pose.inverse_transform_point([wx, wy]);
        let cx = sx + gaussian(&mut rng, noise.obs_position_std);
        let cy = sy + gaussian(&mut rng, noise.obs_position_std);
        let (class_id, feature, _) = observed_semantics(world, i, &mut rng);
        let radial = Normal::new(0.0, noise.obs_position_std / 4.0).expect("non-negative std");
        for _ in 0..points_per_pole {
            let a = rng.random_range(-PI..PI);
            let rr = lm.circle.r + radial.sample(&mut rng);
            let f: Vec<f64> = feature.iter().map(|v| v + gaussian(&mut rng, 0.01)).collect();
            out.push(LabeledPoint {
                x: cx + rr * a.cos(),
                y: cy + rr * a.sin(),
                z: rng.random_range(0.0..3.0),
                class_id,
                prob: soft_prob(world.spec.k, class_id, &mut rng),
                feature: f,
            });
        }
    }
    out
}

/// Ground-truth increment perturbed per axis by `φ_odo·|component| + floor`.
pub fn corrupt_odometry(gt: &Pose2, noise: &NoiseSpec, seed: u64, step: u64) -> Pose2 {
    let std = noise.odometry_std(gt);
    let mut rng = stream_rng(seed, stream::ODOMETRY, step, 0);
    Pose2 {
        x: gt.x + gaussian(&mut rng, std[0]),
        y: gt.y + gaussian(&mut rng, std[1]),
        theta: wrap_angle(gt.theta + gaussian(&mut rng, std[2])),
    }
}

/// Removes each observation independently with probability `phi`.
pub fn drop_observations<T: Clone>(obs: &[T], phi: f64, seed: u64, step: u64) -> Vec<T> {
    obs.iter()
        .enumerate()
        .filter(|(j, _)| !stream_rng(seed, stream::DROPOUT, step, *j as u64).random_bool(phi.clamp(0.0, 1.0)))
        .map(|(_, o)| o.clone())
        .collect()
}

fn path_lengths(poses: &[Pose2]) -> Vec<f64> {
    let mut s = Vec::with_capacity(poses.len());
    let mut acc = 0.0;
    for (i, p) in poses.iter().enumerate() {
        if i > 0 {
            acc += (p.x - poses[i - 1].x).hypot(p.y - poses[i - 1].y);
        }
        s.push(acc);
    }
    s
}

/// Mapping and localization frame indices.
///
/// Keyframes are picked greedily: the first pose, then every pose that has
/// travelled at least `delta_d` past the previous keyframe. Each consecutive
/// keyframe pair contributes the interior pose closest to its path-length
/// midpoint (lower index on ties); pairs with no interior pose contribute
/// nothing.
pub fn split_keyframes(poses: &[Pose2], delta_d: f64) -> (Vec<usize>, Vec<usize>) {
    debug_assert!(delta_d > 0.0);
    if poses.is_empty() {
        return (Vec::new(), Vec::new());
    }
    // Absorbs rounding in accumulated lengths.
    const SLACK: f64 = 1e-9;
    let s = path_lengths(poses);
    let mut keys = vec![0];
    for i in 1..poses.len() {
        if s[i] - s[*keys.last().expect("nonempty")] >= delta_d - SLACK {
            keys.push(i);
        }
    }
    let mut loc = Vec::new();
    for pair in keys.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let mid = 0.5 * (s[a] + s[b]);
        let best = (a + 1..b).min_by(|&i, &j| (s[i] - mid).abs().total_cmp(&(s[j] - mid).abs()).then(i.cmp(&j)));
        if let Some(i) = best {
            loc.push(i);
        }
    }
    (keys, loc)
}
