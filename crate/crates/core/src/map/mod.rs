//! Multi-layer semantic pole-map construction.
//!
//! Keyframe instances are registered into the world frame, split by class,
//! linked whenever two circles overlap, and every connected component is
//! averaged into one [`Landmark`]. Each class forms its own layer.

mod index;

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use index::KdTree2;

use crate::error::{Error, Result};
use crate::extract::{argmax, instance_order, GroundTruth, PoleInstance};
use crate::geometry::{Circle, Pose2};

/// Aggregated map entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub circle: Circle,
    pub feature: Vec<f64>,
    pub prob: Vec<f64>,
    pub class_id: usize,
    pub obs_count: usize,
    /// Most frequent ground-truth source among the members, when known.
    pub truth: Option<GroundTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapConfig {
    /// `false` clusters all classes together (the single-layer baseline).
    pub multi_layer: bool,
    /// Landmarks observed fewer times are dropped.
    pub min_obs_count: usize,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            multi_layer: true,
            min_obs_count: 1,
        }
    }
}

/// Class-layered landmark collection with nearest-neighbor indices.
///
/// Landmark ids are positions in [`SemanticPoleMap::landmarks`], which is
/// sorted by `(class_id, lx, ly)`; each layer is therefore a contiguous run.
#[derive(Debug, Clone)]
pub struct SemanticPoleMap {
    k: usize,
    d: usize,
    config: MapConfig,
    landmarks: Vec<Landmark>,
    layers: BTreeMap<usize, (Range<usize>, KdTree2)>,
    all: KdTree2,
    by_truth: HashMap<usize, usize>,
}

impl SemanticPoleMap {
    pub fn new(k: usize, d: usize, mut landmarks: Vec<Landmark>, config: MapConfig) -> Self {
        landmarks.sort_by(|a, b| {
            a.class_id
                .cmp(&b.class_id)
                .then(a.circle.lx.total_cmp(&b.circle.lx))
                .then(a.circle.ly.total_cmp(&b.circle.ly))
        });

        let mut layers = BTreeMap::new();
        let mut start = 0;
        while start < landmarks.len() {
            let class = landmarks[start].class_id;
            let end = start + landmarks[start..].iter().take_while(|l| l.class_id == class).count();
            let tree = KdTree2::build((start..end).map(|i| (i, landmarks[i].circle.center())));
            layers.insert(class, (start..end, tree));
            start = end;
        }
        let all = KdTree2::build(landmarks.iter().enumerate().map(|(i, l)| (i, l.circle.center())));

        let mut by_truth = HashMap::new();
        for (i, l) in landmarks.iter().enumerate() {
            if let Some(t) = l.truth {
                by_truth.entry(t.landmark).or_insert(i);
            }
        }

        Self {
            k,
            d,
            config,
            landmarks,
            layers,
            all,
            by_truth,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn config(&self) -> &MapConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn landmark(&self, id: usize) -> &Landmark {
        &self.landmarks[id]
    }

    pub fn layer_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.layers.keys().copied()
    }

    pub fn layer(&self, class_id: usize) -> &[Landmark] {
        match self.layers.get(&class_id) {
            Some((range, _)) => &self.landmarks[range.clone()],
            None => &[],
        }
    }

    /// Nearest landmark over all layers: `(id, distance)`.
    pub fn nearest(&self, p: [f64; 2]) -> Option<(usize, f64)> {
        self.all.nearest(p).map(|(id, d2)| (id, d2.sqrt()))
    }

    /// Nearest landmark within the layer of `class_id`.
    pub fn nearest_in_layer(&self, p: [f64; 2], class_id: usize) -> Option<(usize, f64)> {
        self.layers
            .get(&class_id)
            .and_then(|(_, tree)| tree.nearest(p))
            .map(|(id, d2)| (id, d2.sqrt()))
    }

    /// Landmark whose ground-truth source is `truth_landmark`.
    pub fn find_by_truth(&self, truth_landmark: usize) -> Option<usize> {
        self.by_truth.get(&truth_landmark).copied()
    }
}

/// Registers a sensor-frame instance into the world frame.
pub fn transform_instance(instance: &PoleInstance, pose: &Pose2) -> PoleInstance {
    let [lx, ly] = pose.transform_point(instance.circle.center());
    PoleInstance {
        circle: Circle::new(lx, ly, instance.circle.r),
        ..instance.clone()
    }
}

/// Circles overlap when their centers are no farther apart than the radii sum.
pub fn overlap(a: &Circle, b: &Circle) -> bool {
    a.center_distance(b) <= a.r + b.r
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so the representative is order independent.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Connected components of the overlap graph.
///
/// With `per_class` set only instances of equal class are linked. Clusters
/// are returned as sorted index lists ordered by their smallest index.
pub fn cluster_instances(instances: &[PoleInstance], per_class: bool) -> Vec<Vec<usize>> {
    let n = instances.len();
    let mut uf = UnionFind::new(n);
    let max_r = instances.iter().map(|i| i.circle.r).fold(0.0, f64::max);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| instances[a].circle.lx.total_cmp(&instances[b].circle.lx).then(a.cmp(&b)));
    for (pos, &a) in order.iter().enumerate() {
        let ca = &instances[a].circle;
        for &b in &order[pos + 1..] {
            let cb = &instances[b].circle;
            if cb.lx - ca.lx > ca.r + max_r {
                break;
            }
            if per_class && instances[a].class_id != instances[b].class_id {
                continue;
            }
            if overlap(ca, cb) {
                uf.union(a, b);
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        groups.entry(root).or_default().push(i);
    }
    groups.into_values().collect()
}

fn mean_vectors<'a>(rows: impl Iterator<Item = &'a [f64]>, len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    let mut n = 0usize;
    for row in rows {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        n += 1;
    }
    acc.iter_mut().for_each(|a| *a /= n as f64);
    acc
}

fn aggregate_members(members: &[&PoleInstance]) -> Landmark {
    assert!(!members.is_empty(), "cannot aggregate an empty cluster");
    let mut sorted: Vec<&PoleInstance> = members.to_vec();
    sorted.sort_by(|a, b| instance_order(a, b).then(a.circle.r.total_cmp(&b.circle.r)));

    let m = sorted.len() as f64;
    let circle = Circle::new(
        sorted.iter().map(|i| i.circle.lx).sum::<f64>() / m,
        sorted.iter().map(|i| i.circle.ly).sum::<f64>() / m,
        sorted.iter().map(|i| i.circle.r).sum::<f64>() / m,
    );
    let feature = mean_vectors(sorted.iter().map(|i| i.feature.as_slice()), sorted[0].feature.len());
    let prob = mean_vectors(sorted.iter().map(|i| i.prob.as_slice()), sorted[0].prob.len());
    let class_id = argmax(&prob);

    let mut votes: BTreeMap<usize, (usize, GroundTruth)> = BTreeMap::new();
    for t in sorted.iter().filter_map(|i| i.truth) {
        votes.entry(t.landmark).or_insert((0, t)).0 += 1;
    }
    // BTreeMap iteration is by id, so max_by_key keeps the last maximum; walk
    // in reverse to prefer the lowest id on ties.
    let truth = votes.values().rev().max_by_key(|(count, _)| *count).map(|(_, t)| *t);

    Landmark {
        circle,
        feature,
        prob,
        class_id,
        obs_count: members.len(),
        truth,
    }
}

/// Averages the circles, features and probabilities of a same-class cluster.
///
/// # Panics
///
/// If the cluster is empty or mixes class ids; both are caller defects.
pub fn aggregate_cluster(cluster: &[&PoleInstance]) -> Landmark {
    assert!(
        cluster.windows(2).all(|w| w[0].class_id == w[1].class_id),
        "aggregate_cluster called with mixed class ids"
    );
    aggregate_members(cluster)
}

/// Batch map construction from ground-truth-posed keyframes.
pub fn build_map(
    keyframes: &[(Pose2, Vec<PoleInstance>)],
    k: usize,
    d: usize,
    config: &MapConfig,
) -> Result<SemanticPoleMap> {
    let world: Vec<PoleInstance> = keyframes
        .iter()
        .flat_map(|(pose, instances)| instances.iter().map(move |i| transform_instance(i, pose)))
        .collect();
    for inst in &world {
        if inst.prob.len() != k || inst.feature.len() != d {
            return Err(Error::SchemaMismatch(format!(
                "instance has K={} d={}, map expects K={k} d={d}",
                inst.prob.len(),
                inst.feature.len()
            )));
        }
    }

    let landmarks = cluster_instances(&world, config.multi_layer)
        .into_iter()
        .map(|cluster| {
            let members: Vec<&PoleInstance> = cluster.iter().map(|&i| &world[i]).collect();
            if config.multi_layer {
                aggregate_cluster(&members)
            } else {
                aggregate_members(&members)
            }
        })
        .filter(|l| l.obs_count >= config.min_obs_count)
        .collect();
    Ok(SemanticPoleMap::new(k, d, landmarks, config.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn inst(lx: f64, ly: f64, r: f64, prob: Vec<f64>) -> PoleInstance {
        let class_id = argmax(&prob);
        PoleInstance {
            circle: Circle::new(lx, ly, r),
            feature: vec![1.0, 0.0],
            prob,
            class_id,
            support: 10,
            truth: None,
        }
    }

    #[test]
    fn transform_examples() {
        let i = inst(1.0, 0.0, 0.2, vec![1.0, 0.0]);
        let t = transform_instance(&i, &Pose2::new(0.0, 0.0, PI / 2.0));
        assert_abs_diff_eq!(t.circle.lx, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.circle.ly, 1.0, epsilon = 1e-12);
        assert_eq!(t.circle.r, 0.2);
        assert_eq!(transform_instance(&i, &Pose2::IDENTITY), i);

        // R(pi) (1, 1) = (-1, -1); + (2, 3) = (1, 2).
        let t = transform_instance(&inst(1.0, 1.0, 0.2, vec![1.0, 0.0]), &Pose2::new(2.0, 3.0, PI));
        assert_abs_diff_eq!(t.circle.lx, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.circle.ly, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let a = Circle::new(0.0, 0.0, 0.3);
        assert!(overlap(&a, &Circle::new(0.5, 0.0, 0.3)));
        assert!(!overlap(&a, &Circle::new(1.0, 0.0, 0.3)));
        assert!(overlap(&Circle::new(0.0, 0.0, 0.25), &Circle::new(0.5, 0.0, 0.25)));
    }

    #[test]
    fn chain_forms_one_component() {
        let xs = [0.0, 0.5, 1.0];
        let items: Vec<PoleInstance> = xs.iter().map(|&x| inst(x, 0.0, 0.3, vec![1.0, 0.0])).collect();
        assert!(!overlap(&items[0].circle, &items[2].circle));
        assert_eq!(cluster_instances(&items, true), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn classes_never_share_clusters() {
        let items = vec![inst(0.0, 0.0, 0.3, vec![1.0, 0.0]), inst(0.0, 0.0, 0.3, vec![0.0, 1.0])];
        assert_eq!(cluster_instances(&items, true), vec![vec![0], vec![1]]);
        assert_eq!(cluster_instances(&items, false), vec![vec![0, 1]]);
        assert!(cluster_instances(&[], true).is_empty());
    }

    #[test]
    fn aggregate_examples() {
        let a = inst(0.0, 0.0, 0.3, vec![1.0, 0.0]);
        let b = inst(0.1, 0.0, 0.3, vec![1.0, 0.0]);
        let l = aggregate_cluster(&[&a, &b]);
        assert_abs_diff_eq!(l.circle.lx, 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(l.circle.r, 0.3, epsilon = 1e-12);
        assert_eq!(l.obs_count, 2);

        let l = aggregate_cluster(&[&a]);
        assert_eq!((l.circle, l.feature.clone(), l.prob.clone(), l.obs_count), (a.circle, a.feature.clone(), a.prob.clone(), 1));

        // Shared class 0 for the contract; probs average to exactly [0.5, 0.5].
        let mk = |p: Vec<f64>| PoleInstance { class_id: 0, ..inst(0.0, 0.0, 0.3, p) };
        let (x, y, z) = (mk(vec![0.6, 0.4]), mk(vec![0.7, 0.3]), mk(vec![0.2, 0.8]));
        let l = aggregate_cluster(&[&x, &y, &z]);
        assert_abs_diff_eq!(l.prob[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(l.prob[1], 0.5, epsilon = 1e-12);
        assert_eq!(l.class_id, 0);
    }

    #[test]
    #[should_panic(expected = "mixed class ids")]
    fn aggregate_rejects_mixed_classes() {
        let a = inst(0.0, 0.0, 0.3, vec![1.0, 0.0]);
        let b = inst(0.0, 0.0, 0.3, vec![0.0, 1.0]);
        aggregate_cluster(&[&a, &b]);
    }

    #[test]
    fn build_map_examples() {
        let empty = build_map(&[], 2, 2, &MapConfig::default()).unwrap();
        assert!(empty.is_empty());

        let single = build_map(
            &[(Pose2::new(1.0, 0.0, 0.0), vec![inst(2.0, 0.0, 0.2, vec![1.0, 0.0])])],
            2,
            2,
            &MapConfig::default(),
        )
        .unwrap();
        assert_eq!(single.len(), 1);
        assert_abs_diff_eq!(single.landmark(0).circle.lx, 3.0, epsilon = 1e-12);

        // The same pole seen from two poses.
        let frames = vec![
            (Pose2::new(0.0, 0.0, 0.0), vec![inst(5.0, 0.0, 0.2, vec![1.0, 0.0])]),
            (Pose2::new(2.0, 0.0, 0.0), vec![inst(3.02, 0.0, 0.2, vec![1.0, 0.0])]),
        ];
        let m = build_map(&frames, 2, 2, &MapConfig::default()).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.landmark(0).obs_count, 2);

        // Conflicting classes at the same spot end up in separate layers.
        let frames = vec![
            (Pose2::new(0.0, 0.0, 0.0), vec![inst(5.0, 0.0, 0.2, vec![0.9, 0.1])]),
            (Pose2::new(2.0, 0.0, 0.0), vec![inst(3.0, 0.0, 0.2, vec![0.2, 0.8])]),
        ];
        let m = build_map(&frames, 2, 2, &MapConfig::default()).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.layer(0).len(), 1);
        assert_eq!(m.layer(1).len(), 1);
        let single = build_map(&frames, 2, 2, &MapConfig { multi_layer: false, ..Default::default() }).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let frames = vec![(Pose2::IDENTITY, vec![inst(0.0, 0.0, 0.2, vec![1.0, 0.0])])];
        assert!(matches!(build_map(&frames, 3, 2, &MapConfig::default()), Err(Error::SchemaMismatch(_))));
    }

    fn random_frames(rng: &mut ChaCha8Rng) -> Vec<(Pose2, Vec<PoleInstance>)> {
        let poles: Vec<(f64, f64)> = (0..15).map(|_| (rng.random_range(0.0..30.0), rng.random_range(0.0..30.0))).collect();
        (0..6)
            .map(|_| {
                let pose = Pose2::new(rng.random_range(0.0..30.0), rng.random_range(0.0..30.0), rng.random_range(-PI..PI));
                let mut items = Vec::new();
                for &(x, y) in &poles {
                    if !rng.random_bool(0.7) {
                        continue;
                    }
                    let world = [x + rng.random_range(-0.1..0.1), y + rng.random_range(-0.1..0.1)];
                    let [sx, sy] = pose.inverse_transform_point(world);
                    let p0 = rng.random_range(0.0..1.0);
                    let mut i = inst(sx, sy, rng.random_range(0.1..0.4), vec![p0, 1.0 - p0]);
                    i.feature = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
                    items.push(i);
                }
                (pose, items)
            })
            .collect()
    }

    fn close(a: &Landmark, b: &Landmark) -> bool {
        a.class_id == b.class_id
            && a.obs_count == b.obs_count
            && (a.circle.lx - b.circle.lx).abs() < 1e-9
            && (a.circle.ly - b.circle.ly).abs() < 1e-9
            && (a.circle.r - b.circle.r).abs() < 1e-9
            && a.feature.iter().zip(&b.feature).all(|(x, y)| (x - y).abs() < 1e-9)
            && a.prob.iter().zip(&b.prob).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn build_map_is_order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let frames = random_frames(&mut rng);
        let reference = build_map(&frames, 2, 2, &MapConfig::default()).unwrap();
        for _ in 0..50 {
            let mut shuffled = frames.clone();
            shuffled.shuffle(&mut rng);
            for (_, items) in shuffled.iter_mut() {
                items.shuffle(&mut rng);
            }
            let m = build_map(&shuffled, 2, 2, &MapConfig::default()).unwrap();
            assert_eq!(m.len(), reference.len());
            let mut unmatched: Vec<&Landmark> = m.landmarks().iter().collect();
            for l in reference.landmarks() {
                let pos = unmatched.iter().position(|o| close(l, o)).expect("landmark missing after shuffle");
                unmatched.swap_remove(pos);
            }
        }
    }

    #[test]
    fn map_invariants_hold_on_random_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let frames = random_frames(&mut rng);
            let total: usize = frames.iter().map(|(_, f)| f.len()).sum();
            let multi = build_map(&frames, 2, 2, &MapConfig::default()).unwrap();
            let single = build_map(&frames, 2, 2, &MapConfig { multi_layer: false, ..Default::default() }).unwrap();
            assert_eq!(multi.landmarks().iter().map(|l| l.obs_count).sum::<usize>(), total);
            assert_eq!(single.landmarks().iter().map(|l| l.obs_count).sum::<usize>(), total);
            assert!(single.len() <= multi.len());
            for class in multi.layer_classes() {
                for l in multi.layer(class) {
                    assert_eq!(l.class_id, class);
                    assert!((l.prob.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn truth_vote_prefers_majority_then_lowest_id() {
        let mut a = inst(0.0, 0.0, 0.3, vec![1.0, 0.0]);
        let mut b = a.clone();
        let mut c = a.clone();
        a.truth = Some(GroundTruth { landmark: 7, class_id: 0 });
        b.truth = Some(GroundTruth { landmark: 3, class_id: 0 });
        c.truth = Some(GroundTruth { landmark: 7, class_id: 0 });
        assert_eq!(aggregate_cluster(&[&a, &b, &c]).truth.unwrap().landmark, 7);
        assert_eq!(aggregate_cluster(&[&a, &b]).truth.unwrap().landmark, 3);
    }
}
