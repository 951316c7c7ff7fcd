//! End-to-end runs: simulate a sequence, build the map from keyframes,
//! localize on the midpoint frames and score the result.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::{association_diagnostics, localization_errors, map_f1, MapScore, MetricsRow};
use crate::extract::{extract_poles, ExtractConfig, PoleInstance};
use crate::geometry::Pose2;
use crate::io::{RunConfig, Scan, Trajectory};
use crate::localization::{AssociationLog, FilterConfig, FilterEvents, FilterState, Observation, Variant};
use crate::map::{build_map, SemanticPoleMap};
use crate::sim::{
    corrupt_odometry, drop_observations, generate_trajectory, generate_world, simulate_points, simulate_scan,
    split_keyframes, NoiseSpec, World,
};

/// Everything the simulator produces for one sequence.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub world: World,
    /// Ground-truth pose of every frame.
    pub poses: Vec<Pose2>,
    pub mapping_frames: Vec<usize>,
    pub localization_frames: Vec<usize>,
    pub mapping_scans: Vec<Scan>,
    pub localization_scans: Vec<Scan>,
    /// Corrupted increments between consecutive localization frames; the
    /// first entry is the identity.
    pub odometry: Vec<Pose2>,
}

impl Scenario {
    pub fn truth_trajectory(&self) -> Trajectory {
        Trajectory::new(
            self.localization_frames.iter().map(|&i| i as u64).collect(),
            self.localization_frames.iter().map(|&i| self.poses[i]).collect(),
        )
    }

    pub fn odometry_trajectory(&self) -> Trajectory {
        Trajectory::new(self.localization_frames.iter().map(|&i| i as u64).collect(), self.odometry.clone())
    }

    pub fn full_trajectory(&self) -> Trajectory {
        Trajectory::new((0..self.poses.len() as u64).collect(), self.poses.clone())
    }
}

fn make_scan(cfg: &RunConfig, world: &World, frame: usize, pose: Pose2, noise: &NoiseSpec, drop: f64) -> Scan {
    let step = frame as u64;
    let (observations, points) = if cfg.sensor.point_level {
        let pts = simulate_points(world, &pose, cfg.sensor.max_range, noise, cfg.sensor.points_per_pole, cfg.seed, step);
        (Vec::new(), pts)
    } else {
        let obs = simulate_scan(world, &pose, cfg.sensor.max_range, noise, cfg.seed, step);
        (drop_observations(&obs, drop, cfg.seed, step), Vec::new())
    };
    Scan {
        frame: step,
        k: world.spec.k,
        d: world.spec.d,
        pose,
        observations,
        points,
    }
}

/// Simulates world, trajectory, keyframe split, scans and odometry.
///
/// Mapping scans see every landmark in range; localization scans lose
/// each observation with probability `noise.phi_obs_drop`.
pub fn simulate(cfg: &RunConfig) -> Result<Scenario> {
    cfg.validate()?;
    let world = generate_world(&cfg.world_spec())?;
    let poses = generate_trajectory(cfg.world.extent, &cfg.trajectory, cfg.seed);
    let (mapping_frames, localization_frames) = split_keyframes(&poses, cfg.split.delta_d);

    let mapping_noise = NoiseSpec {
        phi_obs_drop: 0.0,
        ..cfg.noise
    };
    let mapping_scans = mapping_frames
        .iter()
        .map(|&i| make_scan(cfg, &world, i, poses[i], &mapping_noise, 0.0))
        .collect();
    let mut localization_scans: Vec<Scan> = localization_frames
        .iter()
        .map(|&i| make_scan(cfg, &world, i, poses[i], &cfg.noise, cfg.noise.phi_obs_drop))
        .collect();
    if cfg.sensor.point_level {
        // Point dropout removes whole poles, keyed like observation dropout.
        for scan in &mut localization_scans {
            scan.points = drop_pole_points(&scan.points, cfg.sensor.points_per_pole, cfg.noise.phi_obs_drop, cfg.seed, scan.frame);
        }
    }

    let mut odometry = Vec::with_capacity(localization_frames.len());
    for (n, &i) in localization_frames.iter().enumerate() {
        if n == 0 {
            odometry.push(Pose2::IDENTITY);
        } else {
            let gt = poses[localization_frames[n - 1]].between(&poses[i]);
            odometry.push(corrupt_odometry(&gt, &cfg.noise, cfg.seed, i as u64));
        }
    }
    Ok(Scenario {
        world,
        poses,
        mapping_frames,
        localization_frames,
        mapping_scans,
        localization_scans,
        odometry,
    })
}

fn drop_pole_points<T: Clone>(points: &[T], per_pole: usize, phi: f64, seed: u64, step: u64) -> Vec<T> {
    if per_pole == 0 {
        return points.to_vec();
    }
    let poles: Vec<&[T]> = points.chunks(per_pole).collect();
    drop_observations(&poles, phi, seed, step).into_iter().flatten().cloned().collect()
}

/// Pole instances of a scan: its observations, or poles extracted from its
/// labeled points when it carries any.
pub fn scan_instances(scan: &Scan, extract: &ExtractConfig) -> Vec<PoleInstance> {
    if scan.points.is_empty() {
        scan.observations.clone()
    } else {
        extract_poles(&scan.points, extract).instances
    }
}

/// Labels extracted instances with the world landmark nearest to them in
/// the world frame, when one lies within `radius`.
pub fn attach_truth(instances: &mut [PoleInstance], pose: &Pose2, world: &World, radius: f64) {
    let map = world.to_map();
    for inst in instances {
        if inst.truth.is_some() {
            continue;
        }
        if let Some((id, d)) = map.nearest(pose.transform_point(inst.circle.center())) {
            if d <= radius {
                inst.truth = map.landmark(id).truth;
            }
        }
    }
}

/// Keyframes ready for [`build_map`].
pub fn keyframes(scans: &[Scan], extract: &ExtractConfig, world: Option<&World>) -> Vec<(Pose2, Vec<PoleInstance>)> {
    scans
        .iter()
        .map(|s| {
            let mut inst = scan_instances(s, extract);
            if let (Some(w), false) = (world, s.points.is_empty()) {
                attach_truth(&mut inst, &s.pose, w, 2.0 * w.spec.radius_range[1]);
            }
            (s.pose, inst)
        })
        .collect()
}

pub fn build_scenario_map(cfg: &RunConfig, scn: &Scenario) -> Result<SemanticPoleMap> {
    build_map(
        &keyframes(&scn.mapping_scans, &cfg.extract, Some(&scn.world)),
        scn.world.spec.k,
        scn.world.spec.d,
        &cfg.map,
    )
}

pub fn score_map(cfg: &RunConfig, map: &SemanticPoleMap, world: &World) -> MapScore {
    let pred: Vec<[f64; 2]> = map.landmarks().iter().map(|l| l.circle.center()).collect();
    map_f1(&pred, &world.centers(), cfg.eval.match_radius, cfg.eval.match_mode)
}

#[derive(Debug, Clone)]
pub struct LocalizationRun {
    pub variant: Variant,
    pub trajectory: Trajectory,
    pub log: AssociationLog,
    pub events: FilterEvents,
}

/// Runs one filter over a scan sequence, starting around the first scan's
/// pose. `odometry[i]` moves the filter from scan `i - 1` to scan `i`;
/// `odometry[0]` is ignored.
pub fn localize(
    map: &SemanticPoleMap,
    scans: &[Scan],
    odometry: &[Pose2],
    filter: &FilterConfig,
    extract: &ExtractConfig,
    world: Option<&World>,
) -> Result<LocalizationRun> {
    if scans.len() != odometry.len() {
        return Err(Error::InputMismatch(format!(
            "{} scans but {} odometry rows",
            scans.len(),
            odometry.len()
        )));
    }
    for s in scans {
        if s.k != map.k() || s.d != map.d() {
            return Err(Error::SchemaMismatch(format!(
                "scan frame {} has K={} d={}, map has K={} d={}",
                s.frame,
                s.k,
                s.d,
                map.k(),
                map.d()
            )));
        }
    }
    let mut steps = Vec::with_capacity(scans.len());
    let mut poses = Vec::with_capacity(scans.len());
    let mut log = Vec::with_capacity(scans.len());
    let mut events = FilterEvents::default();
    if let Some(first) = scans.first() {
        let mut state = FilterState::init(first.pose, filter.clone())?;
        for (n, (scan, odom)) in scans.iter().zip(odometry).enumerate() {
            let mut obs: Vec<Observation> = scan_instances(scan, extract);
            if let (Some(w), false) = (world, scan.points.is_empty()) {
                attach_truth(&mut obs, &scan.pose, w, 2.0 * w.spec.radius_range[1]);
            }
            let out = state.step((n > 0).then_some(odom), &obs, map)?;
            let mut frame = out.associations;
            frame.step = scan.frame;
            steps.push(scan.frame);
            poses.push(out.estimate);
            log.push(frame);
        }
        events = state.events();
    }
    Ok(LocalizationRun {
        variant: filter.variant,
        trajectory: Trajectory::new(steps, poses),
        log,
        events,
    })
}

/// Result of one simulated sequence under every configured variant.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: Scenario,
    pub map: SemanticPoleMap,
    pub map_score: MapScore,
    pub runs: Vec<LocalizationRun>,
    pub rows: Vec<MetricsRow>,
}

pub fn metrics_row(cfg: &RunConfig, variant: &str, map: Option<MapScore>, run: &LocalizationRun, truth: &Trajectory) -> Result<MetricsRow> {
    run.trajectory.check_aligned(truth)?;
    Ok(MetricsRow {
        sequence: cfg.sequence_name(),
        variant: variant.to_string(),
        phi_odo: cfg.noise.phi_odo,
        phi_obs_drop: cfg.noise.phi_obs_drop,
        delta_d: cfg.split.delta_d,
        map,
        loc: localization_errors(&run.trajectory.poses, &truth.poses)?,
        assoc: Some(association_diagnostics(&run.log)),
    })
}

pub fn run(cfg: &RunConfig) -> Result<RunResult> {
    let scenario = simulate(cfg)?;
    let map = build_scenario_map(cfg, &scenario)?;
    let map_score = score_map(cfg, &map, &scenario.world);
    let truth = scenario.truth_trajectory();
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    for &variant in &cfg.variants {
        let r = localize(
            &map,
            &scenario.localization_scans,
            &scenario.odometry,
            &cfg.filter_config(variant),
            &cfg.extract,
            Some(&scenario.world),
        )?;
        rows.push(metrics_row(cfg, variant.as_str(), Some(map_score), &r, &truth)?);
        runs.push(r);
    }
    Ok(RunResult {
        scenario,
        map,
        map_score,
        runs,
        rows,
    })
}

/// Configurations of the sweep grid, in report order: seed, then
/// `phi_odo`, `phi_obs_drop` and `delta_d`.
pub fn sweep_cells(cfg: &RunConfig) -> Vec<RunConfig> {
    let seeds = if cfg.sweep.seeds.is_empty() { vec![cfg.seed] } else { cfg.sweep.seeds.clone() };
    let mut cells = Vec::new();
    for &seed in &seeds {
        for &phi_odo in &cfg.sweep.phi_odo {
            for &phi_obs_drop in &cfg.sweep.phi_obs_drop {
                for &delta_d in &cfg.sweep.delta_d {
                    let mut c = cfg.clone();
                    c.seed = seed;
                    c.noise.phi_odo = phi_odo;
                    c.noise.phi_obs_drop = phi_obs_drop;
                    c.split.delta_d = delta_d;
                    if !cfg.sequence.is_empty() && seeds.len() > 1 {
                        c.sequence = format!("{}-seed{seed}", cfg.sequence);
                    }
                    cells.push(c);
                }
            }
        }
    }
    cells
}

/// Runs every sweep cell; rows follow [`sweep_cells`] order, then variant.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<MetricsRow>> {
    let cells = sweep_cells(cfg);
    let results: Vec<Vec<MetricsRow>> = cells.par_iter().map(|c| run(c).map(|r| r.rows)).collect::<Result<_>>()?;
    Ok(results.into_iter().flatten().collect())
}
