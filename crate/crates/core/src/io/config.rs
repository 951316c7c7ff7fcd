//! Run configuration: one TOML document with dotted section keys.
//!
//! ```toml
//! seed = 7
//! variants = ["pf", "in-pf"]
//! world.n_landmarks = 100
//! noise.phi_odo = 0.4
//! filter.n_particles = 500
//! ```
//!
//! Every field has a default and unknown keys are rejected. The environment
//! variable [`SEED_ENV`] overrides `seed`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{MatchMode, MATCH_RADIUS};
use crate::extract::ExtractConfig;
use crate::localization::{FilterConfig, MotionNoise, Variant};
use crate::map::MapConfig;
use crate::sim::{NoiseSpec, TrajectorySpec, WorldSpec};

use super::manifest::sha256_hex;
use super::read_text;

pub const SEED_ENV: &str = "POLELOC_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorConfig {
    /// Simulated detection range (meters).
    pub max_range: f64,
    /// Emit labeled points instead of pole observations.
    pub point_level: bool,
    pub points_per_pole: usize,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            max_range: 50.0,
            point_level: false,
            points_per_pole: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Keyframe spacing along the path (meters).
    pub delta_d: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { delta_d: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub match_radius: f64,
    pub match_mode: MatchMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            match_radius: MATCH_RADIUS,
            match_mode: MatchMode::Nearest,
        }
    }
}

/// Grid for the `sweep` command; empty `seeds` means the run seed alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub phi_odo: Vec<f64>,
    pub phi_obs_drop: Vec<f64>,
    pub delta_d: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            phi_odo: vec![0.0, 0.2, 0.4],
            phi_obs_drop: vec![0.0, 0.4, 0.8],
            delta_d: vec![10.0],
            seeds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Sequence label in reports; empty means `seed<seed>`.
    pub sequence: String,
    pub variants: Vec<Variant>,
    pub world: WorldSpec,
    pub trajectory: TrajectorySpec,
    pub noise: NoiseSpec,
    pub sensor: SensorConfig,
    pub split: SplitConfig,
    pub extract: ExtractConfig,
    pub map: MapConfig,
    pub filter: FilterConfig,
    pub eval: EvalConfig,
    pub sweep: SweepConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            sequence: String::new(),
            variants: Variant::ALL.to_vec(),
            world: WorldSpec::default(),
            trajectory: TrajectorySpec::default(),
            noise: NoiseSpec::default(),
            sensor: SensorConfig::default(),
            split: SplitConfig::default(),
            extract: ExtractConfig::default(),
            map: MapConfig::default(),
            filter: FilterConfig::default(),
            eval: EvalConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn sequence_name(&self) -> String {
        if self.sequence.is_empty() {
            format!("seed{}", self.seed)
        } else {
            self.sequence.clone()
        }
    }

    pub fn world_spec(&self) -> WorldSpec {
        WorldSpec {
            seed: self.seed,
            ..self.world.clone()
        }
    }

    /// The odometry model the filter assumes: the simulated one, with the
    /// floors raised by the proportional noise of `filter.motion_reference`.
    pub fn motion_noise(&self) -> MotionNoise {
        let phi = self.noise.phi_odo;
        let [trans, rot] = self.filter.motion_reference;
        MotionNoise {
            proportional: phi,
            floor_trans: self.noise.odo_floor_trans + phi * trans,
            floor_rot: self.noise.odo_floor_rot + phi * rot,
        }
    }

    pub fn filter_config(&self, variant: Variant) -> FilterConfig {
        FilterConfig {
            variant,
            seed: self.seed,
            motion: self.motion_noise(),
            ..self.filter.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.noise.validate()?;
        self.filter.validate()?;
        if self.variants.is_empty() {
            return Err(Error::Config("variants must list at least one filter variant".into()));
        }
        if !(self.split.delta_d > 0.0) {
            return Err(Error::Config("split.delta_d must be positive".into()));
        }
        let t = &self.trajectory;
        if !(t.step_length > 0.0) || t.step_length >= self.world.extent[0].min(self.world.extent[1]) {
            return Err(Error::Config("trajectory.step_length must be positive and below the world extent".into()));
        }
        if !(self.sensor.max_range > 0.0) || !(self.eval.match_radius > 0.0) {
            return Err(Error::Config("sensor.max_range and eval.match_radius must be positive".into()));
        }
        if !(self.extract.eps > 0.0) || self.extract.min_points == 0 {
            return Err(Error::Config("extract.eps and extract.min_points must be positive".into()));
        }
        Ok(())
    }

    /// Canonical JSON of the configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::canonical_json`].
    pub fn hash(&self) -> String {
        sha256_hex(self.canonical_json().as_bytes())
    }
}

/// Parses and validates a configuration document without consulting the
/// environment.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Loads `path` (or the defaults) and applies the seed override.
pub fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => parse_config(&read_text(p)?)?,
        None => RunConfig::default(),
    };
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`")))?;
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_sections() {
        let cfg = parse_config(
            "seed = 3\nvariants = [\"pf\", \"in-pf\"]\nworld.n_landmarks = 40\nnoise.phi_odo = 0.4\n[filter]\nn_particles = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.variants, vec![Variant::Pf, Variant::InPf]);
        assert_eq!(cfg.world.n_landmarks, 40);
        assert_eq!(cfg.filter.n_particles, 50);
        assert_eq!(cfg.filter_config(Variant::IPf).motion.proportional, 0.4);
        assert_eq!(cfg.filter_config(Variant::IPf).seed, 3);
    }

    #[test]
    fn motion_floor_grows_with_odometry_noise() {
        let quiet = RunConfig::default().motion_noise();
        assert_eq!((quiet.proportional, quiet.floor_trans, quiet.floor_rot), (0.0, 0.01, 0.002));
        let cfg = parse_config("noise.phi_odo = 0.4\nfilter.motion_reference = [5.0, 0.25]\n").unwrap();
        let m = cfg.motion_noise();
        assert!((m.floor_trans - 2.01).abs() < 1e-12 && (m.floor_rot - 0.102).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(parse_config("world.n_landmark = 4\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("bogus = 1\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("filter.seed = 1\n"), Err(Error::Config(_))));
        assert!(matches!(parse_config("variants = [\"xx\"]\n"), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse_config("noise.phi_odo = 1.5\n").is_err());
        assert!(parse_config("filter.n_particles = 0\n").is_err());
        assert!(parse_config("variants = []\n").is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = RunConfig::default();
        let mut changed = base.clone();
        assert_eq!(base.hash(), changed.hash());
        changed.filter.sigma_sem = 0.51;
        assert_ne!(base.hash(), changed.hash());
        let mut seeded = base.clone();
        seeded.seed = 1;
        assert_ne!(base.hash(), seeded.hash());
    }
}
