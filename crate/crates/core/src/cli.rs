//! The `poleloc` command line.
//!
//! Every subcommand reads one optional TOML config (`--config`) and writes
//! plain files; failures are reported on stderr as one JSON object
//! `{"error": <category>, "message": <text>}` with exit code 1.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{association_diagnostics, localization_errors, map_f1, MapScore, MetricsRow};
use crate::experiment::{keyframes, localize, simulate, sweep};
use crate::io::{
    load_config, read_association_log, read_map, read_scans, read_trajectory, render_association_log, render_map,
    render_metrics, render_scans, render_trajectory, write_text_file, Manifest, RunConfig, Trajectory,
};
use crate::localization::Variant;
use crate::map::{build_map, SemanticPoleMap};

#[derive(Debug, Parser)]
#[command(name = "poleloc", version, about = "Semantic pole maps and particle-filter localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a world, trajectory, scans and odometry.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a semantic pole map from posed scans.
    BuildMap {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        scans: PathBuf,
        /// One pose per scan; replaces the poses in the scan headers.
        #[arg(long)]
        poses: Option<PathBuf>,
        /// Ground-truth map to score against.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Merge overlapping poles regardless of class.
        #[arg(long)]
        single_layer: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run particle filters over localization scans.
    Localize {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        scans: PathBuf,
        #[arg(long)]
        odometry: PathBuf,
        /// pf, i-pf, n-pf or in-pf; repeatable. Defaults to the config list.
        #[arg(long = "variant")]
        variants: Vec<Variant>,
        /// Output directory for trajectory_<variant>.txt and
        /// associations_<variant>.jsonl.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score estimated trajectories (and optionally a map) into a CSV report.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long = "estimates", num_args = 1.., required = true)]
        estimates: Vec<PathBuf>,
        /// Association logs in the order of `--estimates`.
        #[arg(long = "logs", num_args = 1..)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long)]
        truth_map: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate and score the phi_odo × phi_obs_drop × delta_d × variant grid.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: PathBuf,
    },
}

/// What a command wrote, for the caller to report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub map_score: Option<MapScore>,
}

struct Writer<'a> {
    dir: &'a Path,
    manifest: Option<Manifest>,
    outcome: Outcome,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path, manifest: Option<Manifest>) -> Self {
        Self {
            dir,
            manifest,
            outcome: Outcome::default(),
        }
    }

    fn put(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_text_file(&path, text)?;
        if let Some(m) = &mut self.manifest {
            m.record(name, text.as_bytes());
        }
        self.outcome.files.push(path);
        Ok(())
    }

    fn finish(mut self) -> Result<Outcome> {
        if let Some(m) = self.manifest.take() {
            let path = self.dir.join("manifest.json");
            m.write(&path)?;
            self.outcome.files.push(path);
        }
        Ok(self.outcome)
    }
}

fn config(arg: &ConfigArg) -> Result<RunConfig> {
    let cfg = load_config(arg.config.as_deref())?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let scn = simulate(cfg)?;
    let mut w = Writer::new(out, Some(Manifest::new("simulate", cfg)));
    let hash = cfg.hash();
    let tagged = |t: Trajectory, kind: &str| t.with_meta("kind", kind).with_meta("seed", cfg.seed).with_meta("config", &hash);
    let mapping_poses = Trajectory::new(
        scn.mapping_frames.iter().map(|&i| i as u64).collect(),
        scn.mapping_frames.iter().map(|&i| scn.poses[i]).collect(),
    );
    w.put("truth_map.json", &render_map(&scn.world.to_map()))?;
    w.put("trajectory.txt", &render_trajectory(&tagged(scn.full_trajectory(), "truth"))?)?;
    w.put("mapping_poses.txt", &render_trajectory(&tagged(mapping_poses, "truth"))?)?;
    w.put("mapping_scans.txt", &render_scans(&scn.mapping_scans))?;
    w.put("localization_scans.txt", &render_scans(&scn.localization_scans))?;
    w.put("localization_truth.txt", &render_trajectory(&tagged(scn.truth_trajectory(), "truth"))?)?;
    w.put("odometry.txt", &render_trajectory(&tagged(scn.odometry_trajectory(), "odometry"))?)?;
    w.finish()
}

pub fn cmd_build_map(
    cfg: &RunConfig,
    scans: &Path,
    poses: Option<&Path>,
    truth: Option<&Path>,
    single_layer: bool,
    out: &Path,
) -> Result<Outcome> {
    let mut scans = read_scans(scans)?;
    if let Some(p) = poses {
        let t = read_trajectory(p)?;
        if t.len() != scans.len() {
            return Err(Error::InputMismatch(format!("{} scans but {} poses", scans.len(), t.len())));
        }
        scans.iter_mut().zip(&t.poses).for_each(|(s, p)| s.pose = *p);
    }
    let (k, d) = scans.first().map_or((cfg.world.k, cfg.world.d), |s| (s.k, s.d));
    if let Some(s) = scans.iter().find(|s| (s.k, s.d) != (k, d)) {
        return Err(Error::SchemaMismatch(format!("scan frame {} has K={} d={}, expected K={k} d={d}", s.frame, s.k, s.d)));
    }
    let mut map_cfg = cfg.map.clone();
    if single_layer {
        map_cfg.multi_layer = false;
    }
    let map = build_map(&keyframes(&scans, &cfg.extract, None), k, d, &map_cfg)?;
    let mut outcome = Outcome::default();
    if let Some(t) = truth {
        outcome.map_score = Some(score_against(cfg, &map, &read_map(t)?));
    }
    write_text_file(out, &render_map(&map))?;
    outcome.files.push(out.to_path_buf());
    Ok(outcome)
}

fn score_against(cfg: &RunConfig, map: &SemanticPoleMap, truth: &SemanticPoleMap) -> MapScore {
    let centers = |m: &SemanticPoleMap| m.landmarks().iter().map(|l| l.circle.center()).collect::<Vec<_>>();
    map_f1(&centers(map), &centers(truth), cfg.eval.match_radius, cfg.eval.match_mode)
}

pub fn cmd_localize(cfg: &RunConfig, map: &Path, scans: &Path, odometry: &Path, variants: &[Variant], out: &Path) -> Result<Outcome> {
    let map = read_map(map)?;
    let scans = read_scans(scans)?;
    let odom = read_trajectory(odometry)?;
    let scan_steps: Vec<u64> = scans.iter().map(|s| s.frame).collect();
    if odom.steps != scan_steps {
        return Err(Error::InputMismatch(format!("{} scans but {} odometry rows with matching steps", scans.len(), odom.len())));
    }
    let variants = if variants.is_empty() { &cfg.variants[..] } else { variants };
    let hash = cfg.hash();
    let mut w = Writer::new(out, None);
    for &v in variants {
        let run = localize(&map, &scans, &odom.poses, &cfg.filter_config(v), &cfg.extract, None)?;
        let traj = run
            .trajectory
            .with_meta("kind", "estimate")
            .with_meta("variant", v)
            .with_meta("seed", cfg.seed)
            .with_meta("config", &hash);
        w.put(&format!("trajectory_{v}.txt"), &render_trajectory(&traj)?)?;
        w.put(&format!("associations_{v}.jsonl"), &render_association_log(&run.log))?;
    }
    w.finish()
}

pub fn cmd_evaluate(
    cfg: &RunConfig,
    truth: &Path,
    estimates: &[PathBuf],
    logs: &[PathBuf],
    map: Option<&Path>,
    truth_map: Option<&Path>,
    out: &Path,
) -> Result<Outcome> {
    if !logs.is_empty() && logs.len() != estimates.len() {
        return Err(Error::InputMismatch(format!("{} estimates but {} association logs", estimates.len(), logs.len())));
    }
    let truth = read_trajectory(truth)?;
    let map_score = match (map, truth_map) {
        (Some(m), Some(t)) => Some(score_against(cfg, &read_map(m)?, &read_map(t)?)),
        (None, None) => None,
        _ => return Err(Error::InputMismatch("--map and --truth-map go together".into())),
    };
    let mut rows = Vec::with_capacity(estimates.len());
    for (i, path) in estimates.iter().enumerate() {
        let est = read_trajectory(path)?;
        est.check_aligned(&truth)?;
        let variant = est.meta.get("variant").cloned().unwrap_or_else(|| {
            path.file_stem().map_or_else(|| format!("run{i}"), |s| s.to_string_lossy().trim_start_matches("trajectory_").to_string())
        });
        let assoc = logs.get(i).map(|p| read_association_log(p)).transpose()?.map(|l| association_diagnostics(&l));
        rows.push(MetricsRow {
            sequence: cfg.sequence_name(),
            variant,
            phi_odo: cfg.noise.phi_odo,
            phi_obs_drop: cfg.noise.phi_obs_drop,
            delta_d: cfg.split.delta_d,
            map: map_score,
            loc: localization_errors(&est.poses, &truth.poses)?,
            assoc,
        });
    }
    write_text_file(out, &render_metrics(&rows))?;
    Ok(Outcome {
        files: vec![out.to_path_buf()],
        map_score,
    })
}

pub fn cmd_sweep(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let rows = sweep(cfg)?;
    write_text_file(out, &render_metrics(&rows))?;
    Ok(Outcome {
        files: vec![out.to_path_buf()],
        map_score: None,
    })
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Simulate { config: c, out } => cmd_simulate(&config(c)?, out),
        Command::BuildMap {
            config: c,
            scans,
            poses,
            truth,
            single_layer,
            out,
        } => cmd_build_map(&config(c)?, scans, poses.as_deref(), truth.as_deref(), *single_layer, out),
        Command::Localize {
            config: c,
            map,
            scans,
            odometry,
            variants,
            out,
        } => cmd_localize(&config(c)?, map, scans, odometry, variants, out),
        Command::Evaluate {
            config: c,
            truth,
            estimates,
            logs,
            map,
            truth_map,
            out,
        } => cmd_evaluate(&config(c)?, truth, estimates, logs, map.as_deref(), truth_map.as_deref(), out),
        Command::Sweep { config: c, out } => cmd_sweep(&config(c)?, out),
    }
}

/// JSON error line printed on stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": e.category(), "message": e.to_string() }).to_string()
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if let Some(s) = outcome.map_score {
                println!(
                    "{}",
                    serde_json::json!({ "precision": s.precision, "recall": s.recall, "f1": s.f1, "n_tp": s.n_tp, "n_fp": s.n_fp, "n_fn": s.n_fn })
                );
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}
