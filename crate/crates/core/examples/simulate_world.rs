//! Generates a seeded world and trajectory and writes the simulated scans
//! in the text scan format.

use poleloc::experiment::simulate;
use poleloc::io::{render_scans, RunConfig};

fn main() -> poleloc::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.seed = 11;
    cfg.trajectory.n_steps = 301;
    cfg.noise.phi_obs_drop = 0.4;

    let scn = simulate(&cfg)?;
    let per_class = (0..cfg.world.k)
        .map(|c| scn.world.landmarks.iter().filter(|l| l.class_id == c).count())
        .collect::<Vec<_>>();
    println!("{} landmarks, per class {per_class:?}", scn.world.landmarks.len());
    println!(
        "{} poses, {} mapping frames, {} localization frames",
        scn.poses.len(),
        scn.mapping_frames.len(),
        scn.localization_frames.len()
    );

    let text = render_scans(&scn.localization_scans[..2]);
    for line in text.lines().take(6) {
        println!("{}", &line[..line.len().min(100)]);
    }
    Ok(())
}
