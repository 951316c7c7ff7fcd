//! Runs all four filter variants on one noisy simulated sequence.

use poleloc::experiment::run;
use poleloc::io::RunConfig;

fn main() -> poleloc::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.seed = 1;
    cfg.noise.phi_odo = 0.4;
    cfg.noise.phi_obs_drop = 0.8;
    cfg.filter.n_particles = 1000;

    let r = run(&cfg)?;
    println!("map F1 {:.3}, {} localization frames", r.map_score.f1, r.scenario.localization_frames.len());
    for row in &r.rows {
        let a = row.assoc.unwrap();
        println!(
            "{:6} delta_pos {:.3} m  delta_ang {:.3} deg  N_A {:.2}  class acc {:.3}",
            row.variant,
            row.loc.delta_pos,
            row.loc.delta_ang,
            a.n_assoc_sets,
            a.class_accuracy.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
