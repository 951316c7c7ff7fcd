//! A small odometry × dropout sweep over all variants, printed as CSV.

use poleloc::experiment::sweep;
use poleloc::io::{render_metrics, RunConfig};

fn main() -> poleloc::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.trajectory.n_steps = 401;
    cfg.filter.n_particles = 300;
    cfg.sweep.phi_odo = vec![0.0, 0.4];
    cfg.sweep.phi_obs_drop = vec![0.0, 0.8];
    cfg.sweep.seeds = vec![0, 1];
    print!("{}", render_metrics(&sweep(&cfg)?));
    Ok(())
}
