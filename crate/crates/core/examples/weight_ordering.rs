//! Compares plain, class-restricted and ground-truth association for
//! particles scattered around the true pose.

use poleloc::geometry::Pose2;
use poleloc::localization::{associate_nn, associate_semantic_nn, associate_truth, geometric_log_likelihood};
use poleloc::sim::{generate_world, simulate_scan, NoiseSpec, WorldSpec};

fn main() -> poleloc::Result<()> {
    let world = generate_world(&WorldSpec {
        label_flip_prob: 0.0,
        seed: 5,
        ..Default::default()
    })?;
    let map = world.to_map();
    let truth = Pose2::new(75.0, 75.0, 0.3);
    let obs = simulate_scan(&world, &truth, 30.0, &NoiseSpec::default(), 5, 0);
    println!("{} observations", obs.len());

    for (dx, dth) in [(0.0, 0.0), (1.0, 0.02), (3.0, 0.1), (6.0, -0.2)] {
        let pose = Pose2::new(truth.x + dx, truth.y - dx / 2.0, truth.theta + dth);
        let lp = |d: &[f64]| geometric_log_likelihood(d, 1.0);
        let plain = associate_nn(&obs, &pose, &map, 5.0)?;
        let sem = associate_semantic_nn(&obs, &pose, &map, 5.0)?;
        let gt = associate_truth(&obs, &pose, &map, 5.0)?;
        println!(
            "offset {dx:>3} m: log p plain {:9.2} >= semantic {:9.2} >= truth {:9.2}",
            lp(&plain.distances),
            lp(&sem.distances),
            lp(&gt.distances)
        );
    }
    Ok(())
}
