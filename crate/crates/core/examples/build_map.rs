//! Builds multi-layer and single-layer maps from simulated keyframes and
//! scores both against the ground truth.

use poleloc::experiment::{build_scenario_map, score_map, simulate};
use poleloc::io::RunConfig;

fn main() -> poleloc::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.seed = 4;
    cfg.world.label_flip_prob = 0.1;
    let scn = simulate(&cfg)?;

    for multi_layer in [true, false] {
        cfg.map.multi_layer = multi_layer;
        let map = build_scenario_map(&cfg, &scn)?;
        let s = score_map(&cfg, &map, &scn.world);
        let layers: Vec<usize> = map.layer_classes().map(|c| map.layer(c).len()).collect();
        println!(
            "multi_layer={multi_layer}: {} landmarks {layers:?} P {:.3} R {:.3} F1 {:.3}",
            map.len(),
            s.precision,
            s.recall,
            s.f1
        );
    }
    Ok(())
}
