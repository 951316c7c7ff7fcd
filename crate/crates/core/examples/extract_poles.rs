//! Clusters labeled points, fits circles and pools semantics for one scan.

use poleloc::extract::{extract_poles, ExtractConfig};
use poleloc::LabeledPoint;

fn ring(cx: f64, cy: f64, r: f64, class_id: usize, n: usize) -> Vec<LabeledPoint> {
    (0..n)
        .map(|i| {
            let a = i as f64 * std::f64::consts::TAU / n as f64;
            let mut prob = vec![0.1; 4];
            prob[class_id] = 0.7;
            LabeledPoint {
                x: cx + r * a.cos(),
                y: cy + r * a.sin(),
                z: 1.0,
                class_id,
                prob,
                feature: vec![class_id as f64, 1.0, a.sin()],
            }
        })
        .collect()
}

fn main() {
    let mut points = ring(5.0, 2.0, 0.2, 0, 20);
    points.extend(ring(-3.0, 8.0, 0.35, 2, 30));
    points.extend(ring(70.0, 0.0, 0.2, 1, 10));

    let out = extract_poles(&points, &ExtractConfig::default());
    for p in &out.instances {
        println!(
            "class {} center ({:.3}, {:.3}) r {:.3} from {} points",
            p.class_id, p.circle.lx, p.circle.ly, p.circle.r, p.support
        );
    }
    println!("{:?}", out.diagnostics);
}
