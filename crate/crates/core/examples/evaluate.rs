//! Scores a small hand-made map and trajectory and prints the CSV report.

use poleloc::eval::{f1_score, localization_errors, map_f1, MatchMode, MetricsRow};
use poleloc::io::render_metrics;
use poleloc::Pose2;

fn main() -> poleloc::Result<()> {
    let truth = [[0.0, 0.0], [10.0, 0.0]];
    let pred = [[0.5, 0.0], [11.5, 0.0]];
    let literal = map_f1(&pred, &truth, 1.0, MatchMode::Nearest);
    println!("literal rule: {literal:?}");
    println!("F1 at P=0.76 R=0.86: {:.4}", f1_score(0.76, 0.86));

    let gt: Vec<Pose2> = (0..3).map(|i| Pose2::new(i as f64, 0.0, 0.0)).collect();
    let est: Vec<Pose2> = [0.0, 3.0, 4.0].iter().zip(&gt).map(|(e, p)| Pose2::new(p.x, *e, 0.01)).collect();
    let loc = localization_errors(&est, &gt)?;

    let row = MetricsRow {
        sequence: "demo".into(),
        variant: "pf".into(),
        delta_d: 10.0,
        map: Some(literal),
        loc,
        ..Default::default()
    };
    print!("{}", render_metrics(&[row]));
    Ok(())
}
