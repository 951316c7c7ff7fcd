//! Brute-force reference computations for unit tests.

/// Center minimizing the mean squared radial residual over a square lattice
/// of spacing `step` spanning `center ± half_width`.
pub fn grid_search_center(points: &[[f64; 2]], center: [f64; 2], half_width: f64, step: f64) -> [f64; 2] {
    let steps = (half_width / step).round() as i64;
    let mut best = (f64::INFINITY, center);
    for i in -steps..=steps {
        for j in -steps..=steps {
            let c = [center[0] + i as f64 * step, center[1] + j as f64 * step];
            let d: Vec<f64> = points.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).collect();
            let r = d.iter().sum::<f64>() / d.len() as f64;
            let cost = d.iter().map(|di| (di - r).powi(2)).sum::<f64>() / d.len() as f64;
            if cost < best.0 {
                best = (cost, c);
            }
        }
    }
    best.1
}

/// Normal density, written out directly.
pub fn normal_pdf(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}
