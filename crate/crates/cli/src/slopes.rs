//! Least-squares order fits on log-log data.

/// Slope of `log2(error)` against `log2(h)` over the points with
/// `error >= floor`; `None` with fewer than two usable points.
pub fn fit_slope(points: &[(f64, f64)], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && e.is_finite() && *e >= floor)
        .map(|(h, e)| (h.log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Floor below which errors are treated as reference noise.
pub fn noise_floor(reference_tol: f64) -> f64 {
    50.0 * reference_tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| {
            let h = 0.1 / 2f64.powi(i);
            (h, 3.0 * h.powi(4))
        }).collect();
        assert!((fit_slope(&pts, 0.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn floor_drops_points() {
        let pts = [(0.1, 1e-2), (0.05, 2.5e-3), (0.025, 1e-14), (0.0125, 1e-14)];
        assert!((fit_slope(&pts, 1e-10).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1], 0.0), None);
        assert_eq!(fit_slope(&pts, 1.0), None);
    }

    #[test]
    fn single_point_has_no_slope() {
        assert_eq!(fit_slope(&[(0.1, 0.5)], 0.0), None);
    }
}
