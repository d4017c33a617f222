//! Least-squares line fits used for exponent and growth-rate estimates.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (0 for two points).
    pub stderr: f64,
    pub points: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if n > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        stderr,
        points: n,
    })
}

/// About `count` integers spaced geometrically on `[lo, hi]`, deduplicated.
pub fn geometric_ns(lo: u32, hi: u32, count: usize) -> Vec<u32> {
    let (a, b) = ((lo.max(1)) as f64, hi as f64);
    let mut out: Vec<u32> = (0..count)
        .map(|i| {
            let f = if count > 1 { i as f64 / (count - 1) as f64 } else { 0.0 };
            (a * (b / a).powf(f)).round() as u32
        })
        .collect();
    out.dedup();
    out
}

/// Slope of `log_values[i] - n_i * omega` against `log n_i`.
pub fn fit_exponent(ns: &[u32], log_values: &[f64], omega: f64) -> Option<LinearFit> {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = ns.iter().zip(log_values).map(|(&n, v)| v - n as f64 * omega).collect();
    linear_fit(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14 && f.stderr < 1e-14);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 2.0]).is_none());
    }

    #[test]
    fn grid_endpoints() {
        let g = geometric_ns(200, 2000, 25);
        assert_eq!((g[0], *g.last().unwrap(), g.len()), (200, 2000, 25));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn power_law_exponent() {
        let ns = geometric_ns(10, 1000, 12);
        let logs: Vec<f64> = ns
            .iter()
            .map(|&n| 0.3 * n as f64 - 1.5 * (n as f64).ln() + 2.0)
            .collect();
        let f = fit_exponent(&ns, &logs, 0.3).unwrap();
        assert!((f.slope + 1.5).abs() < 1e-12);
    }
}
