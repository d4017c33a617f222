//! Green function of the lazy simple random walk on Z^d through the Bessel
//! representation
//! `G(x|r) = int_0^inf exp(-t(1-r)) prod_i e^{-ct} I_{|x_i|}(ct) dt`,
//! `c = r(1-alpha)/d`, which stays usable at `r = 1` where the power series
//! converges too slowly to truncate.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// `e^{-z} I_n(z)` for `n = 0..=n_max`.
pub fn scaled_bessel_i(n_max: usize, z: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if z <= 0.0 {
        out[0] = 1.0;
        return out;
    }
    let nm = n_max as f64;
    if z > 1e4 && z > 200.0 * (nm * nm + 1.0) {
        for (n, o) in out.iter_mut().enumerate() {
            let mu = 4.0 * (n * n) as f64;
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..12 {
                let kk = (2 * k - 1) as f64;
                term *= -(mu - kk * kk) / (k as f64 * 8.0 * z);
                sum += term;
            }
            *o = sum / (2.0 * PI * z).sqrt();
        }
        return out;
    }
    // Miller backward recurrence normalised by e^{-z}(I_0 + 2 sum I_n) = 1.
    let start = n_max + 40 + (14.0 * z.sqrt()).ceil() as usize;
    let mut hi = 0.0f64;
    let mut mid = 1e-300f64;
    let mut sum = 0.0f64;
    for n in (1..=start).rev() {
        let lo = hi + 2.0 * n as f64 / z * mid;
        hi = mid;
        mid = lo;
        // mid now holds I_{n-1} (unnormalised), hi holds I_n
        if n <= n_max {
            out[n] = hi;
        }
        sum += 2.0 * hi;
        if mid > 1e250 {
            let s = 1e-250;
            mid *= s;
            hi *= s;
            sum *= s;
            for o in out.iter_mut() {
                *o *= s;
            }
        }
    }
    out[0] = mid;
    sum += mid;
    for o in out.iter_mut() {
        *o /= sum;
    }
    out
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Green values at orbit representatives `xs` (absolute coordinates) with
/// an error estimate from two quadrature resolutions.
pub fn lattice_green(d: u32, alpha: f64, r: f64, xs: &[Vec<u32>]) -> Result<Vec<(f64, f64)>> {
    if !(0.0..1.0).contains(&alpha) {
        return invalid(format!("alpha = {alpha} outside [0, 1)"));
    }
    if !(r > 0.0 && r <= 1.0) {
        return invalid(format!("r = {r} outside (0, 1]"));
    }
    if d < 3 && r == 1.0 {
        return invalid(format!("Z^{d} is recurrent: G(.|1) diverges"));
    }
    if xs.iter().any(|x| x.len() != d as usize) {
        return invalid("orbit representative of wrong dimension");
    }
    let coarse = integrate(d, alpha, r, xs, 12);
    let fine = integrate(d, alpha, r, xs, 20);
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(f, c)| (*f, (f - c).abs() + 1e-15 * f.abs()))
        .collect())
}

fn integrate(d: u32, alpha: f64, r: f64, xs: &[Vec<u32>], per_panel: usize) -> Vec<f64> {
    let c = r * (1.0 - alpha) / d as f64;
    let n_max = xs.iter().flatten().copied().max().unwrap_or(0) as usize;
    let t_asym = (1e4f64).max(1e3 * ((n_max * n_max) as f64 + 1.0)) / c;
    let (t_hi, with_tail) = if r < 1.0 {
        (60.0 / (1.0 - r), false)
    } else {
        (t_asym, true)
    };
    let t_lo = 1e-12f64;
    let (u0, u1) = (t_lo.ln(), t_hi.ln());
    let panels = ((u1 - u0) / 0.25).ceil() as usize;
    let width = (u1 - u0) / panels as f64;
    let gl = gauss_legendre(per_panel);
    let mut acc = vec![0.0; xs.len()];
    // on [0, t_lo] the integrand is its value at 0
    for (a, x) in acc.iter_mut().zip(xs) {
        if x.iter().all(|&v| v == 0) {
            *a += t_lo;
        }
    }
    for p in 0..panels {
        let mid = u0 + (p as f64 + 0.5) * width;
        for &(xi, wi) in &gl {
            let u = mid + 0.5 * width * xi;
            let t = u.exp();
            let w = 0.5 * width * wi * t * (-(1.0 - r) * t).exp();
            let bes = scaled_bessel_i(n_max, c * t);
            for (a, x) in acc.iter_mut().zip(xs) {
                *a += w * x.iter().map(|&v| bes[v as usize]).product::<f64>();
            }
        }
    }
    if with_tail {
        // prod_i e^{-z} I_{n_i}(z) ~ (2 pi z)^{-d/2} sum_k B_k z^{-k}
        for (a, x) in acc.iter_mut().zip(xs) {
            let mut poly = vec![1.0f64];
            for &n in x {
                let mu = 4.0 * (n as f64) * (n as f64);
                let mut series = vec![1.0f64];
                for k in 1..8 {
                    let kk = (2 * k - 1) as f64;
                    let prev = series[k - 1];
                    series.push(-prev * (mu - kk * kk) / (k as f64 * 8.0));
                }
                let mut next = vec![0.0; poly.len() + series.len() - 1];
                for (i, p) in poly.iter().enumerate() {
                    for (j, s) in series.iter().enumerate() {
                        next[i + j] += p * s;
                    }
                }
                next.truncate(8);
                poly = next;
            }
            let half = d as f64 / 2.0;
            let mut tail = 0.0;
            for (k, b) in poly.iter().enumerate() {
                let e = half + k as f64 - 1.0;
                tail += b * c.powi(-(k as i32)) * t_hi.powf(-e) / e;
            }
            *a += tail * (2.0 * PI * c).powf(-half);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_values() {
        // e^{-1} I_0(1), e^{-1} I_1(1)
        let b = scaled_bessel_i(3, 1.0);
        assert!((b[0] - 0.46575960759364043).abs() < 1e-15);
        assert!((b[1] - 0.20791041534970844).abs() < 1e-15);
        let b = scaled_bessel_i(2, 50.0);
        // e^{-50} I_0(50) from an mpmath evaluation
        assert!((b[0] - 0.05656162664745419).abs() < 1e-13, "{}", b[0]);
        let a = scaled_bessel_i(5, 2e5);
        let m = scaled_bessel_i(5, 2e5 * (1.0 - 1e-15));
        for (x, y) in a.iter().zip(&m) {
            assert!((x - y).abs() < 1e-12 * x);
        }
    }

    #[test]
    fn watson_integral() {
        let g = lattice_green(3, 0.0, 1.0, &[vec![0, 0, 0]]).unwrap();
        assert!((g[0].0 - 1.516386059151978).abs() < 1e-9, "{:?}", g[0]);
        let g = lattice_green(3, 0.5, 1.0, &[vec![0, 0, 0]]).unwrap();
        assert!((g[0].0 - 2.0 * 1.516386059151978).abs() < 2e-9);
    }

    #[test]
    fn harmonic_at_r_one() {
        // (1 - P) G = delta_e for the walk: check at x = (1,0,0)
        let xs = vec![vec![0, 0, 0], vec![1, 0, 0], vec![2, 0, 0], vec![1, 1, 0]];
        let g: Vec<f64> = lattice_green(3, 0.0, 1.0, &xs).unwrap().iter().map(|v| v.0).collect();
        let lap = g[1] - (g[0] + g[2] + 4.0 * g[3]) / 6.0;
        assert!(lap.abs() < 1e-10, "{lap}");
        let lap0 = g[0] - g[1];
        assert!((lap0 - 1.0).abs() < 1e-10);
    }
}
