//! Growth of sphere sums on a product of two regular trees T_l1 x T_l2 under
//! `alpha1 mu_1 + alpha2 mu_2`: the implicit `(t1, t2)` system, the exponent
//! function `Psi`, the threshold `r0` and the three growth regimes.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_exponent, geometric_ns, LinearFit};
use crate::trees::{tree_beta, tree_rho};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseParams {
    pub l1: u32,
    pub l2: u32,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl PhaseParams {
    /// Orders the factors so that `l1 >= l2`.
    pub fn new(l1: u32, l2: u32, alpha1: f64, alpha2: f64) -> Result<PhaseParams> {
        if l1 < 3 || l2 < 3 {
            return invalid(format!("tree degrees ({l1}, {l2}) must be at least 3"));
        }
        if !(alpha1 >= 0.0 && alpha2 >= 0.0) || (alpha1 + alpha2 - 1.0).abs() > 1e-12 {
            return invalid(format!("weights ({alpha1}, {alpha2}) must be non-negative with sum 1"));
        }
        Ok(if l1 >= l2 {
            PhaseParams { l1, l2, alpha1, alpha2 }
        } else {
            PhaseParams {
                l1: l2,
                l2: l1,
                alpha1: alpha2,
                alpha2: alpha1,
            }
        })
    }

    pub fn with_alpha1(l1: u32, l2: u32, alpha1: f64) -> Result<PhaseParams> {
        PhaseParams::new(l1, l2, alpha1, 1.0 - alpha1)
    }

    pub fn betas(&self) -> (f64, f64) {
        (tree_beta(self.l1), tree_beta(self.l2))
    }

    fn require_mixed(&self) -> Result<()> {
        if self.alpha1 > 0.0 && self.alpha2 > 0.0 {
            Ok(())
        } else {
            invalid("both weights must be positive")
        }
    }

    /// `t = 1/r - 1/2` must exceed this for `r < R`.
    pub fn t_min(&self) -> f64 {
        let (b1, b2) = self.betas();
        self.alpha1 * b1 + self.alpha2 * b2
    }
}

pub fn capital_r(p: &PhaseParams) -> f64 {
    1.0 / (p.alpha1 * tree_rho(p.l1) + p.alpha2 * tree_rho(p.l2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub r: f64,
    pub t: f64,
    /// `f64::INFINITY` for the limit of the whole sphere in the second factor.
    pub lambda: f64,
    pub t1: f64,
    pub t2: f64,
    /// `sqrt(t_i^2 - beta_i^2)`, kept separately to avoid cancellation.
    pub sigma1: f64,
    pub sigma2: f64,
}

impl PhasePoint {
    /// Residuals of the two equations, the second in terms of the stored
    /// `sigma_i` (which are consistent with `t_i` to rounding).
    pub fn residuals(&self, p: &PhaseParams) -> (f64, f64) {
        let a = p.alpha1 * self.t1 + p.alpha2 * self.t2 - self.t;
        let b = if self.lambda.is_infinite() {
            self.sigma1
        } else {
            p.alpha2 * self.sigma2 - self.lambda * p.alpha1 * self.sigma1
        };
        (a, b)
    }
}

fn feasible(p: &PhaseParams, t: f64) -> Result<()> {
    p.require_mixed()?;
    if !(t > p.t_min()) {
        return invalid(format!(
            "t = {t} must exceed alpha1 beta1 + alpha2 beta2 = {}",
            p.t_min()
        ));
    }
    Ok(())
}

/// Solves `alpha1 t1 + alpha2 t2 = t`, `alpha2 sigma2 = lambda alpha1 sigma1`
/// by bisection on `sigma1`, where both sides are monotone.
pub fn solve_t1t2(p: &PhaseParams, t: f64, lambda: f64) -> Result<PhasePoint> {
    feasible(p, t)?;
    if !(lambda >= 0.0) {
        return invalid(format!("lambda = {lambda} must be non-negative"));
    }
    let (b1, b2) = p.betas();
    let (a1, a2) = (p.alpha1, p.alpha2);
    let t2_of = |t1: f64| (t - a1 * t1) / a2;
    let point = |t1: f64, s1: f64, t2: f64, s2: f64| PhasePoint {
        r: 1.0 / (t + 0.5),
        t,
        lambda,
        t1,
        t2,
        sigma1: s1,
        sigma2: s2,
    };
    if lambda == 0.0 {
        let t1 = (t - a2 * b2) / a1;
        return Ok(point(t1, (t1 * t1 - b1 * b1).sqrt(), b2, 0.0));
    }
    if lambda.is_infinite() {
        let t2 = t2_of(b1);
        return Ok(point(b1, 0.0, t2, (t2 * t2 - b2 * b2).sqrt()));
    }
    // Bisect on whichever sigma stays away from zero: sigma2 for
    // lambda <= 1, else sigma1.
    let (t1, s1, t2, s2) = if lambda <= 1.0 {
        let (t2, s2, t1, s1) = bisect_sigma(t, (a2, b2), (a1, b1), |own, other| a2 * own - lambda * a1 * other);
        (t1, s1, t2, s2)
    } else {
        bisect_sigma(t, (a1, b1), (a2, b2), |own, other| a2 * other - lambda * a1 * own)
    };
    let pt = point(t1, s1, t2, s2);
    let (ra, rb) = pt.residuals(p);
    if !(ra.abs() <= 1e-12 && rb.abs() <= 1e-12 * (1.0 + lambda)) {
        return Err(Error::Numeric(format!(
            "system residuals ({ra:e}, {rb:e}) at t={t}, lambda={lambda}"
        )));
    }
    Ok(pt)
}

/// Root in `sigma_own in [0, sigma_max]` of `g(sigma_own, sigma_other)` along
/// the line `a_own t_own + a_other t_other = t`. The other coordinate is
/// computed through `t_other - beta_other = (a_own/a_other)(t_own,max - t_own)`
/// so it keeps its relative precision near `beta_other`.
fn bisect_sigma(t: f64, own: (f64, f64), other: (f64, f64), g: impl Fn(f64, f64) -> f64) -> (f64, f64, f64, f64) {
    let ((ao, bo), (ax, bx)) = (own, other);
    let t_max = (t - ax * bx) / ao;
    let s_max = (t_max * t_max - bo * bo).sqrt();
    let eval = |s: f64| {
        let t_own = (s * s + bo * bo).sqrt();
        let gap = ao * (s_max - s) * (s_max + s) / (ax * (t_max + t_own));
        let t_other = bx + gap;
        (t_own, t_other, (gap * (t_other + bx)).sqrt())
    };
    let val = |s: f64| {
        let (_, _, so) = eval(s);
        g(s, so)
    };
    let up = val(0.0) < 0.0;
    let (mut lo, mut hi) = (0.0f64, s_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (val(mid) < 0.0) == up {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let (t_own, t_other, s_other) = eval(s);
    (t_own, s, t_other, s_other)
}

/// Closed-form `(t1', t2')` in `lambda`.
pub fn t_derivatives(p: &PhaseParams, pt: &PhasePoint) -> (f64, f64) {
    let d = p.alpha2 * pt.t2 + pt.lambda * pt.lambda * p.alpha1 * pt.t1;
    let t1p = -pt.lambda * p.alpha1 * pt.sigma1 * pt.sigma1 / d;
    (t1p, -p.alpha1 / p.alpha2 * t1p)
}

/// `phi(t) = log l + log(t - sqrt(t^2 - beta^2))` with `sigma = sqrt(t^2 - beta^2)`.
fn phi(l: u32, beta: f64, t: f64, sigma: f64) -> f64 {
    (l as f64).ln() + (beta * beta / (t + sigma)).ln()
}

pub fn phi1_phi2(p: &PhaseParams, pt: &PhasePoint) -> (f64, f64) {
    let (b1, b2) = p.betas();
    (phi(p.l1, b1, pt.t1, pt.sigma1), phi(p.l2, b2, pt.t2, pt.sigma2))
}

fn psi_at(p: &PhaseParams, pt: &PhasePoint) -> f64 {
    let (f1, f2) = phi1_phi2(p, pt);
    if pt.lambda.is_infinite() {
        f2
    } else {
        (f1 + pt.lambda * f2) / (1.0 + pt.lambda)
    }
}

pub fn psi(p: &PhaseParams, t: f64, lambda: f64) -> Result<f64> {
    Ok(psi_at(p, &solve_t1t2(p, t, lambda)?))
}

pub fn psi_prime(p: &PhaseParams, t: f64, lambda: f64) -> Result<f64> {
    let pt = solve_t1t2(p, t, lambda)?;
    let (f1, f2) = phi1_phi2(p, &pt);
    Ok((f2 - f1) / (1.0 + lambda).powi(2))
}

pub fn psi_second(p: &PhaseParams, t: f64, lambda: f64) -> Result<f64> {
    let pt = solve_t1t2(p, t, lambda)?;
    let (f1, f2) = phi1_phi2(p, &pt);
    let d = p.alpha2 * pt.t2 + lambda * lambda * p.alpha1 * pt.t1;
    Ok(-2.0 / (1.0 + lambda).powi(3) * (f2 - f1) - p.alpha1 * pt.sigma1 / ((1.0 + lambda) * d))
}

/// Maximiser of `Psi` on `[0, inf)`: `(0, false)` when `Psi'(0) <= 0`,
/// otherwise the unique zero of `phi2(t2) - phi1(t1)`.
pub fn find_lambda0(p: &PhaseParams, t: f64) -> Result<(f64, bool)> {
    let gap = |lambda: f64| -> Result<f64> {
        let pt = solve_t1t2(p, t, lambda)?;
        let (f1, f2) = phi1_phi2(p, &pt);
        Ok(f2 - f1)
    };
    if gap(0.0)? <= 0.0 {
        return Ok((0.0, false));
    }
    let mut hi = 1.0;
    while gap(hi)? > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Numeric(format!("no sign change of Psi' below lambda = {hi:e}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), true))
}

/// Threshold `t0` where `phi1((t0 - alpha2 beta2)/alpha1) = phi2(beta2)`, and
/// `r0 = 1/(t0 + 1/2)`. Inverts `phi1` in closed form.
pub fn solve_t0(p: &PhaseParams) -> Result<(f64, f64)> {
    p.require_mixed()?;
    if p.l1 == p.l2 {
        return invalid("equal degrees have no threshold");
    }
    let (b1, b2) = p.betas();
    // phi2(beta2) = log(l2 beta2); phi1(s) = that value means s - sqrt(s^2 - b1^2) = u
    let u = ((p.l2 - 1) as f64).sqrt() / p.l1 as f64;
    let s = (u * u + b1 * b1) / (2.0 * u);
    let t0 = p.alpha1 * s + p.alpha2 * b2;
    Ok((t0, 1.0 / (t0 + 0.5)))
}

/// `t0` by bisection on the defining equation, as a cross-check.
pub fn solve_t0_bisect(p: &PhaseParams) -> Result<f64> {
    p.require_mixed()?;
    if p.l1 == p.l2 {
        return invalid("equal degrees have no threshold");
    }
    let (b1, b2) = p.betas();
    let target = phi(p.l2, b2, b2, 0.0);
    let h = |s: f64| phi(p.l1, b1, s, (s * s - b1 * b1).max(0.0).sqrt()) - target;
    // h decreases from h(b1) > 0 to -inf
    let (mut lo, mut hi) = (b1, b1 + 1.0);
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(p.alpha1 * 0.5 * (lo + hi) + p.alpha2 * b2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// `H_r(n) ≍ e^{n omega}`.
    PureExponential,
    /// At `r = r0`.
    CriticalOverN,
    /// `H_r(n) ≍ n^{-3/2} e^{n omega}`.
    OverN32,
}

/// Distance from `r0` below which `classify` reports the critical regime.
pub const R0_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseReport {
    pub params: PhaseParams,
    pub r: f64,
    #[serde(rename = "R")]
    pub capital_r: f64,
    pub r0: Option<f64>,
    pub t0: Option<f64>,
    pub regime: Regime,
    pub lambda0: f64,
    pub interior: bool,
    pub omega: f64,
    /// Largest system residual at `lambda0` and `|Psi'(lambda0)|`.
    pub residual: f64,
    pub psi_prime: f64,
}

pub fn classify(p: &PhaseParams, r: f64) -> Result<PhaseReport> {
    let big_r = capital_r(p);
    if !(r > 0.0 && r < big_r) {
        return invalid(format!("r = {r} must lie in (0, R = {big_r})"));
    }
    let t = 1.0 / r - 0.5;
    let (lambda0, interior) = find_lambda0(p, t)?;
    let pt = solve_t1t2(p, t, lambda0)?;
    let (ra, rb) = pt.residuals(p);
    let (f1, f2) = phi1_phi2(p, &pt);
    let thr = if p.l1 > p.l2 { Some(solve_t0(p)?) } else { None };
    let regime = match thr {
        None => Regime::PureExponential,
        Some((_, r0)) if (r - r0).abs() <= R0_TOL => Regime::CriticalOverN,
        Some((t0, _)) if t < t0 => Regime::OverN32,
        Some(_) => Regime::PureExponential,
    };
    Ok(PhaseReport {
        params: *p,
        r,
        capital_r: big_r,
        r0: thr.map(|x| x.1),
        t0: thr.map(|x| x.0),
        regime,
        lambda0,
        interior,
        omega: psi_at(p, &pt),
        residual: ra.abs().max(rb.abs()),
        psi_prime: (f2 - f1) / (1.0 + lambda0).powi(2),
    })
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log` of the model sphere sum
/// `n^{-5/2} sum_k (k + kappa1)(n - k + kappa2) exp(n Psi((n-k)/k))`.
pub fn hn_model_log(p: &PhaseParams, r: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    let big_r = capital_r(p);
    if !(r > 0.0 && r < big_r) {
        return invalid(format!("r = {r} must lie in (0, R = {big_r})"));
    }
    let t = 1.0 / r - 0.5;
    let kappa = |l: u32| l as f64 / (l as f64 - 2.0);
    let (k1, k2) = (kappa(p.l1), kappa(p.l2));
    let nf = n as f64;
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let lambda = if k == 0 {
                f64::INFINITY
            } else {
                (n - k) as f64 / k as f64
            };
            let pt = solve_t1t2(p, t, lambda)?;
            let (f1, f2) = phi1_phi2(p, &pt);
            // n Psi = k phi1 + (n - k) phi2
            let e = k as f64 * f1 + (n - k) as f64 * f2;
            Ok((k as f64 + k1).ln() + ((n - k) as f64 + k2).ln() + e)
        })
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&terms) - 2.5 * nf.ln())
}

pub fn hn_model(p: &PhaseParams, r: f64, n: u32) -> Result<f64> {
    Ok(hn_model_log(p, r, n)?.exp())
}

/// `log f(n)` for `f(n) = sum_k k (n - k) exp(n Phi((n-k)/k))`.
pub fn f_sum_log(phi: impl Fn(f64) -> f64, n: u32) -> f64 {
    let nf = n as f64;
    let terms: Vec<f64> = (1..n)
        .map(|k| (k as f64).ln() + ((n - k) as f64).ln() + nf * phi((n - k) as f64 / k as f64))
        .collect();
    log_sum_exp(&terms)
}

pub fn f_sum(phi: impl Fn(f64) -> f64, n: u32) -> f64 {
    f_sum_log(phi, n).exp()
}

/// Default regression window for exponent fits.
pub fn exponent_window() -> Vec<u32> {
    geometric_ns(200, 2000, 25)
}

/// Polynomial correction exponent of `f(n) e^{-n max Phi}`.
pub fn fit_f_sum_exponent(phi: impl Fn(f64) -> f64, phi_max: f64, ns: &[u32]) -> Option<LinearFit> {
    let logs: Vec<f64> = ns.iter().map(|&n| f_sum_log(&phi, n)).collect();
    fit_exponent(ns, &logs, phi_max)
}

/// Polynomial correction exponent of `hn_model(n) e^{-n omega}`.
pub fn fit_hn_exponent(p: &PhaseParams, r: f64, ns: &[u32]) -> Result<(LinearFit, PhaseReport)> {
    let rep = classify(p, r)?;
    let logs: Vec<f64> = ns.iter().map(|&n| hn_model_log(p, r, n)).collect::<Result<_>>()?;
    let fit = fit_exponent(ns, &logs, rep.omega).ok_or_else(|| Error::Numeric("degenerate fit window".into()))?;
    Ok((fit, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p64() -> PhaseParams {
        PhaseParams::new(6, 4, 0.5, 0.5).unwrap()
    }

    #[test]
    fn capital_r_values() {
        let p = PhaseParams::new(4, 4, 0.5, 0.5).unwrap();
        assert!((capital_r(&p) - 1.0 / (0.5 + 3f64.sqrt() / 4.0)).abs() < 1e-15);
        assert!((capital_r(&p64()) - 1.1076094051200098).abs() < 1e-12);
        let p = PhaseParams::new(5, 3, 1.0, 0.0).unwrap();
        assert!((capital_r(&p) - 1.0 / tree_rho(5)).abs() < 1e-15);
    }

    #[test]
    fn swap_orientation() {
        let p = PhaseParams::new(4, 6, 0.3, 0.7).unwrap();
        assert_eq!((p.l1, p.l2, p.alpha1, p.alpha2), (6, 4, 0.7, 0.3));
        assert!(PhaseParams::new(2, 6, 0.5, 0.5).is_err());
        assert!(PhaseParams::new(4, 6, 0.5, 0.6).is_err());
    }

    #[test]
    fn system_special_cases() {
        let p = PhaseParams::new(5, 5, 0.3, 0.7).unwrap();
        let pt = solve_t1t2(&p, 0.5, 0.7 / 0.3).unwrap();
        assert!((pt.t1 - 0.5).abs() < 1e-12 && (pt.t2 - 0.5).abs() < 1e-12);
        let p = p64();
        let (b1, b2) = p.betas();
        let pt = solve_t1t2(&p, 0.45, 0.0).unwrap();
        assert_eq!(pt.t2, b2);
        assert!((pt.t1 - (0.45 - 0.5 * b2) / 0.5).abs() < 1e-15);
        let pt = solve_t1t2(&p, 0.45, 1.0).unwrap();
        let (ra, rb) = pt.residuals(&p);
        assert!(ra.abs() < 1e-12 && rb.abs() < 1e-12);
        let far = solve_t1t2(&p, 0.45, 1e8).unwrap();
        assert!((far.t1 - b1).abs() < 1e-12);
        assert!(solve_t1t2(&p, p.t_min() * 0.99, 1.0).is_err());
    }

    #[test]
    fn derivative_formulas() {
        let p = p64();
        for &(t, lambda) in &[(0.45, 1.0), (0.42, 0.3), (0.5, 4.0)] {
            let pt = solve_t1t2(&p, t, lambda).unwrap();
            let (d1, d2) = t_derivatives(&p, &pt);
            let h = 1e-5;
            let a = solve_t1t2(&p, t, lambda + h).unwrap();
            let b = solve_t1t2(&p, t, lambda - h).unwrap();
            let (f1, f2) = ((a.t1 - b.t1) / (2.0 * h), (a.t2 - b.t2) / (2.0 * h));
            assert!((d1 - f1).abs() < 1e-6 * d1.abs(), "{d1} {f1}");
            assert!((d2 - f2).abs() < 1e-6 * d2.abs());
            assert!(d1 <= 0.0);
            assert!((p.alpha1 * d1 + p.alpha2 * d2).abs() < 1e-14);
        }
    }

    #[test]
    fn psi_symmetric_point() {
        let p = PhaseParams::new(4, 4, 0.5, 0.5).unwrap();
        assert!(psi(&p, 0.5, 1.0).unwrap().abs() < 1e-14);
        assert!(psi_prime(&p, 0.5, 1.0).unwrap().abs() < 1e-14);
        assert!(psi_second(&p, 0.45, 1.0).unwrap() < 0.0);
        let (l0, interior) = find_lambda0(&p, 0.45).unwrap();
        assert!(interior && (l0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn psi_derivatives_match_differences() {
        let p = p64();
        let h = 1e-5;
        for i in 0..20 {
            let lambda = 0.05 + 0.25 * i as f64;
            let fd = (psi(&p, 0.44, lambda + h).unwrap() - psi(&p, 0.44, lambda - h).unwrap()) / (2.0 * h);
            let d = psi_prime(&p, 0.44, lambda).unwrap();
            assert!((d - fd).abs() < 1e-6 * d.abs().max(1e-3), "{lambda}: {d} {fd}");
            let fd2 = (psi_prime(&p, 0.44, lambda + h).unwrap() - psi_prime(&p, 0.44, lambda - h).unwrap()) / (2.0 * h);
            let d2 = psi_second(&p, 0.44, lambda).unwrap();
            assert!((d2 - fd2).abs() < 1e-5 * d2.abs().max(1e-3), "{lambda}: {d2} {fd2}");
        }
    }

    #[test]
    fn threshold_values() {
        let p = p64();
        let (t0, r0) = solve_t0(&p).unwrap();
        assert!((t0 - 17.0 * 3f64.sqrt() / 72.0).abs() < 1e-15);
        assert!((r0 - 72.0 / (17.0 * 3f64.sqrt() + 36.0)).abs() < 1e-14);
        assert!((solve_t0_bisect(&p).unwrap() - t0).abs() < 1e-12);
        assert!(1.0 < r0 && r0 < capital_r(&p));
        assert!(solve_t0(&PhaseParams::new(4, 4, 0.5, 0.5).unwrap()).is_err());
        // Psi'(0) changes sign at t0
        assert_eq!(find_lambda0(&p, t0 - 1e-6).unwrap().1, false);
        assert_eq!(find_lambda0(&p, t0 + 1e-6).unwrap().1, true);
    }

    #[test]
    fn regimes() {
        let p = p64();
        let (_, r0) = solve_t0(&p).unwrap();
        let below = classify(&p, 1.05).unwrap();
        assert!(below.interior && below.regime == Regime::PureExponential);
        assert!(below.psi_prime.abs() < 1e-10 && below.residual < 1e-12);
        let above = classify(&p, 1.104).unwrap();
        assert_eq!(
            (above.regime, above.lambda0, above.interior),
            (Regime::OverN32, 0.0, false)
        );
        assert_eq!(classify(&p, r0).unwrap().regime, Regime::CriticalOverN);
        assert!(classify(&p, capital_r(&p)).is_err());
        let sym = classify(&PhaseParams::new(4, 4, 0.5, 0.5).unwrap(), 1.05).unwrap();
        assert_eq!(sym.regime, Regime::PureExponential);
        assert!((sym.lambda0 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn omega_monotone_and_zero_at_one() {
        let p = p64();
        let big_r = capital_r(&p);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..30 {
            let r = 1.0 + (big_r - 1.0) * i as f64 / 30.0;
            let w = classify(&p, r).unwrap().omega;
            assert!(w >= prev - 1e-12);
            prev = w;
        }
        assert!(classify(&p, 1.0).unwrap().omega.abs() < 1e-12);
    }

    #[test]
    fn model_small_n() {
        let p = p64();
        let v = hn_model(&p, 1.05, 1).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
