//! Green functions of free products `Gamma_0 * Gamma_1` under
//! `(1 - alpha) mu_0 + alpha mu_1` through the factors' own Green functions:
//! the excursion sums `w_0, w_1`, the effective parameters `zeta_0, zeta_1`,
//! and the scan for the construction on `(T_l1 x T_l2) * Z^d`.

use rayon::prelude::*;
use serde::Serialize;

use crate::bitree::{capital_r, classify, exponent_window, fit_hn_exponent, PhaseParams, Regime};
use crate::error::{invalid, Error, Result};
use crate::groups::{Element, GroupSpec, Side};
use crate::growth::{default_window, h_series, omega_estimate, GrowthOptions, OmegaEstimate};
use crate::kernels::convolve::ElementWalk;
use crate::kernels::green::{diagonal_ratio, series_at};
use crate::kernels::lumped::{run_chain, AnyLumping, Radial};
use crate::kernels::measure::{q, rational_from_f64, standard_measure, to_f64, Measure, MeasureKind};

/// Return probabilities `p_n(e,e)` of one factor, `n <= order`.
#[derive(Clone, Debug)]
pub struct ReturnSeries {
    pub coeffs: Vec<f64>,
    /// Radius of convergence, exact when the spectral radius is known.
    pub radius: f64,
    pub radius_exact: bool,
}

impl ReturnSeries {
    pub fn of(m: &Measure, order: usize) -> Result<ReturnSeries> {
        let coeffs = return_probabilities(m, order)?;
        let (radius, radius_exact) = match m.spectral_radius() {
            Some(rho) => (1.0 / rho, true),
            None => (1.0 / diagonal_ratio(&coeffs).min(1.0), false),
        };
        Ok(ReturnSeries {
            coeffs,
            radius,
            radius_exact,
        })
    }

    /// Truncated `G(e,e|z)`.
    pub fn green(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, a| acc * z + a)
    }
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Return probabilities of the walk that moves like `a` with probability
/// `p` and like `b` otherwise, the two acting on independent coordinates:
/// `sum_k C(n,k) p^k (1-p)^{n-k} a_k b_{n-k}`.
pub fn binomial_mix(a: &[f64], b: &[f64], p: f64) -> Vec<f64> {
    let n = a.len().min(b.len());
    if p == 0.0 || p == 1.0 {
        return if p == 1.0 { a[..n].to_vec() } else { b[..n].to_vec() };
    }
    let lf = log_factorials(n);
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (0..n)
        .map(|m| {
            (0..=m)
                .filter(|&k| a[k] > 0.0 && b[m - k] > 0.0)
                .map(|k| (lf[m] - lf[k] - lf[m - k] + k as f64 * lp + (m - k) as f64 * lq).exp() * a[k] * b[m - k])
                .sum()
        })
        .collect()
}

fn simple_line(order: usize) -> Vec<f64> {
    // C(2j, j) / 4^j at even times
    let mut out = vec![0.0; order + 1];
    let mut c = 1.0;
    for n in 0..=order {
        if n % 2 == 0 {
            out[n] = c;
            let j = (n / 2) as f64;
            c *= (2.0 * j + 1.0) / (2.0 * j + 2.0);
        }
    }
    out
}

fn tree_returns(l: u32, order: usize) -> Vec<f64> {
    run_chain(&Radial { l }, 1.0, 0, order, 0.0).diagonal
}

pub fn return_probabilities(m: &Measure, order: usize) -> Result<Vec<f64>> {
    let coeffs = match (&m.group, &m.kind) {
        (GroupSpec::RegularTree(l), MeasureKind::TreeLazy) => tree_returns(*l, order),
        (GroupSpec::TreeProduct(l1, l2), MeasureKind::ProductMix { alpha1 }) => {
            binomial_mix(&tree_returns(*l1, order), &tree_returns(*l2, order), to_f64(alpha1))
        }
        (GroupSpec::FreeAbelian(d), MeasureKind::LazySrw { alpha }) => {
            let mut srw = simple_line(order);
            for k in 2..=*d {
                srw = binomial_mix(&simple_line(order), &srw, 1.0 / k as f64);
            }
            binomial_mix(&vec![1.0; order + 1], &srw, to_f64(alpha))
        }
        _ => match AnyLumping::for_measure(m) {
            Some(l) => l.class_table(1.0, 0, order, 0.0).diagonal,
            None => series_at(m, &[m.group.identity()], 1.0, order, 0.0)?.1,
        },
    };
    Ok(coeffs)
}

/// Parts of a free-product measure `(1 - alpha) mu_0 + alpha mu_1`.
pub struct Split {
    pub alpha: f64,
    pub left: Measure,
    pub right: Measure,
}

pub fn split(m: &Measure) -> Result<Split> {
    match (&m.group, &m.kind) {
        (GroupSpec::FreeProduct(l, r), MeasureKind::FreeProductMix { alpha, left, right }) => Ok(Split {
            alpha: to_f64(alpha),
            left: standard_measure(l, (**left).clone())?,
            right: standard_measure(r, (**right).clone())?,
        }),
        _ => invalid(format!("{} is not a free-product mixture", m.kind)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransferPoint {
    pub alpha: f64,
    pub r: f64,
    pub w0: f64,
    pub w1: f64,
    pub zeta0: f64,
    pub zeta1: f64,
    /// Order of the factor return series.
    pub truncation: usize,
    /// The `w`s are lower bounds (positive series, truncated).
    pub lower_bound_only: bool,
    /// False when the fixed-point iteration stalled (close to the radius).
    pub converged: bool,
}

/// The factor series of a free product, from which `w_0, w_1` are solved at
/// any `r` by the first-return equations
/// `w_1 = (1 - w_0)(1 - 1/G_0(zeta_0))`, `w_0 = (1 - w_1)(1 - 1/G_1(zeta_1))`.
pub struct TransferSystem {
    pub alpha: f64,
    pub left: ReturnSeries,
    pub right: ReturnSeries,
    pub order: usize,
}

const MAX_ITER: usize = 20_000;

impl TransferSystem {
    pub fn new(m: &Measure, order: usize) -> Result<TransferSystem> {
        if order == 0 {
            return invalid("order must be at least 1");
        }
        let s = split(m)?;
        Ok(TransferSystem {
            alpha: s.alpha,
            left: ReturnSeries::of(&s.left, order)?,
            right: ReturnSeries::of(&s.right, order)?,
            order,
        })
    }

    /// One pass of the equations from `w0`; `None` once a `zeta` leaves its
    /// factor's disc of convergence.
    fn map(&self, r: f64, w0: f64) -> Option<(f64, f64, f64, f64)> {
        let a = self.alpha;
        let z0 = (1.0 - a) * r / (1.0 - w0);
        if !(w0 < 1.0) || z0 > self.left.radius * (1.0 + 1e-12) {
            return None;
        }
        let w1 = (1.0 - w0) * (1.0 - 1.0 / self.left.green(z0));
        let z1 = a * r / (1.0 - w1);
        if !(w1 < 1.0) || z1 > self.right.radius * (1.0 + 1e-12) {
            return None;
        }
        let next = (1.0 - w1) * (1.0 - 1.0 / self.right.green(z1));
        Some((next, w1, z0, z1))
    }

    pub fn point(&self, r: f64) -> Result<TransferPoint> {
        if !(r >= 0.0 && r.is_finite()) {
            return invalid(format!("r = {r} must be finite and non-negative"));
        }
        let beyond = || Error::NotSummable(r);
        let mut w = 0.0;
        let mut converged = false;
        // increasing iterates, each a lower bound for the smallest fixed point
        for _ in 0..MAX_ITER {
            let (next, ..) = self.map(r, w).ok_or_else(beyond)?;
            if next - w <= 1e-16 {
                converged = true;
                w = w.max(next);
                break;
            }
            w = next;
        }
        if !converged {
            // bracket the crossing f(w) = w just above the iterate and bisect
            let mut d = 1e-14;
            let mut hi = None;
            while d < 1e-2 {
                match self.map(r, w + d) {
                    Some((f, ..)) if f < w + d => {
                        hi = Some(w + d);
                        break;
                    }
                    None => break,
                    _ => d *= 2.0,
                }
            }
            if let Some(mut hi) = hi {
                let mut lo = w;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    match self.map(r, mid) {
                        Some((f, ..)) if f >= mid => lo = mid,
                        _ => hi = mid,
                    }
                    if hi - lo <= 1e-16 {
                        break;
                    }
                }
                w = lo;
                converged = true;
            }
        }
        let (_, w1, z0, z1) = self.map(r, w).ok_or_else(beyond)?;
        Ok(TransferPoint {
            alpha: self.alpha,
            r,
            w0: w,
            w1,
            zeta0: z0,
            zeta1: z1,
            truncation: self.order,
            lower_bound_only: true,
            converged,
        })
    }

    /// Largest `r` at which the equations still have a solution.
    pub fn radius(&self) -> f64 {
        let ok = |r: f64| self.point(r).is_ok();
        let (mut lo, mut hi) = (0.0, 1.0);
        while ok(hi) && hi < 64.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

pub fn transfer(m: &Measure, r: f64, order: usize) -> Result<TransferPoint> {
    TransferSystem::new(m, order)?.point(r)
}

/// `w_i` from its definition: paths of length `<= order` from `e` back to
/// `e`, not visiting `e` in between, whose first step uses the `side` part
/// of the measure (`Right` gives `w_0`). Pruning keeps it a lower bound.
pub fn first_step_returns(m: &Measure, side: Side, r: f64, order: usize, prune: f64) -> Result<f64> {
    let s = split(m)?;
    let (weight, part) = match side {
        Side::Right => (s.alpha, &s.right),
        Side::Left => (1.0 - s.alpha, &s.left),
    };
    let e = m.group.identity();
    let mut total = 0.0;
    let mut seed = Vec::new();
    for (x, p) in part.weights_f64() {
        let y = m.group.embed(side, x)?;
        let v = r * weight * p;
        if y == e {
            total += v;
        } else {
            seed.push((y, v));
        }
    }
    let mut w = ElementWalk::<f64>::new(m, &r);
    w.seed(seed, 1);
    for k in 2..=order {
        w.step()?;
        total += w.value(&e);
        let remaining = order - k;
        w.kill(|_, y| *y == e || m.group.word_length(y) as usize > remaining);
        if prune > 0.0 {
            w.prune(prune);
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct TransferCheck {
    pub x: String,
    pub direct: f64,
    pub transferred: f64,
    pub relative: f64,
}

/// Compares the free-product Green function at left-factor elements with
/// `G_0(e,x|zeta_0) / (1 - w_0)`, both sides truncated at `order`.
pub fn transfer_cross_check(
    m: &Measure,
    r: f64,
    factor_elems: &[Element],
    order: usize,
    prune: f64,
) -> Result<Vec<TransferCheck>> {
    let s = split(m)?;
    let tp = transfer(m, r, order)?;
    let embedded: Vec<Element> = factor_elems
        .iter()
        .map(|x| m.group.embed(Side::Left, x.clone()))
        .collect::<Result<_>>()?;
    let (direct, _) = series_at(m, &embedded, r, order, prune)?;
    let (g0, _) = series_at(&s.left, factor_elems, tp.zeta0, order, 0.0)?;
    Ok(factor_elems
        .iter()
        .zip(direct.iter().zip(g0))
        .map(|(x, (d, g))| {
            let t = g[0] / (1.0 - tp.w0);
            TransferCheck {
                x: x.to_string(),
                direct: d[0],
                transferred: t,
                relative: (d[0] - t).abs() / t,
            }
        })
        .collect())
}

/// `omega_P(r) = omega_{Gamma_0}(zeta_0(r))`.
pub fn induced_omega_p(params: &PhaseParams, tp: &TransferPoint) -> Result<f64> {
    let z = tp.zeta0;
    if z == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(classify(params, z)?.omega)
}

/// `(T_l1 x T_l2) * Z^d` with `(1 - alpha) mu_0 + alpha lazy(Z^d)`.
pub fn construction_measure(params: &PhaseParams, d: u32, alpha: f64) -> Result<Measure> {
    if d < 3 {
        return invalid(format!("d = {d} must be at least 3"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return invalid(format!("alpha = {alpha} must lie in (0, 1)"));
    }
    let spec = GroupSpec::free_product(GroupSpec::TreeProduct(params.l1, params.l2), GroupSpec::FreeAbelian(d));
    let kind = MeasureKind::FreeProductMix {
        alpha: rational_from_f64(alpha)?,
        left: Box::new(MeasureKind::ProductMix {
            alpha1: rational_from_f64(params.alpha1)?,
        }),
        right: Box::new(MeasureKind::LazySrw { alpha: q(1, 2) }),
    };
    standard_measure(&spec, kind)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub point: TransferPoint,
    pub omega_p: f64,
    pub factor_regime: Regime,
    /// Fitted exponent of the factor's `H e^{-n omega}` at `zeta_0`.
    pub factor_exponent: f64,
    /// "convergent" when the exponent is below -1, else "divergent"; a
    /// finite-range diagnostic.
    pub diagnostic: &'static str,
    pub omega_gamma: Option<OmegaEstimate>,
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Crossing {
    pub r_star: f64,
    pub zeta0: f64,
    pub residual: f64,
    pub bracket: (f64, f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstructionReport {
    pub params: PhaseParams,
    pub d: u32,
    pub alpha: f64,
    pub order: usize,
    pub r0: f64,
    pub factor_radius: f64,
    /// Where the transfer equations stop having a solution (heuristic).
    pub radius_estimate: f64,
    pub rows: Vec<ScanRow>,
    /// Grid points past `radius_estimate`.
    pub skipped: Vec<f64>,
    pub crossing: Option<Crossing>,
    /// A convergent-diagnostic row follows a divergent one.
    pub transition: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub order: usize,
    /// Sphere radius for the full-group growth estimate; skipped when `None`.
    pub growth_n: Option<u32>,
}

impl Default for ScanOptions {
    fn default() -> ScanOptions {
        ScanOptions {
            order: 4000,
            growth_n: None,
        }
    }
}

/// `n` points spread evenly on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn scan_construction(
    params: &PhaseParams,
    d: u32,
    alpha: f64,
    r_grid: Option<&[f64]>,
    opts: ScanOptions,
) -> Result<ConstructionReport> {
    if params.l1 <= params.l2 {
        return invalid(format!("factor degrees ({}, {}) need l1 > l2", params.l1, params.l2));
    }
    let m = construction_measure(params, d, alpha)?;
    let sys = TransferSystem::new(&m, opts.order)?;
    let (_, r0) = crate::bitree::solve_t0(params)?;
    let factor_radius = capital_r(params);
    let radius_estimate = sys.radius();
    let grid: Vec<f64> = match r_grid {
        Some(g) => g.to_vec(),
        None => linear_grid(1.0, radius_estimate * (1.0 - 1e-9), 24),
    };
    let results: Vec<(f64, Option<ScanRow>)> = grid
        .par_iter()
        .map(|&r| {
            let row = match sys.point(r) {
                Ok(tp) => Some(scan_row(&m, params, tp, opts)?),
                Err(Error::NotSummable(_)) => None,
                Err(e) => return Err(e),
            };
            Ok((r, row))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, row) in results {
        match row {
            Some(x) => rows.push(x),
            None => skipped.push(r),
        }
    }
    let mut crossing = None;
    for w in rows.windows(2) {
        let (a, b) = (&w[0].point, &w[1].point);
        if a.zeta0 < r0 && b.zeta0 >= r0 {
            crossing = Some(refine_crossing(&sys, r0, a.r, b.r)?);
            break;
        }
    }
    let transition = rows
        .windows(2)
        .any(|w| w[0].diagnostic == "divergent" && w[1].diagnostic == "convergent");
    Ok(ConstructionReport {
        params: *params,
        d,
        alpha,
        order: opts.order,
        r0,
        factor_radius,
        radius_estimate,
        rows,
        skipped,
        crossing,
        transition,
    })
}

fn scan_row(m: &Measure, params: &PhaseParams, tp: TransferPoint, opts: ScanOptions) -> Result<ScanRow> {
    let omega_p = induced_omega_p(params, &tp)?;
    let (fit, rep) = fit_hn_exponent(params, tp.zeta0, &exponent_window())?;
    let omega_gamma = match opts.growth_n {
        Some(n) => {
            let s = h_series(
                m,
                tp.r,
                n,
                GrowthOptions {
                    prune: 1e-14,
                    ..GrowthOptions::new(1e-6)
                },
                None,
            )?;
            Some(omega_estimate(&s, default_window(&s))?)
        }
        None => None,
    };
    Ok(ScanRow {
        point: tp,
        omega_p,
        factor_regime: rep.regime,
        factor_exponent: fit.slope,
        diagnostic: if fit.slope < -1.0 { "convergent" } else { "divergent" },
        gap: omega_gamma.map(|w| w.slope - omega_p),
        omega_gamma,
    })
}

fn refine_crossing(sys: &TransferSystem, r0: f64, lo: f64, hi: f64) -> Result<Crossing> {
    let (mut a, mut b) = (lo, hi);
    let mut z = sys.point(b)?.zeta0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let zm = sys.point(mid)?.zeta0;
        if zm < r0 {
            a = mid;
        } else {
            b = mid;
            z = zm;
        }
        if (z - r0).abs() < 1e-12 || b - a < 1e-15 {
            break;
        }
    }
    Ok(Crossing {
        r_star: b,
        zeta0: z,
        residual: (z - r0).abs(),
        bracket: (lo, hi),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Measure {
        let spec = GroupSpec::free_product(GroupSpec::RegularTree(3), GroupSpec::FreeAbelian(3));
        let kind = MeasureKind::FreeProductMix {
            alpha: q(1, 3),
            left: Box::new(MeasureKind::TreeLazy),
            right: Box::new(MeasureKind::LazySrw { alpha: q(1, 2) }),
        };
        standard_measure(&spec, kind).unwrap()
    }

    #[test]
    fn lattice_returns_match_chain() {
        let m = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
        let a = return_probabilities(&m, 30).unwrap();
        let b = AnyLumping::for_measure(&m)
            .unwrap()
            .class_table(1.0, 0, 30, 0.0)
            .diagonal;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14 * y.max(1e-300) + 1e-300, "{x} {y}");
        }
        let m = standard_measure(
            &GroupSpec::TreeProduct(5, 3),
            MeasureKind::ProductMix { alpha1: q(1, 3) },
        )
        .unwrap();
        let a = return_probabilities(&m, 20).unwrap();
        let b = AnyLumping::for_measure(&m)
            .unwrap()
            .class_table(1.0, 0, 20, 0.0)
            .diagonal;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13 * y, "{x} {y}");
        }
    }

    #[test]
    fn zero_r() {
        let tp = transfer(&small(), 0.0, 10).unwrap();
        assert_eq!((tp.w0, tp.w1, tp.zeta0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn equations_match_walk_definition() {
        let m = small();
        let sys = TransferSystem::new(&m, 200).unwrap();
        let tp = sys.point(0.4).unwrap();
        let w0 = first_step_returns(&m, Side::Right, 0.4, 10, 1e-10).unwrap();
        let w1 = first_step_returns(&m, Side::Left, 0.4, 10, 1e-10).unwrap();
        assert!(w0 <= tp.w0 + 1e-12 && w1 <= tp.w1 + 1e-12);
        assert!(
            (w0 - tp.w0).abs() < 1e-7 && (w1 - tp.w1).abs() < 1e-7,
            "{w0} {w1} {tp:?}"
        );
        assert!((tp.zeta0 - (2.0 / 3.0) * 0.4 / (1.0 - tp.w0)).abs() < 1e-15);
    }

    #[test]
    fn monotone_in_r_and_order() {
        let sys = TransferSystem::new(&small(), 100).unwrap();
        let pts: Vec<TransferPoint> = linear_grid(0.2, 1.0, 8)
            .iter()
            .map(|&r| sys.point(r).unwrap())
            .collect();
        assert!(pts
            .windows(2)
            .all(|p| p[0].w0 <= p[1].w0 && p[0].zeta0 < p[1].zeta0 && p[0].w1 <= p[1].w1));
        let lo = TransferSystem::new(&small(), 10).unwrap().point(0.9).unwrap();
        let hi = sys.point(0.9).unwrap();
        assert!(lo.w0 <= hi.w0 && lo.w1 <= hi.w1);
    }

    #[test]
    fn binomial_mix_is_a_probability_mix() {
        let ones = vec![1.0; 12];
        let m = binomial_mix(&ones, &ones, 0.3);
        assert!(m.iter().all(|x| (x - 1.0).abs() < 1e-13));
        let line = simple_line(6);
        assert_eq!(line, vec![1.0, 0.0, 0.5, 0.0, 0.375, 0.0, 0.3125]);
    }
}
