//! Sphere sums of the Green function `H_r(n)`, their growth rates, Poincaré
//! partial sums, the distance `ω |x| - log F_r(e, x)` and parabolic-gap
//! diagnostics on free products.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fit::{fit_exponent, linear_fit, LinearFit};
use crate::groups::{Element, GroupSpec, Side};
use crate::kernels::convolve::ElementWalk;
use crate::kernels::green::{diagonal_ratio, geometric_tail, heuristic_tail, order_for_tail};
use crate::kernels::lattice::lattice_green;
use crate::kernels::lumped::{AnyLumping, LatticeOrbits, Lumping};
use crate::kernels::measure::{to_f64, Measure, MeasureKind};
use crate::kernels::{green_truncated_with, GreenOptions};
use crate::report::{fmt_f64, Csv};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpherePoint {
    pub n: u32,
    pub value: f64,
    pub tail: f64,
    pub rigorous: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    /// Exact orbit-lumped chain.
    Lumped,
    /// Bessel integral on Z^d.
    LatticeIntegral,
    /// Convolution over group elements.
    ElementWalk,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthSeries {
    pub group: GroupSpec,
    pub measure: String,
    pub r: f64,
    pub values: Vec<SpherePoint>,
    pub restriction: Option<String>,
    pub method: Method,
    /// Series truncation order (0 for the integral route).
    pub order: usize,
    /// Probability mass removed by pruning.
    pub dropped: f64,
}

impl GrowthSeries {
    pub fn value(&self, n: u32) -> Option<f64> {
        self.values.get(n as usize).map(|p| p.value)
    }

    pub fn n_max(&self) -> u32 {
        self.values.len() as u32 - 1
    }

    pub fn to_csv(&self) -> String {
        let mut c = Csv::new(&["n", "H", "tail", "rigorous"]);
        for p in &self.values {
            c.row(&[
                p.n.to_string(),
                fmt_f64(p.value),
                fmt_f64(p.tail),
                p.rigorous.to_string(),
            ]);
        }
        c.finish()
    }
}

/// Restricts sphere sums to a subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Restriction {
    /// The factor subgroup on one side of a free product.
    Factor(Side),
}

impl Restriction {
    fn describe(&self) -> String {
        match self {
            Restriction::Factor(Side::Left) => "left factor".into(),
            Restriction::Factor(Side::Right) => "right factor".into(),
        }
    }

    fn contains(&self, x: &Element) -> bool {
        match (self, x) {
            (Restriction::Factor(side), Element::Free(s)) => s.is_empty() || (s.len() == 1 && s[0].side == *side),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GrowthOptions {
    /// Target tail per sphere.
    pub tol: f64,
    /// Fixed truncation order; chosen from `tol` when `None`.
    pub order: Option<usize>,
    pub max_order: usize,
    /// Mass pruning threshold for the non-rigorous routes.
    pub prune: f64,
}

impl GrowthOptions {
    pub fn new(tol: f64) -> GrowthOptions {
        GrowthOptions {
            tol,
            order: None,
            max_order: 2048,
            prune: 1e-16,
        }
    }

    pub fn with_order(tol: f64, order: usize) -> GrowthOptions {
        GrowthOptions {
            order: Some(order),
            ..GrowthOptions::new(tol)
        }
    }
}

pub fn h_series(
    m: &Measure,
    r: f64,
    n_max: u32,
    opts: GrowthOptions,
    restriction: Option<Restriction>,
) -> Result<GrowthSeries> {
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("r = {r} must be positive"));
    }
    if !(opts.tol > 0.0) {
        return invalid("tol must be positive");
    }
    if restriction.is_some() && !matches!(m.group, GroupSpec::FreeProduct(..)) {
        return invalid("restricted sphere sums need a free product");
    }
    let base = GrowthSeries {
        group: m.group.clone(),
        measure: m.kind.to_string(),
        r,
        values: Vec::new(),
        restriction: restriction.map(|x| x.describe()),
        method: Method::ElementWalk,
        order: 0,
        dropped: 0.0,
    };
    if restriction.is_none() {
        if let (GroupSpec::FreeAbelian(d), MeasureKind::LazySrw { alpha }) = (&m.group, &m.kind) {
            if r >= 1.0 {
                return lattice_series(base, *d, to_f64(alpha), r, n_max);
            }
        }
        if let Some(l) = AnyLumping::for_measure(m) {
            return lumped_series(base, m, &l, r, n_max, opts);
        }
    }
    element_series(base, m, r, n_max, opts, restriction)
}

fn lattice_series(mut s: GrowthSeries, d: u32, alpha: f64, r: f64, n_max: u32) -> Result<GrowthSeries> {
    let orbits = LatticeOrbits { d, alpha };
    let mut reps: Vec<Vec<u32>> = Vec::new();
    for n in 0..=n_max {
        partitions(n, d as usize, n, &mut Vec::new(), &mut reps);
    }
    let vals = lattice_green(d, alpha, r, &reps)?;
    s.values = (0..=n_max)
        .map(|n| SpherePoint {
            n,
            value: 0.0,
            tail: 0.0,
            rigorous: false,
        })
        .collect();
    for (k, (v, err)) in reps.iter().zip(vals) {
        let p = &mut s.values[orbits.length(k) as usize];
        let size = orbits.size(k);
        p.value += size * v;
        p.tail += size * err;
    }
    s.method = Method::LatticeIntegral;
    Ok(s)
}

/// Non-increasing sequences of `len` non-negative integers summing to `n`.
fn partitions(n: u32, len: usize, cap: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if len == 0 {
        if n == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for first in (0..=n.min(cap)).rev() {
        if first as usize * len < n as usize {
            break;
        }
        cur.push(first);
        partitions(n - first, len - 1, first, cur, out);
        cur.pop();
    }
}

fn lumped_series(
    mut s: GrowthSeries,
    m: &Measure,
    l: &AnyLumping,
    r: f64,
    n_max: u32,
    opts: GrowthOptions,
) -> Result<GrowthSeries> {
    let rho = m.spectral_radius().filter(|rho| r * rho < 1.0);
    let sphere = |t: &crate::kernels::lumped::ClassTable, v: &[f64]| {
        let mut out = vec![0.0; n_max as usize + 1];
        for i in 0..t.lengths.len() {
            out[t.lengths[i] as usize] += t.sizes[i] * v[i];
        }
        out
    };
    if let Some(rho) = rho {
        // sum_{x in S_n} p_k(e,x) <= sqrt(|S_n| p_2k(e,e)) <= sqrt(|S_n|) rho^k
        let x = r * rho;
        let sizes = {
            let t = l.class_table(r, n_max, n_max as usize, 0.0);
            sphere(&t, &vec![1.0; t.lengths.len()])
        };
        let worst = sizes.iter().copied().fold(1.0f64, f64::max).sqrt();
        let order = match opts.order {
            Some(o) => o,
            None => order_for_tail(x, opts.tol / worst).max(n_max as usize),
        };
        if opts.order.is_none() && order > opts.max_order {
            return Err(Error::Budget {
                reached: order,
                completed: 0,
            });
        }
        let t = l.class_table(r, n_max, order, 0.0);
        let h = sphere(&t, &t.green);
        s.values = (0..=n_max)
            .map(|n| SpherePoint {
                n,
                value: h[n as usize],
                tail: sizes[n as usize].sqrt() * geometric_tail(x, order),
                rigorous: true,
            })
            .collect();
        s.method = Method::Lumped;
        s.order = order;
        return Ok(s);
    }
    let mut order = opts.order.unwrap_or_else(|| (4 * n_max as usize + 16).max(64));
    loop {
        let t = l.class_table(r, n_max, order, opts.prune);
        let theta = diagonal_ratio(&t.diagonal);
        let h = sphere(&t, &t.green);
        let last = sphere(&t, &t.last);
        let prev = sphere(&t, &t.prev);
        s.values = (0..=n_max)
            .map(|n| {
                let i = n as usize;
                SpherePoint {
                    n,
                    value: h[i],
                    tail: heuristic_tail(last[i], prev[i], theta),
                    rigorous: false,
                }
            })
            .collect();
        s.method = Method::Lumped;
        s.order = order;
        s.dropped = t.dropped;
        let done = s.values.iter().all(|p| p.tail <= opts.tol);
        if done || opts.order.is_some() || order * 2 > opts.max_order {
            return Ok(s);
        }
        order *= 2;
    }
}

fn element_series(
    mut s: GrowthSeries,
    m: &Measure,
    r: f64,
    n_max: u32,
    opts: GrowthOptions,
    restriction: Option<Restriction>,
) -> Result<GrowthSeries> {
    let rho = m.spectral_radius().filter(|rho| r * rho < 1.0 && opts.prune == 0.0);
    let mut order = match (opts.order, rho) {
        (Some(o), _) => o,
        (None, Some(rho)) => order_for_tail(r * rho, opts.tol).max(n_max as usize),
        (None, None) => (4 * n_max as usize + 16).max(64),
    };
    loop {
        let run = element_run(m, r, n_max, order, opts.prune, restriction)?;
        let theta = diagonal_ratio(&run.diagonal);
        s.values = (0..=n_max as usize)
            .map(|i| {
                let (tail, rigorous) = match rho {
                    Some(rho) => ((run.counts[i] as f64).sqrt() * geometric_tail(r * rho, order), true),
                    None => (heuristic_tail(run.last[i], run.prev[i], theta), false),
                };
                SpherePoint {
                    n: i as u32,
                    value: run.h[i],
                    tail,
                    rigorous,
                }
            })
            .collect();
        s.method = Method::ElementWalk;
        s.order = order;
        s.dropped = run.dropped;
        let done = s.values.iter().all(|p| p.tail <= opts.tol);
        if done || opts.order.is_some() || rho.is_some() || order * 2 > opts.max_order {
            return Ok(s);
        }
        order *= 2;
    }
}

struct ElementRun {
    h: Vec<f64>,
    last: Vec<f64>,
    prev: Vec<f64>,
    counts: Vec<usize>,
    diagonal: Vec<f64>,
    dropped: f64,
}

fn element_run(
    m: &Measure,
    r: f64,
    n_max: u32,
    order: usize,
    prune: f64,
    restriction: Option<Restriction>,
) -> Result<ElementRun> {
    let na = n_max as usize + 1;
    let e = m.group.identity();
    let mut w = ElementWalk::<f64>::new(m, &r);
    let mut run = ElementRun {
        h: vec![0.0; na],
        last: vec![0.0; na],
        prev: vec![0.0; na],
        counts: vec![0; na],
        diagonal: vec![1.0],
        dropped: 0.0,
    };
    run.h[0] = 1.0;
    run.last[0] = 1.0;
    let mut counted: Vec<bool> = Vec::new();
    let keep = |x: &Element| restriction.is_none_or(|f| f.contains(x));
    for k in 0..order {
        w.step().map_err(|err| match err {
            Error::Budget { reached, .. } => Error::Budget { reached, completed: k },
            other => other,
        })?;
        let horizon = n_max as usize + (order - k - 1);
        w.kill(|_, y| m.group.word_length(y) as usize > horizon);
        if prune > 0.0 {
            run.dropped += w.prune(prune);
        }
        let mut cur = vec![0.0; na];
        for &i in w.active() {
            let len = w.length(i) as usize;
            if len < na && keep(w.element(i)) {
                cur[len] += *w.value_id(i);
                if counted.len() <= i as usize {
                    counted.resize(i as usize + 1, false);
                }
                if !counted[i as usize] {
                    counted[i as usize] = true;
                    run.counts[len] += 1;
                }
            }
        }
        for i in 0..na {
            run.h[i] += cur[i];
        }
        run.prev = std::mem::replace(&mut run.last, cur);
        run.diagonal.push(w.value(&e));
    }
    run.counts[0] = 1;
    Ok(run)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaEstimate {
    pub slope: f64,
    pub window: (u32, u32),
    pub stderr: f64,
}

/// Least-squares slope of `log H_r(n)` on `n` over `window`.
pub fn omega_estimate(series: &GrowthSeries, window: (u32, u32)) -> Result<OmegaEstimate> {
    let (lo, hi) = window;
    if hi < lo + 5 || hi > series.n_max() {
        return invalid(format!(
            "window [{lo}, {hi}] must span at least 5 inside [0, {}]",
            series.n_max()
        ));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for n in lo..=hi {
        let v = series.values[n as usize].value;
        if !(v > 0.0) {
            return invalid(format!("H({n}) = {v} is not positive"));
        }
        xs.push(n as f64);
        ys.push(v.ln());
    }
    let f = linear_fit(&xs, &ys).expect("window has distinct points");
    Ok(OmegaEstimate {
        slope: f.slope,
        window,
        stderr: f.stderr,
    })
}

/// Default window: the top half of the available radii.
pub fn default_window(series: &GrowthSeries) -> (u32, u32) {
    let n = series.n_max();
    ((n / 2).min(n.saturating_sub(5)), n)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaPartial {
    pub s: f64,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// First `n1` from which `term(n+1) < term(n)` holds up to the end.
    pub decay_from: Option<u32>,
}

impl ThetaPartial {
    pub fn sum(&self) -> f64 {
        *self.partial_sums.last().unwrap_or(&0.0)
    }
}

/// Partial sums of `sum_n H_r(n) e^{-s n}`.
pub fn theta_partial(series: &GrowthSeries, s: f64) -> ThetaPartial {
    let terms: Vec<f64> = series
        .values
        .iter()
        .map(|p| p.value * (-s * p.n as f64).exp())
        .collect();
    let mut acc = 0.0;
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let mut decay_from = None;
    for n in (0..terms.len().saturating_sub(1)).rev() {
        if terms[n + 1] < terms[n] {
            decay_from = Some(n as u32);
        } else {
            break;
        }
    }
    ThetaPartial {
        s,
        terms,
        partial_sums,
        decay_from,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DrDistance {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
}

/// `omega |x| - log(G(e,x|r) / G(e,e|r))`, with the interval implied by the
/// Green tails.
pub fn dr_distance(m: &Measure, r: f64, x: &Element, omega: f64, tol: f64) -> Result<DrDistance> {
    let e = m.group.identity();
    if *x == e {
        return Ok(DrDistance {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
        });
    }
    let g = green_truncated_with(m, &[e.clone(), x.clone()], r, GreenOptions::new(tol))?;
    let (ge, gx) = (g[&e], g[x]);
    if !(gx.value > 0.0) {
        return Err(Error::Numeric(format!("G(e, {x}) = 0")));
    }
    let len = m.group.word_length(x) as f64;
    let d = |a: f64, b: f64| omega * len - (a / b).ln();
    Ok(DrDistance {
        value: d(gx.value, ge.value),
        lower: d(gx.value + gx.tail_bound, ge.value),
        upper: d(gx.value, ge.value + ge.tail_bound),
    })
}

/// `Ĉ = max_{1 <= n <= fit_upto} H(n)/n^3` and whether `H(n) <= Ĉ n^3` holds
/// on the whole series.
pub fn cubic_bound(series: &GrowthSeries, fit_upto: u32) -> (f64, bool) {
    let c = (1..=fit_upto.min(series.n_max()))
        .map(|n| series.values[n as usize].value / (n as f64).powi(3))
        .fold(0.0f64, f64::max);
    let holds = series
        .values
        .iter()
        .skip(1)
        .all(|p| p.value <= c * (p.n as f64).powi(3) * (1.0 + 1e-12));
    (c, holds)
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub r: f64,
    pub factor: Side,
    pub omega_p: OmegaEstimate,
    pub omega_gamma: OmegaEstimate,
    pub gap: f64,
    pub gap_stderr: f64,
    /// Fitted exponent of `H_r(n) e^{-n omega}`; below -1 suggests
    /// convergent type. A finite diagnostic, not a proof.
    pub convergence_exponent: Option<LinearFit>,
    /// `max_{n+m <= N} H(n+m) / (H(n) H(m))`.
    pub multiplicativity: f64,
    pub restricted: GrowthSeries,
    pub full: GrowthSeries,
}

pub fn parabolic_gap_report(m: &Measure, r: f64, factor: Side, n_max: u32, opts: GrowthOptions) -> Result<GapReport> {
    if !matches!(m.group, GroupSpec::FreeProduct(..)) {
        return invalid("parabolic gaps need a free product");
    }
    let full = h_series(m, r, n_max, opts, None)?;
    let restricted = h_series(m, r, n_max, opts, Some(Restriction::Factor(factor)))?;
    let window = default_window(&full);
    let omega_gamma = omega_estimate(&full, window)?;
    let omega_p = omega_estimate(&restricted, window)?;
    let ns: Vec<u32> = (window.0.max(1)..=window.1).collect();
    let logs: Vec<f64> = ns.iter().map(|&n| full.values[n as usize].value.ln()).collect();
    let convergence_exponent = fit_exponent(&ns, &logs, omega_gamma.slope);
    let h = |n: u32| full.values[n as usize].value;
    let mut multiplicativity = 0.0f64;
    for a in 1..=n_max {
        for b in 1..=(n_max - a) {
            multiplicativity = multiplicativity.max(h(a + b) / (h(a) * h(b)));
        }
    }
    Ok(GapReport {
        r,
        factor,
        gap: omega_gamma.slope - omega_p.slope,
        gap_stderr: (omega_gamma.stderr.powi(2) + omega_p.stderr.powi(2)).sqrt(),
        omega_p,
        omega_gamma,
        convergence_exponent,
        multiplicativity,
        restricted,
        full,
    })
}

/// Green values on a whole ball, keyed by element; used by callers that need
/// per-element values rather than sphere sums.
pub fn ball_green(m: &Measure, r: f64, n_max: u32, order: usize, prune: f64) -> Result<HashMap<Element, f64>> {
    let mut w = ElementWalk::<f64>::new(m, &r);
    let mut out: HashMap<Element, f64> = HashMap::new();
    out.insert(m.group.identity(), 1.0);
    for k in 0..order {
        w.step()?;
        let horizon = n_max as usize + (order - k - 1);
        w.kill(|_, y| m.group.word_length(y) as usize > horizon);
        if prune > 0.0 {
            w.prune(prune);
        }
        for &i in w.active() {
            if w.length(i) <= n_max {
                *out.entry(w.element(i).clone()).or_insert(0.0) += *w.value_id(i);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::measure::{q, standard_measure};
    use crate::trees::tree_sphere_green_sum;

    #[test]
    fn tree_series_is_flat() {
        let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap();
        let s = h_series(&m, 1.0, 12, GrowthOptions::new(1e-9), None).unwrap();
        assert_eq!(s.method, Method::Lumped);
        for p in &s.values {
            let exact = tree_sphere_green_sum(4, 1.0, p.n).unwrap();
            assert!(p.rigorous && p.tail <= 1e-9);
            assert!((p.value - exact).abs() <= p.tail + 1e-12, "{p:?}");
        }
        let w = omega_estimate(&s, (4, 12)).unwrap();
        assert!(w.slope.abs() < 1e-9);
        let th = theta_partial(&s, 0.1);
        for n in 1..=12 {
            assert!((th.terms[n] - 4.0 * (-0.1 * n as f64).exp()).abs() < 1e-8);
        }
        assert!(th.partial_sums.windows(2).all(|w| w[1] >= w[0]));
        assert!((theta_partial(&s, 60.0).sum() - 3.0).abs() < 1e-8);
        assert!(omega_estimate(&s, (4, 7)).is_err());
    }

    #[test]
    fn lattice_integral_matches_series_below_one() {
        let m = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
        let a = h_series(&m, 0.9, 6, GrowthOptions::new(1e-10), None).unwrap();
        assert_eq!(a.method, Method::Lumped);
        let orbits = LatticeOrbits { d: 3, alpha: 0.5 };
        let b = lattice_series(a.clone(), 3, 0.5, 0.9, 6).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.value - y.value).abs() < 1e-8, "{x:?} {y:?}");
        }
        let _ = orbits;
    }

    #[test]
    fn partitions_count() {
        let mut out = Vec::new();
        partitions(5, 3, 5, &mut Vec::new(), &mut out);
        assert_eq!(out.len(), 5);
        let orbits = LatticeOrbits { d: 3, alpha: 0.0 };
        let total: f64 = out.iter().map(|k| orbits.size(k)).sum();
        // |S_5| in Z^3 is 4n^2 + 2 = 102
        assert_eq!(total, 102.0);
    }

    #[test]
    fn element_route_matches_lumped() {
        let m = standard_measure(
            &GroupSpec::TreeProduct(3, 3),
            MeasureKind::ProductMix { alpha1: q(1, 2) },
        )
        .unwrap();
        let a = h_series(&m, 0.8, 3, GrowthOptions::with_order(1e-9, 10), None).unwrap();
        let b = element_series(
            a.clone(),
            &m,
            0.8,
            3,
            GrowthOptions {
                prune: 0.0,
                ..GrowthOptions::with_order(1e-9, 10)
            },
            None,
        )
        .unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.value - y.value).abs() < 1e-12, "{x:?} {y:?}");
        }
    }

    #[test]
    fn dr_distance_on_tree() {
        let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap();
        assert_eq!(
            dr_distance(&m, 1.0, &m.group.identity(), 0.0, 1e-10).unwrap().value,
            0.0
        );
        let x = Element::Word(vec![0, 1, 0]);
        let d = dr_distance(&m, 1.0, &x, 0.0, 1e-10).unwrap();
        assert!((d.value - 3.0 * 3f64.ln()).abs() < 1e-8);
        assert!(d.lower <= d.value && d.value <= d.upper);
    }

    #[test]
    fn cubic_bound_on_flat_series() {
        let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap();
        let s = h_series(&m, 1.0, 15, GrowthOptions::new(1e-9), None).unwrap();
        let (c, holds) = cubic_bound(&s, 10);
        assert!(holds && (c - 4.0).abs() < 1e-8);
    }
}
