use std::collections::BTreeMap;

use serde::Serialize;

use super::convolve::ElementWalk;
use super::lumped::AnyLumping;
use super::measure::Measure;
use crate::error::{invalid, Error, Result};
use crate::groups::Element;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GreenEstimate {
    pub value: f64,
    /// Upper bound on the omitted tail when `rigorous`, an extrapolated
    /// estimate otherwise (infinite when unknown).
    pub tail_bound: f64,
    pub rigorous: bool,
    pub truncation_order: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct GreenOptions {
    pub tol: f64,
    pub require_rigorous: bool,
    pub max_order: usize,
    /// Mass pruning threshold for element-level walks.
    pub prune: f64,
}

impl GreenOptions {
    pub fn new(tol: f64) -> GreenOptions {
        GreenOptions {
            tol,
            require_rigorous: false,
            max_order: 100_000,
            prune: 0.0,
        }
    }
}

/// Smallest `N` with `x^{N+1} / (1 - x) <= tol`.
pub fn order_for_tail(x: f64, tol: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    let n = ((tol * (1.0 - x)).ln() / x.ln()).ceil() - 1.0;
    n.max(0.0) as usize
}

pub fn geometric_tail(x: f64, order: usize) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.powi(order as i32 + 1) / (1.0 - x)
    }
}

/// Per-step growth of the diagonal terms, from the last two even indices.
pub fn diagonal_ratio(diag: &[f64]) -> f64 {
    let n = diag.len().saturating_sub(1);
    let ne = n - n % 2;
    if ne < 2 || diag[ne - 2] <= 0.0 {
        return f64::INFINITY;
    }
    (diag[ne] / diag[ne - 2]).sqrt()
}

pub fn heuristic_tail(last: f64, prev: f64, theta: f64) -> f64 {
    if !(theta < 1.0) {
        return f64::INFINITY;
    }
    last.max(prev) * theta / (1.0 - theta)
}

/// Partial sums `sum_{k<=N} r^k p_k(e,x)` with the last two terms, and the
/// diagonal `r^k p_k(e,e)`.
pub(crate) fn series_at(
    m: &Measure,
    targets: &[Element],
    r: f64,
    order: usize,
    prune: f64,
) -> Result<(Vec<[f64; 3]>, Vec<f64>)> {
    if let Some(l) = AnyLumping::for_measure(m) {
        return Ok(l.at_elements(r, targets, order, prune));
    }
    let lens: Vec<u32> = targets.iter().map(|x| m.group.word_length(x)).collect();
    let max_len = lens.iter().copied().max().unwrap_or(0);
    let mut w = ElementWalk::<f64>::new(m, &r);
    let mut out = vec![[0.0; 3]; targets.len()];
    let e = m.group.identity();
    let mut diagonal = vec![1.0];
    for (o, x) in out.iter_mut().zip(targets) {
        o[0] = if *x == e { 1.0 } else { 0.0 };
        o[1] = o[0];
    }
    for k in 0..order {
        w.step()?;
        let horizon = max_len as usize + (order - k - 1);
        w.kill(|_, y| m.group.word_length(y) as usize > horizon);
        if prune > 0.0 {
            w.prune(prune);
        }
        diagonal.push(w.value(&e));
        for (o, x) in out.iter_mut().zip(targets) {
            let v = w.value(x);
            o[0] += v;
            o[2] = o[1];
            o[1] = v;
        }
    }
    Ok((out, diagonal))
}

pub fn green_truncated(m: &Measure, targets: &[Element], r: f64, tol: f64) -> Result<BTreeMap<Element, GreenEstimate>> {
    green_truncated_with(m, targets, r, GreenOptions::new(tol))
}

pub fn green_truncated_with(
    m: &Measure,
    targets: &[Element],
    r: f64,
    opts: GreenOptions,
) -> Result<BTreeMap<Element, GreenEstimate>> {
    if !(r >= 0.0) || !r.is_finite() {
        return invalid(format!("r = {r} must be a finite non-negative number"));
    }
    if !(opts.tol > 0.0) {
        return invalid(format!("tol = {} must be positive", opts.tol));
    }
    for x in targets {
        m.group.check(x)?;
    }
    let e = m.group.identity();
    if r == 0.0 {
        return Ok(targets
            .iter()
            .map(|x| {
                let v = if *x == e { 1.0 } else { 0.0 };
                (
                    x.clone(),
                    GreenEstimate {
                        value: v,
                        tail_bound: 0.0,
                        rigorous: true,
                        truncation_order: 0,
                    },
                )
            })
            .collect());
    }
    let rho = m.spectral_radius();
    if let Some(rho) = rho {
        let x = r * rho;
        if x < 1.0 {
            let order = order_for_tail(x, opts.tol);
            if order > opts.max_order {
                return Err(Error::Budget {
                    reached: order,
                    completed: 0,
                });
            }
            let (vals, _) = series_at(m, targets, r, order, opts.prune)?;
            let tail = geometric_tail(x, order);
            return Ok(targets
                .iter()
                .zip(vals)
                .map(|(t, v)| {
                    (
                        t.clone(),
                        GreenEstimate {
                            value: v[0],
                            tail_bound: tail,
                            rigorous: true,
                            truncation_order: order,
                        },
                    )
                })
                .collect());
        }
        if opts.require_rigorous {
            return Err(Error::NotSummable(x));
        }
    } else if opts.require_rigorous {
        return invalid(format!("no exact spectral radius known for {}", m.group));
    }
    let max_len = targets.iter().map(|x| m.group.word_length(x)).max().unwrap_or(0) as usize;
    let mut order = (4 * max_len + 16).max(64);
    loop {
        let (vals, diag) = series_at(m, targets, r, order, opts.prune)?;
        let theta = diagonal_ratio(&diag);
        let ests: Vec<GreenEstimate> = vals
            .iter()
            .map(|v| GreenEstimate {
                value: v[0],
                tail_bound: heuristic_tail(v[1], v[2], theta),
                rigorous: false,
                truncation_order: order,
            })
            .collect();
        if ests.iter().all(|g| g.tail_bound <= opts.tol) {
            return Ok(targets.iter().cloned().zip(ests).collect());
        }
        order *= 2;
        if order > opts.max_order {
            return Err(Error::Budget {
                reached: order,
                completed: order / 2,
            });
        }
    }
}

/// Paths from `x` to `y` whose interior points avoid `avoid`, up to length
/// `order`. A lower bound only.
pub fn restricted_green(
    m: &Measure,
    avoid: impl Fn(&Element) -> bool,
    x: &Element,
    y: &Element,
    r: f64,
    order: usize,
) -> Result<GreenEstimate> {
    m.group.check(x)?;
    m.group.check(y)?;
    let mut w = ElementWalk::<f64>::new(m, &r);
    w.seed([(x.clone(), 1.0)], 0);
    let mut value = w.value(y);
    for _ in 0..order {
        // current positions become interior points of longer paths
        if w.step_index > 0 {
            w.kill(|_, z| avoid(z));
        }
        w.step()?;
        value += w.value(y);
    }
    Ok(GreenEstimate {
        value,
        tail_bound: f64::INFINITY,
        rigorous: false,
        truncation_order: order,
    })
}

#[derive(Clone, Debug)]
pub struct FirstReturn {
    pub kernel: BTreeMap<Element, f64>,
    pub total_mass_lower: f64,
    /// Mass removed by pruning (zero unless a threshold was given).
    pub dropped: f64,
}

/// First-return kernel to `member`, truncated at `order` steps.
pub fn first_return_kernel(
    m: &Measure,
    member: impl Fn(&Element) -> bool,
    r: f64,
    order: usize,
) -> Result<FirstReturn> {
    first_return_kernel_pruned(m, member, r, order, 0.0)
}

pub fn first_return_kernel_pruned(
    m: &Measure,
    member: impl Fn(&Element) -> bool,
    r: f64,
    order: usize,
    prune: f64,
) -> Result<FirstReturn> {
    if !member(&m.group.identity()) {
        return invalid("the identity must belong to the return set");
    }
    if order == 0 {
        return invalid("first-return order must be at least 1");
    }
    let mut w = ElementWalk::<f64>::new(m, &r);
    let mut kernel: BTreeMap<Element, f64> = BTreeMap::new();
    let mut dropped = 0.0;
    for _ in 0..order {
        w.step()?;
        let mut hits = Vec::new();
        for &i in w.active() {
            let z = w.element(i);
            if member(z) {
                hits.push((z.clone(), *w.value_id(i)));
            }
        }
        for (z, v) in hits {
            *kernel.entry(z).or_insert(0.0) += v;
        }
        w.kill(|_, z| member(z));
        if prune > 0.0 {
            dropped += w.prune(prune);
        }
    }
    kernel.retain(|_, v| *v > 0.0);
    let total_mass_lower = kernel.values().sum();
    Ok(FirstReturn {
        kernel,
        total_mass_lower,
        dropped,
    })
}

/// `p_{2k}(e,e)^{1/(2k)}`, a lower bound for the spectral radius.
pub fn spectral_radius_lower(m: &Measure, k: usize) -> Result<f64> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    let e = m.group.identity();
    let (_, diag) = series_at(m, &[e], 1.0, 2 * k, 0.0)?;
    Ok(diag[2 * k].powf(1.0 / (2 * k) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::GroupSpec;
    use crate::kernels::measure::{q, standard_measure, MeasureKind};
    use num_traits::Zero;

    fn tree4() -> Measure {
        standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap()
    }

    #[test]
    fn tree_green_at_one() {
        let m = tree4();
        let e = m.group.identity();
        let x = Element::Word(vec![0, 1]);
        let g = green_truncated(&m, &[e.clone(), x.clone()], 1.0, 1e-9).unwrap();
        let ge = g[&e];
        assert!(ge.rigorous && ge.tail_bound <= 1e-9);
        assert!(ge.value <= 3.0 && 3.0 <= ge.value + ge.tail_bound, "{ge:?}");
        let gx = g[&x];
        assert!(gx.value <= 1.0 / 3.0 && 1.0 / 3.0 <= gx.value + gx.tail_bound + 1e-15);
    }

    #[test]
    fn r_zero() {
        let m = standard_measure(&GroupSpec::Heisenberg3, MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
        let x = Element::Heisenberg([1, 0, 0]);
        let g = green_truncated(&m, &[m.group.identity(), x.clone()], 0.0, 1e-9).unwrap();
        assert_eq!(g[&m.group.identity()].value, 1.0);
        assert_eq!(g[&x].value, 0.0);
    }

    #[test]
    fn not_summable_when_rigorous() {
        let m = tree4();
        let mut o = GreenOptions::new(1e-9);
        o.require_rigorous = true;
        assert!(matches!(
            green_truncated_with(&m, &[m.group.identity()], 1.2, o),
            Err(Error::NotSummable(_))
        ));
    }

    #[test]
    fn restricted_cases() {
        let m = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: Zero::zero() }).unwrap();
        let e = m.group.identity();
        let x = Element::Abelian(vec![1, 0, 0]);
        let free = restricted_green(&m, |_| false, &e, &x, 1.0, 12).unwrap();
        let (s, _) = series_at(&m, &[x.clone()], 1.0, 12, 0.0).unwrap();
        assert!((free.value - s[0][0]).abs() < 1e-14);
        let r = restricted_green(&m, |z| *z == e, &x, &x, 1.0, 20).unwrap();
        let u = restricted_green(&m, |_| false, &x, &x, 1.0, 20).unwrap();
        assert!(r.value < u.value);
        let at0 = restricted_green(&m, |z| *z != e, &e, &e, 0.0, 5).unwrap();
        assert_eq!(at0.value, 1.0);
    }

    #[test]
    fn first_return_whole_group() {
        let m = tree4();
        let fr = first_return_kernel(&m, |_| true, 0.7, 6).unwrap();
        assert!((fr.total_mass_lower - 0.7).abs() < 1e-15);
        assert_eq!(fr.kernel.len(), 5);
        let fr = first_return_kernel(&m, |_| true, 0.0, 6).unwrap();
        assert!(fr.kernel.is_empty() && fr.total_mass_lower == 0.0);
    }

    #[test]
    fn spectral_radius_bounds() {
        let m = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: Zero::zero() }).unwrap();
        assert!((spectral_radius_lower(&m, 1).unwrap() - (1.0f64 / 6.0).sqrt()).abs() < 1e-15);
        let m = tree4();
        let rho = 0.5 + 3f64.sqrt() / 4.0;
        let mut prev = 0.0;
        for k in [1, 5, 20, 100, 200] {
            let v = spectral_radius_lower(&m, k).unwrap();
            assert!(v < rho && v >= prev - 1e-12);
            prev = v;
        }
        assert!(rho - prev < 0.02);
    }

    #[test]
    fn heuristic_route_for_dl() {
        let m = standard_measure(&GroupSpec::DiestelLeader(2), MeasureKind::DlSrw).unwrap();
        let g = green_truncated(&m, &[m.group.identity()], 0.9, 1e-8).unwrap();
        let ge = g[&m.group.identity()];
        assert!(!ge.rigorous && ge.tail_bound <= 1e-8 && ge.value > 1.0);
    }
}
