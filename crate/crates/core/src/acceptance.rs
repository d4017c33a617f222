//! The numbered acceptance checks, shared by the `selftest` command and the
//! `acceptance` test target. Each check records its sub-results as text.

use std::time::Instant;

use num_traits::One;
use serde::Serialize;

use crate::bitree::{
    capital_r, classify, exponent_window, fit_f_sum_exponent, fit_hn_exponent, psi, psi_prime, solve_t0,
    solve_t0_bisect, solve_t1t2, t_derivatives, PhaseParams,
};
use crate::brw::{simulate, BrwConfig};
use crate::error::Result;
use crate::freeprod::{
    construction_measure, linear_grid, scan_construction, transfer, transfer_cross_check, ScanOptions, TransferSystem,
};
use crate::groups::{ball_layers, dl_sphere_count, tree_level_sphere_count, Element, GroupSpec, Side, DEFAULT_BUDGET};
use crate::growth::{cubic_bound, h_series, omega_estimate, GrowthOptions};
use crate::kernels::{first_return_kernel_pruned, green_truncated, q, standard_measure, MeasureKind, Q};
use crate::trees::{lamplighter_h1_model, tree_green, tree_sphere_green_sum};

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub seconds: f64,
    pub details: Vec<String>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "criterion {:>2}: {verdict} ({:.1} s) {}",
            self.id, self.seconds, self.title
        )
    }
}

struct Checks {
    ok: bool,
    details: Vec<String>,
}

impl Checks {
    fn new() -> Checks {
        Checks {
            ok: true,
            details: Vec::new(),
        }
    }

    fn check(&mut self, passed: bool, what: String) {
        self.ok &= passed;
        self.details
            .push(format!("{} {what}", if passed { "ok  " } else { "FAIL" }));
    }

    fn note(&mut self, what: String) {
        self.details.push(format!("     {what}"));
    }
}

pub const TITLES: [&str; 11] = [
    "DL and tree-level sphere counts",
    "tree closed forms against truncated series",
    "bi-tree system residuals and derivatives",
    "symmetric bi-tree case",
    "bi-tree threshold t0, r0",
    "bi-tree regime exponents and model sums",
    "zero growth rate at r = 1 and cubic bound",
    "linear sphere sums surrogates",
    "free-product transfer",
    "construction scan",
    "branching random walk",
];

/// Wall-clock limits in seconds (`None` where no limit is stated).
const LIMITS: [Option<f64>; 11] = [
    Some(60.0),
    Some(30.0),
    Some(10.0),
    None,
    None,
    Some(60.0),
    None,
    None,
    Some(600.0),
    None,
    Some(300.0),
];

pub fn run(id: u32) -> Result<Outcome> {
    let start = Instant::now();
    let mut c = Checks::new();
    match id {
        1 => c1(&mut c)?,
        2 => c2(&mut c)?,
        3 => c3(&mut c)?,
        4 => c4(&mut c)?,
        5 => c5(&mut c)?,
        6 => c6(&mut c)?,
        7 => c7(&mut c)?,
        8 => c8(&mut c)?,
        9 => c9(&mut c)?,
        10 => c10(&mut c)?,
        11 => c11(&mut c)?,
        _ => return crate::error::invalid(format!("no criterion {id}")),
    }
    let seconds = start.elapsed().as_secs_f64();
    if let Some(limit) = LIMITS[id as usize - 1] {
        c.check(seconds < limit, format!("runtime {seconds:.1} s < {limit} s"));
    }
    Ok(Outcome {
        id,
        title: TITLES[id as usize - 1],
        passed: c.ok,
        seconds,
        details: c.details,
    })
}

pub fn run_all() -> Result<Vec<Outcome>> {
    (1..=11).map(run).collect()
}

fn c1(c: &mut Checks) -> Result<()> {
    for qq in [2u32, 3] {
        let layers = ball_layers(&GroupSpec::DiestelLeader(qq), 8, DEFAULT_BUDGET)?;
        let bfs: Vec<u128> = layers.iter().map(|s| s.len() as u128).collect();
        let formula: Vec<u128> = (0..=8).map(|n| dl_sphere_count(qq, n)).collect();
        c.check(
            bfs == formula,
            format!("DL({qq},{qq}) spheres n<=8: formula {formula:?}, BFS {bfs:?}"),
        );
    }
    for (n, m, want) in [(1, 1, 3u128), (2, 0, 2), (4, 2, 18)] {
        let got = tree_level_sphere_count(3, n, m)?;
        c.check(
            got == want,
            format!("level sphere (n={n}, m={m}) on T_4: {got} (want {want})"),
        );
    }
    Ok(())
}

/// Reduced tree word of length `n`.
fn tree_word(n: usize) -> Element {
    Element::Word((0..n).map(|i| (i % 2) as u8).collect())
}

fn c2(c: &mut Checks) -> Result<()> {
    for l in [4u32, 6] {
        let m = standard_measure(&GroupSpec::RegularTree(l), MeasureKind::TreeLazy)?;
        for r in [0.8, 1.0] {
            let xs: Vec<Element> = (0..=6).map(tree_word).collect();
            let g = green_truncated(&m, &xs, r, 1e-9)?;
            let mut worst = 0.0f64;
            let mut ok = true;
            for (n, x) in xs.iter().enumerate() {
                let est = g[x];
                let exact = tree_green(l, r, n as u32)?;
                let err = (est.value - exact).abs();
                worst = worst.max(err);
                ok &= est.rigorous && est.tail_bound <= 1e-9 && err <= est.tail_bound + 1e-13;
            }
            c.check(
                ok,
                format!("T_{l}, r={r}: max |series - closed form| = {worst:.2e} within rigorous tails <= 1e-9"),
            );
        }
    }
    let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy)?;
    let s = h_series(&m, 1.0, 10, GrowthOptions::new(1e-10), None)?;
    let mut ok = true;
    for n in 1..=10 {
        let exact = tree_sphere_green_sum(4, 1.0, n)?;
        let p = s.values[n as usize];
        ok &= (exact - 4.0).abs() <= 1e-12 && (p.value - 4.0).abs() <= p.tail + 1e-12;
    }
    c.check(ok, "H_n(T_4, r=1) = 4 for 1 <= n <= 10 (closed form and series)".into());
    Ok(())
}

fn p64() -> PhaseParams {
    PhaseParams::new(6, 4, 0.5, 0.5).expect("valid parameters")
}

fn c3(c: &mut Checks) -> Result<()> {
    let p = p64();
    let big_r = capital_r(&p);
    let t_lo = 1.0 / big_r - 0.5;
    let ts = linear_grid(t_lo + 0.01, 1.5, 20);
    let lambdas: Vec<f64> = (0..20).map(|i| 0.01 * 10f64.powf(4.0 * i as f64 / 19.0)).collect();
    let (mut resid, mut dmax, mut pmax) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-3;
    for &t in &ts {
        for &lambda in &lambdas {
            let pt = solve_t1t2(&p, t, lambda)?;
            let (ra, rb) = pt.residuals(&p);
            resid = resid.max(ra.abs()).max(rb.abs());
            let (d1, d2) = t_derivatives(&p, &pt);
            let hh = h * lambda;
            let at = |k: f64| solve_t1t2(&p, t, lambda + k * hh);
            let (a2, a1, b1, b2) = (at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?);
            let five = |f2: f64, f1: f64, g1: f64, g2: f64| (-f2 + 8.0 * f1 - 8.0 * g1 + g2) / (12.0 * hh);
            let f1 = five(a2.t1, a1.t1, b1.t1, b2.t1);
            let f2 = five(a2.t2, a1.t2, b1.t2, b2.t2);
            dmax = dmax.max((d1 - f1).abs() / d1.abs()).max((d2 - f2).abs() / d2.abs());
            let ps = |k: f64| psi(&p, t, lambda + k * hh);
            let fd = five(ps(2.0)?, ps(1.0)?, ps(-1.0)?, ps(-2.0)?);
            let d = psi_prime(&p, t, lambda)?;
            pmax = pmax.max((d - fd).abs() / d.abs());
        }
    }
    c.check(
        resid <= 1e-12,
        format!("max residual on 20x20 (t, lambda) grid: {resid:.2e}"),
    );
    c.check(
        dmax <= 1e-6,
        format!("t1', t2' against central differences: max relative error {dmax:.2e}"),
    );
    c.check(
        pmax <= 1e-6,
        format!("Psi' against central differences: max relative error {pmax:.2e}"),
    );
    Ok(())
}

fn c4(c: &mut Checks) -> Result<()> {
    let p = PhaseParams::new(4, 4, 0.5, 0.5)?;
    let big_r = capital_r(&p);
    let beta = p.betas().0;
    let (mut l0, mut dpsi, mut dw) = (0.0f64, 0.0f64, 0.0f64);
    for i in 1..=10 {
        let r = 1.0 + (big_r - 1.0) * i as f64 / 11.0;
        let rep = classify(&p, r)?;
        let t = 1.0 / r - 0.5;
        let w = (4.0 * (t - (t * t - beta * beta).sqrt())).ln();
        l0 = l0.max((rep.lambda0 - 1.0).abs());
        dpsi = dpsi.max(rep.psi_prime.abs());
        dw = dw.max((rep.omega - w).abs());
    }
    c.check(l0 < 1e-8, format!("max |lambda0 - 1| = {l0:.2e}"));
    c.check(dpsi < 1e-10, format!("max |Psi'(lambda0)| = {dpsi:.2e}"));
    c.check(
        dw < 1e-10,
        format!("max |omega - log(l(t - sqrt(t^2 - beta^2)))| = {dw:.2e}"),
    );
    Ok(())
}

fn c5(c: &mut Checks) -> Result<()> {
    let p = p64();
    let (t0, r0) = solve_t0(&p)?;
    let tb = solve_t0_bisect(&p)?;
    let want_t0 = 17.0 * 3f64.sqrt() / 72.0;
    let want_r0 = 72.0 / (17.0 * 3f64.sqrt() + 36.0);
    let big_r = capital_r(&p);
    c.check(
        (t0 - want_t0).abs() < 1e-12,
        format!("t0 = {t0:.15} vs 17 sqrt(3)/72 = {want_t0:.15}"),
    );
    c.check(
        (t0 - tb).abs() < 1e-12,
        format!("algebraic t0 vs bisection: {:.2e}", (t0 - tb).abs()),
    );
    c.check(
        (r0 - want_r0).abs() < 1e-10,
        format!("r0 = {r0:.12} vs 72/(17 sqrt(3) + 36) = {want_r0:.12}"),
    );
    c.check(
        1.0 < r0 && r0 < big_r && (big_r - 1.1076095).abs() < 1e-7,
        format!("1 < r0 < R = {big_r:.9}"),
    );
    Ok(())
}

type Phi = Box<dyn Fn(f64) -> f64>;

fn c6(c: &mut Checks) -> Result<()> {
    let p = p64();
    let (_, r0) = solve_t0(&p)?;
    let big_r = capital_r(&p);
    let ns = exponent_window();
    c.note("regimes as derived for the bi-tree model: n^0 on (1, r0), n^-1 at r0, n^-3/2 on (r0, R)".into());
    let mut swapped = 0;
    for f in [0.25, 0.5, 0.75] {
        let r = 1.0 + f * (r0 - 1.0);
        let (fit, rep) = fit_hn_exponent(&p, r, &ns)?;
        swapped += ((fit.slope + 1.5).abs() <= 0.1) as usize;
        c.check(
            fit.slope.abs() <= 0.1,
            format!("r={r:.6} ({:?}): slope {:.4} (want 0 +- 0.1)", rep.regime, fit.slope),
        );
    }
    let (fit, rep) = fit_hn_exponent(&p, r0, &ns)?;
    c.check(
        (fit.slope + 1.0).abs() <= 0.15,
        format!("r=r0 ({:?}): slope {:.4} (want -1 +- 0.15)", rep.regime, fit.slope),
    );
    for f in [0.25, 0.5, 0.75] {
        let r = r0 + f * (big_r - r0);
        let (fit, rep) = fit_hn_exponent(&p, r, &ns)?;
        swapped += (fit.slope.abs() <= 0.1) as usize;
        c.check(
            (fit.slope + 1.5).abs() <= 0.1,
            format!("r={r:.6} ({:?}): slope {:.4} (want -3/2 +- 0.1)", rep.regime, fit.slope),
        );
    }
    c.note(format!(
        "with the labels exchanged (n^-3/2 below r0, n^0 above) {swapped} of 6 slope checks would pass"
    ));
    let cases: [(&str, f64, Phi); 3] = [
        ("boundary maximum, Phi'(0) < 0", 1.0, Box::new(|l| -l)),
        ("interior maximum", 2.5, Box::new(|l| -(l - 1.0) * (l - 1.0))),
        ("boundary maximum, Phi'(0) = 0", 1.5, Box::new(|l| -l * l)),
    ];
    for (name, want, phi) in cases {
        let fit = fit_f_sum_exponent(&phi, 0.0, &ns).expect("window has points");
        c.check(
            (fit.slope - want).abs() <= 0.1,
            format!("f_sum {name}: exponent {:.4} (want {want} +- 0.1)", fit.slope),
        );
    }
    Ok(())
}

fn c7(c: &mut Checks) -> Result<()> {
    let z3 = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: q(1, 2) })?;
    let s = h_series(&z3, 1.0, 30, GrowthOptions::new(1e-8), None)?;
    let w = omega_estimate(&s, (20, 30))?;
    c.check(
        w.slope.abs() < 0.05,
        format!(
            "Z^3 lazy(1/2), r=1, window [20,30]: slope {:.4} +- {:.4}",
            w.slope, w.stderr
        ),
    );
    let dl = standard_measure(&GroupSpec::DiestelLeader(3), MeasureKind::DlSrw)?;
    let opts = GrowthOptions {
        prune: 1e-14,
        ..GrowthOptions::with_order(1e-6, 800)
    };
    let s = h_series(&dl, 1.0, 14, opts, None)?;
    let heuristic = s.values.iter().all(|p| !p.rigorous);
    let w = omega_estimate(&s, (8, 14))?;
    c.check(
        w.slope.abs() < 0.05 && heuristic,
        format!(
            "DL(3,3), r=1, window [8,14], order {} (heuristic tails): slope {:.4} +- {:.4}",
            s.order, w.slope, w.stderr
        ),
    );
    c.note(format!(
        "DL(3,3) H_1(8..14) = {:?}",
        s.values[8..]
            .iter()
            .map(|p| (p.value * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    ));
    let (chat, holds) = cubic_bound(&s, 10);
    c.check(
        holds,
        format!("DL(3,3): H_1(n) <= C n^3 for n <= 14 with C = {chat:.4} fitted on n <= 10"),
    );
    Ok(())
}

fn c8(c: &mut Checks) -> Result<()> {
    let z3 = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: q(1, 2) })?;
    let s = h_series(&z3, 1.0, 30, GrowthOptions::new(1e-8), None)?;
    let ratios: Vec<f64> = (10..=30).map(|n| s.values[n].value / n as f64).collect();
    let hi = ratios.iter().copied().fold(f64::MIN, f64::max);
    let lo = ratios.iter().copied().fold(f64::MAX, f64::min);
    c.check(
        hi / lo <= 3.0,
        format!("Z^3: H_1(n)/n in [{lo:.4}, {hi:.4}] on [10,30], ratio {:.4}", hi / lo),
    );
    let a = lamplighter_h1_model(3, 40)? / 40.0;
    let b = lamplighter_h1_model(3, 80)? / 80.0;
    let drift = (b - a).abs() / a;
    c.check(
        drift < 0.1,
        format!("lamplighter model value(n)/n: {a:.6} at 40, {b:.6} at 80, drift {drift:.4}"),
    );
    Ok(())
}

/// One element of each radial class of `T_l1 x T_l2` with `a + b <= n`.
fn product_ball_reps(n: usize) -> Vec<Element> {
    let word = |k: usize| (0..k).map(|i| (i % 2) as u8).collect::<Vec<u8>>();
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=(n - a) {
            out.push(Element::Pair(word(a), word(b)));
        }
    }
    out
}

fn c9(c: &mut Checks) -> Result<()> {
    let p = p64();
    let xs = product_ball_reps(3);
    for alpha in [0.2, 0.5] {
        let m = construction_measure(&p, 3, alpha)?;
        let rows = transfer_cross_check(&m, 0.8, &xs, 24, 1e-7)?;
        let worst = rows.iter().map(|r| r.relative).fold(0.0, f64::max);
        c.check(
            worst <= 0.05,
            format!("(T6 x T4) * Z^3, alpha={alpha}, r=0.8, N=24, |x| <= 3: max relative gap {worst:.2e}"),
        );
        let sys = TransferSystem::new(&m, 24)?;
        let pts = linear_grid(0.6, 1.1, 8)
            .iter()
            .map(|&r| sys.point(r))
            .collect::<Result<Vec<_>>>()?;
        let mono = pts.windows(2).all(|w| w[0].w0 <= w[1].w0 && w[0].zeta0 <= w[1].zeta0);
        let range = pts
            .iter()
            .all(|t| (0.0..1.0).contains(&t.w0) && (0.0..1.0).contains(&t.w1));
        c.check(
            mono && range,
            format!("alpha={alpha}: w0, zeta0 non-decreasing on 8 points of [0.6, 1.1], w in [0,1)"),
        );
    }
    let spec = GroupSpec::free_product(GroupSpec::TreeProduct(4, 4), GroupSpec::FreeAbelian(3));
    let kind = MeasureKind::FreeProductMix {
        alpha: q(1, 2),
        left: Box::new(MeasureKind::ProductMix { alpha1: q(1, 2) }),
        right: Box::new(MeasureKind::LazySrw { alpha: q(1, 2) }),
    };
    let m = standard_measure(&spec, kind)?;
    let fr = first_return_kernel_pruned(&m, |x| m.group.project(Side::Left, x).is_some(), 1.0, 12, 1e-6)?;
    let tp = transfer(&m, 1.0, 2000)?;
    // leaving P one can only come back through e: t = (1 - alpha) r + w0
    let t = 0.5 + tp.w0;
    c.check(
        fr.total_mass_lower < 1.0 && fr.total_mass_lower <= t + 1e-9 && t < 1.0,
        format!(
            "(T4 x T4) * Z^3, r=1: first-return mass lower bound {:.6} (order 12), from w0: {t:.6}",
            fr.total_mass_lower
        ),
    );
    Ok(())
}

fn c10(c: &mut Checks) -> Result<()> {
    let p = p64();
    let rep = scan_construction(&p, 3, 0.1, None, ScanOptions::default())?;
    c.note(format!(
        "alpha=0.1, r0={:.9}, transfer radius ~ {:.6}, {} grid points",
        rep.r0,
        rep.radius_estimate,
        rep.rows.len()
    ));
    match &rep.crossing {
        Some(x) => c.check(
            x.residual < 1e-6,
            format!("crossing r_* = {:.9}, |zeta0(r_*) - r0| = {:.2e}", x.r_star, x.residual),
        ),
        None => c.check(false, "no grid interval with zeta0 crossing r0".into()),
    }
    let above: Vec<_> = rep.rows.iter().filter(|r| r.point.zeta0 > rep.r0).collect();
    let below: Vec<_> = rep.rows.iter().filter(|r| r.point.zeta0 < rep.r0).collect();
    let conv = above.iter().filter(|r| r.factor_exponent < -1.0).count();
    c.check(
        conv > 0,
        format!("{conv} of {} points with zeta0 > r0 give exponent < -1", above.len()),
    );
    for r in &above {
        c.note(format!(
            "r={:.6} zeta0={:.6}: exponent {:.3} ({})",
            r.point.r, r.point.zeta0, r.factor_exponent, r.diagnostic
        ));
    }
    let div = below.iter().all(|r| r.factor_exponent >= -1.0);
    let worst = below.iter().map(|r| r.factor_exponent).fold(f64::INFINITY, f64::min);
    c.check(
        div && !below.is_empty(),
        format!(
            "all {} points with zeta0 < r0 give exponent >= -1 (lowest {worst:.3})",
            below.len()
        ),
    );
    Ok(())
}

const BRW_SEED: u64 = 2024;

fn c11(c: &mut Checks) -> Result<()> {
    let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy)?;
    let cfg = BrwConfig::binary(q(21, 20), 120, BRW_SEED, 50)?;
    let s = simulate(&m, &cfg)?;
    c.check(
        s.fraction_positive >= 0.9,
        format!(
            "T_4, mean 21/20, 120 generations, 50 runs: (1/12) log M_12 > 0 in {:.0}% (median {:?})",
            100.0 * s.fraction_positive,
            s.median
        ),
    );
    let single = BrwConfig {
        offspring: vec![(1, Q::one())],
        ..BrwConfig::binary(q(1, 1), 60, BRW_SEED, 10)?
    };
    let t = simulate(&m, &single)?;
    let path = t
        .runs
        .iter()
        .all(|r| r.population.iter().all(|&x| x == 1) && r.visited <= 61);
    c.check(
        path,
        "one child per particle: a single walk path, at most 61 sites in 60 steps".into(),
    );
    let a = serde_json::to_string(&simulate(&m, &cfg)?).expect("serializable");
    let b = serde_json::to_string(&s).expect("serializable");
    c.check(
        a == b,
        format!("fixed seed reproduces the summary byte for byte ({} bytes)", a.len()),
    );
    Ok(())
}
