mod config;

use std::fs;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use green_growth::acceptance;
use green_growth::bitree::{capital_r, classify, solve_t0, PhaseParams};
use green_growth::brw::{coset_hits, simulate, BrwConfig};
use green_growth::error::Error;
use green_growth::freeprod::{linear_grid, scan_construction, ScanOptions};
use green_growth::groups::{ball_layers, dl_sphere_count, GroupSpec, Side, DEFAULT_BUDGET};
use green_growth::growth::{default_window, h_series, omega_estimate, theta_partial, GrowthOptions, GrowthSeries};
use green_growth::kernels::{parse_rational, q, standard_measure, Measure, MeasureKind, Q};
use green_growth::report::{fmt_f64, json_report, Csv};

#[derive(Parser, Debug)]
#[command(name = "green-growth", version, about = "Green function growth series on groups")]
struct Cli {
    /// Flat `key = value` file; explicit flags win.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Worker threads (default: GREEN_GROWTH_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sphere sizes by breadth-first search, with the closed form where known.
    Sphere(SphereArgs),
    /// Sphere sums H_r(n) as CSV.
    Hr(HrArgs),
    /// Growth rate fit of log H_r(n).
    Omega {
        #[command(flatten)]
        hr: HrArgs,
        /// Fit window `lo,hi` (default: top half).
        #[arg(long, value_parser = parse_window)]
        window: Option<(u32, u32)>,
    },
    /// Partial sums of sum_n H_r(n) e^{-sn}.
    Theta {
        #[command(flatten)]
        hr: HrArgs,
        #[arg(long)]
        s: f64,
    },
    /// Bi-tree phase report, with an optional regime map over an r-grid.
    BitreePhase(PhaseArgs),
    /// DL sphere counts: formula against breadth-first search.
    DlVerify {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        nmax: u32,
    },
    /// Scan of the (T_l1 x T_l2) * Z^d construction.
    FreeprodScan(ScanArgs),
    /// Branching random walk statistics.
    Brw(BrwArgs),
    /// Runs the acceptance criteria.
    Selftest {
        /// Run one criterion only.
        #[arg(long)]
        only: Option<u32>,
    },
}

const SUBCOMMANDS: &[&str] = &[
    "sphere",
    "hr",
    "omega",
    "theta",
    "bitree-phase",
    "dl-verify",
    "freeprod-scan",
    "brw",
    "selftest",
];

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GroupName {
    Zd,
    Heisenberg,
    Free,
    Tree,
    TreeProduct,
    Dl,
}

#[derive(Args, Clone, Debug)]
struct GroupArgs {
    #[arg(long, value_enum)]
    group: GroupName,
    /// Dimension of Z^d.
    #[arg(long)]
    d: Option<u32>,
    /// Rank of the free group.
    #[arg(long)]
    rank: Option<u32>,
    /// Tree degree.
    #[arg(long)]
    l: Option<u32>,
    #[arg(long)]
    l1: Option<u32>,
    #[arg(long)]
    l2: Option<u32>,
    /// DL parameter (DL(q, q)).
    #[arg(long)]
    q: Option<u32>,
    /// Holding probability of the lazy walk on Z^d and the Heisenberg group.
    #[arg(long, default_value = "1/2", value_parser = parse_rational_arg)]
    alpha: Q,
    /// Weight of the first factor of a tree product.
    #[arg(long, default_value = "1/2", value_parser = parse_rational_arg)]
    a1: Q,
}

#[derive(Args, Debug)]
struct SphereArgs {
    #[command(flatten)]
    group: GroupArgs,
    /// Single radius.
    #[arg(long, conflicts_with = "nmax")]
    n: Option<u32>,
    /// All radii `0..=nmax`.
    #[arg(long)]
    nmax: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: usize,
}

#[derive(Args, Clone, Debug)]
struct HrArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    nmax: u32,
    /// Tail target per sphere.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Fixed series order (needed where the tail cannot be bounded).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, default_value_t = 2048)]
    max_order: usize,
    #[arg(long, default_value_t = 1e-16)]
    prune: f64,
}

#[derive(Args, Debug)]
struct PhaseArgs {
    #[arg(long)]
    l1: u32,
    #[arg(long)]
    l2: u32,
    #[arg(long)]
    a1: f64,
    /// Report at this r as well.
    #[arg(long)]
    r: Option<f64>,
    /// Write the regime map CSV here.
    #[arg(long)]
    map: Option<String>,
    /// Regime map points on (0, R).
    #[arg(long, default_value_t = 50)]
    points: usize,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    l1: u32,
    #[arg(long)]
    l2: u32,
    #[arg(long, default_value_t = 0.5)]
    a1: f64,
    #[arg(long, default_value_t = 3)]
    d: u32,
    /// Weight of the Z^d factor.
    #[arg(long)]
    alpha: f64,
    #[arg(long, requires = "rmax")]
    rmin: Option<f64>,
    #[arg(long, requires = "rmin")]
    rmax: Option<f64>,
    /// Grid size for `--rmin`/`--rmax`; without them 24 points on [1, radius).
    #[arg(long, default_value_t = 24)]
    points: usize,
    #[arg(long, default_value_t = 4000)]
    order: usize,
    /// Also estimate the growth rate of the whole group to this radius.
    #[arg(long)]
    growth_n: Option<u32>,
}

#[derive(Args, Debug)]
struct BrwArgs {
    #[command(flatten)]
    group: GroupArgs,
    /// Offspring law `k:p,k:p,...`; default is 1 or 2 children with `--mean`.
    #[arg(long, conflicts_with = "mean")]
    offspring: Option<String>,
    #[arg(long, default_value = "21/20", value_parser = parse_rational_arg)]
    mean: Q,
    #[arg(long, default_value_t = 120)]
    generations: u32,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long, default_value_t = 200_000)]
    cap: usize,
    /// Coset statistics for a free-product factor instead of the sphere summary.
    #[arg(long, value_enum)]
    coset: Option<SideName>,
    /// Weight of the right factor for `--group` free products (see `--right`).
    #[arg(long, requires = "right")]
    right_weight: Option<f64>,
    /// Right factor Z^d of a free product with the group above.
    #[arg(long)]
    right: Option<u32>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideName {
    Left,
    Right,
}

fn parse_rational_arg(s: &str) -> Result<Q, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or("expected lo,hi")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        Failure::Core(e)
    }
}

type Out = Result<String, Failure>;

fn need(v: Option<u32>, flag: &str, group: &str) -> Result<u32, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--group {group} needs --{flag}")))
}

impl GroupArgs {
    fn spec(&self) -> Result<GroupSpec, Failure> {
        let spec = match self.group {
            GroupName::Zd => GroupSpec::FreeAbelian(need(self.d, "d", "zd")?),
            GroupName::Heisenberg => GroupSpec::Heisenberg3,
            GroupName::Free => GroupSpec::FreeGroup(need(self.rank, "rank", "free")?),
            GroupName::Tree => GroupSpec::RegularTree(need(self.l, "l", "tree")?),
            GroupName::TreeProduct => GroupSpec::TreeProduct(
                need(self.l1, "l1", "tree-product")?,
                need(self.l2, "l2", "tree-product")?,
            ),
            GroupName::Dl => GroupSpec::DiestelLeader(need(self.q, "q", "dl")?),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn kind(&self) -> Result<MeasureKind, Failure> {
        Ok(match self.group {
            GroupName::Zd | GroupName::Heisenberg => MeasureKind::LazySrw {
                alpha: self.alpha.clone(),
            },
            GroupName::Tree => MeasureKind::TreeLazy,
            GroupName::TreeProduct => MeasureKind::ProductMix {
                alpha1: self.a1.clone(),
            },
            GroupName::Dl => MeasureKind::DlSrw,
            GroupName::Free => {
                return Err(Failure::Usage(
                    "no standard walk on the free group; use --group tree".into(),
                ))
            }
        })
    }

    fn measure(&self) -> Result<Measure, Failure> {
        Ok(standard_measure(&self.spec()?, self.kind()?)?)
    }
}

/// Closed-form sphere size where one is implemented.
fn sphere_formula(spec: &GroupSpec, n: u32) -> Option<u128> {
    match spec {
        GroupSpec::DiestelLeader(q) => Some(dl_sphere_count(*q, n)),
        GroupSpec::RegularTree(l) | GroupSpec::FreeGroup(l) => {
            let deg = if matches!(spec, GroupSpec::FreeGroup(_)) {
                2 * *l
            } else {
                *l
            } as u128;
            Some(if n == 0 { 1 } else { deg * (deg - 1).pow(n - 1) })
        }
        _ => None,
    }
}

fn sphere_cmd(a: &SphereArgs) -> Out {
    let spec = a.group.spec()?;
    let (lo, hi) = match (a.n, a.nmax) {
        (Some(n), _) => (n, n),
        (None, Some(m)) => (0, m),
        (None, None) => return Err(Failure::Usage("sphere needs --n or --nmax".into())),
    };
    let layers = ball_layers(&spec, hi, a.budget)?;
    let mut c = Csv::new(&["n", "bfs", "formula"]);
    for n in lo..=hi {
        let f = sphere_formula(&spec, n).map(|x| x.to_string()).unwrap_or_default();
        c.row(&[n.to_string(), layers[n as usize].len().to_string(), f]);
    }
    Ok(c.finish())
}

fn series(a: &HrArgs) -> Result<GrowthSeries, Failure> {
    let m = a.group.measure()?;
    let opts = GrowthOptions {
        tol: a.tol,
        order: a.order,
        max_order: a.max_order,
        prune: a.prune,
    };
    Ok(h_series(&m, a.r, a.nmax, opts, None)?)
}

#[derive(Serialize)]
struct OmegaOut {
    group: String,
    measure: String,
    r: f64,
    estimate: green_growth::growth::OmegaEstimate,
    h: Vec<f64>,
    rigorous: bool,
}

fn omega_cmd(a: &HrArgs, window: Option<(u32, u32)>) -> Out {
    let s = series(a)?;
    let w = window.unwrap_or_else(|| default_window(&s));
    let estimate = omega_estimate(&s, w)?;
    let body = OmegaOut {
        group: s.group.to_string(),
        measure: s.measure.clone(),
        r: s.r,
        estimate,
        h: s.values.iter().map(|p| p.value).collect(),
        rigorous: s.values.iter().all(|p| p.rigorous),
    };
    Ok(json_report("omega", &body)?)
}

fn theta_cmd(a: &HrArgs, s_val: f64) -> Out {
    let s = series(a)?;
    let t = theta_partial(&s, s_val);
    let mut c = Csv::new(&["n", "term", "partial_sum"]);
    for (n, (x, y)) in t.terms.iter().zip(&t.partial_sums).enumerate() {
        c.row(&[n.to_string(), fmt_f64(*x), fmt_f64(*y)]);
    }
    Ok(c.finish())
}

#[derive(Serialize)]
struct PhaseOut {
    params: PhaseParams,
    #[serde(rename = "R")]
    capital_r: f64,
    t0: Option<f64>,
    r0: Option<f64>,
    report: Option<green_growth::bitree::PhaseReport>,
}

fn phase_cmd(a: &PhaseArgs) -> Out {
    let p = PhaseParams::with_alpha1(a.l1, a.l2, a.a1)?;
    let big_r = capital_r(&p);
    let thr = if p.l1 > p.l2 { Some(solve_t0(&p)?) } else { None };
    let report = a.r.map(|r| classify(&p, r)).transpose()?;
    if let Some(path) = &a.map {
        let mut c = Csv::new(&["r", "regime", "lambda0", "interior", "omega", "psi_prime"]);
        for &r in linear_grid(0.0, big_r, a.points + 2).iter().skip(1).take(a.points) {
            let rep = classify(&p, r)?;
            c.row(&[
                fmt_f64(r),
                format!("{:?}", rep.regime),
                fmt_f64(rep.lambda0),
                rep.interior.to_string(),
                fmt_f64(rep.omega),
                fmt_f64(rep.psi_prime),
            ]);
        }
        fs::write(path, c.finish()).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
    }
    let body = PhaseOut {
        params: p,
        capital_r: big_r,
        t0: thr.map(|x| x.0),
        r0: thr.map(|x| x.1),
        report,
    };
    Ok(json_report("bitree-phase", &body)?)
}

fn dl_verify_cmd(qq: u32, nmax: u32) -> Out {
    let layers = ball_layers(&GroupSpec::DiestelLeader(qq), nmax, DEFAULT_BUDGET)?;
    let mut c = Csv::new(&["n", "bfs", "formula", "equal"]);
    for (n, layer) in layers.iter().enumerate() {
        let f = dl_sphere_count(qq, n as u32);
        c.row(&[
            n.to_string(),
            layer.len().to_string(),
            f.to_string(),
            (f == layer.len() as u128).to_string(),
        ]);
    }
    Ok(c.finish())
}

fn scan_cmd(a: &ScanArgs) -> Out {
    let p = PhaseParams::with_alpha1(a.l1, a.l2, a.a1)?;
    let grid = a.rmin.zip(a.rmax).map(|(lo, hi)| linear_grid(lo, hi, a.points));
    let opts = ScanOptions {
        order: a.order,
        growth_n: a.growth_n,
    };
    let rep = scan_construction(&p, a.d, a.alpha, grid.as_deref(), opts)?;
    Ok(json_report("freeprod-scan", &rep)?)
}

fn parse_offspring(s: &str) -> Result<Vec<(u32, Q)>, Failure> {
    s.split(',')
        .map(|e| {
            let (k, p) = e
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("offspring entry {e:?}: need k:p")))?;
            let k = k
                .trim()
                .parse()
                .map_err(|_| Failure::Usage(format!("offspring count {k:?}")))?;
            Ok((k, parse_rational(p)?))
        })
        .collect()
}

fn brw_cmd(a: &BrwArgs) -> Out {
    let mut m = a.group.measure()?;
    if let Some(d) = a.right {
        let alpha = green_growth::kernels::rational_from_f64(a.right_weight.unwrap_or(0.5))?;
        let spec = GroupSpec::free_product(a.group.spec()?, GroupSpec::FreeAbelian(d));
        let kind = MeasureKind::FreeProductMix {
            alpha,
            left: Box::new(a.group.kind()?),
            right: Box::new(MeasureKind::LazySrw { alpha: q(1, 2) }),
        };
        m = standard_measure(&spec, kind)?;
    }
    let mut cfg = BrwConfig::binary(q(1, 1), a.generations, a.seed, a.runs)?;
    cfg.offspring = match &a.offspring {
        Some(s) => parse_offspring(s)?,
        None => BrwConfig::binary(a.mean.clone(), a.generations, a.seed, a.runs)?.offspring,
    };
    cfg.population_cap = a.cap;
    if let Some(r) = a.radius {
        cfg.radius = r;
    }
    match a.coset {
        None => Ok(json_report("brw", &simulate(&m, &cfg)?)?),
        Some(s) => {
            let side = match s {
                SideName::Left => Side::Left,
                SideName::Right => Side::Right,
            };
            Ok(json_report("brw-cosets", &coset_hits(&m, &cfg, side)?)?)
        }
    }
}

fn selftest(only: Option<u32>) -> Result<(String, bool), Failure> {
    let ids: Vec<u32> = match only {
        Some(i) => vec![i],
        None => (1..=11).collect(),
    };
    let mut text = String::new();
    let mut all = true;
    for id in ids {
        let o = acceptance::run(id)?;
        text.push_str(&o.line());
        text.push('\n');
        for d in &o.details {
            text.push_str("        ");
            text.push_str(d);
            text.push('\n');
        }
        all &= o.passed;
    }
    Ok((text, all))
}

fn threads(flag: Option<usize>) -> Result<(), String> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GREEN_GROWTH_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| format!("GREEN_GROWTH_THREADS={v:?} is not a count"))?,
            ),
            Err(_) => None,
        },
    };
    match n {
        Some(0) => Err("thread count must be positive".into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string()),
        None => Ok(()),
    }
}

fn run(argv: Vec<String>) -> Result<(String, ExitCode), (String, u8)> {
    let argv = config::merge(argv, SUBCOMMANDS).map_err(|e| (e, 1))?;
    let cmd = Cli::command().mut_subcommands(|s| s.args_override_self(true));
    let cli = match cmd.try_get_matches_from(argv).and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => return Ok((e.to_string(), ExitCode::SUCCESS)),
        Err(e) => return Err((e.render().to_string(), 1)),
    };
    threads(cli.threads).map_err(|e| (e, 1))?;
    let res = match &cli.command {
        Command::Sphere(a) => sphere_cmd(a),
        Command::Hr(a) => series(a).map(|s| s.to_csv()),
        Command::Omega { hr, window } => omega_cmd(hr, *window),
        Command::Theta { hr, s } => theta_cmd(hr, *s),
        Command::BitreePhase(a) => phase_cmd(a),
        Command::DlVerify { q, nmax } => dl_verify_cmd(*q, *nmax),
        Command::FreeprodScan(a) => scan_cmd(a),
        Command::Brw(a) => brw_cmd(a),
        Command::Selftest { only } => {
            return match selftest(*only) {
                Ok((t, true)) => Ok((t, ExitCode::SUCCESS)),
                Ok((t, false)) => Ok((t, ExitCode::from(1))),
                Err(f) => Err(failure(f)),
            }
        }
    };
    res.map(|t| (t, ExitCode::SUCCESS)).map_err(failure)
}

fn failure(f: Failure) -> (String, u8) {
    match f {
        Failure::Usage(m) => (format!("error: {m}"), 1),
        Failure::Core(e @ Error::Budget { .. }) => (format!("error: {e}"), 2),
        Failure::Core(e) => (format!("error: {e}"), 1),
    }
}

fn main() -> ExitCode {
    match run(std::env::args().collect()) {
        Ok((out, code)) => {
            print!("{out}");
            code
        }
        Err((msg, code)) => {
            eprintln!("{}", msg.trim_end());
            ExitCode::from(code)
        }
    }
}
