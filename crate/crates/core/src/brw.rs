//! Branching random walks: every particle is replaced by a random number of
//! children, each displaced by one step of the walk. Records the trace (the
//! set of visited elements) and, on free products, visits to cosets of a
//! factor.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::groups::{Element, GroupSpec, Side};
use crate::kernels::measure::{to_f64, Measure, Q};

#[derive(Clone, Debug)]
pub struct BrwConfig {
    /// `(k, P(k children))` with `k >= 1`.
    pub offspring: Vec<(u32, Q)>,
    pub max_generation: u32,
    pub population_cap: usize,
    pub seed: u64,
    pub runs: usize,
    /// Radius at which `(1/n) log M_n` is aggregated.
    pub radius: u32,
}

impl BrwConfig {
    pub fn validate(&self) -> Result<()> {
        if self.offspring.is_empty() {
            return invalid("offspring distribution is empty");
        }
        let mut total = Q::zero();
        for (k, p) in &self.offspring {
            if *k == 0 {
                return invalid("offspring counts must be at least 1");
            }
            if *p < Q::zero() {
                return invalid(format!("negative offspring weight {p}"));
            }
            total += p;
        }
        if total != Q::one() {
            return invalid(format!("offspring weights sum to {total}, not 1"));
        }
        if self.population_cap == 0 || self.runs == 0 || self.max_generation == 0 {
            return invalid("population cap, runs and generations must be positive");
        }
        if self.radius == 0 || self.radius > self.max_generation {
            return invalid(format!(
                "radius {} must lie in 1..={}",
                self.radius, self.max_generation
            ));
        }
        Ok(())
    }

    /// Exact offspring mean.
    pub fn mean(&self) -> Q {
        self.offspring
            .iter()
            .map(|(k, p)| p * Q::from_integer((*k).into()))
            .sum()
    }

    /// Children 1 or 2 with mean `mean`, as a rational `1 + p`.
    pub fn binary(mean: Q, max_generation: u32, seed: u64, runs: usize) -> Result<BrwConfig> {
        let p = mean - Q::one();
        if p < Q::zero() || p > Q::one() {
            return invalid(format!("binary offspring needs a mean in [1, 2], got 1 + {p}"));
        }
        Ok(BrwConfig {
            offspring: vec![(1, Q::one() - &p), (2, p)],
            max_generation,
            population_cap: 200_000,
            seed,
            runs,
            radius: max_generation.min(12),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTrace {
    /// Distinct elements visited.
    pub visited: usize,
    /// `M_n` for `n = 0..=max_generation`.
    pub m_n: Vec<u64>,
    pub population: Vec<u64>,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceSummary {
    pub mean: f64,
    pub radius: u32,
    pub runs: Vec<RunTrace>,
    /// `(1/n) log M_n` at `radius` per run; `None` when `M_n = 0`.
    pub growth: Vec<Option<f64>>,
    pub median: Option<f64>,
    pub quartiles: Option<(f64, f64)>,
    pub fraction_positive: f64,
    pub truncated_runs: usize,
}

struct Sampler {
    steps: Vec<Element>,
    step_dist: WeightedIndex<f64>,
    counts: Vec<u32>,
    count_dist: WeightedIndex<f64>,
}

impl Sampler {
    fn new(m: &Measure, cfg: &BrwConfig) -> Result<Sampler> {
        let w = m.weights_f64();
        let step_dist = WeightedIndex::new(w.iter().map(|x| x.1))
            .map_err(|e| crate::error::Error::Invalid(format!("step weights: {e}")))?;
        let count_dist = WeightedIndex::new(cfg.offspring.iter().map(|x| to_f64(&x.1)))
            .map_err(|e| crate::error::Error::Invalid(format!("offspring weights: {e}")))?;
        Ok(Sampler {
            steps: w.into_iter().map(|x| x.0).collect(),
            step_dist,
            counts: cfg.offspring.iter().map(|x| x.0).collect(),
            count_dist,
        })
    }
}

/// Per-particle hook: called with the parent's tag and the child's
/// position, returns the child's tag.
type Tagger<'a> = &'a (dyn Fn(u8, &Element) -> u8 + Sync);

struct RawRun {
    trace: RunTrace,
    visits: HashMap<Element, u64>,
    tagged_hits: u64,
}

fn run_one(m: &Measure, cfg: &BrwConfig, s: &Sampler, stream: u64, tag: Option<Tagger>) -> RawRun {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let spec = &m.group;
    let e = spec.identity();
    let mut visits: HashMap<Element, u64> = HashMap::new();
    visits.insert(e.clone(), 1);
    let mut alive: Vec<(Element, u8)> = vec![(e, 1)];
    let mut population = vec![1u64];
    let mut truncated = false;
    let mut tagged_hits = 0u64;
    for _ in 0..cfg.max_generation {
        let mut next = Vec::with_capacity(alive.len() * 2);
        'parents: for (x, t) in &alive {
            let k = s.counts[s.count_dist.sample(&mut rng)];
            for _ in 0..k {
                if next.len() >= cfg.population_cap {
                    truncated = true;
                    break 'parents;
                }
                let y = spec.mul(x, &s.steps[s.step_dist.sample(&mut rng)]);
                let ct = match tag {
                    Some(f) if *t == 1 => {
                        let c = f(*t, &y);
                        if c == 2 {
                            tagged_hits += 1;
                        }
                        c
                    }
                    _ => 0,
                };
                *visits.entry(y.clone()).or_insert(0) += 1;
                next.push((y, ct));
            }
        }
        alive = next;
        population.push(alive.len() as u64);
    }
    let mut m_n = vec![0u64; cfg.max_generation as usize + 1];
    for x in visits.keys() {
        let n = spec.word_length(x) as usize;
        if n < m_n.len() {
            m_n[n] += 1;
        }
    }
    RawRun {
        trace: RunTrace {
            visited: visits.len(),
            m_n,
            population,
            truncated,
        },
        visits,
        tagged_hits,
    }
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let (i, f) = (h.floor() as usize, h.fract());
    if i + 1 < sorted.len() && f > 0.0 {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

fn summarize(cfg: &BrwConfig, runs: Vec<RunTrace>) -> TraceSummary {
    let n = cfg.radius as usize;
    let growth: Vec<Option<f64>> = runs
        .iter()
        .map(|t| (t.m_n[n] > 0).then(|| (t.m_n[n] as f64).ln() / n as f64))
        .collect();
    // runs with M_n = 0 rank below every finite value
    let mut vals: Vec<f64> = growth.iter().map(|g| g.unwrap_or(f64::NEG_INFINITY)).collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    let finite = |x: f64| x.is_finite().then_some(x);
    let median = finite(quantile(&vals, 0.5));
    let quartiles = match (finite(quantile(&vals, 0.25)), finite(quantile(&vals, 0.75))) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    let positive = growth.iter().filter(|g| matches!(g, Some(v) if *v > 0.0)).count();
    TraceSummary {
        mean: to_f64(&cfg.mean()),
        radius: cfg.radius,
        fraction_positive: positive as f64 / runs.len() as f64,
        truncated_runs: runs.iter().filter(|t| t.truncated).count(),
        growth,
        median,
        quartiles,
        runs,
    }
}

pub fn simulate(m: &Measure, cfg: &BrwConfig) -> Result<TraceSummary> {
    cfg.validate()?;
    let s = Sampler::new(m, cfg)?;
    let runs: Vec<RunTrace> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|i| run_one(m, cfg, &s, i, None).trace)
        .collect();
    Ok(summarize(cfg, runs))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CosetReport {
    pub factor: Side,
    /// Distinct cosets `gP` met by the trace, per run.
    pub cosets: Vec<usize>,
    /// Largest number of particle visits to one coset, per run.
    pub max_visits: Vec<u64>,
    /// Particles entering `P` whose ancestors since the first particle all
    /// stayed outside `P`, per run.
    pub returns: Vec<u64>,
    /// Mean of `returns`: estimates the first-return mass `t_{r,P}`.
    pub t_estimate: f64,
    /// Half-width of the 95% normal confidence interval.
    pub ci_half_width: f64,
    pub truncated_runs: usize,
}

/// Coset of `x` modulo the factor on `side`: drop a trailing syllable from it.
pub fn coset_key(x: &Element, side: Side) -> Element {
    match x {
        Element::Free(s) if s.last().is_some_and(|y| y.side == side) => Element::Free(s[..s.len() - 1].to_vec()),
        _ => x.clone(),
    }
}

pub fn coset_hits(m: &Measure, cfg: &BrwConfig, factor: Side) -> Result<CosetReport> {
    if !matches!(m.group, GroupSpec::FreeProduct(..)) {
        return invalid("coset statistics need a free product");
    }
    cfg.validate()?;
    let s = Sampler::new(m, cfg)?;
    let spec = m.group.clone();
    let in_p = move |x: &Element| spec.project(factor, x).is_some();
    // tag 1: line still outside P since the start, 2: just entered P
    let tag = move |_: u8, y: &Element| if in_p(y) { 2 } else { 1 };
    let raw: Vec<RawRun> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|i| run_one(m, cfg, &s, i, Some(&tag)))
        .collect();
    let mut cosets = Vec::new();
    let mut max_visits = Vec::new();
    let mut returns = Vec::new();
    let mut truncated_runs = 0;
    for r in &raw {
        let mut per: HashMap<Element, u64> = HashMap::new();
        for (x, v) in &r.visits {
            *per.entry(coset_key(x, factor)).or_insert(0) += v;
        }
        cosets.push(per.len());
        max_visits.push(per.values().copied().max().unwrap_or(0));
        returns.push(r.tagged_hits);
        truncated_runs += r.trace.truncated as usize;
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<u64>() as f64 / n;
    let var = if returns.len() > 1 {
        returns.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(CosetReport {
        factor,
        cosets,
        max_visits,
        returns,
        t_estimate: mean,
        ci_half_width: 1.96 * (var / n).sqrt(),
        truncated_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::sphere;
    use crate::kernels::measure::{q, standard_measure, MeasureKind};

    fn tree4() -> Measure {
        standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap()
    }

    #[test]
    fn config_checks() {
        let c = BrwConfig::binary(q(21, 20), 20, 1, 3).unwrap();
        assert_eq!(c.mean(), q(21, 20));
        c.validate().unwrap();
        let mut bad = c.clone();
        bad.offspring.push((0, q(0, 1)));
        assert!(bad.validate().is_err());
        let mut bad = c.clone();
        bad.offspring[0].1 = q(1, 2);
        assert!(bad.validate().is_err());
        assert!(BrwConfig::binary(q(3, 1), 5, 0, 1).is_err());
    }

    #[test]
    fn single_path_without_branching() {
        let cfg = BrwConfig::binary(q(1, 1), 30, 7, 5).unwrap();
        let s = simulate(&tree4(), &cfg).unwrap();
        for t in &s.runs {
            assert!(t.population.iter().all(|&p| p == 1));
            assert!(t.visited <= 31);
            // the walk moves by at most one per step
            let far = t.m_n.iter().rposition(|&x| x > 0).unwrap();
            assert!(t.m_n[..=far].iter().all(|&x| x >= 1));
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = BrwConfig::binary(q(6, 5), 25, 42, 4).unwrap();
        let a = simulate(&tree4(), &cfg).unwrap();
        let b = simulate(&tree4(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let c = simulate(&tree4(), &BrwConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.runs, c.runs);
    }

    #[test]
    fn trace_fits_in_spheres() {
        let cfg = BrwConfig {
            population_cap: 500,
            ..BrwConfig::binary(q(3, 2), 14, 3, 2).unwrap()
        };
        let s = simulate(&tree4(), &cfg).unwrap();
        let mut sizes: Vec<usize> = (0..=6)
            .map(|n| sphere(&GroupSpec::RegularTree(4), n).unwrap().len())
            .collect();
        while sizes.len() <= 14 {
            sizes.push(3 * sizes.last().unwrap());
        }
        for t in &s.runs {
            assert!(t.m_n.iter().zip(&sizes).all(|(m, n)| *m as usize <= *n));
            assert!(t.population.iter().all(|&p| p <= 500));
        }
        assert!(s.truncated_runs > 0);
    }

    #[test]
    fn coset_keys() {
        let spec = GroupSpec::free_product(GroupSpec::FreeAbelian(1), GroupSpec::RegularTree(3));
        let a = spec.embed(Side::Left, Element::Abelian(vec![2])).unwrap();
        let b = spec.embed(Side::Right, Element::Word(vec![1])).unwrap();
        let ab = spec.mul(&a, &b);
        assert_eq!(coset_key(&a, Side::Left), spec.identity());
        assert_eq!(coset_key(&ab, Side::Left), ab);
        assert_eq!(coset_key(&ab, Side::Right), a);
    }
}
