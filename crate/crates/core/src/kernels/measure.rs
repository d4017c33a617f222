use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::groups::{Element, GroupSpec, Side};

pub type Q = BigRational;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    /// `1/2` at the identity, `1/(2l)` on each tree neighbour.
    TreeLazy,
    /// `alpha1 * lazy(T_l1) + (1 - alpha1) * lazy(T_l2)`.
    ProductMix {
        alpha1: Q,
    },
    /// `alpha * delta_e + (1 - alpha)` uniform on the generators.
    LazySrw {
        alpha: Q,
    },
    /// Uniform on the 2q DL moves.
    DlSrw,
    /// `alpha * right + (1 - alpha) * left`.
    FreeProductMix {
        alpha: Q,
        left: Box<MeasureKind>,
        right: Box<MeasureKind>,
    },
    Custom,
}

#[derive(Clone, Debug)]
pub struct Measure {
    pub group: GroupSpec,
    pub kind: MeasureKind,
    pub support: BTreeMap<Element, Q>,
}

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3/10"`, `"0.3"` or `"1"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Invalid(format!("not a rational number: {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(Q::new(a, b));
    }
    let (mant, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let neg = mant.starts_with('-');
    let mant = mant.trim_start_matches(['-', '+']);
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() || !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().map_err(|_| bad())?;
    let scale = fp.len() as i32 + 1 - exp;
    let ten = BigInt::from(10);
    let mut v = if scale >= 0 {
        Q::new(digits, num_traits::pow(ten, scale as usize))
    } else {
        Q::from_integer(digits * num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        v = -v;
    }
    Ok(v)
}

/// Exact rational with the shortest decimal expansion that prints as `x`.
pub fn rational_from_f64(x: f64) -> Result<Q> {
    if !x.is_finite() {
        return invalid(format!("non-finite value {x}"));
    }
    parse_rational(&format!("{x:e}"))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn add_weight(support: &mut BTreeMap<Element, Q>, x: Element, w: Q) {
    if w.is_zero() {
        return;
    }
    let e = support.entry(x).or_insert_with(Q::zero);
    *e += w;
}

fn check_unit_interval(name: &str, a: &Q, closed_left: bool) -> Result<()> {
    let ok_left = if closed_left { !a.is_negative() } else { a.is_positive() };
    if !ok_left || *a >= Q::one() {
        return invalid(format!(
            "{name} = {a} outside {}0, 1)",
            if closed_left { "[" } else { "(" }
        ));
    }
    Ok(())
}

pub fn standard_measure(spec: &GroupSpec, kind: MeasureKind) -> Result<Measure> {
    spec.validate()?;
    let mut support = BTreeMap::new();
    match (spec, &kind) {
        (GroupSpec::RegularTree(l), MeasureKind::TreeLazy) => {
            add_weight(&mut support, spec.identity(), q(1, 2));
            for g in spec.generators() {
                add_weight(&mut support, g, q(1, 2 * *l as i64));
            }
        }
        (GroupSpec::TreeProduct(l1, l2), MeasureKind::ProductMix { alpha1 }) => {
            check_unit_interval("alpha1", alpha1, false)?;
            let a2 = Q::one() - alpha1;
            add_weight(&mut support, spec.identity(), q(1, 2));
            for g in spec.generators() {
                let w = match &g {
                    Element::Pair(a, _) if !a.is_empty() => alpha1 * q(1, 2 * *l1 as i64),
                    _ => &a2 * q(1, 2 * *l2 as i64),
                };
                add_weight(&mut support, g, w);
            }
        }
        (GroupSpec::FreeAbelian(_) | GroupSpec::Heisenberg3, MeasureKind::LazySrw { alpha }) => {
            check_unit_interval("alpha", alpha, true)?;
            add_weight(&mut support, spec.identity(), alpha.clone());
            let gens = spec.generators();
            let w = (Q::one() - alpha) / Q::from_integer(BigInt::from(gens.len()));
            for g in gens {
                add_weight(&mut support, g, w.clone());
            }
        }
        (GroupSpec::DiestelLeader(_), MeasureKind::DlSrw) => {
            let gens = spec.generators();
            let w = q(1, gens.len() as i64);
            for g in gens {
                add_weight(&mut support, g, w.clone());
            }
        }
        (GroupSpec::FreeProduct(l, r), MeasureKind::FreeProductMix { alpha, left, right }) => {
            check_unit_interval("alpha", alpha, false)?;
            let ml = standard_measure(l, (**left).clone())?;
            let mr = standard_measure(r, (**right).clone())?;
            for (side, m, w) in [(Side::Left, &ml, Q::one() - alpha), (Side::Right, &mr, alpha.clone())] {
                for (x, p) in &m.support {
                    add_weight(&mut support, spec.embed(side, x.clone())?, p * &w);
                }
            }
        }
        _ => return invalid(format!("measure kind {kind:?} does not apply to {spec}")),
    }
    let m = Measure {
        group: spec.clone(),
        kind,
        support,
    };
    m.validate()?;
    Ok(m)
}

impl Measure {
    /// Builds a measure from an explicit support, checking every invariant.
    pub fn new(group: GroupSpec, support: BTreeMap<Element, Q>) -> Result<Measure> {
        let m = Measure {
            group,
            kind: MeasureKind::Custom,
            support,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = Q::zero();
        for (x, w) in &self.support {
            self.group.check(x)?;
            if !w.is_positive() {
                return invalid(format!("non-positive weight {w} at {x}"));
            }
            let wi = self.support.get(&self.group.inverse(x));
            if wi != Some(w) {
                return invalid(format!("measure not symmetric at {x}"));
            }
            total += w;
        }
        if !total.is_one() {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        self.check_admissible()
    }

    /// Every standard generator must be reachable from e in a few support steps.
    fn check_admissible(&self) -> Result<()> {
        let g = &self.group;
        let steps: Vec<&Element> = self.support.keys().collect();
        let mut seen: HashSet<Element> = HashSet::new();
        let mut frontier = vec![g.identity()];
        seen.insert(g.identity());
        for _ in 0..4 {
            let mut next = Vec::new();
            for x in &frontier {
                for s in &steps {
                    let y = g.mul(x, s);
                    if seen.insert(y.clone()) {
                        next.push(y);
                    }
                }
            }
            frontier = next;
            if seen.len() > 200_000 {
                break;
            }
        }
        match g.generators().into_iter().find(|s| !seen.contains(s)) {
            Some(s) => invalid(format!("support does not generate {g}: generator {s} unreachable")),
            None => Ok(()),
        }
    }

    pub fn weight(&self, x: &Element) -> Q {
        self.support.get(x).cloned().unwrap_or_else(Q::zero)
    }

    pub fn weights_f64(&self) -> Vec<(Element, f64)> {
        self.support.iter().map(|(x, w)| (x.clone(), to_f64(w))).collect()
    }

    /// Exact spectral radius where a closed form is available.
    pub fn spectral_radius(&self) -> Option<f64> {
        let tree_rho = |l: u32| 0.5 + ((l - 1) as f64).sqrt() / l as f64;
        match (&self.group, &self.kind) {
            (GroupSpec::RegularTree(l), MeasureKind::TreeLazy) => Some(tree_rho(*l)),
            (GroupSpec::TreeProduct(l1, l2), MeasureKind::ProductMix { alpha1 }) => {
                let a = to_f64(alpha1);
                Some(a * tree_rho(*l1) + (1.0 - a) * tree_rho(*l2))
            }
            (GroupSpec::FreeAbelian(_), MeasureKind::LazySrw { .. }) => Some(1.0),
            _ => None,
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureKind::TreeLazy => write!(f, "tree-lazy"),
            MeasureKind::ProductMix { alpha1 } => write!(f, "product-mix({alpha1})"),
            MeasureKind::LazySrw { alpha } => write!(f, "lazy-srw({alpha})"),
            MeasureKind::DlSrw => write!(f, "dl-srw"),
            MeasureKind::FreeProductMix { alpha, left, right } => {
                write!(f, "freeprod-mix({alpha}; {left}; {right})")
            }
            MeasureKind::Custom => write!(f, "custom"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_lazy_weights() {
        let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap();
        assert_eq!(m.support.len(), 5);
        assert_eq!(m.weight(&Element::Word(vec![])), q(1, 2));
        assert_eq!(m.weight(&Element::Word(vec![2])), q(1, 8));
    }

    #[test]
    fn product_mix_weights() {
        let g = GroupSpec::TreeProduct(4, 4);
        let m = standard_measure(&g, MeasureKind::ProductMix { alpha1: q(1, 2) }).unwrap();
        assert_eq!(m.weight(&g.identity()), q(1, 2));
        for s in g.generators() {
            assert_eq!(m.weight(&s), q(1, 16));
        }
    }

    #[test]
    fn srw_weights() {
        let g = GroupSpec::FreeAbelian(3);
        let m = standard_measure(&g, MeasureKind::LazySrw { alpha: Q::zero() }).unwrap();
        assert_eq!(m.support.len(), 6);
        assert!(m.support.values().all(|w| *w == q(1, 6)));
    }

    #[test]
    fn incompatible_kind() {
        assert!(standard_measure(&GroupSpec::FreeAbelian(2), MeasureKind::TreeLazy).is_err());
        assert!(standard_measure(
            &GroupSpec::TreeProduct(4, 4),
            MeasureKind::ProductMix { alpha1: q(1, 1) }
        )
        .is_err());
    }

    #[test]
    fn invalid_custom_measures() {
        let g = GroupSpec::FreeAbelian(1);
        let mut s = BTreeMap::new();
        s.insert(Element::Abelian(vec![1]), q(1, 1));
        assert!(Measure::new(g.clone(), s.clone()).is_err());
        s.insert(Element::Abelian(vec![1]), q(1, 2));
        s.insert(Element::Abelian(vec![-1]), q(1, 2));
        assert!(Measure::new(g.clone(), s.clone()).is_ok());
        s.clear();
        s.insert(Element::Abelian(vec![2]), q(1, 2));
        s.insert(Element::Abelian(vec![-2]), q(1, 2));
        assert!(Measure::new(g, s).is_err());
    }

    #[test]
    fn free_product_mix_sums_to_one() {
        let g = GroupSpec::free_product(GroupSpec::TreeProduct(4, 4), GroupSpec::FreeAbelian(3));
        let kind = MeasureKind::FreeProductMix {
            alpha: q(3, 10),
            left: Box::new(MeasureKind::ProductMix { alpha1: q(1, 2) }),
            right: Box::new(MeasureKind::LazySrw { alpha: Q::zero() }),
        };
        let m = standard_measure(&g, kind).unwrap();
        assert_eq!(m.weight(&g.identity()), q(7, 20));
        assert_eq!(m.support.len(), 15);
    }

    #[test]
    fn rationals() {
        assert_eq!(parse_rational("0.3").unwrap(), q(3, 10));
        assert_eq!(parse_rational("3/10").unwrap(), q(3, 10));
        assert_eq!(parse_rational("-1.5e-1").unwrap(), q(-3, 20));
        assert_eq!(parse_rational("2").unwrap(), q(2, 1));
        assert_eq!(rational_from_f64(0.05).unwrap(), q(1, 20));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
    }
}
