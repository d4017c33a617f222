//! Breadth-first sphere enumeration with an element budget.

use std::collections::HashSet;

use super::{Element, GroupSpec};
use crate::error::{Error, Result};

pub const DEFAULT_BUDGET: usize = 5_000_000;

/// BFS layers `S_0, ..., S_n`, each sorted by canonical encoding.
pub fn ball_layers(spec: &GroupSpec, n: u32, budget: usize) -> Result<Vec<Vec<Element>>> {
    spec.validate()?;
    let gens = spec.generators();
    let e = spec.identity();
    let mut seen: HashSet<Element> = HashSet::new();
    seen.insert(e.clone());
    let mut layers = vec![vec![e]];
    for k in 0..n {
        let mut next = Vec::new();
        for x in &layers[k as usize] {
            for s in &gens {
                let y = spec.mul(x, s);
                if !seen.contains(&y) {
                    seen.insert(y.clone());
                    next.push(y);
                    if seen.len() > budget {
                        return Err(Error::Budget {
                            reached: seen.len(),
                            completed: k as usize,
                        });
                    }
                }
            }
        }
        next.sort_by_cached_key(|x| x.encode());
        layers.push(next);
    }
    Ok(layers)
}

pub fn sphere_with_budget(spec: &GroupSpec, n: u32, budget: usize) -> Result<Vec<Element>> {
    Ok(ball_layers(spec, n, budget)?.pop().unwrap_or_default())
}

pub fn sphere(spec: &GroupSpec, n: u32) -> Result<Vec<Element>> {
    sphere_with_budget(spec, n, DEFAULT_BUDGET)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z2_sphere() {
        assert_eq!(sphere(&GroupSpec::FreeAbelian(2), 1).unwrap().len(), 4);
        assert_eq!(sphere(&GroupSpec::FreeAbelian(2), 3).unwrap().len(), 12);
    }

    #[test]
    fn budget_error() {
        let err = sphere_with_budget(&GroupSpec::FreeGroup(2), 10, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget { reached, .. } if reached > 1000));
    }

    #[test]
    fn sorted_and_unique() {
        let s = sphere(&GroupSpec::DiestelLeader(2), 4).unwrap();
        let enc: Vec<Vec<u8>> = s.iter().map(|x| x.encode()).collect();
        assert!(enc.windows(2).all(|w| w[0] < w[1]));
    }
}
