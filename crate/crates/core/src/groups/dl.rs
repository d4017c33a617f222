//! Diestel-Leader graph DL(q,q) through its lamplighter coordinates.
//!
//! A lamplighter element is a finitely supported lamp configuration on the
//! edges `(j, j+1)` of the integer line (edge index `j`) plus a position.
//! Tree 1 sees the lamps on edges left of the position, tree 2 the lamps on
//! the right. Both tree roots are the identity configuration, and the
//! ancestors of a root are always reached through child digit 0.

use std::collections::BTreeMap;
use std::fmt;

use super::Element;

/// Vertex of the (q+1)-regular tree relative to its root: `up` steps towards
/// the fixed end, then the child digits in `down`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    pub up: u32,
    pub down: Vec<u8>,
}

impl TreeVertex {
    pub fn root() -> TreeVertex {
        TreeVertex {
            up: 0,
            down: Vec::new(),
        }
    }

    /// Graph distance to the root.
    pub fn len(&self) -> u32 {
        self.up + self.down.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Horocycle level; going down raises it by one.
    pub fn h(&self) -> i64 {
        self.down.len() as i64 - self.up as i64
    }

    pub fn is_canonical(&self, q: u32) -> bool {
        self.down.iter().all(|&c| (c as u32) < q) && !(self.up > 0 && self.down.first() == Some(&0))
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}:", self.up)?;
        for c in &self.down {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lamplighter {
    pub q: u32,
    pub pos: i64,
    /// Non-zero lamps only.
    pub lamps: BTreeMap<i64, u8>,
}

impl Lamplighter {
    pub fn mul(&self, other: &Lamplighter) -> Lamplighter {
        let mut lamps = self.lamps.clone();
        for (&j, &c) in &other.lamps {
            let e = lamps.entry(j + self.pos).or_insert(0);
            *e = ((*e as u32 + c as u32) % self.q) as u8;
            if *e == 0 {
                lamps.remove(&(j + self.pos));
            }
        }
        Lamplighter {
            q: self.q,
            pos: self.pos + other.pos,
            lamps,
        }
    }

    pub fn inverse(&self) -> Lamplighter {
        let lamps = self
            .lamps
            .iter()
            .map(|(&j, &c)| (j - self.pos, ((self.q - c as u32) % self.q) as u8))
            .collect();
        Lamplighter {
            q: self.q,
            pos: -self.pos,
            lamps,
        }
    }

    pub fn to_dl(&self) -> Element {
        let k = self.pos;
        let lamp = |j: i64| self.lamps.get(&j).copied().unwrap_or(0);
        let jmin = self.lamps.range(..k).next().map(|(&j, _)| j);
        let m = jmin.map_or(0.min(k), |j| 0.min(k).min(j));
        let x1 = TreeVertex {
            up: (-m) as u32,
            down: (m..k).map(lamp).collect(),
        };
        let jmax = self.lamps.range(k..).next_back().map(|(&j, _)| j);
        let big = jmax.map_or(0.max(k), |j| 0.max(k).max(j + 1));
        let x2 = TreeVertex {
            up: big as u32,
            down: (k..big).rev().map(lamp).collect(),
        };
        Element::Dl(x1, x2)
    }

    pub fn from_dl(q: u32, x: &Element) -> Lamplighter {
        let Element::Dl(x1, x2) = x else {
            panic!("not a DL element: {x}")
        };
        let pos = x1.h();
        let mut lamps = BTreeMap::new();
        let m = -(x1.up as i64);
        for (i, &c) in x1.down.iter().enumerate() {
            if c != 0 {
                lamps.insert(m + i as i64, c);
            }
        }
        let big = x2.up as i64;
        for (i, &c) in x2.down.iter().enumerate() {
            if c != 0 {
                lamps.insert(big - 1 - i as i64, c);
            }
        }
        Lamplighter { q, pos, lamps }
    }
}

pub(crate) fn mul_q(q: u32, a: &Element, b: &Element) -> Element {
    Lamplighter::from_dl(q, a).mul(&Lamplighter::from_dl(q, b)).to_dl()
}

pub(crate) fn inverse_q(q: u32, a: &Element) -> Element {
    Lamplighter::from_dl(q, a).inverse().to_dl()
}

/// The 2q moves: step right and add `c` to the crossed lamp, or step left
/// and add `c`.
pub(crate) fn generators(q: u32) -> Vec<Element> {
    let mut out = Vec::with_capacity(2 * q as usize);
    for (pos, edge) in [(1i64, 0i64), (-1, -1)] {
        for c in 0..q as u8 {
            let mut lamps = BTreeMap::new();
            if c != 0 {
                lamps.insert(edge, c);
            }
            out.push(Lamplighter { q, pos, lamps }.to_dl());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_generators() {
        let g = generators(3);
        assert_eq!(g.len(), 6);
        for x in &g {
            let Element::Dl(a, b) = x else { panic!() };
            assert_eq!(a.h() + b.h(), 0);
            assert_eq!(a.len() + b.len() - a.h().unsigned_abs() as u32, 1);
            assert_eq!(Lamplighter::from_dl(3, x).to_dl(), *x);
        }
        let mut lamps = BTreeMap::new();
        lamps.insert(-3, 2u8);
        lamps.insert(1, 1u8);
        lamps.insert(4, 2u8);
        let l = Lamplighter { q: 3, pos: 2, lamps };
        assert_eq!(Lamplighter::from_dl(3, &l.to_dl()), l);
        let Element::Dl(a, b) = l.to_dl() else { panic!() };
        assert!(a.is_canonical(3) && b.is_canonical(3));
        assert_eq!(a.h() + b.h(), 0);
    }
}
