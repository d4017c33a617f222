//! Group catalog: canonical element forms, multiplication, word length and
//! sphere enumeration for each supported Cayley graph.

mod count;
mod dl;
mod enumerate;
mod heisenberg;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use count::{dl_class_count, dl_class_length, dl_sphere_count, tree_level_sphere_count};
pub use dl::{Lamplighter, TreeVertex};
pub use enumerate::{ball_layers, sphere, sphere_with_budget, DEFAULT_BUDGET};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupSpec {
    FreeAbelian(u32),
    Heisenberg3,
    FreeGroup(u32),
    /// Free product of `l` copies of Z/2; its Cayley graph is the (l)-regular tree.
    RegularTree(u32),
    TreeProduct(u32, u32),
    DiestelLeader(u32),
    FreeProduct(Box<GroupSpec>, Box<GroupSpec>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub side: Side,
    pub elem: Element,
}

/// Canonical normal form of a group element. Free group letters are
/// `2g` for generator `g` and `2g+1` for its inverse; tree letters are the
/// involutive generators `0..l`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Abelian(Vec<i64>),
    Heisenberg([i64; 3]),
    Word(Vec<u8>),
    Pair(Vec<u8>, Vec<u8>),
    Dl(TreeVertex, TreeVertex),
    Free(Vec<Syllable>),
}

impl GroupSpec {
    pub fn free_product(left: GroupSpec, right: GroupSpec) -> GroupSpec {
        GroupSpec::FreeProduct(Box::new(left), Box::new(right))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::FreeAbelian(d) if *d == 0 || *d > 16 => invalid(format!("FreeAbelian rank {d} outside 1..=16")),
            GroupSpec::FreeGroup(k) if *k < 2 || *k > 64 => invalid(format!("FreeGroup rank {k} outside 2..=64")),
            GroupSpec::RegularTree(l) if *l < 3 || *l > 255 => invalid(format!("tree degree {l} outside 3..=255")),
            GroupSpec::TreeProduct(a, b) if *a < 3 || *b < 3 || *a > 255 || *b > 255 => {
                invalid(format!("tree degrees ({a},{b}) outside 3..=255"))
            }
            GroupSpec::DiestelLeader(q) if *q < 2 || *q > 255 => invalid(format!("DL parameter q={q} outside 2..=255")),
            GroupSpec::FreeProduct(l, r) => {
                if matches!(**l, GroupSpec::FreeProduct(..)) || matches!(**r, GroupSpec::FreeProduct(..)) {
                    return invalid("free product factors must not be free products");
                }
                l.validate()?;
                r.validate()
            }
            _ => Ok(()),
        }
    }

    pub fn factor(&self, side: Side) -> Option<&GroupSpec> {
        match self {
            GroupSpec::FreeProduct(l, r) => Some(if side == Side::Left { l } else { r }),
            _ => None,
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            GroupSpec::FreeAbelian(d) => Element::Abelian(vec![0; *d as usize]),
            GroupSpec::Heisenberg3 => Element::Heisenberg([0; 3]),
            GroupSpec::FreeGroup(_) | GroupSpec::RegularTree(_) => Element::Word(Vec::new()),
            GroupSpec::TreeProduct(..) => Element::Pair(Vec::new(), Vec::new()),
            GroupSpec::DiestelLeader(_) => Element::Dl(TreeVertex::root(), TreeVertex::root()),
            GroupSpec::FreeProduct(..) => Element::Free(Vec::new()),
        }
    }

    /// The standard symmetric generating set.
    pub fn generators(&self) -> Vec<Element> {
        match self {
            GroupSpec::FreeAbelian(d) => {
                let d = *d as usize;
                let mut out = Vec::with_capacity(2 * d);
                for i in 0..d {
                    for s in [1, -1] {
                        let mut v = vec![0; d];
                        v[i] = s;
                        out.push(Element::Abelian(v));
                    }
                }
                out
            }
            GroupSpec::Heisenberg3 => vec![
                Element::Heisenberg([1, 0, 0]),
                Element::Heisenberg([-1, 0, 0]),
                Element::Heisenberg([0, 1, 0]),
                Element::Heisenberg([0, -1, 0]),
            ],
            GroupSpec::FreeGroup(k) => (0..2 * *k as u8).map(|c| Element::Word(vec![c])).collect(),
            GroupSpec::RegularTree(l) => (0..*l as u8).map(|c| Element::Word(vec![c])).collect(),
            GroupSpec::TreeProduct(l1, l2) => {
                let mut out: Vec<Element> = (0..*l1 as u8).map(|c| Element::Pair(vec![c], vec![])).collect();
                out.extend((0..*l2 as u8).map(|c| Element::Pair(vec![], vec![c])));
                out
            }
            GroupSpec::DiestelLeader(q) => dl::generators(*q),
            GroupSpec::FreeProduct(l, r) => {
                let mut out = Vec::new();
                for (side, f) in [(Side::Left, l), (Side::Right, r)] {
                    for g in f.generators() {
                        out.push(Element::Free(vec![Syllable { side, elem: g }]));
                    }
                }
                out
            }
        }
    }

    /// Embeds a factor element as an element of the free product.
    pub fn embed(&self, side: Side, x: Element) -> Result<Element> {
        let f = self
            .factor(side)
            .ok_or_else(|| Error::Invalid("embed needs a free product".into()))?;
        f.check(&x)?;
        if x == f.identity() {
            Ok(Element::Free(Vec::new()))
        } else {
            Ok(Element::Free(vec![Syllable { side, elem: x }]))
        }
    }

    /// Returns the factor element if `x` lies in the factor subgroup on `side`.
    pub fn project(&self, side: Side, x: &Element) -> Option<Element> {
        let f = self.factor(side)?;
        match x {
            Element::Free(s) if s.is_empty() => Some(f.identity()),
            Element::Free(s) if s.len() == 1 && s[0].side == side => Some(s[0].elem.clone()),
            _ => None,
        }
    }

    pub fn check(&self, x: &Element) -> Result<()> {
        if self.is_canonical(x) {
            Ok(())
        } else {
            Err(Error::Mismatch {
                group: self.to_string(),
                element: x.to_string(),
            })
        }
    }

    pub fn is_canonical(&self, x: &Element) -> bool {
        match (self, x) {
            (GroupSpec::FreeAbelian(d), Element::Abelian(v)) => v.len() == *d as usize,
            (GroupSpec::Heisenberg3, Element::Heisenberg(_)) => true,
            (GroupSpec::FreeGroup(k), Element::Word(w)) => {
                w.iter().all(|&c| (c as u32) < 2 * k) && w.windows(2).all(|p| p[0] != p[1] ^ 1)
            }
            (GroupSpec::RegularTree(l), Element::Word(w)) => tree_word_ok(*l, w),
            (GroupSpec::TreeProduct(l1, l2), Element::Pair(a, b)) => tree_word_ok(*l1, a) && tree_word_ok(*l2, b),
            (GroupSpec::DiestelLeader(q), Element::Dl(a, b)) => {
                a.is_canonical(*q) && b.is_canonical(*q) && a.h() + b.h() == 0
            }
            (GroupSpec::FreeProduct(l, r), Element::Free(s)) => {
                s.windows(2).all(|p| p[0].side != p[1].side)
                    && s.iter().all(|y| {
                        let f = if y.side == Side::Left { l } else { r };
                        f.is_canonical(&y.elem) && y.elem != f.identity()
                    })
            }
            _ => false,
        }
    }

    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    /// Multiplication without canonicity checks.
    pub(crate) fn mul(&self, a: &Element, b: &Element) -> Element {
        match (self, a, b) {
            (_, Element::Abelian(x), Element::Abelian(y)) => {
                Element::Abelian(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (_, Element::Heisenberg(x), Element::Heisenberg(y)) => {
                Element::Heisenberg([x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1]])
            }
            (GroupSpec::FreeGroup(_), Element::Word(x), Element::Word(y)) => {
                Element::Word(reduce_concat(x, y, |c| c ^ 1))
            }
            (GroupSpec::RegularTree(_), Element::Word(x), Element::Word(y)) => {
                Element::Word(reduce_concat(x, y, |c| c))
            }
            (_, Element::Pair(x1, x2), Element::Pair(y1, y2)) => {
                Element::Pair(reduce_concat(x1, y1, |c| c), reduce_concat(x2, y2, |c| c))
            }
            (GroupSpec::DiestelLeader(q), Element::Dl(..), Element::Dl(..)) => dl::mul_q(*q, a, b),
            (GroupSpec::FreeProduct(l, r), Element::Free(x), Element::Free(y)) => Element::Free(free_mul(l, r, x, y)),
            _ => panic!("mul: element kinds do not match {self}"),
        }
    }

    pub fn inverse(&self, a: &Element) -> Element {
        match a {
            Element::Abelian(x) => Element::Abelian(x.iter().map(|v| -v).collect()),
            Element::Heisenberg([p, q, c]) => Element::Heisenberg([-p, -q, -c + p * q]),
            Element::Word(w) => match self {
                GroupSpec::FreeGroup(_) => Element::Word(w.iter().rev().map(|c| c ^ 1).collect()),
                _ => Element::Word(w.iter().rev().copied().collect()),
            },
            Element::Pair(x, y) => Element::Pair(x.iter().rev().copied().collect(), y.iter().rev().copied().collect()),
            Element::Dl(..) => match self {
                GroupSpec::DiestelLeader(q) => dl::inverse_q(*q, a),
                _ => panic!("DL element for {self}"),
            },
            Element::Free(s) => {
                let (l, r) = match self {
                    GroupSpec::FreeProduct(l, r) => (l, r),
                    _ => panic!("free product element for {self}"),
                };
                Element::Free(
                    s.iter()
                        .rev()
                        .map(|y| Syllable {
                            side: y.side,
                            elem: if y.side == Side::Left {
                                l.inverse(&y.elem)
                            } else {
                                r.inverse(&y.elem)
                            },
                        })
                        .collect(),
                )
            }
        }
    }

    /// Graph distance to the identity for the standard generating set.
    pub fn word_length(&self, a: &Element) -> u32 {
        match a {
            Element::Abelian(x) => x.iter().map(|v| v.unsigned_abs() as u32).sum(),
            Element::Heisenberg(x) => heisenberg::word_length(*x),
            Element::Word(w) => w.len() as u32,
            Element::Pair(x, y) => (x.len() + y.len()) as u32,
            Element::Dl(x1, x2) => x1.len() + x2.len() - x1.h().unsigned_abs() as u32,
            Element::Free(s) => {
                let (l, r) = match self {
                    GroupSpec::FreeProduct(l, r) => (l, r),
                    _ => panic!("free product element for {self}"),
                };
                s.iter()
                    .map(|y| {
                        if y.side == Side::Left {
                            l.word_length(&y.elem)
                        } else {
                            r.word_length(&y.elem)
                        }
                    })
                    .sum()
            }
        }
    }

    /// Number of generators (the degree of every Cayley-graph vertex).
    pub fn degree(&self) -> usize {
        self.generators().len()
    }
}

fn tree_word_ok(l: u32, w: &[u8]) -> bool {
    w.iter().all(|&c| (c as u32) < l) && w.windows(2).all(|p| p[0] != p[1])
}

fn reduce_concat(x: &[u8], y: &[u8], inv: impl Fn(u8) -> u8) -> Vec<u8> {
    let mut k = 0;
    while k < x.len() && k < y.len() && x[x.len() - 1 - k] == inv(y[k]) {
        k += 1;
    }
    let mut out = Vec::with_capacity(x.len() + y.len() - 2 * k);
    out.extend_from_slice(&x[..x.len() - k]);
    out.extend_from_slice(&y[k..]);
    out
}

fn free_mul(l: &GroupSpec, r: &GroupSpec, x: &[Syllable], y: &[Syllable]) -> Vec<Syllable> {
    let mut out: Vec<Syllable> = x.to_vec();
    for s in y {
        match out.last_mut() {
            Some(last) if last.side == s.side => {
                let f = if s.side == Side::Left { l } else { r };
                let m = f.mul(&last.elem, &s.elem);
                if m == f.identity() {
                    out.pop();
                } else {
                    last.elem = m;
                }
            }
            _ => out.push(s.clone()),
        }
    }
    out
}

impl Element {
    /// Byte encoding with a per-variant prefix; the deterministic output
    /// order is lexicographic on these bytes.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        fn int(out: &mut Vec<u8>, v: i64) {
            out.extend_from_slice(&((v as u64) ^ (1 << 63)).to_be_bytes());
        }
        fn word(out: &mut Vec<u8>, w: &[u8]) {
            out.extend_from_slice(&(w.len() as u32).to_be_bytes());
            out.extend_from_slice(w);
        }
        match self {
            Element::Abelian(v) => {
                out.push(1);
                v.iter().for_each(|&x| int(out, x));
            }
            Element::Heisenberg(v) => {
                out.push(2);
                v.iter().for_each(|&x| int(out, x));
            }
            Element::Word(w) => {
                out.push(3);
                word(out, w);
            }
            Element::Pair(a, b) => {
                out.push(4);
                word(out, a);
                word(out, b);
            }
            Element::Dl(a, b) => {
                out.push(5);
                for t in [a, b] {
                    out.extend_from_slice(&t.up.to_be_bytes());
                    word(out, &t.down);
                }
            }
            Element::Free(s) => {
                out.push(6);
                out.extend_from_slice(&(s.len() as u32).to_be_bytes());
                for y in s {
                    out.push(y.side as u8);
                    y.elem.encode_into(out);
                }
            }
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::FreeAbelian(d) => write!(f, "Z^{d}"),
            GroupSpec::Heisenberg3 => write!(f, "H3"),
            GroupSpec::FreeGroup(k) => write!(f, "F{k}"),
            GroupSpec::RegularTree(l) => write!(f, "T{l}"),
            GroupSpec::TreeProduct(a, b) => write!(f, "T{a}xT{b}"),
            GroupSpec::DiestelLeader(q) => write!(f, "DL({q},{q})"),
            GroupSpec::FreeProduct(l, r) => write!(f, "({l})*({r})"),
        }
    }
}

fn fmt_word(f: &mut fmt::Formatter<'_>, w: &[u8]) -> fmt::Result {
    if w.is_empty() {
        return write!(f, "e");
    }
    for c in w {
        if *c < 10 {
            write!(f, "{c}")?;
        } else {
            write!(f, "[{c}]")?;
        }
    }
    Ok(())
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Abelian(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(" "))
            }
            Element::Heisenberg([a, b, c]) => write!(f, "({a} {b} {c})"),
            Element::Word(w) => fmt_word(f, w),
            Element::Pair(a, b) => {
                write!(f, "<")?;
                fmt_word(f, a)?;
                write!(f, " ")?;
                fmt_word(f, b)?;
                write!(f, ">")
            }
            Element::Dl(a, b) => write!(f, "[{a} {b}]"),
            Element::Free(s) => {
                if s.is_empty() {
                    return write!(f, "e");
                }
                for (i, y) in s.iter().enumerate() {
                    if i > 0 {
                        write!(f, ".")?;
                    }
                    write!(f, "{}{}", if y.side == Side::Left { "L" } else { "R" }, y.elem)?;
                }
                Ok(())
            }
        }
    }
}

/// Parses a free-group word written with `a b c ...` for generators and
/// upper case letters for their inverses.
pub fn free_word(s: &str) -> Result<Element> {
    let mut out = Vec::new();
    for ch in s.chars() {
        let c = match ch {
            'a'..='z' => 2 * (ch as u8 - b'a'),
            'A'..='Z' => 2 * (ch as u8 - b'A') + 1,
            _ => return invalid(format!("bad letter {ch:?} in word {s:?}")),
        };
        out.push(c);
    }
    Ok(Element::Word(reduce_concat(&[], &out, |c| c ^ 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abelian_product() {
        let g = GroupSpec::FreeAbelian(3);
        let p = g
            .multiply(&Element::Abelian(vec![1, 0, 0]), &Element::Abelian(vec![0, 1, 0]))
            .unwrap();
        assert_eq!(p, Element::Abelian(vec![1, 1, 0]));
    }

    #[test]
    fn free_reduction() {
        let g = GroupSpec::FreeGroup(2);
        let p = g
            .multiply(&free_word("ab").unwrap(), &free_word("Ba").unwrap())
            .unwrap();
        assert_eq!(p, free_word("aa").unwrap());
        assert_eq!(g.word_length(&free_word("abaB").unwrap()), 4);
    }

    #[test]
    fn heisenberg_matches_matrices() {
        fn mat(x: [i64; 3]) -> [[i64; 3]; 3] {
            [[1, x[0], x[2]], [0, 1, x[1]], [0, 0, 1]]
        }
        fn matmul(a: [[i64; 3]; 3], b: [[i64; 3]; 3]) -> [[i64; 3]; 3] {
            let mut c = [[0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        }
        let g = GroupSpec::Heisenberg3;
        assert_eq!(
            g.mul(&Element::Heisenberg([1, 0, 0]), &Element::Heisenberg([0, 1, 0])),
            Element::Heisenberg([1, 1, 1])
        );
        for a in [[2, -1, 3], [0, 5, -2], [-3, 2, 7]] {
            for b in [[1, 1, 1], [-4, 0, 2], [3, -3, 0]] {
                let Element::Heisenberg(p) = g.mul(&Element::Heisenberg(a), &Element::Heisenberg(b)) else {
                    panic!()
                };
                assert_eq!(mat(p), matmul(mat(a), mat(b)));
            }
        }
    }

    #[test]
    fn mismatched_encoding_rejected() {
        let g = GroupSpec::FreeAbelian(2);
        assert!(g.multiply(&Element::Abelian(vec![1, 0, 0]), &g.identity()).is_err());
        let t = GroupSpec::RegularTree(3);
        assert!(t.check(&Element::Word(vec![1, 1])).is_err());
        assert!(t.check(&Element::Word(vec![3])).is_err());
    }

    #[test]
    fn free_product_normal_form() {
        let g = GroupSpec::free_product(GroupSpec::RegularTree(3), GroupSpec::FreeAbelian(1));
        let a = g.embed(Side::Left, Element::Word(vec![0])).unwrap();
        let z = g.embed(Side::Right, Element::Abelian(vec![2])).unwrap();
        let zi = g.inverse(&z);
        let x = g.mul(&g.mul(&a, &z), &a);
        assert_eq!(g.word_length(&x), 4);
        let back = g.mul(&g.mul(&g.mul(&x, &a), &zi), &a);
        assert_eq!(back, g.identity());
        assert!(GroupSpec::free_product(g.clone(), GroupSpec::FreeAbelian(1))
            .validate()
            .is_err());
    }

    #[test]
    fn encoding_prefixes_differ() {
        let a = GroupSpec::FreeAbelian(1).identity().encode();
        let b = GroupSpec::RegularTree(3).identity().encode();
        assert_ne!(a[0], b[0]);
    }
}
