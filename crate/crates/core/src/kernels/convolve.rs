//! Sparse convolution powers of a measure, exact or in floating point.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Debug;

use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::measure::{Measure, Q};
use crate::error::{Error, Result};
use crate::groups::{Element, GroupSpec};

pub trait Weight: Clone + Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_q(q: &Q) -> Self;
    /// `self += a * b`
    fn add_mul(&mut self, a: &Self, b: &Self);
    fn add(&mut self, a: &Self);
    fn mul(&self, a: &Self) -> Self;
    fn to_f64(&self) -> f64;
}

impl Weight for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_q(q: &Q) -> Self {
        ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn add(&mut self, a: &Self) {
        *self += a;
    }
    fn mul(&self, a: &Self) -> Self {
        self * a
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Weight for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn add_mul(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn add(&mut self, a: &Self) {
        *self += a;
    }
    fn mul(&self, a: &Self) -> Self {
        self * a
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// `p_n(e, .)` as a sparse map.
#[derive(Clone, Debug, PartialEq)]
pub struct DistVector<T> {
    pub entries: BTreeMap<Element, T>,
    pub step_index: usize,
}

impl<T: Weight> DistVector<T> {
    pub fn delta(spec: &GroupSpec) -> DistVector<T> {
        let mut entries = BTreeMap::new();
        entries.insert(spec.identity(), T::from_q(&Q::from_integer(1.into())));
        DistVector { entries, step_index: 0 }
    }

    pub fn get(&self, x: &Element) -> T {
        self.entries.get(x).cloned().unwrap_or_else(T::zero)
    }

    pub fn total(&self) -> T {
        let mut s = T::zero();
        for v in self.entries.values() {
            s.add(v);
        }
        s
    }
}

/// One convolution step `p_{n+1}(x s) += p_n(x) mu(s)`.
pub fn convolve<T: Weight>(dist: &DistVector<T>, m: &Measure) -> DistVector<T> {
    let steps: Vec<(Element, T)> = m.support.iter().map(|(s, w)| (s.clone(), T::from_q(w))).collect();
    let mut out: BTreeMap<Element, T> = BTreeMap::new();
    for (x, p) in &dist.entries {
        for (s, w) in &steps {
            out.entry(m.group.mul(x, s)).or_insert_with(T::zero).add_mul(p, w);
        }
    }
    out.retain(|_, v| !v.is_zero());
    DistVector {
        entries: out,
        step_index: dist.step_index + 1,
    }
}

/// Iterated convolution over an interned Cayley-graph ball. Neighbour lists
/// are computed once per element, so repeated steps only touch arrays.
pub struct ElementWalk<T> {
    spec: GroupSpec,
    steps: Vec<(Element, T)>,
    elems: Vec<Element>,
    lengths: Vec<u32>,
    index: HashMap<Element, u32>,
    nbrs: Vec<Option<Box<[u32]>>>,
    cur: Vec<T>,
    active: Vec<u32>,
    pub step_index: usize,
    pub max_states: usize,
}

const PAR_CHUNK: usize = 4096;

impl<T: Weight> ElementWalk<T> {
    /// Walk started at the identity; each step multiplies by `scale * mu`.
    pub fn new(m: &Measure, scale: &T) -> ElementWalk<T> {
        let steps = m
            .support
            .iter()
            .map(|(s, w)| (s.clone(), T::from_q(w).mul(scale)))
            .collect();
        let mut w = ElementWalk {
            spec: m.group.clone(),
            steps,
            elems: Vec::new(),
            lengths: Vec::new(),
            index: HashMap::new(),
            nbrs: Vec::new(),
            cur: Vec::new(),
            active: Vec::new(),
            step_index: 0,
            max_states: 1_000_000,
        };
        let e = w.spec.identity();
        let id = w.intern(&e);
        w.cur[id as usize] = T::from_q(&Q::from_integer(1.into()));
        w.active.push(id);
        w
    }

    /// Replaces the current vector.
    pub fn seed(&mut self, entries: impl IntoIterator<Item = (Element, T)>, step_index: usize) {
        for &i in &self.active {
            self.cur[i as usize] = T::zero();
        }
        self.active.clear();
        for (x, v) in entries {
            if v.is_zero() {
                continue;
            }
            let id = self.intern(&x);
            if self.cur[id as usize].is_zero() {
                self.active.push(id);
            }
            self.cur[id as usize].add(&v);
        }
        self.active.sort_unstable();
        self.step_index = step_index;
    }

    fn intern(&mut self, x: &Element) -> u32 {
        if let Some(&i) = self.index.get(x) {
            return i;
        }
        let i = self.elems.len() as u32;
        self.index.insert(x.clone(), i);
        self.lengths.push(self.spec.word_length(x));
        self.elems.push(x.clone());
        self.nbrs.push(None);
        self.cur.push(T::zero());
        i
    }

    pub fn id_of(&self, x: &Element) -> Option<u32> {
        self.index.get(x).copied()
    }

    pub fn element(&self, id: u32) -> &Element {
        &self.elems[id as usize]
    }

    pub fn length(&self, id: u32) -> u32 {
        self.lengths[id as usize]
    }

    pub fn value(&self, x: &Element) -> T {
        self.id_of(x)
            .map(|i| self.cur[i as usize].clone())
            .unwrap_or_else(T::zero)
    }

    pub fn value_id(&self, id: u32) -> &T {
        &self.cur[id as usize]
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn num_states(&self) -> usize {
        self.elems.len()
    }

    fn ensure_nbrs(&mut self) -> Result<()> {
        let missing: Vec<u32> = self
            .active
            .iter()
            .copied()
            .filter(|&i| self.nbrs[i as usize].is_none())
            .collect();
        if missing.is_empty() {
            return Ok(());
        }
        let spec = &self.spec;
        let steps = &self.steps;
        let elems = &self.elems;
        let products: Vec<Vec<Element>> = missing
            .par_iter()
            .with_min_len(PAR_CHUNK)
            .map(|&i| steps.iter().map(|(s, _)| spec.mul(&elems[i as usize], s)).collect())
            .collect();
        for (&i, ys) in missing.iter().zip(products) {
            let ids: Box<[u32]> = ys.iter().map(|y| self.intern(y)).collect();
            self.nbrs[i as usize] = Some(ids);
        }
        if self.elems.len() > self.max_states {
            return Err(Error::Budget {
                reached: self.elems.len(),
                completed: self.step_index,
            });
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<()> {
        self.ensure_nbrs()?;
        let mut next: HashMap<u32, T> = HashMap::with_capacity(self.active.len() * 2);
        for &i in &self.active {
            let p = &self.cur[i as usize];
            let nb = self.nbrs[i as usize].as_ref().expect("neighbours computed");
            for (k, &j) in nb.iter().enumerate() {
                next.entry(j).or_insert_with(T::zero).add_mul(p, &self.steps[k].1);
            }
        }
        for &i in &self.active {
            self.cur[i as usize] = T::zero();
        }
        let mut active: Vec<u32> = Vec::with_capacity(next.len());
        for (j, v) in next {
            if !v.is_zero() {
                self.cur[j as usize] = v;
                active.push(j);
            }
        }
        active.sort_unstable();
        self.active = active;
        self.step_index += 1;
        Ok(())
    }

    /// Zeroes every active entry whose element satisfies `pred`; returns the
    /// removed mass.
    pub fn kill(&mut self, mut pred: impl FnMut(u32, &Element) -> bool) -> f64 {
        let mut removed = 0.0;
        let mut keep = Vec::with_capacity(self.active.len());
        for &i in &self.active {
            if pred(i, &self.elems[i as usize]) {
                removed += self.cur[i as usize].to_f64();
                self.cur[i as usize] = T::zero();
            } else {
                keep.push(i);
            }
        }
        self.active = keep;
        removed
    }

    /// Drops entries whose magnitude is below `eps`.
    pub fn prune(&mut self, eps: f64) -> f64 {
        let cur = &self.cur;
        let drop: Vec<bool> = self.active.iter().map(|&i| cur[i as usize].to_f64() < eps).collect();
        let mut k = 0;
        self.kill(|_, _| {
            k += 1;
            drop[k - 1]
        })
    }

    pub fn to_dist(&self) -> DistVector<T> {
        let entries = self
            .active
            .iter()
            .map(|&i| (self.elems[i as usize].clone(), self.cur[i as usize].clone()))
            .collect();
        DistVector {
            entries,
            step_index: self.step_index,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::measure::{q, standard_measure, MeasureKind};

    #[test]
    fn delta_convolve_gives_measure() {
        let g = GroupSpec::FreeAbelian(3);
        let m = standard_measure(&g, MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
        let d = convolve(&DistVector::<Q>::delta(&g), &m);
        assert_eq!(d.entries, m.support);
        assert_eq!(d.step_index, 1);
    }

    #[test]
    fn two_steps_exact() {
        let g = GroupSpec::FreeAbelian(3);
        let m = standard_measure(&g, MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
        let d2 = convolve(&convolve(&DistVector::<Q>::delta(&g), &m), &m);
        // double sum over support pairs with s t = e
        let mut oracle = <Q as Zero>::zero();
        for (s, a) in &m.support {
            for (t, b) in &m.support {
                if g.mul(s, t) == g.identity() {
                    oracle += a * b;
                }
            }
        }
        assert_eq!(d2.get(&g.identity()), oracle);
        assert_eq!(oracle, q(7, 24));
        assert_eq!(d2.total(), q(1, 1));
    }

    #[test]
    fn walk_matches_convolve() {
        let g = GroupSpec::Heisenberg3;
        let m = standard_measure(&g, MeasureKind::LazySrw { alpha: q(1, 3) }).unwrap();
        let mut d = DistVector::<Q>::delta(&g);
        let mut w = ElementWalk::<Q>::new(&m, &q(1, 1));
        for _ in 0..5 {
            d = convolve(&d, &m);
            w.step().unwrap();
        }
        assert_eq!(w.to_dist(), d);
    }
}
