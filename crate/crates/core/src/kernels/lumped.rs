//! Convolution powers reduced to orbits of graph automorphisms that fix the
//! identity and preserve the measure. Transition probabilities are constant
//! on such orbits, so one value per class suffices:
//! `p_{k+1}(y) = sum_s mu(s) p_k(y s)` evaluated at a representative `y`.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use rayon::prelude::*;

use super::measure::{to_f64, Measure, MeasureKind};
use crate::groups::{Element, GroupSpec, TreeVertex};

pub trait Lumping: Sync {
    type Key: Clone + Eq + Hash + Ord + Debug + Send + Sync;
    fn root(&self) -> Self::Key;
    fn class_of(&self, x: &Element) -> Self::Key;
    fn representative(&self, k: &Self::Key) -> Element;
    /// Number of group elements in the class.
    fn size(&self, k: &Self::Key) -> f64;
    fn log_size(&self, k: &Self::Key) -> f64 {
        self.size(k).ln()
    }
    fn length(&self, k: &Self::Key) -> u32;
    /// Pull moves of one step: `(class of y s, mu(s))` merged by class.
    fn moves(&self, k: &Self::Key) -> Vec<(Self::Key, f64)>;
}

/// Moves computed from a representative and the measure support; the oracle
/// for the closed-form move tables.
pub fn moves_by_representative<L: Lumping>(l: &L, m: &Measure, k: &L::Key) -> Vec<(L::Key, f64)> {
    let y = l.representative(k);
    let mut acc: Vec<(L::Key, f64)> = Vec::new();
    for (s, w) in &m.support {
        let c = l.class_of(&m.group.mul(&y, s));
        match acc.iter_mut().find(|(k2, _)| *k2 == c) {
            Some(e) => e.1 += to_f64(w),
            None => acc.push((c, to_f64(w))),
        }
    }
    acc.sort_by(|a, b| a.0.cmp(&b.0));
    acc
}

fn merge<K: Ord + Clone>(mut v: Vec<(K, f64)>) -> Vec<(K, f64)> {
    v.sort_by(|a, b| a.0.cmp(&b.0));
    let mut out: Vec<(K, f64)> = Vec::with_capacity(v.len());
    for (k, w) in v {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 += w,
            _ => out.push((k, w)),
        }
    }
    out
}

fn tree_sphere(l: u32, a: u32) -> f64 {
    if a == 0 {
        1.0
    } else {
        l as f64 * ((l - 1) as f64).powi(a as i32 - 1)
    }
}

fn log_tree_sphere(l: u32, a: u32) -> f64 {
    if a == 0 {
        0.0
    } else {
        (l as f64).ln() + (a - 1) as f64 * ((l - 1) as f64).ln()
    }
}

/// Moves of the lazy walk on the distance to the root of T_l, scaled by `c`.
fn radial_moves(l: u32, a: u32, c: f64, out: &mut Vec<i64>, w: &mut Vec<f64>) {
    if a == 0 {
        out.push(1);
        w.push(c * 0.5);
    } else {
        out.push(-1);
        w.push(c * 0.5 / l as f64);
        out.push(1);
        w.push(c * 0.5 * (l - 1) as f64 / l as f64);
    }
}

fn alternating_word(a: u32) -> Vec<u8> {
    (0..a).map(|i| (i % 2) as u8).collect()
}

/// Distance classes of the regular tree under the lazy kernel.
pub struct Radial {
    pub l: u32,
}

impl Lumping for Radial {
    type Key = u32;
    fn root(&self) -> u32 {
        0
    }
    fn class_of(&self, x: &Element) -> u32 {
        match x {
            Element::Word(w) => w.len() as u32,
            _ => panic!("radial lumping needs a tree word"),
        }
    }
    fn representative(&self, k: &u32) -> Element {
        Element::Word(alternating_word(*k))
    }
    fn size(&self, k: &u32) -> f64 {
        tree_sphere(self.l, *k)
    }
    fn log_size(&self, k: &u32) -> f64 {
        log_tree_sphere(self.l, *k)
    }
    fn length(&self, k: &u32) -> u32 {
        *k
    }
    fn moves(&self, k: &u32) -> Vec<(u32, f64)> {
        let (mut d, mut w) = (Vec::new(), Vec::new());
        radial_moves(self.l, *k, 1.0, &mut d, &mut w);
        let mut v: Vec<(u32, f64)> = vec![(*k, 0.5)];
        v.extend(d.iter().zip(&w).map(|(&dd, &ww)| ((*k as i64 + dd) as u32, ww)));
        merge(v)
    }
}

/// Pairs of distances on T_l1 x T_l2 under the product-mix kernel.
pub struct ProductRadial {
    pub l1: u32,
    pub l2: u32,
    pub alpha1: f64,
}

impl Lumping for ProductRadial {
    type Key = (u32, u32);
    fn root(&self) -> (u32, u32) {
        (0, 0)
    }
    fn class_of(&self, x: &Element) -> (u32, u32) {
        match x {
            Element::Pair(a, b) => (a.len() as u32, b.len() as u32),
            _ => panic!("product lumping needs a word pair"),
        }
    }
    fn representative(&self, k: &(u32, u32)) -> Element {
        Element::Pair(alternating_word(k.0), alternating_word(k.1))
    }
    fn size(&self, k: &(u32, u32)) -> f64 {
        tree_sphere(self.l1, k.0) * tree_sphere(self.l2, k.1)
    }
    fn log_size(&self, k: &(u32, u32)) -> f64 {
        log_tree_sphere(self.l1, k.0) + log_tree_sphere(self.l2, k.1)
    }
    fn length(&self, k: &(u32, u32)) -> u32 {
        k.0 + k.1
    }
    fn moves(&self, k: &(u32, u32)) -> Vec<((u32, u32), f64)> {
        let mut v = vec![(*k, 0.5)];
        let (mut d, mut w) = (Vec::new(), Vec::new());
        radial_moves(self.l1, k.0, self.alpha1, &mut d, &mut w);
        v.extend(d.iter().zip(&w).map(|(&dd, &ww)| (((k.0 as i64 + dd) as u32, k.1), ww)));
        let (mut d, mut w) = (Vec::new(), Vec::new());
        radial_moves(self.l2, k.1, 1.0 - self.alpha1, &mut d, &mut w);
        v.extend(d.iter().zip(&w).map(|(&dd, &ww)| ((k.0, (k.1 as i64 + dd) as u32), ww)));
        merge(v)
    }
}

/// DL(q,q) classes `(u1, d1, u2, d2)`: up/down step counts of both tree
/// coordinates relative to their roots.
pub struct DlClasses {
    pub q: u32,
}

fn tree_up(c: (u32, u32)) -> (u32, u32) {
    if c.1 > 0 {
        (c.0, c.1 - 1)
    } else {
        (c.0 + 1, 0)
    }
}

/// Classes of the q children with multiplicities.
fn tree_down(q: u32, c: (u32, u32)) -> Vec<((u32, u32), u32)> {
    if c.1 > 0 || c.0 == 0 {
        vec![((c.0, c.1 + 1), q)]
    } else {
        vec![((c.0 - 1, 0), 1), ((c.0, 1), q - 1)]
    }
}

impl DlClasses {
    pub fn profile(k: &(u32, u32, u32, u32)) -> (u32, u32, u32) {
        (k.0, k.3, k.0 + k.2)
    }

    pub fn from_profile(u1: u32, d2: u32, s: u32) -> (u32, u32, u32, u32) {
        (u1, s - d2, s - u1, d2)
    }
}

impl Lumping for DlClasses {
    type Key = (u32, u32, u32, u32);
    fn root(&self) -> Self::Key {
        (0, 0, 0, 0)
    }
    fn class_of(&self, x: &Element) -> Self::Key {
        match x {
            Element::Dl(a, b) => (a.up, a.down.len() as u32, b.up, b.down.len() as u32),
            _ => panic!("DL lumping needs a DL element"),
        }
    }
    fn representative(&self, k: &Self::Key) -> Element {
        let vertex = |u: u32, d: u32| {
            let mut down = vec![0u8; d as usize];
            if u > 0 && d > 0 {
                down[0] = 1;
            }
            TreeVertex { up: u, down }
        };
        Element::Dl(vertex(k.0, k.1), vertex(k.2, k.3))
    }
    fn size(&self, k: &Self::Key) -> f64 {
        self.log_size(k).exp()
    }
    fn log_size(&self, k: &Self::Key) -> f64 {
        let lq = (self.q as f64).ln();
        let tree = |u: u32, d: u32| match (u, d) {
            (0, d) => d as f64 * lq,
            (_, 0) => 0.0,
            (_, d) => ((self.q - 1) as f64).ln() + (d - 1) as f64 * lq,
        };
        let (i, j, s) = Self::profile(k);
        tree(i, s - j) + tree(s - i, j)
    }
    fn length(&self, k: &Self::Key) -> u32 {
        let h = k.1 as i64 - k.0 as i64;
        k.0 + k.1 + k.2 + k.3 - h.unsigned_abs() as u32
    }
    fn moves(&self, k: &Self::Key) -> Vec<(Self::Key, f64)> {
        let w = 1.0 / (2 * self.q) as f64;
        let mut v = Vec::new();
        let up2 = tree_up((k.2, k.3));
        for (c1, m) in tree_down(self.q, (k.0, k.1)) {
            v.push(((c1.0, c1.1, up2.0, up2.1), w * m as f64));
        }
        let up1 = tree_up((k.0, k.1));
        for (c2, m) in tree_down(self.q, (k.2, k.3)) {
            v.push(((up1.0, up1.1, c2.0, c2.1), w * m as f64));
        }
        merge(v)
    }
}

/// Hyperoctahedral orbits in Z^d (absolute values sorted decreasingly).
pub struct LatticeOrbits {
    pub d: u32,
    pub alpha: f64,
}

impl LatticeOrbits {
    pub fn canonical(v: &[i64]) -> Vec<u32> {
        let mut a: Vec<u32> = v.iter().map(|x| x.unsigned_abs() as u32).collect();
        a.sort_unstable_by(|x, y| y.cmp(x));
        a
    }
}

impl Lumping for LatticeOrbits {
    type Key = Vec<u32>;
    fn root(&self) -> Vec<u32> {
        vec![0; self.d as usize]
    }
    fn class_of(&self, x: &Element) -> Vec<u32> {
        match x {
            Element::Abelian(v) => Self::canonical(v),
            _ => panic!("lattice lumping needs a vector"),
        }
    }
    fn representative(&self, k: &Vec<u32>) -> Element {
        Element::Abelian(k.iter().map(|&x| x as i64).collect())
    }
    fn size(&self, k: &Vec<u32>) -> f64 {
        let mut perms: f64 = (1..=k.len()).map(|x| x as f64).product();
        let mut i = 0;
        while i < k.len() {
            let mut j = i;
            while j < k.len() && k[j] == k[i] {
                j += 1;
            }
            perms /= (1..=(j - i)).map(|x| x as f64).product::<f64>();
            i = j;
        }
        perms * 2f64.powi(k.iter().filter(|&&x| x > 0).count() as i32)
    }
    fn length(&self, k: &Vec<u32>) -> u32 {
        k.iter().sum()
    }
    fn moves(&self, k: &Vec<u32>) -> Vec<(Vec<u32>, f64)> {
        let w = (1.0 - self.alpha) / (2 * self.d) as f64;
        let mut v = Vec::with_capacity(2 * k.len() + 1);
        if self.alpha > 0.0 {
            v.push((k.clone(), self.alpha));
        }
        let base: Vec<i64> = k.iter().map(|&x| x as i64).collect();
        for i in 0..k.len() {
            for s in [1, -1] {
                let mut y = base.clone();
                y[i] += s;
                v.push((Self::canonical(&y), w));
            }
        }
        merge(v)
    }
}

/// Result of one run of a lumped chain.
pub struct ChainRun<K> {
    pub keys: Vec<K>,
    /// `sum_{k <= N} r^k p_k` per class.
    pub green: Vec<f64>,
    /// The last two terms `r^N p_N` and `r^{N-1} p_{N-1}` per class.
    pub last: Vec<f64>,
    pub prev: Vec<f64>,
    /// `r^k p_k(e, e)` for `k = 0..=N`.
    pub diagonal: Vec<f64>,
    pub order: usize,
    /// Mass removed by pruning, summed over all steps.
    pub dropped: f64,
}

impl<K: Eq + Hash + Clone> ChainRun<K> {
    pub fn index(&self) -> HashMap<K, usize> {
        self.keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect()
    }
}

const PAR_MIN: usize = 8192;

struct ChainState<K> {
    keys: Vec<K>,
    index: HashMap<K, u32>,
    lens: Vec<u32>,
    log_sizes: Vec<f64>,
    moves: Vec<Option<Box<[(u32, f64)]>>>,
    cur: Vec<f64>,
    green: Vec<f64>,
    mark: Vec<bool>,
}

impl<K: Clone + Eq + Hash + Send + Sync> ChainState<K> {
    fn intern<L: Lumping<Key = K>>(&mut self, l: &L, key: K) -> u32 {
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.lens.push(l.length(&key));
        self.log_sizes.push(l.log_size(&key));
        self.index.insert(key.clone(), id);
        self.keys.push(key);
        self.moves.push(None);
        self.cur.push(0.0);
        self.green.push(0.0);
        self.mark.push(false);
        id
    }

    fn ensure<L: Lumping<Key = K>>(&mut self, l: &L, r: f64, ids: &[u32]) {
        let need: Vec<u32> = ids
            .iter()
            .copied()
            .filter(|&i| self.moves[i as usize].is_none())
            .collect();
        let keys = &self.keys;
        let computed: Vec<Vec<(K, f64)>> = need
            .par_iter()
            .with_min_len(256)
            .map(|&i| l.moves(&keys[i as usize]))
            .collect();
        for (&i, mv) in need.iter().zip(computed) {
            let ids: Box<[(u32, f64)]> = mv.into_iter().map(|(key, w)| (self.intern(l, key), w * r)).collect();
            self.moves[i as usize] = Some(ids);
        }
    }
}

/// Runs `N` steps of the `r`-scaled chain. Classes longer than `max_len`
/// are dropped once they can no longer reach length `max_len` in the
/// remaining steps, which leaves every class of length `<= max_len` exact.
/// With `prune > 0` classes whose total mass falls below `prune` are also
/// dropped; the removed mass is reported.
pub fn run_chain<L: Lumping>(l: &L, r: f64, max_len: u32, order: usize, prune: f64) -> ChainRun<L::Key> {
    let mut st = ChainState {
        keys: Vec::new(),
        index: HashMap::new(),
        lens: Vec::new(),
        log_sizes: Vec::new(),
        moves: Vec::new(),
        cur: Vec::new(),
        green: Vec::new(),
        mark: Vec::new(),
    };
    let root = st.intern(l, l.root());
    st.cur[root as usize] = 1.0;
    st.green[root as usize] = 1.0;
    let mut diagonal = vec![1.0];
    let mut live: Vec<u32> = vec![root];
    let mut prev_live: Vec<(u32, f64)> = Vec::new();
    let mut dropped = 0.0;
    let log_prune = prune.ln();
    for k in 0..order {
        let remaining = (order - k - 1) as u64;
        let bound = ((k + 1) as u64).min(max_len as u64 + remaining) as u32;
        st.ensure(l, r, &live);
        // the class graph is symmetric, so the next support lies among the
        // neighbours of the live classes
        let mut active: Vec<u32> = Vec::new();
        for &i in &live {
            for &(j, _) in st.moves[i as usize].as_deref().expect("moves computed") {
                if !st.mark[j as usize] && st.lens[j as usize] <= bound {
                    st.mark[j as usize] = true;
                    active.push(j);
                }
            }
        }
        for &j in &active {
            st.mark[j as usize] = false;
        }
        st.ensure(l, r, &active);
        let (moves, cur) = (&st.moves, &st.cur);
        let pull = |&i: &u32| -> f64 {
            let mv = moves[i as usize].as_ref().expect("moves computed");
            mv.iter().map(|&(j, w)| w * cur[j as usize]).sum()
        };
        let vals: Vec<f64> = if active.len() >= PAR_MIN {
            active.par_iter().with_min_len(PAR_MIN / 4).map(pull).collect()
        } else {
            active.iter().map(pull).collect()
        };
        prev_live.clear();
        for &i in &live {
            prev_live.push((i, st.cur[i as usize]));
            st.cur[i as usize] = 0.0;
        }
        live.clear();
        for (&i, v) in active.iter().zip(vals) {
            if v == 0.0 {
                continue;
            }
            let log_mass = v.ln() + st.log_sizes[i as usize];
            if prune > 0.0 && log_mass < log_prune {
                dropped += log_mass.exp();
                continue;
            }
            st.cur[i as usize] = v;
            st.green[i as usize] += v;
            live.push(i);
        }
        diagonal.push(st.cur[root as usize]);
    }
    let mut last = vec![0.0; st.keys.len()];
    let mut before = vec![0.0; st.keys.len()];
    for &i in &live {
        if st.lens[i as usize] <= max_len {
            last[i as usize] = st.cur[i as usize];
        }
    }
    for &(i, v) in &prev_live {
        if st.lens[i as usize] <= max_len {
            before[i as usize] = v;
        }
    }
    ChainRun {
        keys: st.keys,
        green: st.green,
        last,
        prev: before,
        diagonal,
        order,
        dropped,
    }
}

/// The lumping that matches a standard measure, if there is one.
pub enum AnyLumping {
    Radial(Radial),
    Product(ProductRadial),
    Dl(DlClasses),
    Lattice(LatticeOrbits),
}

impl AnyLumping {
    pub fn for_measure(m: &Measure) -> Option<AnyLumping> {
        match (&m.group, &m.kind) {
            (GroupSpec::RegularTree(l), MeasureKind::TreeLazy) => Some(AnyLumping::Radial(Radial { l: *l })),
            (GroupSpec::TreeProduct(l1, l2), MeasureKind::ProductMix { alpha1 }) => {
                Some(AnyLumping::Product(ProductRadial {
                    l1: *l1,
                    l2: *l2,
                    alpha1: to_f64(alpha1),
                }))
            }
            (GroupSpec::DiestelLeader(q), MeasureKind::DlSrw) => Some(AnyLumping::Dl(DlClasses { q: *q })),
            (GroupSpec::FreeAbelian(d), MeasureKind::LazySrw { alpha }) => Some(AnyLumping::Lattice(LatticeOrbits {
                d: *d,
                alpha: to_f64(alpha),
            })),
            _ => None,
        }
    }
}

/// Per-class view of a chain run, erased over the key type.
pub struct ClassTable {
    pub lengths: Vec<u32>,
    pub sizes: Vec<f64>,
    pub green: Vec<f64>,
    pub last: Vec<f64>,
    pub prev: Vec<f64>,
    pub diagonal: Vec<f64>,
    pub order: usize,
    pub dropped: f64,
}

fn table<L: Lumping>(l: &L, run: ChainRun<L::Key>, max_len: u32) -> ClassTable {
    let mut t = ClassTable {
        lengths: Vec::new(),
        sizes: Vec::new(),
        green: Vec::new(),
        last: Vec::new(),
        prev: Vec::new(),
        diagonal: run.diagonal,
        order: run.order,
        dropped: run.dropped,
    };
    for (i, k) in run.keys.iter().enumerate() {
        let len = l.length(k);
        if len <= max_len {
            t.lengths.push(len);
            t.sizes.push(l.size(k));
            t.green.push(run.green[i]);
            t.last.push(run.last[i]);
            t.prev.push(run.prev[i]);
        }
    }
    t
}

impl AnyLumping {
    pub fn class_table(&self, r: f64, max_len: u32, order: usize, prune: f64) -> ClassTable {
        match self {
            AnyLumping::Radial(l) => table(l, run_chain(l, r, max_len, order, prune), max_len),
            AnyLumping::Product(l) => table(l, run_chain(l, r, max_len, order, prune), max_len),
            AnyLumping::Dl(l) => table(l, run_chain(l, r, max_len, order, prune), max_len),
            AnyLumping::Lattice(l) => table(l, run_chain(l, r, max_len, order, prune), max_len),
        }
    }

    /// Green partial sums at the given elements, plus the last two terms.
    pub fn at_elements(&self, r: f64, targets: &[Element], order: usize, prune: f64) -> (Vec<[f64; 3]>, Vec<f64>) {
        fn go<L: Lumping>(l: &L, r: f64, targets: &[Element], order: usize, prune: f64) -> (Vec<[f64; 3]>, Vec<f64>) {
            let keys: Vec<L::Key> = targets.iter().map(|x| l.class_of(x)).collect();
            let max_len = keys.iter().map(|k| l.length(k)).max().unwrap_or(0);
            let run = run_chain(l, r, max_len, order, prune);
            let idx = run.index();
            let vals = keys
                .iter()
                .map(|k| match idx.get(k) {
                    Some(&i) => [run.green[i], run.last[i], run.prev[i]],
                    None => [0.0; 3],
                })
                .collect();
            (vals, run.diagonal)
        }
        match self {
            AnyLumping::Radial(l) => go(l, r, targets, order, prune),
            AnyLumping::Product(l) => go(l, r, targets, order, prune),
            AnyLumping::Dl(l) => go(l, r, targets, order, prune),
            AnyLumping::Lattice(l) => go(l, r, targets, order, prune),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{ball_layers, GroupSpec, DEFAULT_BUDGET};
    use crate::kernels::measure::{q, standard_measure, MeasureKind};
    use num_traits::Zero;

    fn check_moves<L: Lumping>(l: &L, m: &Measure, radius: u32) {
        let layers = ball_layers(&m.group, radius, DEFAULT_BUDGET).unwrap();
        let mut counts: HashMap<L::Key, f64> = HashMap::new();
        for x in layers.iter().flatten() {
            let k = l.class_of(x);
            assert_eq!(l.length(&k), m.group.word_length(x));
            *counts.entry(k.clone()).or_insert(0.0) += 1.0;
            let mut a = moves_by_representative(l, m, &k);
            let mut b = l.moves(&k);
            a.sort_by(|x, y| x.0.cmp(&y.0));
            b.sort_by(|x, y| x.0.cmp(&y.0));
            assert_eq!(a.len(), b.len(), "class {k:?}");
            for (p, s) in a.iter().zip(&b) {
                assert_eq!(p.0, s.0);
                assert!((p.1 - s.1).abs() < 1e-15);
            }
            // the move table must not depend on the chosen class member
            let mut c = Vec::new();
            for (s, w) in &m.support {
                c.push((l.class_of(&m.group.mul(x, s)), to_f64(w)));
            }
            let c = merge(c);
            assert_eq!(c.len(), b.len());
        }
        for (k, n) in counts {
            if l.length(&k) <= radius {
                assert!(
                    (n - l.size(&k)).abs() <= 1e-12 * n,
                    "size of class {k:?}: {n} vs {}",
                    l.size(&k)
                );
            }
        }
    }

    #[test]
    fn radial_moves_match_representatives() {
        let m = standard_measure(&GroupSpec::RegularTree(4), MeasureKind::TreeLazy).unwrap();
        check_moves(&Radial { l: 4 }, &m, 5);
    }

    #[test]
    fn product_moves_match_representatives() {
        let m = standard_measure(
            &GroupSpec::TreeProduct(4, 3),
            MeasureKind::ProductMix { alpha1: q(1, 3) },
        )
        .unwrap();
        check_moves(
            &ProductRadial {
                l1: 4,
                l2: 3,
                alpha1: 1.0 / 3.0,
            },
            &m,
            4,
        );
    }

    #[test]
    fn dl_moves_match_representatives() {
        for qq in [2, 3] {
            let m = standard_measure(&GroupSpec::DiestelLeader(qq), MeasureKind::DlSrw).unwrap();
            check_moves(&DlClasses { q: qq }, &m, 5);
        }
    }

    #[test]
    fn lattice_moves_match_representatives() {
        let m = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: q(1, 2) }).unwrap();
        check_moves(&LatticeOrbits { d: 3, alpha: 0.5 }, &m, 5);
        let m = standard_measure(&GroupSpec::FreeAbelian(3), MeasureKind::LazySrw { alpha: Zero::zero() }).unwrap();
        check_moves(&LatticeOrbits { d: 3, alpha: 0.0 }, &m, 4);
    }

    #[test]
    fn lumped_chain_matches_element_walk() {
        use crate::kernels::convolve::ElementWalk;
        let cases: Vec<(Measure, AnyLumping)> = vec![
            {
                let m = standard_measure(&GroupSpec::DiestelLeader(2), MeasureKind::DlSrw).unwrap();
                let l = AnyLumping::for_measure(&m).unwrap();
                (m, l)
            },
            {
                let m = standard_measure(
                    &GroupSpec::TreeProduct(3, 4),
                    MeasureKind::ProductMix { alpha1: q(2, 5) },
                )
                .unwrap();
                let l = AnyLumping::for_measure(&m).unwrap();
                (m, l)
            },
        ];
        for (m, l) in cases {
            let r = 0.9;
            let order = 10;
            let mut w = ElementWalk::<f64>::new(&m, &r);
            let mut green: HashMap<Element, f64> = HashMap::new();
            green.insert(m.group.identity(), 1.0);
            for _ in 0..order {
                w.step().unwrap();
                for &i in w.active() {
                    *green.entry(w.element(i).clone()).or_insert(0.0) += w.value_id(i);
                }
            }
            let targets: Vec<Element> = ball_layers(&m.group, 3, DEFAULT_BUDGET)
                .unwrap()
                .into_iter()
                .flatten()
                .collect();
            let (vals, _) = l.at_elements(r, &targets, order, 0.0);
            for (x, v) in targets.iter().zip(vals) {
                let g = green.get(x).copied().unwrap_or(0.0);
                assert!((g - v[0]).abs() < 1e-13, "{x}: {g} vs {}", v[0]);
            }
        }
    }
}
