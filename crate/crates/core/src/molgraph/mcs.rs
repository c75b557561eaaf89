//! Maximum common connected substructure by exact backtracking.
//!
//! A common substructure here is a connected atom set of `a` mapped
//! injectively onto `b` such that elements agree and, for every pair of
//! mapped atoms, the bond between them (or its absence) is identical in both
//! graphs. Each connected set is enumerated once, rooted at its lowest atom
//! index, with a label-count bound for pruning.

use std::collections::{BTreeMap, VecDeque};

use super::{AtomMapping, Molecule};

pub const DEFAULT_MCS_CAP: usize = 24;
pub const DEFAULT_MCS_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McsOptions {
    /// Molecules larger than this are still searched, but the result is
    /// flagged approximate.
    pub cap: usize,
    /// Maximum number of search-node expansions.
    pub budget: u64,
}

impl Default for McsOptions {
    fn default() -> Self {
        McsOptions { cap: DEFAULT_MCS_CAP, budget: DEFAULT_MCS_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McsResult {
    /// Pairs of `(atom in a, atom in b)`, sorted by the `a` index.
    pub mapping: AtomMapping,
    /// Set when the budget ran out or a molecule exceeded the cap.
    pub approximate: bool,
    pub expansions: u64,
}

impl McsResult {
    pub fn size(&self) -> usize {
        self.mapping.len()
    }
}

struct Search<'a> {
    a: &'a Molecule,
    b: &'a Molecule,
    label_a: Vec<u8>,
    label_b: Vec<u8>,
    image: Vec<Option<usize>>,
    used_b: Vec<bool>,
    excluded: Vec<bool>,
    stack: Vec<(usize, usize)>,
    best: Vec<(usize, usize)>,
    limit: usize,
    budget: u64,
    expansions: u64,
    exhausted: bool,
}

impl Search<'_> {
    fn consistent(&self, w: usize, x: usize) -> bool {
        self.stack
            .iter()
            .all(|&(u, v)| self.a.bond_between(w, u) == self.b.bond_between(x, v))
    }

    fn bound(&self) -> usize {
        let mut seen = vec![false; self.a.atom_count()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &(u, _) in &self.stack {
            seen[u] = true;
            queue.push_back(u);
        }
        let mut reach: BTreeMap<u8, usize> = BTreeMap::new();
        while let Some(u) = queue.pop_front() {
            for &(n, _) in self.a.neighbors(u) {
                if !seen[n] && !self.excluded[n] {
                    seen[n] = true;
                    *reach.entry(self.label_a[n]).or_default() += 1;
                    queue.push_back(n);
                }
            }
        }
        let extra: usize = reach
            .iter()
            .map(|(&label, &count)| {
                let free = (0..self.b.atom_count())
                    .filter(|&x| !self.used_b[x] && self.label_b[x] == label)
                    .count();
                count.min(free)
            })
            .sum();
        self.stack.len() + extra
    }

    fn done(&self) -> bool {
        self.exhausted || self.best.len() >= self.limit
    }

    fn map(&mut self, u: usize, v: usize) {
        self.image[u] = Some(v);
        self.used_b[v] = true;
        self.stack.push((u, v));
    }

    fn unmap(&mut self) {
        let (u, v) = self.stack.pop().unwrap();
        self.image[u] = None;
        self.used_b[v] = false;
    }

    fn grow(&mut self) {
        self.expansions += 1;
        if self.expansions > self.budget {
            self.exhausted = true;
            return;
        }
        if self.stack.len() > self.best.len() {
            self.best = self.stack.clone();
        }
        if self.done() {
            return;
        }
        let frontier = self
            .stack
            .iter()
            .flat_map(|&(u, _)| self.a.neighbors(u).iter().map(|&(n, _)| n))
            .filter(|&n| self.image[n].is_none() && !self.excluded[n])
            .min();
        let Some(w) = frontier else { return };
        if self.bound() <= self.best.len() {
            return;
        }
        for x in 0..self.b.atom_count() {
            if self.used_b[x] || self.label_b[x] != self.label_a[w] || !self.consistent(w, x) {
                continue;
            }
            self.map(w, x);
            self.grow();
            self.unmap();
            if self.done() {
                return;
            }
        }
        self.excluded[w] = true;
        self.grow();
        self.excluded[w] = false;
    }
}

/// Maximum common connected substructure of `a` and `b`.
pub fn mcs(a: &Molecule, b: &Molecule, options: McsOptions) -> McsResult {
    mcs_within(a, b, &vec![true; a.atom_count()], &vec![true; b.atom_count()], options)
}

/// Like [`mcs`], restricted to the atoms flagged in `allow_a` and `allow_b`.
pub fn mcs_within(a: &Molecule, b: &Molecule, allow_a: &[bool], allow_b: &[bool], options: McsOptions) -> McsResult {
    let over_cap = a.atom_count() > options.cap || b.atom_count() > options.cap;
    let open_a = allow_a.iter().filter(|&&x| x).count();
    let open_b = allow_b.iter().filter(|&&x| x).count();
    let label = |m: &Molecule| m.atoms().iter().map(|x| x.element.atomic_number()).collect::<Vec<_>>();
    let mut s = Search {
        a,
        b,
        label_a: label(a),
        label_b: label(b),
        image: vec![None; a.atom_count()],
        used_b: allow_b.iter().map(|&x| !x).collect(),
        excluded: allow_a.iter().map(|&x| !x).collect(),
        stack: Vec::new(),
        best: Vec::new(),
        limit: open_a.min(open_b),
        budget: options.budget,
        expansions: 0,
        exhausted: false,
    };
    'seeds: for u in 0..a.atom_count() {
        if !allow_a[u] {
            continue;
        }
        for v in 0..b.atom_count() {
            if s.used_b[v] || s.label_a[u] != s.label_b[v] {
                continue;
            }
            s.map(u, v);
            s.grow();
            s.unmap();
            if s.done() {
                break 'seeds;
            }
        }
        s.excluded[u] = true;
    }
    let mut pairs = s.best;
    pairs.sort_unstable();
    McsResult { mapping: AtomMapping { pairs }, approximate: s.exhausted || over_cap, expansions: s.expansions }
}
