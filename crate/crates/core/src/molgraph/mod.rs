//! Molecular graphs: SMILES and SMARTS parsing, element bookkeeping,
//! substructure search, maximum common substructure, and path fingerprints.
//!
//! Everything here is immutable after construction and safe to share
//! between threads.

mod element;
mod fingerprint;
mod grammar;
mod matching;
mod mcs;
mod smarts;
mod smiles;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use element::Element;
pub use fingerprint::{tanimoto, Fingerprint, FINGERPRINT_WIDTH};
pub use matching::match_pattern;
pub use mcs::{mcs, mcs_within, McsOptions, McsResult, DEFAULT_MCS_BUDGET, DEFAULT_MCS_CAP};
pub use smarts::{parse_smarts, AtomExpr, AtomPrimitive, BondExpr, Pattern};
pub use smiles::parse_smiles;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MolError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown token {token:?} at position {position}")]
    UnknownToken { position: usize, token: String },
    #[error("unclosed branch opened at position {position}")]
    UnclosedBranch { position: usize },
    #[error("unmatched ring closure {ring}")]
    UnmatchedRingClosure { ring: u32 },
    #[error("valence exceeded on atom {atom} ({element})")]
    ValenceUnderflow { atom: usize, element: Element },
    #[error("invalid bond at position {position}")]
    InvalidBond { position: usize },
    #[error("unsupported SMARTS primitive {0:?}")]
    UnsupportedPrimitive(String),
    #[error("fingerprint width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to the bonded valence sum. Aromatic bonds count one;
    /// the extra pi electron is handled during hydrogen perception.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    pub aromatic: bool,
    /// Hydrogen count written inside a bracket atom (`[NH4+]` carries 4).
    pub explicit_h: u8,
    /// True for bracket atoms, which never receive implicit hydrogens.
    pub bracket: bool,
    implicit_h: u8,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom { element, charge: 0, aromatic: false, explicit_h: 0, bracket: false, implicit_h: 0 }
    }

    pub fn implicit_h(&self) -> u8 {
        self.implicit_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// Features that were read but deliberately ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseFlags {
    pub stereo_ignored: bool,
    pub isotope_ignored: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<(usize, usize)>>,
    flags: ParseFlags,
}

impl Molecule {
    /// Builds a molecule, validating bond endpoints and perceiving implicit
    /// hydrogens on non-bracket atoms from the default valence table.
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>, flags: ParseFlags) -> Result<Self, MolError> {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= atoms.len() || bond.b >= atoms.len() || bond.a == bond.b {
                return Err(MolError::InvalidBond { position: i });
            }
            if adjacency[bond.a].iter().any(|&(n, _)| n == bond.b) {
                return Err(MolError::InvalidBond { position: i });
            }
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        let mut mol = Molecule { atoms, bonds, adjacency, flags };
        for i in 0..mol.atoms.len() {
            let h = mol.perceive_implicit_h(i)?;
            mol.atoms[i].implicit_h = h;
        }
        Ok(mol)
    }

    fn perceive_implicit_h(&self, i: usize) -> Result<u8, MolError> {
        let atom = &self.atoms[i];
        if atom.bracket {
            return Ok(0);
        }
        let valences = atom.element.default_valences();
        if valences.is_empty() {
            return Ok(0);
        }
        let sum: u8 = self.adjacency[i].iter().map(|&(_, b)| self.bonds[b].order.valence()).sum();
        let donates_pi = atom.aromatic
            && matches!(atom.element, Element::B | Element::C | Element::N | Element::P);
        if donates_pi {
            if let Some(&v) = valences.iter().find(|&&v| v >= sum + 1) {
                return Ok(v - sum - 1);
            }
        }
        valences
            .iter()
            .find(|&&v| v >= sum)
            .map(|&v| v - sum)
            .ok_or(MolError::ValenceUnderflow { atom: i, element: atom.element })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn flags(&self) -> ParseFlags {
        self.flags
    }

    /// `(neighbor atom, bond index)` pairs.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<BondOrder> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, bi)| self.bonds[bi].order)
    }

    /// Implicit, bracket, and attached explicit hydrogen atoms.
    pub fn total_h(&self, atom: usize) -> u32 {
        let a = &self.atoms[atom];
        let attached = self.adjacency[atom]
            .iter()
            .filter(|&&(n, _)| self.atoms[n].element == Element::H)
            .count() as u32;
        a.implicit_h as u32 + a.explicit_h as u32 + attached
    }

    pub fn heavy_atom_count(&self) -> usize {
        self.atoms.iter().filter(|a| a.element != Element::H).count()
    }

    pub fn net_charge(&self) -> i32 {
        self.atoms.iter().map(|a| a.charge as i32).sum()
    }

    pub fn element_counts(&self) -> ElementCounts {
        let mut counts = ElementCounts::default();
        for atom in &self.atoms {
            counts.add_element(atom.element, 1);
            let h = atom.implicit_h as i64 + atom.explicit_h as i64;
            if h > 0 {
                counts.add_element(Element::H, h);
            }
        }
        counts
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::of(self, FINGERPRINT_WIDTH)
    }

    /// Cheap identity used for deduplication: the sorted multiset of atom
    /// environments plus the path fingerprint. Not a full canonical form, so
    /// distinct molecules can collide.
    pub fn key(&self) -> MoleculeKey {
        let mut envs: Vec<(u8, i8, u8, Vec<u8>)> = (0..self.atoms.len())
            .map(|i| {
                let mut orders: Vec<u8> =
                    self.adjacency[i].iter().map(|&(_, b)| self.bonds[b].order.code()).collect();
                orders.sort_unstable();
                let a = &self.atoms[i];
                (a.element.atomic_number(), a.charge, self.degree(i) as u8, orders)
            })
            .collect();
        envs.sort();
        MoleculeKey { envs, fingerprint: self.fingerprint().words().to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoleculeKey {
    envs: Vec<(u8, i8, u8, Vec<u8>)>,
    fingerprint: Vec<u64>,
}

/// Pairs of `(index in A, index in B)`, injective in both directions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomMapping {
    pub pairs: Vec<(usize, usize)>,
}

impl AtomMapping {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Mapped atoms of the second graph, sorted.
    pub fn target_atoms(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        v.sort_unstable();
        v
    }

    pub fn is_injective(&self) -> bool {
        let mut a: Vec<usize> = self.pairs.iter().map(|p| p.0).collect();
        let mut b: Vec<usize> = self.pairs.iter().map(|p| p.1).collect();
        a.sort_unstable();
        b.sort_unstable();
        a.windows(2).all(|w| w[0] != w[1]) && b.windows(2).all(|w| w[0] != w[1])
    }
}

/// Signed per-element atom counts. Zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementCounts(BTreeMap<Element, i64>);

impl ElementCounts {
    pub fn add_element(&mut self, element: Element, n: i64) {
        let entry = self.0.entry(element).or_insert(0);
        *entry += n;
        if *entry == 0 {
            self.0.remove(&element);
        }
    }

    pub fn get(&self, element: Element) -> i64 {
        self.0.get(&element).copied().unwrap_or(0)
    }

    pub fn scaled(&self, k: i64) -> ElementCounts {
        let mut out = ElementCounts::default();
        for (&e, &n) in &self.0 {
            out.add_element(e, n * k);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Element, i64)> + '_ {
        self.0.iter().map(|(&e, &n)| (e, n))
    }

    pub fn elements(&self) -> impl Iterator<Item = Element> + '_ {
        self.0.keys().copied()
    }

    pub fn total_atoms(&self) -> i64 {
        self.0.values().sum()
    }

    pub fn all_non_negative(&self) -> bool {
        self.0.values().all(|&n| n >= 0)
    }

    /// Map keyed by element symbol, for reports.
    pub fn to_symbol_map(&self) -> BTreeMap<String, i64> {
        self.0.iter().map(|(e, &n)| (e.symbol().to_string(), n)).collect()
    }
}

impl Serialize for ElementCounts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_symbol_map().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ElementCounts {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, i64>::deserialize(deserializer)?;
        map.into_iter()
            .map(|(sym, n)| {
                Element::from_symbol(&sym)
                    .map(|e| (e, n))
                    .ok_or_else(|| serde::de::Error::custom(format!("unknown element {sym:?}")))
            })
            .collect()
    }
}

impl FromIterator<(Element, i64)> for ElementCounts {
    fn from_iter<T: IntoIterator<Item = (Element, i64)>>(iter: T) -> Self {
        let mut out = ElementCounts::default();
        for (e, n) in iter {
            out.add_element(e, n);
        }
        out
    }
}

impl AddAssign<&ElementCounts> for ElementCounts {
    fn add_assign(&mut self, rhs: &ElementCounts) {
        for (e, n) in rhs.iter() {
            self.add_element(e, n);
        }
    }
}

impl Add<&ElementCounts> for &ElementCounts {
    type Output = ElementCounts;
    fn add(self, rhs: &ElementCounts) -> ElementCounts {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&ElementCounts> for &ElementCounts {
    type Output = ElementCounts;
    fn sub(self, rhs: &ElementCounts) -> ElementCounts {
        let mut out = self.clone();
        for (e, n) in rhs.iter() {
            out.add_element(e, -n);
        }
        out
    }
}

/// Hill-order formula (C, H, then alphabetical); negative counts keep their sign.
impl fmt::Display for ElementCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("0");
        }
        let mut order: Vec<Element> = self.0.keys().copied().collect();
        let has_c = self.0.contains_key(&Element::C);
        order.sort_by_key(|e| {
            let rank = match (*e, has_c) {
                (Element::C, true) => 0,
                (Element::H, true) => 1,
                _ => 2,
            };
            (rank, e.symbol())
        });
        for e in order {
            let n = self.0[&e];
            if n == 1 {
                write!(f, "{}", e.symbol())?;
            } else {
                write!(f, "{}{}", e.symbol(), n)?;
            }
        }
        Ok(())
    }
}
