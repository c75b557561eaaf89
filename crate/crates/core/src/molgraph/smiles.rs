//! SMILES reader for the organic subset, bracket atoms, branches, ring
//! closures (`0`-`9`, `%nn`) and explicit bond orders. Stereo marks and
//! isotopes are consumed and ignored; the molecule's [`ParseFlags`] record
//! that they were present.

use super::grammar::{parse_graph, Dialect};
use super::{Atom, Bond, BondOrder, Element, MolError, Molecule, ParseFlags};

struct SmilesDialect {
    flags: ParseFlags,
}

/// Two-letter organic-subset symbols must be tried before one-letter ones.
const ORGANIC: [(&str, Element, bool); 16] = [
    ("Cl", Element::CL, false),
    ("Br", Element::BR, false),
    ("B", Element::B, false),
    ("C", Element::C, false),
    ("N", Element::N, false),
    ("O", Element::O, false),
    ("P", Element::P, false),
    ("S", Element::S, false),
    ("F", Element::F, false),
    ("I", Element::I, false),
    ("b", Element::B, true),
    ("c", Element::C, true),
    ("n", Element::N, true),
    ("o", Element::O, true),
    ("p", Element::P, true),
    ("s", Element::S, true),
];

pub(crate) fn read_organic(text: &str, pos: usize) -> Option<(Element, bool, usize)> {
    let rest = text.get(pos..)?;
    ORGANIC
        .iter()
        .find(|(sym, _, _)| rest.starts_with(sym))
        .map(|&(sym, e, aromatic)| (e, aromatic, sym.len()))
}

/// Reads an element symbol inside brackets: two-letter symbols first,
/// then single uppercase letters, then aromatic lowercase symbols.
pub(crate) fn read_bracket_symbol(s: &str) -> Option<(Element, bool, usize)> {
    let b = s.as_bytes();
    let first = *b.first()?;
    if first.is_ascii_uppercase() {
        if let Some(&second) = b.get(1) {
            if second.is_ascii_lowercase() {
                if let Some(e) = Element::from_symbol(&s[..2]) {
                    return Some((e, false, 2));
                }
            }
        }
        return Element::from_symbol(&s[..1]).map(|e| (e, false, 1));
    }
    for (sym, e) in [("se", "Se"), ("as", "As")] {
        if s.starts_with(sym) {
            return Element::from_symbol(e).map(|e| (e, true, 2));
        }
    }
    match first {
        b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
            let upper = (first as char).to_ascii_uppercase().to_string();
            Element::from_symbol(&upper).map(|e| (e, true, 1))
        }
        _ => None,
    }
}

/// Reads `+`, `++`, `+2`, `-`, `--`, `-3`. Returns charge and bytes consumed.
pub(crate) fn read_charge(b: &[u8]) -> Option<(i8, usize)> {
    let sign: i8 = match b.first()? {
        b'+' => 1,
        b'-' => -1,
        _ => return None,
    };
    let sym = b[0];
    let mut i = 1;
    if b.get(1).is_some_and(|c| c.is_ascii_digit()) {
        let mut n: i32 = 0;
        while let Some(d) = b.get(i).filter(|c| c.is_ascii_digit()) {
            n = n * 10 + (d - b'0') as i32;
            if n > 15 {
                return None;
            }
            i += 1;
        }
        return Some((sign * n as i8, i));
    }
    while b.get(i) == Some(&sym) {
        i += 1;
        if i > 15 {
            return None;
        }
    }
    Some((sign * i as i8, i))
}

impl Dialect for SmilesDialect {
    type Atom = Atom;
    type Bond = BondOrder;

    fn organic(&mut self, text: &str, pos: usize) -> Result<Option<(Atom, usize)>, MolError> {
        Ok(read_organic(text, pos).map(|(element, aromatic, len)| {
            let mut atom = Atom::new(element);
            atom.aromatic = aromatic;
            (atom, len)
        }))
    }

    fn bracket(&mut self, inner: &str, pos: usize) -> Result<Atom, MolError> {
        let b = inner.as_bytes();
        let bad = |i: usize| {
            let token = inner.get(i..).and_then(|s| s.chars().next()).map(String::from);
            MolError::UnknownToken { position: pos + i, token: token.unwrap_or_else(|| "]".into()) }
        };
        let mut i = 0;
        while b.get(i).is_some_and(|c| c.is_ascii_digit()) {
            self.flags.isotope_ignored = true;
            i += 1;
        }
        let (element, aromatic, len) = inner.get(i..).and_then(read_bracket_symbol).ok_or_else(|| bad(i))?;
        i += len;
        let mut atom = Atom::new(element);
        atom.aromatic = aromatic;
        atom.bracket = true;
        if b.get(i) == Some(&b'@') {
            self.flags.stereo_ignored = true;
            while b.get(i) == Some(&b'@') {
                i += 1;
            }
            // @TH1, @SP2, @OH12 ... : letters then digits
            while b.get(i).is_some_and(|c| c.is_ascii_uppercase() && *c != b'H') {
                i += 1;
            }
            while b.get(i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
        }
        if b.get(i) == Some(&b'H') {
            i += 1;
            let mut n = 1u8;
            if let Some(d) = b.get(i).filter(|c| c.is_ascii_digit()) {
                n = d - b'0';
                i += 1;
            }
            atom.explicit_h = n;
        }
        if let Some((charge, len)) = read_charge(&b[i..]) {
            atom.charge = charge;
            i += len;
        }
        if b.get(i) == Some(&b':') {
            i += 1;
            let start = i;
            while b.get(i).is_some_and(|c| c.is_ascii_digit()) {
                i += 1;
            }
            if i == start {
                return Err(bad(start));
            }
        }
        if i != b.len() {
            return Err(bad(i));
        }
        Ok(atom)
    }

    fn bond_symbol(&mut self, c: u8) -> Option<BondOrder> {
        match c {
            b'-' => Some(BondOrder::Single),
            b'=' => Some(BondOrder::Double),
            b'#' => Some(BondOrder::Triple),
            b':' => Some(BondOrder::Aromatic),
            b'/' | b'\\' => {
                self.flags.stereo_ignored = true;
                Some(BondOrder::Single)
            }
            _ => None,
        }
    }

    fn implicit_bond(&self, a: &Atom, b: &Atom) -> BondOrder {
        if a.aromatic && b.aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }
}

/// Parses a SMILES string into a [`Molecule`].
pub fn parse_smiles(text: &str) -> Result<Molecule, MolError> {
    let mut dialect = SmilesDialect { flags: ParseFlags::default() };
    let graph = parse_graph(text, &mut dialect)?;
    let bonds = graph.bonds.into_iter().map(|(a, b, order)| Bond { a, b, order }).collect();
    Molecule::new(graph.atoms, bonds, dialect.flags)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ethanol_chain() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bonds().len(), 2);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Single));
        let syms: Vec<_> = m.atoms().iter().map(|a| a.element.symbol()).collect();
        assert_eq!(syms, ["C", "C", "O"]);
    }

    #[test]
    fn cyclopropane_ring() {
        let m = parse_smiles("C1CC1").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bonds().len(), 3);
        assert!((0..3).all(|i| m.degree(i) == 2));
    }

    #[test]
    fn unclosed_branch() {
        assert!(matches!(parse_smiles("C(C"), Err(MolError::UnclosedBranch { .. })));
    }

    #[test]
    fn error_paths() {
        assert_eq!(parse_smiles(""), Err(MolError::EmptyInput));
        assert!(matches!(parse_smiles("C1CC"), Err(MolError::UnmatchedRingClosure { ring: 1 })));
        assert!(matches!(parse_smiles("CQ"), Err(MolError::UnknownToken { position: 1, .. })));
        assert!(matches!(parse_smiles("C)"), Err(MolError::UnknownToken { position: 1, .. })));
        assert!(matches!(parse_smiles("C(C)(C)(C)(C)C"), Err(MolError::ValenceUnderflow { .. })));
        assert!(matches!(parse_smiles("C11"), Err(MolError::InvalidBond { .. })));
        assert!(matches!(parse_smiles("C="), Err(MolError::InvalidBond { .. })));
        assert!(matches!(parse_smiles("[Xx]"), Err(MolError::UnknownToken { .. })));
        assert!(matches!(parse_smiles("[C"), Err(MolError::UnknownToken { .. })));
    }

    #[test]
    fn bond_orders_and_percent_rings() {
        let m = parse_smiles("C%12=CC%12").unwrap();
        assert_eq!(m.bonds().len(), 3);
        let m = parse_smiles("C#N").unwrap();
        assert_eq!(m.bonds()[0].order, BondOrder::Triple);
        let m = parse_smiles("c1ccccc1").unwrap();
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(m.atoms().iter().all(|a| a.aromatic));
    }

    #[test]
    fn ring_bond_order_from_either_end() {
        let a = parse_smiles("C=1CCC1").unwrap();
        let b = parse_smiles("C1CCC=1").unwrap();
        assert_eq!(a.bond_between(0, 3), Some(BondOrder::Double));
        assert_eq!(b.bond_between(0, 3), Some(BondOrder::Double));
        assert!(matches!(parse_smiles("C=1CCC#1"), Err(MolError::InvalidBond { .. })));
    }

    #[test]
    fn stereo_and_isotopes_are_flagged_not_fatal() {
        let m = parse_smiles("F/C=C/F").unwrap();
        assert!(m.flags().stereo_ignored);
        let m = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert!(m.flags().stereo_ignored);
        assert_eq!(m.element_counts().get(Element::H), 7);
        let m = parse_smiles("[13CH4]").unwrap();
        assert!(m.flags().isotope_ignored);
        assert_eq!(m.element_counts().get(Element::H), 4);
    }

    #[test]
    fn bracket_charges() {
        let m = parse_smiles("[NH4+]").unwrap();
        assert_eq!(m.atoms()[0].charge, 1);
        let m = parse_smiles("[O-2]").unwrap();
        assert_eq!(m.atoms()[0].charge, -2);
        let m = parse_smiles("[Fe+++]").unwrap();
        assert_eq!(m.atoms()[0].charge, 3);
        let m = parse_smiles("[CH3:1]C").unwrap();
        assert_eq!(m.atom_count(), 2);
    }

    proptest! {
        #[test]
        fn never_panics_on_arbitrary_text(s in ".{0,40}") {
            let _ = parse_smiles(&s);
        }

        #[test]
        fn never_panics_on_smiles_alphabet(s in "[CNOcnoSPBrClIF()\\[\\]=#:%0-9@+\\-.Hh/\\\\]{0,30}") {
            let _ = parse_smiles(&s);
        }

        #[test]
        fn never_panics_on_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..40)) {
            let s = String::from_utf8_lossy(&bytes);
            let _ = parse_smiles(&s);
        }
    }
}
