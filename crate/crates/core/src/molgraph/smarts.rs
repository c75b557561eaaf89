//! SMARTS subset: element (aliphatic/aromatic or `#n`), `a`/`A`, charge,
//! degree `D`, total hydrogen `H`, connectivity `X`, wildcard `*`, and the
//! logical operators `!`, `&`, `,`, `;`. Bonds: `-`, `=`, `#`, `:`, `~`, and
//! the implicit single-or-aromatic bond.

use super::grammar::{parse_graph, Dialect};
use super::smiles::{read_bracket_symbol, read_charge, read_organic};
use super::{BondOrder, Element, MolError, Molecule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomPrimitive {
    Wildcard,
    /// Element with an optional aromaticity requirement.
    Element { element: Element, aromatic: Option<bool> },
    Aromatic,
    Aliphatic,
    Charge(i8),
    /// Explicit connections in the graph.
    Degree(u8),
    /// Implicit plus explicit hydrogens.
    TotalH(u8),
    /// Degree plus total hydrogens.
    Connectivity(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomExpr {
    Prim(AtomPrimitive),
    Not(Box<AtomExpr>),
    And(Vec<AtomExpr>),
    Or(Vec<AtomExpr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondExpr {
    Order(BondOrder),
    SingleOrAromatic,
    Any,
}

impl BondExpr {
    pub fn matches(self, order: BondOrder) -> bool {
        match self {
            BondExpr::Order(o) => o == order,
            BondExpr::SingleOrAromatic => matches!(order, BondOrder::Single | BondOrder::Aromatic),
            BondExpr::Any => true,
        }
    }
}

impl AtomPrimitive {
    fn matches(&self, mol: &Molecule, idx: usize) -> bool {
        let atom = &mol.atoms()[idx];
        match *self {
            AtomPrimitive::Wildcard => true,
            AtomPrimitive::Element { element, aromatic } => {
                atom.element == element && aromatic.map_or(true, |a| a == atom.aromatic)
            }
            AtomPrimitive::Aromatic => atom.aromatic,
            AtomPrimitive::Aliphatic => !atom.aromatic,
            AtomPrimitive::Charge(c) => atom.charge == c,
            AtomPrimitive::Degree(d) => mol.degree(idx) == d as usize,
            AtomPrimitive::TotalH(h) => mol.total_h(idx) == h as u32,
            AtomPrimitive::Connectivity(x) => {
                mol.degree(idx) as u32 + atom.implicit_h() as u32 + atom.explicit_h as u32 == x as u32
            }
        }
    }
}

impl AtomExpr {
    pub fn matches(&self, mol: &Molecule, idx: usize) -> bool {
        match self {
            AtomExpr::Prim(p) => p.matches(mol, idx),
            AtomExpr::Not(e) => !e.matches(mol, idx),
            AtomExpr::And(es) => es.iter().all(|e| e.matches(mol, idx)),
            AtomExpr::Or(es) => es.iter().any(|e| e.matches(mol, idx)),
        }
    }
}

/// A compiled SMARTS query graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    source: String,
    nodes: Vec<AtomExpr>,
    edges: Vec<(usize, usize, BondExpr)>,
    adjacency: Vec<Vec<(usize, BondExpr)>>,
}

impl Pattern {
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn nodes(&self) -> &[AtomExpr] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize, BondExpr)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, BondExpr)] {
        &self.adjacency[node]
    }

    pub fn node_matches(&self, node: usize, mol: &Molecule, atom: usize) -> bool {
        self.nodes[node].matches(mol, atom)
    }
}

struct SmartsDialect;

fn unsupported(s: &str) -> MolError {
    MolError::UnsupportedPrimitive(s.chars().next().map(String::from).unwrap_or_default())
}

fn read_count(b: &[u8], i: &mut usize) -> u8 {
    let start = *i;
    let mut n: u32 = 0;
    while let Some(d) = b.get(*i).filter(|c| c.is_ascii_digit()) {
        n = (n * 10 + (d - b'0') as u32).min(255);
        *i += 1;
    }
    if *i == start {
        1
    } else {
        n as u8
    }
}

struct ExprParser<'a> {
    s: &'a str,
    i: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.as_bytes().get(self.i).copied()
    }

    fn low(&mut self) -> Result<AtomExpr, MolError> {
        let mut terms = vec![self.or()?];
        while self.peek() == Some(b';') {
            self.i += 1;
            terms.push(self.or()?);
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn or(&mut self) -> Result<AtomExpr, MolError> {
        let mut terms = vec![self.high()?];
        while self.peek() == Some(b',') {
            self.i += 1;
            terms.push(self.high()?);
        }
        Ok(collapse(terms, AtomExpr::Or))
    }

    fn high(&mut self) -> Result<AtomExpr, MolError> {
        let mut terms = vec![self.unary()?];
        loop {
            match self.peek() {
                None | Some(b';') | Some(b',') => break,
                Some(b'&') => {
                    self.i += 1;
                    terms.push(self.unary()?);
                }
                Some(_) => terms.push(self.unary()?),
            }
        }
        Ok(collapse(terms, AtomExpr::And))
    }

    fn unary(&mut self) -> Result<AtomExpr, MolError> {
        if self.peek() == Some(b'!') {
            self.i += 1;
            return Ok(AtomExpr::Not(Box::new(self.unary()?)));
        }
        self.primitive().map(AtomExpr::Prim)
    }

    fn primitive(&mut self) -> Result<AtomPrimitive, MolError> {
        let b = self.s.as_bytes();
        let rest = &self.s[self.i..];
        let Some(c) = self.peek() else { return Err(MolError::UnsupportedPrimitive(String::new())) };
        let lower_next = b.get(self.i + 1).is_some_and(|n| n.is_ascii_lowercase());
        let prim = match c {
            b'*' => {
                self.i += 1;
                AtomPrimitive::Wildcard
            }
            b'#' => {
                self.i += 1;
                let start = self.i;
                let n = read_count(b, &mut self.i);
                if self.i == start {
                    return Err(unsupported("#"));
                }
                let element = Element::from_atomic_number(n).ok_or_else(|| unsupported("#"))?;
                AtomPrimitive::Element { element, aromatic: None }
            }
            b'+' | b'-' => {
                let (charge, len) = read_charge(&b[self.i..]).ok_or_else(|| unsupported(rest))?;
                self.i += len;
                AtomPrimitive::Charge(charge)
            }
            b'a' if !rest.starts_with("as") => {
                self.i += 1;
                AtomPrimitive::Aromatic
            }
            b'A' if !lower_next => {
                self.i += 1;
                AtomPrimitive::Aliphatic
            }
            b'D' | b'H' | b'X' if !lower_next => {
                self.i += 1;
                let n = read_count(b, &mut self.i);
                match c {
                    b'D' => AtomPrimitive::Degree(n),
                    b'H' => AtomPrimitive::TotalH(n),
                    _ => AtomPrimitive::Connectivity(n),
                }
            }
            _ => {
                let (element, aromatic, len) = read_bracket_symbol(rest).ok_or_else(|| unsupported(rest))?;
                self.i += len;
                AtomPrimitive::Element { element, aromatic: Some(aromatic) }
            }
        };
        Ok(prim)
    }
}

fn collapse(mut terms: Vec<AtomExpr>, wrap: fn(Vec<AtomExpr>) -> AtomExpr) -> AtomExpr {
    if terms.len() == 1 {
        terms.pop().unwrap()
    } else {
        wrap(terms)
    }
}

impl Dialect for SmartsDialect {
    type Atom = AtomExpr;
    type Bond = BondExpr;

    fn organic(&mut self, text: &str, pos: usize) -> Result<Option<(AtomExpr, usize)>, MolError> {
        let rest = &text[pos..];
        match rest.as_bytes()[0] {
            b'*' => return Ok(Some((AtomExpr::Prim(AtomPrimitive::Wildcard), 1))),
            b'a' => return Ok(Some((AtomExpr::Prim(AtomPrimitive::Aromatic), 1))),
            b'A' => return Ok(Some((AtomExpr::Prim(AtomPrimitive::Aliphatic), 1))),
            b'@' | b'$' | b'!' | b'/' | b'\\' | b'&' | b';' | b',' | b'R' | b'r' | b'v' | b'x' => {
                return Err(unsupported(rest))
            }
            _ => {}
        }
        Ok(read_organic(text, pos).map(|(element, aromatic, len)| {
            (AtomExpr::Prim(AtomPrimitive::Element { element, aromatic: Some(aromatic) }), len)
        }))
    }

    fn bracket(&mut self, inner: &str, _pos: usize) -> Result<AtomExpr, MolError> {
        if inner.is_empty() {
            return Err(MolError::UnsupportedPrimitive("[]".into()));
        }
        if inner.contains('$') {
            return Err(MolError::UnsupportedPrimitive("$".into()));
        }
        let mut p = ExprParser { s: inner, i: 0 };
        let expr = p.low()?;
        if p.i != inner.len() {
            return Err(unsupported(&inner[p.i..]));
        }
        Ok(expr)
    }

    fn bond_symbol(&mut self, c: u8) -> Option<BondExpr> {
        match c {
            b'-' => Some(BondExpr::Order(BondOrder::Single)),
            b'=' => Some(BondExpr::Order(BondOrder::Double)),
            b'#' => Some(BondExpr::Order(BondOrder::Triple)),
            b':' => Some(BondExpr::Order(BondOrder::Aromatic)),
            b'~' => Some(BondExpr::Any),
            _ => None,
        }
    }

    fn implicit_bond(&self, _a: &AtomExpr, _b: &AtomExpr) -> BondExpr {
        BondExpr::SingleOrAromatic
    }
}

/// Compiles a SMARTS string into a [`Pattern`].
pub fn parse_smarts(text: &str) -> Result<Pattern, MolError> {
    let graph = parse_graph(text, &mut SmartsDialect)?;
    let mut adjacency = vec![Vec::new(); graph.atoms.len()];
    for &(a, b, e) in &graph.bonds {
        adjacency[a].push((b, e));
        adjacency[b].push((a, e));
    }
    Ok(Pattern { source: text.to_string(), nodes: graph.atoms, edges: graph.bonds, adjacency })
}
