//! Line-notation skeleton shared by the SMILES and SMARTS readers:
//! chains, branches, ring closures, and dot-disconnected components.
//! Atom and bond syntax is delegated to a [`Dialect`].

use std::collections::BTreeMap;

use super::MolError;

pub(crate) trait Dialect {
    type Atom;
    type Bond: Clone + PartialEq;

    /// Reads an unbracketed atom starting at `pos`, returning it with the
    /// number of bytes consumed, or `None` if no atom starts there.
    fn organic(&mut self, text: &str, pos: usize) -> Result<Option<(Self::Atom, usize)>, MolError>;

    /// Reads the contents of `[...]`; `pos` is the offset of the first inner byte.
    fn bracket(&mut self, inner: &str, pos: usize) -> Result<Self::Atom, MolError>;

    fn bond_symbol(&mut self, c: u8) -> Option<Self::Bond>;

    /// Bond used when two atoms are adjacent without a bond symbol.
    fn implicit_bond(&self, a: &Self::Atom, b: &Self::Atom) -> Self::Bond;
}

pub(crate) struct ParsedGraph<A, B> {
    pub atoms: Vec<A>,
    pub bonds: Vec<(usize, usize, B)>,
}

struct Builder<D: Dialect> {
    atoms: Vec<D::Atom>,
    bonds: Vec<(usize, usize, D::Bond)>,
}

impl<D: Dialect> Builder<D> {
    fn add_bond(&mut self, a: usize, b: usize, bond: D::Bond, position: usize) -> Result<(), MolError> {
        let duplicate = self
            .bonds
            .iter()
            .any(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a));
        if a == b || duplicate {
            return Err(MolError::InvalidBond { position });
        }
        self.bonds.push((a, b, bond));
        Ok(())
    }
}

fn unknown(text: &str, position: usize) -> MolError {
    let token = text
        .get(position..)
        .and_then(|s| s.chars().next())
        .map(String::from)
        .unwrap_or_default();
    MolError::UnknownToken { position, token }
}

pub(crate) fn parse_graph<D: Dialect>(
    text: &str,
    dialect: &mut D,
) -> Result<ParsedGraph<D::Atom, D::Bond>, MolError> {
    if text.is_empty() {
        return Err(MolError::EmptyInput);
    }
    let bytes = text.as_bytes();
    let mut g: Builder<D> = Builder { atoms: Vec::new(), bonds: Vec::new() };
    let mut prev: Option<usize> = None;
    let mut branches: Vec<(usize, usize)> = Vec::new();
    let mut pending: Option<(D::Bond, usize)> = None;
    let mut rings: BTreeMap<u32, (usize, Option<D::Bond>)> = BTreeMap::new();
    let mut pos = 0;

    while pos < bytes.len() {
        let c = bytes[pos];
        match c {
            b'(' => {
                let Some(p) = prev else { return Err(unknown(text, pos)) };
                if pending.is_some() {
                    return Err(MolError::InvalidBond { position: pos });
                }
                branches.push((p, pos));
                pos += 1;
            }
            b')' => {
                if pending.is_some() {
                    return Err(MolError::InvalidBond { position: pos });
                }
                let Some((p, _)) = branches.pop() else { return Err(unknown(text, pos)) };
                prev = Some(p);
                pos += 1;
            }
            b'.' => {
                if pending.is_some() {
                    return Err(MolError::InvalidBond { position: pos });
                }
                prev = None;
                pos += 1;
            }
            b'0'..=b'9' | b'%' => {
                let Some(p) = prev else { return Err(unknown(text, pos)) };
                let (ring, len) = if c == b'%' {
                    match (bytes.get(pos + 1), bytes.get(pos + 2)) {
                        (Some(d1 @ b'0'..=b'9'), Some(d2 @ b'0'..=b'9')) => {
                            (((d1 - b'0') * 10 + (d2 - b'0')) as u32, 3)
                        }
                        _ => return Err(unknown(text, pos)),
                    }
                } else {
                    ((c - b'0') as u32, 1)
                };
                let bond = pending.take().map(|(b, _)| b);
                if let Some((other, opening)) = rings.remove(&ring) {
                    let order = match (opening, bond) {
                        (Some(x), Some(y)) if x != y => {
                            return Err(MolError::InvalidBond { position: pos })
                        }
                        (Some(x), _) => x,
                        (None, Some(y)) => y,
                        (None, None) => dialect.implicit_bond(&g.atoms[other], &g.atoms[p]),
                    };
                    g.add_bond(other, p, order, pos)?;
                } else {
                    rings.insert(ring, (p, bond));
                }
                pos += len;
            }
            b'[' => {
                let Some(close) = bytes[pos + 1..].iter().position(|&b| b == b']') else {
                    return Err(unknown(text, pos));
                };
                let end = pos + 1 + close;
                let atom = dialect.bracket(&text[pos + 1..end], pos + 1)?;
                push_atom(&mut g, dialect, atom, &mut prev, &mut pending, pos)?;
                pos = end + 1;
            }
            _ => {
                if let Some(bond) = dialect.bond_symbol(c) {
                    if prev.is_none() || pending.is_some() {
                        return Err(MolError::InvalidBond { position: pos });
                    }
                    pending = Some((bond, pos));
                    pos += 1;
                } else if let Some((atom, len)) = dialect.organic(text, pos)? {
                    push_atom(&mut g, dialect, atom, &mut prev, &mut pending, pos)?;
                    pos += len;
                } else {
                    return Err(unknown(text, pos));
                }
            }
        }
    }

    if let Some((_, position)) = pending {
        return Err(MolError::InvalidBond { position });
    }
    if let Some(&(_, position)) = branches.first() {
        return Err(MolError::UnclosedBranch { position });
    }
    if let Some((&ring, _)) = rings.iter().next() {
        return Err(MolError::UnmatchedRingClosure { ring });
    }
    Ok(ParsedGraph { atoms: g.atoms, bonds: g.bonds })
}

fn push_atom<D: Dialect>(
    g: &mut Builder<D>,
    dialect: &D,
    atom: D::Atom,
    prev: &mut Option<usize>,
    pending: &mut Option<(D::Bond, usize)>,
    pos: usize,
) -> Result<(), MolError> {
    let idx = g.atoms.len();
    g.atoms.push(atom);
    if let Some(p) = *prev {
        let bond = match pending.take() {
            Some((b, _)) => b,
            None => dialect.implicit_bond(&g.atoms[p], &g.atoms[idx]),
        };
        g.add_bond(p, idx, bond, pos)?;
    }
    *prev = Some(idx);
    Ok(())
}
