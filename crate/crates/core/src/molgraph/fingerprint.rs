//! Hashed path fingerprints and Tanimoto similarity.
//!
//! Every simple path of zero to three bonds contributes one bit. A path is
//! written as alternating atom codes `(Z, aromatic, charge)` and bond codes,
//! canonicalized as the smaller of its two directions, and hashed with
//! 64-bit FNV-1a.

use super::{MolError, Molecule};

pub const FINGERPRINT_WIDTH: usize = 2048;
const MAX_PATH_BONDS: usize = 3;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    width: usize,
    words: Vec<u64>,
}

impl Fingerprint {
    pub fn empty(width: usize) -> Self {
        Fingerprint { width, words: vec![0; width.div_ceil(64)] }
    }

    pub fn of(mol: &Molecule, width: usize) -> Self {
        let mut fp = Fingerprint::empty(width);
        if width == 0 {
            return fp;
        }
        let atom_code = |i: usize| {
            let a = &mol.atoms()[i];
            [a.element.atomic_number(), a.aromatic as u8, a.charge as u8]
        };
        let mut path = vec![0usize];
        let mut on_path = vec![false; mol.atom_count()];
        for start in 0..mol.atom_count() {
            path[0] = start;
            on_path[start] = true;
            walk(mol, &mut path, &mut on_path, &mut |p: &[usize]| {
                let encode = |atoms: &mut dyn Iterator<Item = usize>| {
                    let atoms: Vec<usize> = atoms.collect();
                    let mut bytes = Vec::with_capacity(atoms.len() * 4);
                    for (k, &a) in atoms.iter().enumerate() {
                        if k > 0 {
                            bytes.push(mol.bond_between(atoms[k - 1], a).map_or(0, |o| o.code()));
                        }
                        bytes.extend_from_slice(&atom_code(a));
                    }
                    bytes
                };
                let fwd = encode(&mut p.iter().copied());
                let rev = encode(&mut p.iter().rev().copied());
                let h = fnv1a(fwd.min(rev).as_slice());
                fp.set((h % width as u64) as usize);
            });
            on_path[start] = false;
        }
        fp
    }

    fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Bitwise OR, used to combine the molecules on one side of a reaction.
    pub fn union(&self, other: &Fingerprint) -> Result<Fingerprint, MolError> {
        self.check(other)?;
        let words = self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect();
        Ok(Fingerprint { width: self.width, words })
    }

    fn check(&self, other: &Fingerprint) -> Result<(), MolError> {
        if self.width != other.width {
            return Err(MolError::WidthMismatch { left: self.width, right: other.width });
        }
        Ok(())
    }
}

fn walk(mol: &Molecule, path: &mut Vec<usize>, on_path: &mut [bool], emit: &mut dyn FnMut(&[usize])) {
    emit(path);
    if path.len() > MAX_PATH_BONDS {
        return;
    }
    let last = *path.last().unwrap();
    for &(n, _) in mol.neighbors(last) {
        if on_path[n] {
            continue;
        }
        on_path[n] = true;
        path.push(n);
        walk(mol, path, on_path, emit);
        path.pop();
        on_path[n] = false;
    }
}

/// Tanimoto coefficient `|a ∧ b| / |a ∨ b|`; two empty fingerprints score 1.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, MolError> {
    a.check(b)?;
    let (mut both, mut either) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        both += (x & y).count_ones();
        either += (x | y).count_ones();
    }
    Ok(if either == 0 { 1.0 } else { both as f64 / either as f64 })
}
