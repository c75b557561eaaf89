//! Reaction atom mapping by greedy assignment of pairwise maximum common
//! substructures between reactant and product molecules.

use serde::{Deserialize, Serialize};

use crate::molgraph::{mcs_within, McsOptions, Molecule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MappedAtom {
    pub reactant: usize,
    pub reactant_atom: usize,
    pub product: usize,
    pub product_atom: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReactionMapping {
    pub pairs: Vec<MappedAtom>,
    /// `(reactant index, atom index)` left without an image.
    pub unmapped_reactant_atoms: Vec<(usize, usize)>,
    pub unmapped_product_atoms: Vec<(usize, usize)>,
    /// Hydrogens on unmapped reactant atoms plus hydrogens lost by mapped ones.
    pub hydrogens_released: u32,
    pub approximate: bool,
}

/// Repeatedly takes the largest MCS between any reactant and product over
/// still-unmapped atoms until no pair shares an atom. Ties go to the lowest
/// `(reactant, product)` index pair.
pub fn derive_atom_map(reactants: &[Molecule], products: &[Molecule], options: McsOptions) -> ReactionMapping {
    let mut free_r: Vec<Vec<bool>> = reactants.iter().map(|m| vec![true; m.atom_count()]).collect();
    let mut free_p: Vec<Vec<bool>> = products.iter().map(|m| vec![true; m.atom_count()]).collect();
    let mut out = ReactionMapping::default();
    loop {
        let mut best: Option<(usize, usize, crate::molgraph::McsResult)> = None;
        for (i, r) in reactants.iter().enumerate() {
            for (j, p) in products.iter().enumerate() {
                let res = mcs_within(r, p, &free_r[i], &free_p[j], options);
                if res.size() > best.as_ref().map_or(0, |b| b.2.size()) {
                    best = Some((i, j, res));
                }
            }
        }
        let Some((i, j, res)) = best else { break };
        out.approximate |= res.approximate;
        for &(a, b) in &res.mapping.pairs {
            free_r[i][a] = false;
            free_p[j][b] = false;
            out.pairs.push(MappedAtom { reactant: i, reactant_atom: a, product: j, product_atom: b });
        }
    }
    out.pairs.sort();
    let h = |m: &Molecule, a: usize| m.atoms()[a].implicit_h() as u32 + m.atoms()[a].explicit_h as u32;
    for (i, free) in free_r.iter().enumerate() {
        for (a, &f) in free.iter().enumerate() {
            if f {
                out.unmapped_reactant_atoms.push((i, a));
                out.hydrogens_released += h(&reactants[i], a);
            }
        }
    }
    for (j, free) in free_p.iter().enumerate() {
        out.unmapped_product_atoms.extend(free.iter().enumerate().filter(|(_, &f)| f).map(|(a, _)| (j, a)));
    }
    for p in &out.pairs {
        out.hydrogens_released += h(&reactants[p.reactant], p.reactant_atom).saturating_sub(h(&products[p.product], p.product_atom));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn mols(s: &[&str]) -> Vec<Molecule> {
        s.iter().map(|x| parse_smiles(x).unwrap()).collect()
    }

    #[test]
    fn identity_maps_everything() {
        let m = mols(&["CC(=O)Nc1ccccc1"]);
        let r = derive_atom_map(&m, &m, McsOptions::default());
        assert_eq!(r.pairs.len(), m[0].atom_count());
        assert!(r.unmapped_reactant_atoms.is_empty() && r.unmapped_product_atoms.is_empty());
        assert_eq!(r.hydrogens_released, 0);
    }

    #[test]
    fn esterification_leaves_hydroxyl_oxygen() {
        let r = derive_atom_map(&mols(&["CC(=O)O", "CCO"]), &mols(&["CC(=O)OCC"]), McsOptions::default());
        // Acid maps C-C(=O)-O onto the ester; ethanol's C-C maps onto the ethyl
        // group and its oxygen finds no free ester oxygen.
        assert_eq!(r.pairs.len(), 6);
        assert_eq!(r.unmapped_reactant_atoms, vec![(1, 2)]);
        assert!(r.unmapped_product_atoms.is_empty());
        // At least the water's two hydrogens; the ethyl carbons may map in
        // either orientation, which can add one more.
        assert!(r.hydrogens_released >= 2);
    }

    #[test]
    fn disjoint_elements_map_nothing() {
        let r = derive_atom_map(&mols(&["O=O"]), &mols(&["NN"]), McsOptions::default());
        assert!(r.pairs.is_empty());
        assert_eq!(r.unmapped_reactant_atoms.len(), 2);
        assert_eq!(r.unmapped_product_atoms.len(), 2);
    }
}
