//! Backtracking substructure search of a [`Pattern`] in a [`Molecule`].

use std::collections::BTreeMap;

use super::{AtomMapping, Molecule, Pattern};

/// Visit order for pattern nodes: BFS per connected component, so every
/// node after a component's root has an already-placed anchor neighbor.
fn search_order(p: &Pattern) -> Vec<(usize, Option<usize>)> {
    let n = p.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        let start = order.len();
        order.push((root, None));
        let mut head = start;
        while head < order.len() {
            let (node, _) = order[head];
            head += 1;
            for &(nb, _) in p.neighbors(node) {
                if !seen[nb] {
                    seen[nb] = true;
                    order.push((nb, Some(node)));
                }
            }
        }
    }
    order
}

struct Search<'a> {
    pattern: &'a Pattern,
    mol: &'a Molecule,
    order: Vec<(usize, Option<usize>)>,
    image: Vec<Option<usize>>,
    used: Vec<bool>,
    found: BTreeMap<Vec<usize>, Vec<(usize, usize)>>,
}

impl Search<'_> {
    fn feasible(&self, node: usize, atom: usize) -> bool {
        if self.used[atom] || !self.pattern.node_matches(node, self.mol, atom) {
            return false;
        }
        self.pattern.neighbors(node).iter().all(|&(nb, expr)| match self.image[nb] {
            Some(img) => self.mol.bond_between(atom, img).is_some_and(|o| expr.matches(o)),
            None => true,
        })
    }

    fn extend(&mut self, depth: usize) {
        if depth == self.order.len() {
            let pairs: Vec<(usize, usize)> =
                self.image.iter().enumerate().map(|(n, a)| (n, a.unwrap())).collect();
            let mut key: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            key.sort_unstable();
            self.found
                .entry(key)
                .and_modify(|best| {
                    if pairs < *best {
                        *best = pairs.clone();
                    }
                })
                .or_insert(pairs);
            return;
        }
        let (node, anchor) = self.order[depth];
        let candidates: Vec<usize> = match anchor.and_then(|a| self.image[a]) {
            Some(img) => {
                let mut v: Vec<usize> = self.mol.neighbors(img).iter().map(|&(n, _)| n).collect();
                v.sort_unstable();
                v
            }
            None => (0..self.mol.atom_count()).collect(),
        };
        for atom in candidates {
            if self.feasible(node, atom) {
                self.image[node] = Some(atom);
                self.used[atom] = true;
                self.extend(depth + 1);
                self.used[atom] = false;
                self.image[node] = None;
            }
        }
    }
}

/// All embeddings of `pattern` into `mol`, one per distinct matched atom
/// set, ordered lexicographically by the sorted matched atom indices.
/// Each mapping pairs `(pattern node, molecule atom)`.
pub fn match_pattern(pattern: &Pattern, mol: &Molecule) -> Vec<AtomMapping> {
    if pattern.node_count() == 0 || pattern.node_count() > mol.atom_count() {
        return Vec::new();
    }
    let mut search = Search {
        pattern,
        mol,
        order: search_order(pattern),
        image: vec![None; pattern.node_count()],
        used: vec![false; mol.atom_count()],
        found: BTreeMap::new(),
    };
    search.extend(0);
    search.found.into_values().map(|pairs| AtomMapping { pairs }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{parse_smarts, parse_smiles};

    fn hits(smarts: &str, smiles: &str) -> Vec<Vec<usize>> {
        let p = parse_smarts(smarts).unwrap();
        let m = parse_smiles(smiles).unwrap();
        match_pattern(&p, &m).iter().map(|m| m.target_atoms()).collect()
    }

    #[test]
    fn hydroxyl_in_ethanol() {
        assert_eq!(hits("[OX2H]", "CCO"), vec![vec![2]]);
    }

    #[test]
    fn absent_element() {
        assert!(hits("N", "CCO").is_empty());
    }

    #[test]
    fn methyl_in_ethane_twice() {
        assert_eq!(hits("C", "CC"), vec![vec![0], vec![1]]);
    }

    #[test]
    fn symmetric_pattern_deduplicated() {
        // benzene has 12 automorphic embeddings but one atom set
        assert_eq!(hits("c1ccccc1", "c1ccccc1").len(), 1);
        assert_eq!(hits("c1ccccc1", "c1ccc2ccccc2c1").len(), 2);
    }

    #[test]
    fn acyl_chloride_mapping_pairs() {
        let p = parse_smarts("[CX3](=O)Cl").unwrap();
        let m = parse_smiles("CC(=O)Cl").unwrap();
        let found = match_pattern(&p, &m);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert!(found[0].is_injective());
    }

    #[test]
    fn disconnected_pattern() {
        assert_eq!(hits("O.O", "OCCO"), vec![vec![0, 3]]);
    }
}
