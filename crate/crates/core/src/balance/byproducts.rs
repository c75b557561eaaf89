//! By-product hypotheses: tile the reactant-minus-product element
//! difference with small leaving-group species.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{balance_stoichiometry, BalanceError};
use crate::molgraph::{parse_smiles, Element, ElementCounts, Molecule};
use crate::reaction::side_counts;

const DEFAULT_TABLE: &str = include_str!("../../data/leaving_groups.tsv");

/// Keeps enumeration finite on large differences.
const MAX_HYPOTHESES: usize = 32;

#[derive(Debug, Clone)]
pub struct LeavingGroup {
    pub name: String,
    pub smiles: String,
    pub molecule: Molecule,
    pub counts: ElementCounts,
}

#[derive(Debug, Clone, Default)]
pub struct LeavingGroupTable {
    rules: Vec<LeavingGroup>,
}

impl LeavingGroupTable {
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_TABLE).expect("bundled leaving-group table is valid")
    }

    pub fn load(path: &Path) -> Result<Self, BalanceError> {
        let text = std::fs::read_to_string(path).map_err(|e| BalanceError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `name<TAB>SMILES` lines; species must be charge-neutral.
    pub fn parse(text: &str) -> Result<Self, BalanceError> {
        let mut rules: Vec<LeavingGroup> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let Some((name, smiles)) = raw.split_once('\t') else {
                return Err(BalanceError::Table { line, message: "expected `name<TAB>SMILES`".into() });
            };
            let (name, smiles) = (name.trim(), smiles.trim());
            let molecule = parse_smiles(smiles).map_err(|e| BalanceError::Table { line, message: e.to_string() })?;
            if molecule.net_charge() != 0 {
                return Err(BalanceError::Table { line, message: format!("{name} is not charge-neutral") });
            }
            if rules.iter().any(|r| r.name == name) {
                return Err(BalanceError::Table { line, message: format!("duplicate rule {name}") });
            }
            let counts = molecule.element_counts();
            rules.push(LeavingGroup { name: name.to_string(), smiles: smiles.to_string(), molecule, counts });
        }
        Ok(LeavingGroupTable { rules })
    }

    pub fn rules(&self) -> &[LeavingGroup] {
        &self.rules
    }

    pub fn get(&self, name: &str) -> Option<&LeavingGroup> {
        self.rules.iter().find(|r| r.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpeciesCount {
    pub name: String,
    pub smiles: String,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByproductHypothesis {
    /// Species in table order with multiplicities.
    pub species: Vec<SpeciesCount>,
    /// Parsimony: total atoms, then total species count.
    pub atoms: i64,
    pub species_count: u32,
}

impl ByproductHypothesis {
    /// `HCl`, `2 H2O + CO2`, ...
    pub fn label(&self) -> String {
        self.species
            .iter()
            .map(|s| if s.count == 1 { s.name.clone() } else { format!("{} {}", s.count, s.name) })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// True for a single hydrogen halide molecule (HCl, HBr, HI, HF).
    pub fn is_hydrogen_halide(&self, table: &LeavingGroupTable) -> bool {
        let [only] = self.species.as_slice() else { return false };
        let counts = match table.get(&only.name) {
            Some(r) => r.counts.clone(),
            None => match parse_smiles(&only.smiles) {
                Ok(m) => m.element_counts(),
                Err(_) => return false,
            },
        };
        only.count == 1
            && counts.elements().count() == 2
            && counts.get(Element::H) == 1
            && counts.elements().any(|e| e.is_halogen() && counts.get(e) == 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByproductAnalysis {
    /// Reactant minus product element counts at unit coefficients.
    pub difference: ElementCounts,
    /// Ranked, most parsimonious first; empty when the plain equation balances.
    pub hypotheses: Vec<ByproductHypothesis>,
    /// The difference itself when no tiling explains it.
    pub unexplained_residue: Option<ElementCounts>,
}

impl ByproductAnalysis {
    pub fn top(&self) -> Option<&ByproductHypothesis> {
        self.hypotheses.first()
    }
}

/// Ranks rule-table tilings of `counts(reactants) − counts(products)` by
/// (atoms, species count, label).
pub fn enumerate_byproducts(
    reactants: &[Molecule],
    products: &[Molecule],
    table: &LeavingGroupTable,
) -> Result<ByproductAnalysis, BalanceError> {
    if reactants.is_empty() || products.is_empty() {
        return Err(BalanceError::EmptySide);
    }
    let difference = &side_counts(reactants) - &side_counts(products);
    if balance_stoichiometry(reactants, products, &[]).is_ok() {
        return Ok(ByproductAnalysis { difference, hypotheses: Vec::new(), unexplained_residue: None });
    }
    if let Some((e, n)) = difference.iter().find(|&(_, n)| n < 0) {
        return Err(BalanceError::NegativeDifference { element: e, deficit: -n });
    }
    let mut found: Vec<Vec<u32>> = Vec::new();
    let mut mult = vec![0u32; table.rules.len()];
    tile(&table.rules, 0, &difference, &mut mult, &mut found);
    let mut hypotheses: Vec<ByproductHypothesis> = found
        .into_iter()
        .map(|m| {
            let species: Vec<SpeciesCount> = table
                .rules
                .iter()
                .zip(&m)
                .filter(|(_, &c)| c > 0)
                .map(|(r, &c)| SpeciesCount { name: r.name.clone(), smiles: r.smiles.clone(), count: c })
                .collect();
            let atoms = table.rules.iter().zip(&m).map(|(r, &c)| r.counts.total_atoms() * c as i64).sum();
            let species_count = m.iter().sum();
            ByproductHypothesis { species, atoms, species_count }
        })
        .collect();
    hypotheses.sort_by(|a, b| (a.atoms, a.species_count, a.label()).cmp(&(b.atoms, b.species_count, b.label())));
    hypotheses.truncate(MAX_HYPOTHESES);
    let unexplained_residue = hypotheses.is_empty().then(|| difference.clone());
    Ok(ByproductAnalysis { difference, hypotheses, unexplained_residue })
}

fn tile(rules: &[LeavingGroup], i: usize, remaining: &ElementCounts, mult: &mut Vec<u32>, found: &mut Vec<Vec<u32>>) {
    if remaining.is_zero() {
        if mult.iter().any(|&m| m > 0) {
            found.push(mult.clone());
        }
        return;
    }
    if i == rules.len() || found.len() >= 4 * MAX_HYPOTHESES {
        return;
    }
    tile(rules, i + 1, remaining, mult, found);
    let mut rest = remaining.clone();
    loop {
        rest = &rest - &rules[i].counts;
        if !rest.all_non_negative() {
            break;
        }
        mult[i] += 1;
        tile(rules, i + 1, &rest, mult, found);
    }
    mult[i] = 0;
}
