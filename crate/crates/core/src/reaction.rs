//! Reactions as parsed reactant and product molecule lists.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{parse_smiles, ElementCounts, MolError, Molecule};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReactionError {
    #[error("reaction has no reactants")]
    NoReactants,
    #[error("reaction has no products")]
    NoProducts,
    #[error("expected `reactants>>products`, got {0:?}")]
    BadArrow(String),
    #[error("{side} molecule {index} ({smiles:?}): {source}")]
    Smiles { side: Side, index: usize, smiles: String, source: MolError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Reactant,
    Product,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Reactant => "reactant",
            Side::Product => "product",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub reactant_smiles: Vec<String>,
    pub product_smiles: Vec<String>,
    pub reactants: Vec<Molecule>,
    pub products: Vec<Molecule>,
}

fn parse_side<S: AsRef<str>>(side: Side, list: &[S]) -> Result<(Vec<String>, Vec<Molecule>), ReactionError> {
    let mut texts = Vec::with_capacity(list.len());
    let mut mols = Vec::with_capacity(list.len());
    for (index, s) in list.iter().enumerate() {
        let s = s.as_ref().trim();
        let m = parse_smiles(s).map_err(|source| ReactionError::Smiles {
            side,
            index,
            smiles: s.to_string(),
            source,
        })?;
        texts.push(s.to_string());
        mols.push(m);
    }
    Ok((texts, mols))
}

impl Reaction {
    pub fn new<S: AsRef<str>>(reactants: &[S], products: &[S]) -> Result<Self, ReactionError> {
        if reactants.is_empty() {
            return Err(ReactionError::NoReactants);
        }
        let (reactant_smiles, reactants) = parse_side(Side::Reactant, reactants)?;
        let (product_smiles, products) = parse_side(Side::Product, products)?;
        Ok(Reaction { reactant_smiles, product_smiles, reactants, products })
    }

    /// Parses `A.B>>C`; each dot-separated component becomes one molecule.
    pub fn from_reaction_smiles(text: &str) -> Result<Self, ReactionError> {
        let (lhs, rhs) = text.trim().split_once(">>").ok_or_else(|| ReactionError::BadArrow(text.to_string()))?;
        let split = |s: &str| s.split('.').filter(|p| !p.trim().is_empty()).map(str::to_string).collect::<Vec<_>>();
        let (r, p) = (split(lhs), split(rhs));
        if p.is_empty() {
            return Err(ReactionError::NoProducts);
        }
        Reaction::new(&r, &p)
    }

    pub fn side(&self, side: Side) -> &[Molecule] {
        match side {
            Side::Reactant => &self.reactants,
            Side::Product => &self.products,
        }
    }

    pub fn smiles(&self, side: Side) -> &[String] {
        match side {
            Side::Reactant => &self.reactant_smiles,
            Side::Product => &self.product_smiles,
        }
    }

    pub fn to_reaction_smiles(&self) -> String {
        format!("{}>>{}", self.reactant_smiles.join("."), self.product_smiles.join("."))
    }
}

/// Element counts summed over a list of molecules with unit coefficients.
pub fn side_counts(mols: &[Molecule]) -> ElementCounts {
    let mut total = ElementCounts::default();
    for m in mols {
        total += &m.element_counts();
    }
    total
}
