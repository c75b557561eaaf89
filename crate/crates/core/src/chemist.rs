//! The reaction report: main functional groups, balanced equation,
//! by-product hypotheses, reaction type with supporting citations, and
//! knowledge-base signal features.

use serde::{Deserialize, Serialize};

use crate::balance::{balance_stoichiometry, enumerate_byproducts, ByproductAnalysis, CheckContext};
use crate::knowbase::{Evidence, QueryContext, ReactionBase, SignalFeatures};
use crate::molgraph::{parse_smiles, Molecule};
use crate::reaction::Reaction;
use crate::resources::Resources;
use crate::tagger::{rank_salience, tag_reactants, FgHit, MainFgList, SalienceWeights};

/// Reaction type reported when the base cannot vote.
pub const UNKNOWN_TYPE: &str = "unknown";

/// How many ranked by-product hypotheses feed the signal features.
const BYPRODUCT_KEYWORDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub coefficient: u32,
    pub smiles: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalancedEquation {
    pub reactants: Vec<Term>,
    pub products: Vec<Term>,
    /// By-product species added to the product side.
    pub byproducts: Vec<Term>,
}

impl std::fmt::Display for BalancedEquation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |terms: &[&Term]| {
            terms
                .iter()
                .map(|t| if t.coefficient == 1 { t.smiles.clone() } else { format!("{} {}", t.coefficient, t.smiles) })
                .collect::<Vec<_>>()
                .join(" + ")
        };
        let lhs: Vec<&Term> = self.reactants.iter().collect();
        let rhs: Vec<&Term> = self.products.iter().chain(self.byproducts.iter().filter(|t| t.coefficient > 0)).collect();
        write!(f, "{} -> {}", side(&lhs), side(&rhs))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactionReport {
    pub reaction: String,
    pub fg_hits: Vec<FgHit>,
    pub main_fgs: MainFgList,
    /// `None` when the products carry atoms the reactants lack.
    pub byproducts: Option<ByproductAnalysis>,
    pub byproduct_error: Option<String>,
    pub equation: Option<BalancedEquation>,
    pub reaction_type: String,
    pub type_confidence: f64,
    pub evidence: Evidence,
    pub signals: SignalFeatures,
}

impl ReactionReport {
    pub fn main_fg_names(&self) -> Vec<String> {
        self.main_fgs.main_names()
    }

    pub fn top_byproduct(&self) -> Option<String> {
        self.byproducts.as_ref().and_then(|b| b.top()).map(|h| h.label())
    }

    pub fn byproduct_labels(&self) -> Vec<String> {
        self.byproducts
            .as_ref()
            .map(|b| b.hypotheses.iter().take(BYPRODUCT_KEYWORDS).map(|h| h.label()).collect())
            .unwrap_or_default()
    }

    pub fn check_context<'a>(&'a self, reaction: &'a Reaction, resources: &'a Resources) -> CheckContext<'a> {
        CheckContext {
            reaction,
            byproducts: self.byproducts.as_ref(),
            species: &resources.species,
            leaving_groups: &resources.leaving_groups,
        }
    }
}

/// Balances with the top by-product hypothesis as optional product-side species.
fn balanced_equation(reaction: &Reaction, analysis: Option<&ByproductAnalysis>) -> Option<BalancedEquation> {
    let species: Vec<(String, Molecule)> = analysis
        .and_then(|a| a.top())
        .map(|h| h.species.iter().filter_map(|s| Some((s.smiles.clone(), parse_smiles(&s.smiles).ok()?))).collect())
        .unwrap_or_default();
    let aux: Vec<Molecule> = species.iter().map(|s| s.1.clone()).collect();
    let st = balance_stoichiometry(&reaction.reactants, &reaction.products, &aux).ok()?;
    let terms = |smiles: &[String], coeffs: &[u32]| -> Vec<Term> {
        smiles.iter().zip(coeffs).map(|(s, &c)| Term { coefficient: c, smiles: s.clone() }).collect()
    };
    let aux_smiles: Vec<String> = species.into_iter().map(|s| s.0).collect();
    Some(BalancedEquation {
        reactants: terms(&reaction.reactant_smiles, &st.reactants),
        products: terms(&reaction.product_smiles, &st.products),
        byproducts: terms(&aux_smiles, &st.aux),
    })
}

/// Builds the full report. An empty base leaves the type [`UNKNOWN_TYPE`]
/// with confidence 0 and no citations.
pub fn general_chemist(reaction: &Reaction, base: &ReactionBase, salience: &SalienceWeights) -> ReactionReport {
    let resources = base.resources();
    let fg_hits = tag_reactants(&reaction.reactants, &resources.library);
    let main_fgs = rank_salience(&fg_hits, &resources.library, salience);
    let (byproducts, byproduct_error) =
        match enumerate_byproducts(&reaction.reactants, &reaction.products, &resources.leaving_groups) {
            Ok(a) => (Some(a), None),
            Err(e) => (None, Some(e.to_string())),
        };
    let equation = balanced_equation(reaction, byproducts.as_ref());
    let query = QueryContext::new(reaction, &resources.library);
    let mut report = ReactionReport {
        reaction: reaction.to_reaction_smiles(),
        fg_hits,
        main_fgs,
        byproducts,
        byproduct_error,
        equation,
        reaction_type: UNKNOWN_TYPE.to_string(),
        type_confidence: 0.0,
        evidence: Evidence::default(),
        signals: SignalFeatures::default(),
    };
    if let Ok(c) = base.classify_reaction_type(&query) {
        report.reaction_type = c.reaction_type;
        report.type_confidence = c.confidence;
        report.evidence = c.evidence;
        report.signals = base.signal_features(&query, &report.main_fg_names(), &report.byproduct_labels());
    }
    report
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;
    use std::sync::Arc;

    use super::*;

    fn base(lines: &str) -> ReactionBase {
        ReactionBase::ingest(Cursor::new(lines.to_string()), Arc::new(Resources::bundled())).unwrap().0
    }

    const AMIDE: &str = r#"{"id":"a1","reaction_type":"amide coupling","reactants":["CC(=O)Cl","CN"],"products":["CC(=O)NC"],"catalyst1":"","solvent1":"DCM","solvent2":"","reagent1":"TEA","reagent2":""}"#;

    #[test]
    fn amide_report() {
        let b = base(AMIDE);
        let x = Reaction::from_reaction_smiles("CC(=O)Cl.CN>>CC(=O)NC").unwrap();
        let r = general_chemist(&x, &b, &SalienceWeights::default());
        assert_eq!(r.top_byproduct().as_deref(), Some("HCl"));
        let names = r.main_fg_names();
        assert!(names.contains(&"acyl_chloride".to_string()) && names.contains(&"primary_amine".to_string()));
        let hit = r.fg_hits.iter().find(|h| h.fg == "acyl_chloride").unwrap();
        assert_eq!((hit.molecule, hit.atoms.clone()), (0, vec![1, 2, 3]));
        assert_eq!(r.equation.as_ref().unwrap().to_string(), "CC(=O)Cl + CN -> CC(=O)NC + Cl");
        assert_eq!(r.reaction_type, "amide coupling");
        assert_eq!(r.type_confidence, 1.0);
        assert_eq!(r.signals.s_byprod["HCl"], 1);
    }

    #[test]
    fn empty_base_degrades_type() {
        let b = ReactionBase::empty(Arc::new(Resources::bundled()));
        let x = Reaction::from_reaction_smiles("CC(=O)O.CCO>>CC(=O)OCC").unwrap();
        let r = general_chemist(&x, &b, &SalienceWeights::default());
        assert_eq!(r.reaction_type, UNKNOWN_TYPE);
        assert_eq!(r.type_confidence, 0.0);
        assert!(r.evidence.citations.is_empty());
        assert_eq!(r.top_byproduct().as_deref(), Some("H2O"));
        assert_eq!(r.equation.unwrap().to_string(), "CC(=O)O + CCO -> CC(=O)OCC + O");
    }

    #[test]
    fn negative_difference_is_recorded() {
        let b = ReactionBase::empty(Arc::new(Resources::bundled()));
        let x = Reaction::from_reaction_smiles("O=[N+]([O-])c1ccccc1>>Nc1ccccc1").unwrap();
        let r = general_chemist(&x, &b, &SalienceWeights::default());
        assert!(r.byproducts.is_none());
        assert!(r.byproduct_error.unwrap().contains('H'));
        assert!(r.equation.is_none());
    }
}
