//! Constraint engine: stoichiometric balancing, atom mapping, by-product
//! hypotheses, and the named hard-check registry.

mod atommap;
mod byproducts;
mod checks;
mod stoich;

use thiserror::Error;

use crate::molgraph::Element;

pub use atommap::{derive_atom_map, MappedAtom, ReactionMapping};
pub use byproducts::{
    enumerate_byproducts, ByproductAnalysis, ByproductHypothesis, LeavingGroup, LeavingGroupTable, SpeciesCount,
};
pub use checks::{
    run_hard_checks, CheckContext, CheckFn, CheckRegistry, CheckResult, ConstraintReport, BYPRODUCT_COMPATIBILITY,
    CHARGE_NEUTRALITY, MASS_BALANCE, NO_REACTANT_IN_CONDITIONS, SOLVENT_ROLE,
};
pub use stoich::{balance_stoichiometry, Stoichiometry, MAX_COEFFICIENT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BalanceError {
    #[error("reaction side is empty")]
    EmptySide,
    #[error("no positive integer balance with coefficients up to {MAX_COEFFICIENT}")]
    Unbalanceable,
    #[error("products exceed reactants by {deficit} {element}; a reagent is probably missing")]
    NegativeDifference { element: Element, deficit: i64 },
    #[error("leaving-group table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("cannot read leaving-group table: {0}")]
    Io(String),
}
