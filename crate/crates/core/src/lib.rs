//! Reaction-condition reasoning engine.

pub mod balance;
pub mod chemist;
pub mod condition;
pub mod debate;
pub mod knowbase;
pub mod molgraph;
pub mod pipeline;
pub mod rationale;
pub mod reaction;
pub mod recall;
pub mod resources;
pub mod tagger;
pub mod trainkit;

pub use condition::{ConditionConfig, Slot, SpeciesDictionary};
pub use molgraph::{parse_smarts, parse_smiles, AtomMapping, ElementCounts, Fingerprint, MolError, Molecule, Pattern};
pub use reaction::{Reaction, Side};
