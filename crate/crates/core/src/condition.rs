//! Five-slot condition configurations and the species dictionary that
//! canonicalizes slot values and carries role tags (`base`, `solvent`, ...).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{parse_smiles, Molecule, MoleculeKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Catalyst1,
    Solvent1,
    Solvent2,
    Reagent1,
    Reagent2,
}

impl Slot {
    pub const ALL: [Slot; 5] = [Slot::Catalyst1, Slot::Solvent1, Slot::Solvent2, Slot::Reagent1, Slot::Reagent2];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Catalyst1 => "catalyst1",
            Slot::Solvent1 => "solvent1",
            Slot::Solvent2 => "solvent2",
            Slot::Reagent1 => "reagent1",
            Slot::Reagent2 => "reagent2",
        }
    }

    pub fn from_name(name: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_solvent(self) -> bool {
        matches!(self, Slot::Solvent1 | Slot::Solvent2)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Species names per slot; the empty string marks an absent slot.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConditionConfig {
    pub catalyst1: String,
    pub solvent1: String,
    pub solvent2: String,
    pub reagent1: String,
    pub reagent2: String,
}

impl ConditionConfig {
    pub fn from_slots(values: [&str; 5]) -> Self {
        let [catalyst1, solvent1, solvent2, reagent1, reagent2] = values.map(str::to_string);
        ConditionConfig { catalyst1, solvent1, solvent2, reagent1, reagent2 }
    }

    pub fn get(&self, slot: Slot) -> &str {
        match slot {
            Slot::Catalyst1 => &self.catalyst1,
            Slot::Solvent1 => &self.solvent1,
            Slot::Solvent2 => &self.solvent2,
            Slot::Reagent1 => &self.reagent1,
            Slot::Reagent2 => &self.reagent2,
        }
    }

    pub fn set(&mut self, slot: Slot, value: impl Into<String>) {
        let v = value.into();
        match slot {
            Slot::Catalyst1 => self.catalyst1 = v,
            Slot::Solvent1 => self.solvent1 = v,
            Slot::Solvent2 => self.solvent2 = v,
            Slot::Reagent1 => self.reagent1 = v,
            Slot::Reagent2 => self.reagent2 = v,
        }
    }

    pub fn with(&self, slot: Slot, value: &str) -> Self {
        let mut c = self.clone();
        c.set(slot, value);
        c
    }

    pub fn is_empty(&self) -> bool {
        Slot::ALL.iter().all(|&s| self.get(s).is_empty())
    }

    /// Non-empty `(slot, species)` pairs in slot order.
    pub fn filled(&self) -> impl Iterator<Item = (Slot, &str)> + '_ {
        Slot::ALL.into_iter().map(|s| (s, self.get(s))).filter(|(_, v)| !v.is_empty())
    }

    /// Slot values joined by `|`; total order used for every deterministic tie-break.
    pub fn canonical_id(&self) -> String {
        Slot::ALL.map(|s| self.get(s)).join("|")
    }

    /// Number of slots whose values differ.
    pub fn hamming(&self, other: &ConditionConfig) -> usize {
        Slot::ALL.iter().filter(|&&s| self.get(s) != other.get(s)).count()
    }

    /// Fraction of the five slots on which both configs agree (empty equals empty).
    pub fn agreement(&self, other: &ConditionConfig) -> f64 {
        (Slot::ALL.len() - self.hamming(other)) as f64 / Slot::ALL.len() as f64
    }

    /// Rewrites every slot through `dict`, leaving unknown names unchanged.
    pub fn canonicalized(&self, dict: &SpeciesDictionary) -> Self {
        let mut out = self.clone();
        for slot in Slot::ALL {
            let v = self.get(slot);
            if let Some(name) = dict.canonical(v) {
                out.set(slot, name);
            }
        }
        out
    }
}

impl fmt::Display for ConditionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpeciesError {
    #[error("species dictionary line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate species name or synonym {0:?}")]
    DuplicateName(String),
    #[error("cannot read species dictionary: {0}")]
    Io(String),
}

#[derive(Debug, Clone)]
pub struct Species {
    pub name: String,
    pub smiles: Option<String>,
    pub molecule: Option<Molecule>,
    pub roles: BTreeSet<String>,
    pub synonyms: Vec<String>,
}

/// Lines of `name<TAB>SMILES<TAB>roles<TAB>synonyms`, with comma-separated roles,
/// semicolon-separated synonyms, `-` for an unknown structure, and `#` comments.
#[derive(Debug, Clone, Default)]
pub struct SpeciesDictionary {
    species: Vec<Species>,
    lookup: BTreeMap<String, usize>,
    by_key: BTreeMap<MoleculeKey, usize>,
}

const DEFAULT_SPECIES: &str = include_str!("../data/species.tsv");

impl SpeciesDictionary {
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_SPECIES).expect("bundled species dictionary is valid")
    }

    pub fn load(path: &Path) -> Result<Self, SpeciesError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpeciesError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, SpeciesError> {
        let mut dict = SpeciesDictionary::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end();
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            if cols.len() < 3 || cols.len() > 4 {
                return Err(SpeciesError::Parse { line, message: format!("expected 3 or 4 columns, got {}", cols.len()) });
            }
            let name = cols[0].trim();
            if name.is_empty() {
                return Err(SpeciesError::Parse { line, message: "empty name".into() });
            }
            let smiles = match cols[1].trim() {
                "" | "-" => None,
                s => Some(s.to_string()),
            };
            let molecule = match &smiles {
                Some(s) => Some(parse_smiles(s).map_err(|e| SpeciesError::Parse { line, message: e.to_string() })?),
                None => None,
            };
            let list = |s: &str| s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect::<Vec<_>>();
            let roles: BTreeSet<String> = list(cols[2]).into_iter().collect();
            let synonyms: Vec<String> = cols
                .get(3)
                .map(|s| s.split(';').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect())
                .unwrap_or_default();
            let idx = dict.species.len();
            for alias in std::iter::once(name.to_string()).chain(synonyms.iter().cloned()) {
                if dict.lookup.insert(alias.to_lowercase(), idx).is_some() {
                    return Err(SpeciesError::DuplicateName(alias));
                }
            }
            if let Some(m) = &molecule {
                dict.by_key.entry(m.key()).or_insert(idx);
            }
            dict.species.push(Species { name: name.to_string(), smiles, molecule, roles, synonyms });
        }
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Species> {
        self.species.iter()
    }

    /// Case-insensitive lookup by name or synonym.
    pub fn get(&self, name: &str) -> Option<&Species> {
        self.lookup.get(&name.trim().to_lowercase()).map(|&i| &self.species[i])
    }

    pub fn canonical(&self, name: &str) -> Option<&str> {
        self.get(name).map(|s| s.name.as_str())
    }

    pub fn has_role(&self, name: &str, role: &str) -> bool {
        self.get(name).is_some_and(|s| s.roles.contains(role))
    }

    /// Species whose structure has the same molecule key as `m`.
    pub fn by_structure(&self, m: &Molecule) -> Option<&Species> {
        self.by_key.get(&m.key()).map(|&i| &self.species[i])
    }
}
