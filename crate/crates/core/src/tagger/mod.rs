//! Functional-group tagging over reactant sets and salience ranking into a
//! main functional-group list.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::molgraph::{match_pattern, parse_smarts, MolError, Molecule, Pattern};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaggerError {
    #[error("library line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("library line {line}: {source}")]
    Smarts { line: usize, source: MolError },
    #[error("duplicate functional group name {0:?}")]
    DuplicateName(String),
    #[error("cannot read library: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FgRole {
    Electrophile,
    Nucleophile,
    Neutral,
}

impl FromStr for FgRole {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "electrophile" => Ok(FgRole::Electrophile),
            "nucleophile" => Ok(FgRole::Nucleophile),
            "neutral" => Ok(FgRole::Neutral),
            other => Err(format!("unknown role {other:?}")),
        }
    }
}

impl fmt::Display for FgRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FgRole::Electrophile => "electrophile",
            FgRole::Nucleophile => "nucleophile",
            FgRole::Neutral => "neutral",
        })
    }
}

#[derive(Debug, Clone)]
pub struct FgEntry {
    pub name: String,
    pub smarts: String,
    pub pattern: Pattern,
    pub role: FgRole,
    pub activation: u8,
}

#[derive(Debug, Clone, Default)]
pub struct FgLibrary {
    entries: Vec<FgEntry>,
    by_name: BTreeMap<String, usize>,
}

const DEFAULT_LIBRARY: &str = include_str!("../../data/fg_library.tsv");

impl FgLibrary {
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_LIBRARY).expect("bundled functional-group library is valid")
    }

    pub fn load(path: &Path) -> Result<Self, TaggerError> {
        let text = std::fs::read_to_string(path).map_err(|e| TaggerError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `name<TAB>SMARTS<TAB>role<TAB>activation` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, TaggerError> {
        let mut lib = FgLibrary::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() || raw.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let [name, smarts, role, activation] = cols[..] else {
                return Err(TaggerError::Parse { line, message: format!("expected 4 columns, got {}", cols.len()) });
            };
            let role: FgRole = role.parse().map_err(|message| TaggerError::Parse { line, message })?;
            let activation: u8 = activation
                .parse()
                .ok()
                .filter(|a| *a <= 3)
                .ok_or_else(|| TaggerError::Parse { line, message: format!("activation {activation:?} not in 0..=3") })?;
            let pattern = parse_smarts(smarts).map_err(|source| TaggerError::Smarts { line, source })?;
            if lib.by_name.insert(name.to_string(), lib.entries.len()).is_some() {
                return Err(TaggerError::DuplicateName(name.to_string()));
            }
            lib.entries.push(FgEntry { name: name.to_string(), smarts: smarts.to_string(), pattern, role, activation });
        }
        Ok(lib)
    }

    pub fn entries(&self) -> &[FgEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&FgEntry> {
        self.by_name.get(name).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FgHit {
    pub fg: String,
    /// Index into the reactant list.
    pub molecule: usize,
    /// Matched atoms, sorted.
    pub atoms: Vec<usize>,
}

/// Every library embedding in every molecule, one hit per distinct atom set,
/// ordered by molecule, then library order, then matched atoms.
pub fn tag_reactants(reactants: &[Molecule], lib: &FgLibrary) -> Vec<FgHit> {
    let mut hits = Vec::new();
    for (mi, mol) in reactants.iter().enumerate() {
        for entry in &lib.entries {
            for m in match_pattern(&entry.pattern, mol) {
                hits.push(FgHit { fg: entry.name.clone(), molecule: mi, atoms: m.target_atoms() });
            }
        }
    }
    hits
}

/// Names of functional groups present anywhere in `mols`, sorted.
pub fn fg_names(mols: &[Molecule], lib: &FgLibrary) -> BTreeSet<String> {
    mols.iter()
        .flat_map(|m| {
            lib.entries
                .iter()
                .filter(|e| !match_pattern(&e.pattern, m).is_empty())
                .map(|e| e.name.clone())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SalienceWeights {
    pub activation: f64,
    pub electrophile: f64,
    pub nucleophile: f64,
    pub neutral: f64,
    pub frequency: f64,
    /// Size of the main functional-group set.
    pub top_n: usize,
}

impl Default for SalienceWeights {
    fn default() -> Self {
        SalienceWeights { activation: 1.0, electrophile: 0.5, nucleophile: 0.4, neutral: 0.1, frequency: 0.2, top_n: 4 }
    }
}

impl SalienceWeights {
    pub fn role(&self, role: FgRole) -> f64 {
        match role {
            FgRole::Electrophile => self.electrophile,
            FgRole::Nucleophile => self.nucleophile,
            FgRole::Neutral => self.neutral,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFg {
    pub name: String,
    pub salience: f64,
    pub hits: Vec<FgHit>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MainFgList {
    pub ranked: Vec<RankedFg>,
    pub top_n: usize,
}

impl MainFgList {
    /// The leading `top_n` entries.
    pub fn main(&self) -> &[RankedFg] {
        &self.ranked[..self.top_n.min(self.ranked.len())]
    }

    pub fn main_names(&self) -> Vec<String> {
        self.main().iter().map(|r| r.name.clone()).collect()
    }
}

/// `salience = w_act·activation + w_role(role) + w_freq·(hits of fg / all hits)`,
/// sorted by descending salience with ties broken by name. Hits whose group is
/// not in `lib` are ignored.
pub fn rank_salience(hits: &[FgHit], lib: &FgLibrary, w: &SalienceWeights) -> MainFgList {
    let mut groups: BTreeMap<&str, Vec<FgHit>> = BTreeMap::new();
    let mut total = 0usize;
    for h in hits {
        if lib.get(&h.fg).is_some() {
            groups.entry(h.fg.as_str()).or_default().push(h.clone());
            total += 1;
        }
    }
    let mut ranked: Vec<RankedFg> = groups
        .into_iter()
        .map(|(name, mut group)| {
            let entry = lib.get(name).unwrap();
            group.sort();
            let freq = group.len() as f64 / total as f64;
            let salience = w.activation * entry.activation as f64 + w.role(entry.role) + w.frequency * freq;
            RankedFg { name: name.to_string(), salience, hits: group }
        })
        .collect();
    ranked.sort_by(|a, b| b.salience.total_cmp(&a.salience).then_with(|| a.name.cmp(&b.name)));
    MainFgList { ranked, top_n: w.top_n }
}
