//! The reaction base: ingested records with type, functional-group, and
//! fingerprint indexes, slot co-occurrence tables, and evidence queries.

mod query;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::enumerate_byproducts;
use crate::condition::{ConditionConfig, Slot};
use crate::molgraph::{Fingerprint, Molecule, FINGERPRINT_WIDTH};
use crate::reaction::{Reaction, Side};
use crate::resources::Resources;
use crate::tagger::fg_names;

pub use query::{
    Citation, Classification, Evidence, Facets, Neighbor, QueryContext, SideFacets, SideQuery, SignalFeatures,
    SimilaritySettings,
};
pub use snapshot::SNAPSHOT_HEADER;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read reaction source: {0}")]
    UnreadableSource(String),
    #[error("duplicate record id {0:?}")]
    DuplicateId(String),
    #[error("reaction base is empty")]
    EmptyBase,
    #[error("snapshot: {0}")]
    Snapshot(String),
}

/// One line of the record stream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: String,
    pub reaction_type: String,
    pub reactants: Vec<String>,
    pub products: Vec<String>,
    #[serde(default)]
    pub catalyst1: String,
    #[serde(default)]
    pub solvent1: String,
    #[serde(default)]
    pub solvent2: String,
    #[serde(default)]
    pub reagent1: String,
    #[serde(default)]
    pub reagent2: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
}

impl RawRecord {
    pub fn condition(&self) -> ConditionConfig {
        ConditionConfig {
            catalyst1: self.catalyst1.clone(),
            solvent1: self.solvent1.clone(),
            solvent2: self.solvent2.clone(),
            reagent1: self.reagent1.clone(),
            reagent2: self.reagent2.clone(),
        }
    }
}

pub type MolId = usize;

#[derive(Debug, Clone)]
pub struct ReactionRecord {
    pub id: String,
    pub reaction_type: String,
    pub reactants: Vec<String>,
    pub products: Vec<String>,
    pub condition: ConditionConfig,
    pub provenance: String,
    /// Interned molecule ids per side.
    pub reactant_mols: Vec<MolId>,
    pub product_mols: Vec<MolId>,
    pub reactant_fgs: BTreeSet<String>,
    pub product_fgs: BTreeSet<String>,
    pub reactant_fp: Fingerprint,
    pub product_fp: Fingerprint,
    /// Label of the most parsimonious by-product hypothesis.
    pub byproduct: Option<String>,
}

impl ReactionRecord {
    pub fn mols(&self, side: Side) -> &[MolId] {
        match side {
            Side::Reactant => &self.reactant_mols,
            Side::Product => &self.product_mols,
        }
    }

    pub fn fgs(&self, side: Side) -> &BTreeSet<String> {
        match side {
            Side::Reactant => &self.reactant_fgs,
            Side::Product => &self.product_fgs,
        }
    }

    pub fn fingerprint(&self, side: Side) -> &Fingerprint {
        match side {
            Side::Reactant => &self.reactant_fp,
            Side::Product => &self.product_fp,
        }
    }

    pub fn to_raw(&self) -> RawRecord {
        RawRecord {
            id: self.id.clone(),
            reaction_type: self.reaction_type.clone(),
            reactants: self.reactants.clone(),
            products: self.products.clone(),
            catalyst1: self.condition.catalyst1.clone(),
            solvent1: self.condition.solvent1.clone(),
            solvent2: self.condition.solvent2.clone(),
            reagent1: self.condition.reagent1.clone(),
            reagent2: self.condition.reagent2.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub indexed: usize,
    pub skipped: usize,
    /// `(line number, reason)` per skipped record.
    pub skipped_lines: Vec<(usize, String)>,
}

impl std::fmt::Display for IngestReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} indexed, {} skipped", self.indexed, self.skipped)
    }
}

/// Per-slot species counts.
pub type SlotCounts = BTreeMap<Slot, BTreeMap<String, u32>>;

/// Read-only after construction; safe to share between threads.
#[derive(Debug)]
pub struct ReactionBase {
    resources: Arc<Resources>,
    settings: SimilaritySettings,
    molecules: Vec<Molecule>,
    molecule_smiles: Vec<String>,
    records: Vec<ReactionRecord>,
    by_id: BTreeMap<String, usize>,
    by_type: BTreeMap<String, Vec<usize>>,
    /// Reactant-side functional group → records.
    by_fg: BTreeMap<String, Vec<usize>>,
    cooc_type: BTreeMap<String, SlotCounts>,
    cooc_fg: BTreeMap<String, SlotCounts>,
}

struct Interner {
    ids: BTreeMap<String, MolId>,
    molecules: Vec<Molecule>,
    smiles: Vec<String>,
    fgs: Vec<BTreeSet<String>>,
}

impl Interner {
    fn intern(&mut self, smiles: &str, resources: &Resources) -> Result<MolId, String> {
        if let Some(&id) = self.ids.get(smiles) {
            return Ok(id);
        }
        let m = crate::molgraph::parse_smiles(smiles).map_err(|e| format!("SMILES {smiles:?}: {e}"))?;
        let id = self.molecules.len();
        self.fgs.push(fg_names(std::slice::from_ref(&m), &resources.library));
        self.molecules.push(m);
        self.smiles.push(smiles.to_string());
        self.ids.insert(smiles.to_string(), id);
        Ok(id)
    }
}

impl ReactionBase {
    pub fn empty(resources: Arc<Resources>) -> Self {
        ReactionBase {
            resources,
            settings: SimilaritySettings::default(),
            molecules: Vec::new(),
            molecule_smiles: Vec::new(),
            records: Vec::new(),
            by_id: BTreeMap::new(),
            by_type: BTreeMap::new(),
            by_fg: BTreeMap::new(),
            cooc_type: BTreeMap::new(),
            cooc_fg: BTreeMap::new(),
        }
    }

    /// Reads line-delimited JSON records. Malformed lines are skipped and
    /// counted; a repeated id aborts ingestion. Records are indexed in id
    /// order regardless of input order.
    pub fn ingest<R: BufRead>(source: R, resources: Arc<Resources>) -> Result<(Self, IngestReport), KbError> {
        let mut raws: Vec<(usize, RawRecord)> = Vec::new();
        let mut report = IngestReport::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line.map_err(|e| KbError::UnreadableSource(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RawRecord>(&line) {
                Ok(raw) => {
                    if !seen.insert(raw.id.clone()) {
                        return Err(KbError::DuplicateId(raw.id));
                    }
                    raws.push((line_no, raw));
                }
                Err(e) => {
                    report.skipped += 1;
                    report.skipped_lines.push((line_no, format!("malformed record: {e}")));
                }
            }
        }
        let (base, more) = Self::from_raw(raws, resources);
        report.indexed = base.records.len();
        report.skipped += more.len();
        report.skipped_lines.extend(more);
        report.skipped_lines.sort();
        Ok((base, report))
    }

    /// Builds a base from already-parsed records; returns skipped `(line, reason)`.
    pub fn from_raw(mut raws: Vec<(usize, RawRecord)>, resources: Arc<Resources>) -> (Self, Vec<(usize, String)>) {
        raws.sort_by(|a, b| a.1.id.cmp(&b.1.id));
        let mut interner =
            Interner { ids: BTreeMap::new(), molecules: Vec::new(), smiles: Vec::new(), fgs: Vec::new() };
        let mut skipped = Vec::new();
        let mut records = Vec::new();
        for (line, raw) in raws {
            match Self::build_record(raw, &mut interner, &resources) {
                Ok(r) => records.push(r),
                Err(reason) => skipped.push((line, reason)),
            }
        }
        let mut base = ReactionBase::empty(resources);
        base.molecules = interner.molecules;
        base.molecule_smiles = interner.smiles;
        base.records = records;
        base.rebuild_indexes();
        (base, skipped)
    }

    fn build_record(raw: RawRecord, interner: &mut Interner, resources: &Resources) -> Result<ReactionRecord, String> {
        if raw.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if raw.reaction_type.trim().is_empty() {
            return Err(format!("{}: empty reaction_type", raw.id));
        }
        if raw.reactants.is_empty() || raw.products.is_empty() {
            return Err(format!("{}: reactants and products must be non-empty", raw.id));
        }
        let mut condition = raw.condition();
        if condition.is_empty() {
            return Err(format!("{}: every condition slot is empty", raw.id));
        }
        for slot in Slot::ALL {
            let v = condition.get(slot).trim().to_string();
            if v.is_empty() {
                condition.set(slot, "");
                continue;
            }
            match resources.species.canonical(&v) {
                Some(name) => condition.set(slot, name),
                None => return Err(format!("{}: unknown species {v:?} in {slot}", raw.id)),
            }
        }
        let intern_all = |list: &[String], interner: &mut Interner| -> Result<Vec<MolId>, String> {
            list.iter().map(|s| interner.intern(s.trim(), resources).map_err(|e| format!("{}: {e}", raw.id))).collect()
        };
        let reactant_mols = intern_all(&raw.reactants, interner)?;
        let product_mols = intern_all(&raw.products, interner)?;
        let side_fgs = |ids: &[MolId], interner: &Interner| -> BTreeSet<String> {
            ids.iter().flat_map(|&i| interner.fgs[i].iter().cloned()).collect()
        };
        let side_fp = |ids: &[MolId], interner: &Interner| -> Fingerprint {
            ids.iter().fold(Fingerprint::empty(FINGERPRINT_WIDTH), |acc, &i| {
                acc.union(&interner.molecules[i].fingerprint()).expect("uniform width")
            })
        };
        let reactants: Vec<Molecule> = reactant_mols.iter().map(|&i| interner.molecules[i].clone()).collect();
        let products: Vec<Molecule> = product_mols.iter().map(|&i| interner.molecules[i].clone()).collect();
        let byproduct = enumerate_byproducts(&reactants, &products, &resources.leaving_groups)
            .ok()
            .and_then(|a| a.top().map(|h| h.label()));
        Ok(ReactionRecord {
            id: raw.id.trim().to_string(),
            reaction_type: raw.reaction_type.trim().to_string(),
            reactants: raw.reactants.iter().map(|s| s.trim().to_string()).collect(),
            products: raw.products.iter().map(|s| s.trim().to_string()).collect(),
            condition,
            provenance: raw.provenance,
            reactant_fgs: side_fgs(&reactant_mols, interner),
            product_fgs: side_fgs(&product_mols, interner),
            reactant_fp: side_fp(&reactant_mols, interner),
            product_fp: side_fp(&product_mols, interner),
            reactant_mols,
            product_mols,
            byproduct,
        })
    }

    fn rebuild_indexes(&mut self) {
        self.by_id.clear();
        self.by_type.clear();
        self.by_fg.clear();
        self.cooc_type.clear();
        self.cooc_fg.clear();
        for (i, r) in self.records.iter().enumerate() {
            self.by_id.insert(r.id.clone(), i);
            self.by_type.entry(r.reaction_type.clone()).or_default().push(i);
            for fg in &r.reactant_fgs {
                self.by_fg.entry(fg.clone()).or_default().push(i);
            }
            for (slot, species) in r.condition.filled() {
                *self
                    .cooc_type
                    .entry(r.reaction_type.clone())
                    .or_default()
                    .entry(slot)
                    .or_default()
                    .entry(species.to_string())
                    .or_default() += 1;
                for fg in &r.reactant_fgs {
                    *self
                        .cooc_fg
                        .entry(fg.clone())
                        .or_default()
                        .entry(slot)
                        .or_default()
                        .entry(species.to_string())
                        .or_default() += 1;
                }
            }
        }
    }

    pub fn with_settings(mut self, settings: SimilaritySettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn settings(&self) -> &SimilaritySettings {
        &self.settings
    }

    pub fn resources(&self) -> &Arc<Resources> {
        &self.resources
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in id order.
    pub fn records(&self) -> &[ReactionRecord] {
        &self.records
    }

    pub fn record(&self, index: usize) -> &ReactionRecord {
        &self.records[index]
    }

    pub fn get(&self, id: &str) -> Option<&ReactionRecord> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn molecule(&self, id: MolId) -> &Molecule {
        &self.molecules[id]
    }

    pub fn molecule_smiles(&self, id: MolId) -> &str {
        &self.molecule_smiles[id]
    }

    /// The record's reactants and products as a [`Reaction`].
    pub fn reaction(&self, index: usize) -> Reaction {
        let r = &self.records[index];
        Reaction {
            reactant_smiles: r.reactants.clone(),
            product_smiles: r.products.clone(),
            reactants: r.reactant_mols.iter().map(|&i| self.molecules[i].clone()).collect(),
            products: r.product_mols.iter().map(|&i| self.molecules[i].clone()).collect(),
        }
    }

    /// Record ids with exactly this (case-sensitive) reaction type.
    pub fn query_type(&self, reaction_type: &str) -> Vec<String> {
        self.by_type
            .get(reaction_type)
            .map(|v| v.iter().map(|&i| self.records[i].id.clone()).collect())
            .unwrap_or_default()
    }

    pub fn reaction_types(&self) -> impl Iterator<Item = &str> {
        self.by_type.keys().map(String::as_str)
    }

    /// Record indices whose reactants carry `fg`.
    pub fn records_with_fg(&self, fg: &str) -> &[usize] {
        self.by_fg.get(fg).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Records using each value of `slot` (the empty string counts absent
    /// slots) among records of type `reaction_type`; when no record has that
    /// type, among records whose reactants carry any of `main_fgs`.
    pub fn slot_distribution(&self, slot: Slot, reaction_type: &str, main_fgs: &[String]) -> BTreeMap<String, u32> {
        let mut out: BTreeMap<String, u32> = BTreeMap::new();
        if let Some(idx) = self.by_type.get(reaction_type) {
            let counts = self.cooc_type.get(reaction_type).and_then(|t| t.get(&slot));
            let used: u32 = counts.map_or(0, |m| m.values().sum());
            if idx.len() as u32 > used {
                out.insert(String::new(), idx.len() as u32 - used);
            }
            out.extend(counts.cloned().unwrap_or_default());
            return out;
        }
        let mut idx: BTreeSet<usize> = BTreeSet::new();
        for fg in main_fgs {
            idx.extend(self.records_with_fg(fg));
        }
        for i in idx {
            *out.entry(self.records[i].condition.get(slot).to_string()).or_default() += 1;
        }
        out
    }

    /// Species used in `slot`, ranked by the number of records of type
    /// `reaction_type` using them; when no record has that type, by the
    /// number of records whose reactants carry any of `main_fgs`. Ties by name.
    pub fn cooccurring_alternatives(&self, slot: Slot, reaction_type: &str, main_fgs: &[String]) -> Vec<(String, u32)> {
        let mut ranked: Vec<(String, u32)> =
            self.slot_distribution(slot, reaction_type, main_fgs).into_iter().filter(|(s, _)| !s.is_empty()).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked
    }

    /// Co-occurrence counts of `species` in `slot` among records of `reaction_type`.
    pub fn type_cooccurrence(&self, reaction_type: &str, slot: Slot, species: &str) -> u32 {
        self.cooc_type
            .get(reaction_type)
            .and_then(|t| t.get(&slot))
            .and_then(|m| m.get(species))
            .copied()
            .unwrap_or(0)
    }

    /// Stable text digest of every index, used to confirm rebuilds are identical.
    pub fn index_digest(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{:?}\t{:?}\t{:?}\t{:?}\t{:?}\n",
                r.id,
                r.reaction_type,
                r.condition.canonical_id(),
                r.reactant_fgs,
                r.product_fgs,
                r.reactant_fp.words().iter().map(|w| format!("{w:016x}")).collect::<String>(),
                r.product_fp.words().iter().map(|w| format!("{w:016x}")).collect::<String>(),
                r.byproduct
            ));
        }
        out.push_str(&format!("{:?}\n{:?}\n{:?}\n{:?}\n", self.by_type, self.by_fg, self.cooc_type, self.cooc_fg));
        out
    }
}
