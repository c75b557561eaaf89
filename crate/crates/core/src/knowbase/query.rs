//! Similarity, classification, and signal-feature queries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{KbError, ReactionBase};
use crate::condition::Slot;
use crate::molgraph::{mcs, tanimoto, Fingerprint, McsOptions, Molecule, FINGERPRINT_WIDTH};
use crate::reaction::{Reaction, Side};
use crate::tagger::{fg_names, FgLibrary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySettings {
    pub w_fg: f64,
    pub w_mcs: f64,
    pub w_tanimoto: f64,
    /// Neighbors retrieved per query side.
    pub k: usize,
    /// Node-expansion budget for each pairwise MCS.
    pub mcs_budget: u64,
}

impl Default for SimilaritySettings {
    fn default() -> Self {
        SimilaritySettings { w_fg: 0.4, w_mcs: 0.3, w_tanimoto: 0.3, k: 64, mcs_budget: 20_000 }
    }
}

/// Facet values on one side of a reaction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SideFacets {
    pub fg_jaccard: f64,
    pub mcs: f64,
    pub tanimoto: f64,
}

impl SideFacets {
    pub fn score(&self, s: &SimilaritySettings) -> f64 {
        s.w_fg * self.fg_jaccard + s.w_mcs * self.mcs + s.w_tanimoto * self.tanimoto
    }
}

/// Reaction-level match facets: each similarity is the mean over both sides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Facets {
    pub type_match: bool,
    pub fg_jaccard: f64,
    pub mcs: f64,
    pub tanimoto: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: usize,
    pub id: String,
    pub facets: SideFacets,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Citation {
    pub id: String,
    pub facets: Facets,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub citations: Vec<Citation>,
    /// Slot species counts over the cited records.
    pub cooccurrence: BTreeMap<Slot, BTreeMap<String, u32>>,
}

impl Evidence {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.citations.iter().map(|c| c.id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub reaction_type: String,
    pub confidence: f64,
    /// Normalized vote share per type; sums to 1.
    pub votes: BTreeMap<String, f64>,
    pub evidence: Evidence,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SignalFeatures {
    pub s_type: BTreeMap<String, f64>,
    pub s_role: BTreeMap<String, f64>,
    pub s_byprod: BTreeMap<String, u32>,
}

/// One query side with its functional groups and fingerprint precomputed.
#[derive(Debug, Clone)]
pub struct SideQuery {
    pub molecules: Vec<Molecule>,
    pub fgs: BTreeSet<String>,
    pub fingerprint: Fingerprint,
    pub atoms: usize,
}

impl SideQuery {
    pub fn new(molecules: Vec<Molecule>, library: &FgLibrary) -> Self {
        let fgs = fg_names(&molecules, library);
        let fingerprint = molecules.iter().fold(Fingerprint::empty(FINGERPRINT_WIDTH), |acc, m| {
            acc.union(&m.fingerprint()).expect("uniform width")
        });
        let atoms = molecules.iter().map(Molecule::atom_count).sum();
        SideQuery { molecules, fgs, fingerprint, atoms }
    }
}

/// Both sides of a query reaction.
#[derive(Debug, Clone)]
pub struct QueryContext {
    pub reactants: SideQuery,
    pub products: SideQuery,
}

impl QueryContext {
    pub fn new(reaction: &Reaction, library: &FgLibrary) -> Self {
        QueryContext {
            reactants: SideQuery::new(reaction.reactants.clone(), library),
            products: SideQuery::new(reaction.products.clone(), library),
        }
    }

    pub fn side(&self, side: Side) -> &SideQuery {
        match side {
            Side::Reactant => &self.reactants,
            Side::Product => &self.products,
        }
    }
}

/// Jaccard index; 1 when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 1.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

type McsCache = Mutex<HashMap<(usize, usize), usize>>;

impl ReactionBase {
    fn mcs_size(&self, q: &SideQuery, qi: usize, mol: usize, cache: &McsCache) -> usize {
        if let Some(&n) = cache.lock().expect("cache lock").get(&(qi, mol)) {
            return n;
        }
        let (a, b) = (&q.molecules[qi], self.molecule(mol));
        let n = if a == b {
            a.atom_count()
        } else {
            let opts = McsOptions { budget: self.settings().mcs_budget, ..McsOptions::default() };
            mcs(a, b, opts).size()
        };
        cache.lock().expect("cache lock").insert((qi, mol), n);
        n
    }

    /// Σ over query molecules of the best MCS against any record molecule,
    /// over the larger side's atom count.
    fn normalized_mcs(&self, q: &SideQuery, index: usize, side: Side, cache: &McsCache) -> f64 {
        let mols = self.record(index).mols(side);
        let record_atoms: usize = mols.iter().map(|&m| self.molecule(m).atom_count()).sum();
        let denom = q.atoms.max(record_atoms);
        if denom == 0 {
            return 1.0;
        }
        let total: usize = (0..q.molecules.len())
            .map(|qi| mols.iter().map(|&m| self.mcs_size(q, qi, m, cache)).max().unwrap_or(0))
            .sum();
        (total as f64 / denom as f64).min(1.0)
    }

    fn cheap_facets(&self, q: &SideQuery, index: usize, side: Side) -> (f64, f64) {
        let r = self.record(index);
        let t = tanimoto(&q.fingerprint, r.fingerprint(side)).unwrap_or(0.0);
        (jaccard(&q.fgs, r.fgs(side)), t)
    }

    /// All three facets of one record on one side.
    pub fn side_facets(&self, q: &SideQuery, index: usize, side: Side) -> SideFacets {
        let cache = McsCache::default();
        let (fg_jaccard, tanimoto) = self.cheap_facets(q, index, side);
        SideFacets { fg_jaccard, mcs: self.normalized_mcs(q, index, side, &cache), tanimoto }
    }

    /// Top-`k` records by combined facet score on `side`, ties by id.
    pub fn query_similar(&self, mols: &[Molecule], side: Side, k: usize) -> Vec<Neighbor> {
        let q = SideQuery::new(mols.to_vec(), &self.resources().library);
        self.query_similar_prepared(&q, side, k)
    }

    /// Exact top-`k`: records are visited in descending order of their
    /// fingerprint and FG score, and the scan stops once even a perfect MCS
    /// could not reach the current k-th score.
    pub fn query_similar_prepared(&self, q: &SideQuery, side: Side, k: usize) -> Vec<Neighbor> {
        if k == 0 || self.is_empty() {
            return Vec::new();
        }
        let s = *self.settings();
        let mut cheap: Vec<(f64, usize, f64, f64)> = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let (j, t) = self.cheap_facets(q, i, side);
                (s.w_fg * j + s.w_tanimoto * t, i, j, t)
            })
            .collect();
        cheap.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let cache = McsCache::default();
        let mut top: Vec<Neighbor> = Vec::new();
        const CHUNK: usize = 32;
        for chunk in cheap.chunks(CHUNK) {
            if top.len() >= k {
                let kth = top[k - 1].score;
                if chunk[0].0 + s.w_mcs < kth {
                    break;
                }
            }
            let scored: Vec<Neighbor> = chunk
                .par_iter()
                .map(|&(_, i, fg_jaccard, tanimoto)| {
                    let facets = SideFacets { fg_jaccard, mcs: self.normalized_mcs(q, i, side, &cache), tanimoto };
                    Neighbor { index: i, id: self.record(i).id.clone(), score: facets.score(&s), facets }
                })
                .collect();
            top.extend(scored);
            top.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
            top.truncate(k);
        }
        top
    }

    fn reaction_citation(&self, q: &QueryContext, index: usize, tau: Option<&str>) -> Citation {
        let s = *self.settings();
        let r = self.side_facets(&q.reactants, index, Side::Reactant);
        let p = self.side_facets(&q.products, index, Side::Product);
        let record = self.record(index);
        let facets = Facets {
            type_match: tau.is_some_and(|t| t == record.reaction_type),
            fg_jaccard: (r.fg_jaccard + p.fg_jaccard) / 2.0,
            mcs: (r.mcs + p.mcs) / 2.0,
            tanimoto: (r.tanimoto + p.tanimoto) / 2.0,
        };
        Citation { id: record.id.clone(), facets, score: (r.score(&s) + p.score(&s)) / 2.0 }
    }

    /// Union of the reactant- and product-side neighbor sets, each record
    /// scored on both sides. Sorted by index.
    fn neighbor_union(&self, q: &QueryContext) -> Vec<usize> {
        let k = self.settings().k;
        let mut idx: BTreeSet<usize> = BTreeSet::new();
        idx.extend(self.query_similar_prepared(&q.reactants, Side::Reactant, k).iter().map(|n| n.index));
        idx.extend(self.query_similar_prepared(&q.products, Side::Product, k).iter().map(|n| n.index));
        idx.into_iter().collect()
    }

    /// Weighted type vote over the neighbors of both sides; weights are the
    /// reaction-level facet scores. Ties go to the lexicographically smaller type.
    pub fn classify_reaction_type(&self, q: &QueryContext) -> Result<Classification, KbError> {
        if self.is_empty() {
            return Err(KbError::EmptyBase);
        }
        let voters = self.neighbor_union(q);
        let mut citations: Vec<(usize, Citation)> =
            voters.par_iter().map(|&i| (i, self.reaction_citation(q, i, None))).collect();
        let total: f64 = citations.iter().map(|(_, c)| c.score).sum();
        let uniform = total <= 0.0;
        let mut tally: BTreeMap<String, f64> = BTreeMap::new();
        for (i, c) in &citations {
            let w = if uniform { 1.0 } else { c.score };
            *tally.entry(self.record(*i).reaction_type.clone()).or_default() += w;
        }
        let sum: f64 = tally.values().sum();
        let votes: BTreeMap<String, f64> = tally.into_iter().map(|(t, w)| (t, w / sum)).collect();
        let (tau, confidence) = votes
            .iter()
            .fold(None::<(&String, f64)>, |best, (t, &w)| match best {
                Some((_, bw)) if bw >= w => best,
                _ => Some((t, w)),
            })
            .map(|(t, w)| (t.clone(), w))
            .expect("at least one voter");
        for (i, c) in citations.iter_mut() {
            c.facets.type_match = self.record(*i).reaction_type == tau;
        }
        citations.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then_with(|| a.1.id.cmp(&b.1.id)));
        let evidence = self.evidence_from(citations.into_iter().map(|(_, c)| c).collect());
        Ok(Classification { reaction_type: tau, confidence, votes, evidence })
    }

    /// Attaches slot co-occurrence counts over the cited records.
    pub fn evidence_from(&self, citations: Vec<Citation>) -> Evidence {
        let mut cooccurrence: BTreeMap<Slot, BTreeMap<String, u32>> = BTreeMap::new();
        for c in &citations {
            if let Some(r) = self.get(&c.id) {
                for (slot, species) in r.condition.filled() {
                    *cooccurrence.entry(slot).or_default().entry(species.to_string()).or_default() += 1;
                }
            }
        }
        Evidence { citations, cooccurrence }
    }

    /// Evidence for an arbitrary record subset, scored against `q`.
    pub fn evidence_for(&self, q: &QueryContext, indices: &[usize], tau: Option<&str>) -> Evidence {
        let mut citations: Vec<Citation> = indices.par_iter().map(|&i| self.reaction_citation(q, i, tau)).collect();
        citations.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        self.evidence_from(citations)
    }

    /// `s_type` from the vote shares, `s_role` as the fraction of voting
    /// records whose reactants carry each main group, and `s_byprod` as the
    /// number of voting records whose by-product matches each label.
    pub fn signal_features(&self, q: &QueryContext, main_fgs: &[String], byproducts: &[String]) -> SignalFeatures {
        let Ok(c) = self.classify_reaction_type(q) else {
            return SignalFeatures::default();
        };
        let cited: Vec<&super::ReactionRecord> = c.evidence.ids().filter_map(|id| self.get(id)).collect();
        let n = cited.len().max(1) as f64;
        let s_role = main_fgs
            .iter()
            .map(|fg| (fg.clone(), cited.iter().filter(|r| r.reactant_fgs.contains(fg)).count() as f64 / n))
            .collect();
        let s_byprod = byproducts
            .iter()
            .map(|b| (b.clone(), cited.iter().filter(|r| r.byproduct.as_deref() == Some(b)).count() as u32))
            .collect();
        SignalFeatures { s_type: c.votes, s_role, s_byprod }
    }
}
