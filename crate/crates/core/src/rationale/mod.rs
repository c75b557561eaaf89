//! Rationale certificates: the mechanistic summary, hard-check report,
//! cited evidence and a claim derivation for each surviving condition, the
//! validity test over them, and diversity-aware final selection.

mod select;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::ConstraintReport;
use crate::condition::{ConditionConfig, Slot};
use crate::debate::{DebateContext, Survivor};
use crate::knowbase::{Citation, Evidence, ReactionBase};

pub use select::{diversity, objective, select_final, RecommendationSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationaleError {
    #[error("only {valid} valid candidates for {k_out} recommendations")]
    NotEnoughValid { valid: usize, k_out: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RationaleSettings {
    /// Alignment threshold for validity.
    pub delta: f64,
    /// Diversity weight in the selection objective.
    pub lambda: f64,
    pub k_out: usize,
    pub max_citations: usize,
    /// Largest candidate count solved by exhaustive search.
    pub exact_limit: usize,
}

impl Default for RationaleSettings {
    fn default() -> Self {
        RationaleSettings { delta: 0.5, lambda: 0.3, k_out: 10, max_citations: 8, exact_limit: 15 }
    }
}

/// Fields of the mechanistic summary a claim can rest on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismField {
    MainFgs,
    ReactionType,
    Byproduct,
    Equation,
}

impl fmt::Display for MechanismField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MechanismField::MainFgs => "main_fgs",
            MechanismField::ReactionType => "reaction_type",
            MechanismField::Byproduct => "byproduct",
            MechanismField::Equation => "equation",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Mechanism(MechanismField),
    Record(String),
    /// A hard check by name.
    Check(String),
}

impl fmt::Display for Support {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Support::Mechanism(m) => write!(f, "M:{m}"),
            Support::Record(id) => write!(f, "E:{id}"),
            Support::Check(c) => write!(f, "S:{c}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    pub text: String,
    pub support: Vec<Support>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub reaction: String,
    pub main_fgs: Vec<String>,
    pub reaction_type: String,
    pub byproduct: Option<String>,
    /// Display form of the balanced equation.
    pub equation: Option<String>,
}

impl Mechanism {
    pub fn from_context(ctx: &DebateContext<'_>) -> Self {
        let r = ctx.report;
        Mechanism {
            reaction: r.reaction.clone(),
            main_fgs: r.main_fg_names(),
            reaction_type: r.reaction_type.clone(),
            byproduct: r.top_byproduct(),
            equation: r.equation.as_ref().map(|e| e.to_string()),
        }
    }

    /// Whether the field exists and is non-empty.
    pub fn resolves(&self, field: MechanismField) -> bool {
        match field {
            MechanismField::MainFgs => !self.main_fgs.is_empty(),
            MechanismField::ReactionType => !self.reaction_type.is_empty(),
            MechanismField::Byproduct => self.byproduct.as_deref().is_some_and(|b| !b.is_empty()),
            MechanismField::Equation => self.equation.as_deref().is_some_and(|e| !e.is_empty()),
        }
    }
}

/// The certificate `(M, S, E, Π)` for one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rationale {
    pub mechanism: Mechanism,
    pub constraints: ConstraintReport,
    pub evidence: Evidence,
    pub derivation: Vec<Claim>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityResult {
    pub constr_ok: bool,
    pub align: f64,
    pub delta: f64,
    pub coherent_ok: bool,
    pub valid: bool,
}

impl ValidityResult {
    pub fn new(constr_ok: bool, align: f64, delta: f64, coherent_ok: bool) -> Self {
        ValidityResult { constr_ok, align, delta, coherent_ok, valid: constr_ok && align >= delta && coherent_ok }
    }
}

/// A scored, certified condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub config: ConditionConfig,
    pub utility: f64,
    pub rationale: Rationale,
    pub validity: ValidityResult,
}

impl Recommendation {
    pub fn id(&self) -> String {
        self.config.canonical_id()
    }
}

const W_TYPE: f64 = 0.35;
const W_FG: f64 = 0.25;
const W_MCS: f64 = 0.2;
const W_TANIMOTO: f64 = 0.2;

/// Reaction-level similarity of one citation, before slot agreement.
pub fn citation_alignment(c: &Citation) -> f64 {
    let f = &c.facets;
    W_TYPE * f64::from(u8::from(f.type_match)) + W_FG * f.fg_jaccard + W_MCS * f.mcs + W_TANIMOTO * f.tanimoto
}

/// Citation-score-weighted mean over the cited records of the facet blend
/// times slot agreement with the record's config. Uniform weights when every
/// score is zero; 0 for empty evidence. Ids missing from `base` are skipped.
pub fn align_score(evidence: &Evidence, base: &ReactionBase, config: &ConditionConfig) -> f64 {
    let items: Vec<(f64, f64)> = evidence
        .citations
        .iter()
        .filter_map(|c| {
            let record = base.get(&c.id)?;
            Some((c.score, citation_alignment(c) * config.agreement(&record.condition)))
        })
        .collect();
    if items.is_empty() {
        return 0.0;
    }
    let total: f64 = items.iter().map(|x| x.0).sum();
    let v = if total > 0.0 {
        items.iter().map(|(w, a)| w * a).sum::<f64>() / total
    } else {
        items.iter().map(|x| x.1).sum::<f64>() / items.len() as f64
    };
    v.clamp(0.0, 1.0)
}

/// `0.5·align + 0.3·pass_fraction + 0.2·depth`.
pub fn utility(align: f64, pass_fraction: f64, depth: f64) -> f64 {
    0.5 * align + 0.3 * pass_fraction + 0.2 * depth
}

/// True when every claim has support, every tag resolves against `M`, `E`
/// and `S`, and no claim rests on a failed check.
pub fn coherence_check(derivation: &[Claim], mechanism: &Mechanism, evidence: &Evidence, constraints: &ConstraintReport) -> bool {
    let ids: BTreeSet<&str> = evidence.ids().collect();
    derivation.iter().all(|claim| {
        !claim.support.is_empty()
            && claim.support.iter().all(|s| match s {
                Support::Mechanism(f) => mechanism.resolves(*f),
                Support::Record(id) => ids.contains(id.as_str()),
                Support::Check(name) => constraints.get(name).is_some_and(|c| c.passed),
            })
    })
}

pub fn validate(config: &ConditionConfig, rationale: &Rationale, base: &ReactionBase, delta: f64) -> ValidityResult {
    let align = align_score(&rationale.evidence, base, config);
    let coherent = coherence_check(&rationale.derivation, &rationale.mechanism, &rationale.evidence, &rationale.constraints);
    ValidityResult::new(rationale.constraints.passed, align, delta, coherent)
}

/// Records backing one condition: the candidate's provenance plus report
/// citations agreeing on a majority of slots, best `limit` by score.
pub fn candidate_evidence(ctx: &DebateContext<'_>, config: &ConditionConfig, provenance: &[String], limit: usize) -> Evidence {
    let base = ctx.base;
    let mut citations: Vec<Citation> = ctx
        .report
        .evidence
        .citations
        .iter()
        .filter(|c| base.get(&c.id).is_some_and(|r| config.hamming(&r.condition) * 2 < Slot::ALL.len()))
        .cloned()
        .collect();
    let have: BTreeSet<String> = ctx.report.evidence.ids().map(str::to_string).collect();
    let extra: Vec<usize> = provenance
        .iter()
        .filter(|id| !have.contains(id.as_str()))
        .filter_map(|id| base.index_of(id))
        .take(limit)
        .collect();
    if !extra.is_empty() {
        citations.extend(base.evidence_for(&ctx.query, &extra, Some(&ctx.report.reaction_type)).citations);
    }
    citations.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    citations.dedup_by(|a, b| a.id == b.id);
    citations.truncate(limit);
    base.evidence_from(citations)
}

fn join_ids<'a>(ids: impl Iterator<Item = &'a str>) -> String {
    ids.collect::<Vec<_>>().join(", ")
}

/// Template claims for `config`, each tagged with what it rests on.
pub fn derive_claims(
    mechanism: &Mechanism,
    constraints: &ConstraintReport,
    evidence: &Evidence,
    base: &ReactionBase,
    config: &ConditionConfig,
) -> Vec<Claim> {
    let mut claims = Vec::new();
    if mechanism.resolves(MechanismField::MainFgs) {
        claims.push(Claim {
            text: format!("Main functional groups: {}.", mechanism.main_fgs.join(", ")),
            support: vec![Support::Mechanism(MechanismField::MainFgs)],
        });
    }
    let same_type: Vec<&str> = evidence.citations.iter().filter(|c| c.facets.type_match).map(|c| c.id.as_str()).take(3).collect();
    if mechanism.resolves(MechanismField::ReactionType) {
        let mut support = vec![Support::Mechanism(MechanismField::ReactionType)];
        support.extend(same_type.iter().map(|id| Support::Record(id.to_string())));
        let text = if same_type.is_empty() {
            format!("Classified as {}.", mechanism.reaction_type)
        } else {
            format!("Classified as {}, as are precedents {}.", mechanism.reaction_type, join_ids(same_type.iter().copied()))
        };
        claims.push(Claim { text, support });
    }
    if let Some(eq) = mechanism.equation.as_deref().filter(|_| mechanism.resolves(MechanismField::Equation)) {
        claims.push(Claim { text: format!("Balanced as {eq}."), support: vec![Support::Mechanism(MechanismField::Equation)] });
    }
    for (slot, species) in config.filled() {
        let precedents: Vec<&str> = evidence
            .citations
            .iter()
            .filter(|c| base.get(&c.id).is_some_and(|r| r.condition.get(slot) == species))
            .map(|c| c.id.as_str())
            .collect();
        if !precedents.is_empty() {
            claims.push(Claim {
                text: format!("{} {species} is used in precedents {}.", slot.name(), join_ids(precedents.iter().copied())),
                support: precedents.iter().map(|id| Support::Record(id.to_string())).collect(),
            });
        }
    }
    let byproduct_ok = constraints.get(crate::balance::BYPRODUCT_COMPATIBILITY).is_some_and(|c| c.passed);
    if let Some(b) = mechanism.byproduct.as_deref().filter(|_| byproduct_ok && mechanism.resolves(MechanismField::Byproduct)) {
        claims.push(Claim {
            text: format!("By-product {b} is compatible with these conditions."),
            support: vec![
                Support::Mechanism(MechanismField::Byproduct),
                Support::Check(crate::balance::BYPRODUCT_COMPATIBILITY.to_string()),
            ],
        });
    }
    let passed: Vec<&str> = constraints.checks.iter().filter(|c| c.passed).map(|c| c.name.as_str()).collect();
    if !passed.is_empty() {
        claims.push(Claim {
            text: format!("Passes hard checks: {}.", join_ids(passed.iter().copied())),
            support: passed.iter().map(|n| Support::Check(n.to_string())).collect(),
        });
    }
    claims
}

pub fn assemble(ctx: &DebateContext<'_>, config: &ConditionConfig, provenance: &[String], settings: &RationaleSettings) -> Rationale {
    let mechanism = Mechanism::from_context(ctx);
    let constraints = Arc::unwrap_or_clone(ctx.checks(config));
    let evidence = candidate_evidence(ctx, config, provenance, settings.max_citations);
    let derivation = derive_claims(&mechanism, &constraints, &evidence, ctx.base, config);
    Rationale { mechanism, constraints, evidence, derivation }
}

/// Certifies and scores one tournament survivor.
pub fn certify(ctx: &DebateContext<'_>, survivor: &Survivor, settings: &RationaleSettings) -> Recommendation {
    let config = survivor.candidate.config.clone();
    let rationale = assemble(ctx, &config, &survivor.candidate.provenance, settings);
    let validity = validate(&config, &rationale, ctx.base, settings.delta);
    let u = utility(validity.align, rationale.constraints.pass_fraction(), survivor.depth);
    Recommendation { config, utility: u, rationale, validity }
}

/// [`certify`] over all survivors, in input order.
pub fn certify_all(ctx: &DebateContext<'_>, survivors: &[Survivor], settings: &RationaleSettings) -> Vec<Recommendation> {
    survivors.par_iter().map(|s| certify(ctx, s, settings)).collect()
}

#[cfg(test)]
mod tests;
