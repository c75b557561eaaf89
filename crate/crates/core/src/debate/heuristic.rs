//! Shared per-reaction debate context and the deterministic heuristic judge.
//!
//! An option's score for an agent averages, over the agent's slots, how
//! often the cited precedents use the same value and how common the value is
//! among records of the predicted type, then adds the hard-check pass
//! fraction and subtracts a penalty when any check fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::judge::{Draft, MatchView};
use super::{AgentDecision, AgentRole, Choice, DebateError, Judge, Post, ToolCall, ToolKind};
use crate::balance::{run_hard_checks, ConstraintReport};
use crate::chemist::ReactionReport;
use crate::condition::{ConditionConfig, Slot};
use crate::knowbase::{Evidence, QueryContext, ReactionBase};
use crate::reaction::{Reaction, Side};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DebateSettings {
    /// Refinement micro-rounds per match.
    pub micro_rounds: u32,
    /// Drafts below this confidence are re-examined.
    pub uncertainty: f64,
    /// Confidence reported when there is no evidence at all.
    pub neutral_prior: f64,
    pub evidence_weight: f64,
    pub cooccurrence_weight: f64,
    pub check_weight: f64,
    pub failure_penalty: f64,
    /// Score gap that maps to full confidence.
    pub confidence_scale: f64,
    pub max_citations: usize,
}

impl Default for DebateSettings {
    fn default() -> Self {
        DebateSettings {
            micro_rounds: 2,
            uncertainty: 0.65,
            neutral_prior: 0.5,
            evidence_weight: 0.6,
            cooccurrence_weight: 0.4,
            check_weight: 0.2,
            failure_penalty: 0.5,
            confidence_scale: 0.5,
            max_citations: 5,
        }
    }
}

/// Everything a judge may consult about the query reaction. Read-only and
/// shared across concurrently running matches.
pub struct DebateContext<'a> {
    pub base: &'a ReactionBase,
    pub reaction: &'a Reaction,
    pub report: &'a ReactionReport,
    pub query: QueryContext,
    pub settings: DebateSettings,
    distributions: BTreeMap<Slot, BTreeMap<String, u32>>,
    expanded: Vec<OnceLock<Evidence>>,
    checks: Mutex<HashMap<ConditionConfig, Arc<ConstraintReport>>>,
}

impl std::fmt::Debug for DebateContext<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DebateContext").field("reaction", &self.report.reaction).finish_non_exhaustive()
    }
}

impl<'a> DebateContext<'a> {
    pub fn new(base: &'a ReactionBase, reaction: &'a Reaction, report: &'a ReactionReport, settings: DebateSettings) -> Self {
        let main = report.main_fg_names();
        let distributions =
            Slot::ALL.into_iter().map(|s| (s, base.slot_distribution(s, &report.reaction_type, &main))).collect();
        DebateContext {
            base,
            reaction,
            report,
            query: QueryContext::new(reaction, &base.resources().library),
            settings,
            distributions,
            expanded: (0..=settings.micro_rounds as usize + 1).map(|_| OnceLock::new()).collect(),
            checks: Mutex::new(HashMap::new()),
        }
    }

    /// Hard-check report for `config`, computed once per context.
    pub fn checks(&self, config: &ConditionConfig) -> Arc<ConstraintReport> {
        if let Some(r) = self.checks.lock().expect("check cache").get(config) {
            return r.clone();
        }
        let ctx = self.report.check_context(self.reaction, self.base.resources());
        let r = Arc::new(run_hard_checks(&ctx, config));
        self.checks.lock().expect("check cache").insert(config.clone(), r.clone());
        r
    }

    /// The report's evidence widened to `k · 2^u` neighbors per side; always
    /// a superset of the report's citations.
    pub fn expanded_evidence(&self, u: u32) -> &Evidence {
        let slot = (u as usize).min(self.expanded.len() - 1);
        self.expanded[slot].get_or_init(|| {
            let k = self.base.settings().k.saturating_mul(1 << slot.min(16));
            let mut idx: BTreeSet<usize> = BTreeSet::new();
            for side in [Side::Reactant, Side::Product] {
                let q = self.query.side(side);
                if !q.molecules.is_empty() {
                    idx.extend(self.base.query_similar_prepared(q, side, k).into_iter().map(|n| n.index));
                }
            }
            for id in self.report.evidence.ids() {
                if let Some(i) = self.base.index_of(id) {
                    idx.insert(i);
                }
            }
            let idx: Vec<usize> = idx.into_iter().collect();
            self.base.evidence_for(&self.query, &idx, Some(&self.report.reaction_type))
        })
    }

    pub fn slot_distribution(&self, slot: Slot) -> &BTreeMap<String, u32> {
        &self.distributions[&slot]
    }
}

/// One option scored from one agent's point of view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionAssessment {
    pub score: f64,
    pub slot_scores: Vec<(Slot, f64)>,
    /// Cited records agreeing with the option on every slot of the role.
    pub support: Vec<String>,
    pub failed_checks: Vec<String>,
    /// False when neither evidence nor co-occurrence data exist.
    pub informative: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicJudge;

impl HeuristicJudge {
    pub fn assess(&self, ctx: &DebateContext<'_>, role: AgentRole, option: &ConditionConfig, evidence: &Evidence) -> OptionAssessment {
        let s = &ctx.settings;
        let cited: Vec<(&crate::knowbase::ReactionRecord, f64)> = evidence
            .citations
            .iter()
            .filter_map(|c| ctx.base.get(&c.id).map(|r| (r, c.score.max(0.0))))
            .collect();
        let total: f64 = cited.iter().map(|c| c.1).sum();
        let weight = |w: f64| if total > 0.0 { w } else { 1.0 };
        let norm = if total > 0.0 { total } else { cited.len() as f64 };
        let type_trust = ctx.report.signals.s_type.get(&ctx.report.reaction_type).copied().unwrap_or(0.0);
        let mut informative = !cited.is_empty();
        let slot_scores: Vec<(Slot, f64)> = role
            .slots()
            .iter()
            .map(|&slot| {
                let value = option.get(slot);
                let ev = if cited.is_empty() {
                    0.0
                } else {
                    cited.iter().filter(|(r, _)| r.condition.get(slot) == value).map(|(_, w)| weight(*w)).sum::<f64>() / norm
                };
                let dist = ctx.slot_distribution(slot);
                informative |= !dist.is_empty();
                let max = dist.values().copied().max().unwrap_or(0);
                let co = if max == 0 { 0.0 } else { dist.get(value).copied().unwrap_or(0) as f64 / max as f64 };
                (slot, s.evidence_weight * ev + s.cooccurrence_weight * type_trust * co)
            })
            .collect();
        let mean = slot_scores.iter().map(|x| x.1).sum::<f64>() / slot_scores.len() as f64;
        let checks = ctx.checks(option);
        let failed_checks: Vec<String> = checks.failed().map(|c| c.name.clone()).collect();
        let mut score = mean + s.check_weight * checks.pass_fraction();
        if !checks.passed {
            score -= s.failure_penalty;
        }
        let support = cited
            .iter()
            .filter(|(r, _)| role.slots().iter().all(|&sl| r.condition.get(sl) == option.get(sl)))
            .map(|(r, _)| r.id.clone())
            .take(s.max_citations)
            .collect();
        OptionAssessment { score, slot_scores, support, failed_checks, informative }
    }

    fn decide(&self, ctx: &DebateContext<'_>, view: MatchView<'_>, evidence: &Evidence) -> (AgentDecision, String) {
        let s = &ctx.settings;
        let a = self.assess(ctx, view.role, &view.a.config, evidence);
        let b = self.assess(ctx, view.role, &view.b.config, evidence);
        let choice = if a.score > b.score {
            Choice::A
        } else if b.score > a.score {
            Choice::B
        } else if view.b.id() < view.a.id() {
            Choice::B
        } else {
            Choice::A
        };
        let confidence = if !a.informative && !b.informative {
            s.neutral_prior
        } else {
            0.5 + 0.5 * ((a.score - b.score).abs() / s.confidence_scale).min(1.0)
        };
        let (win, lose) = if choice == Choice::A { (&a, &b) } else { (&b, &a) };
        let mut rationale = format!(
            "{} prefers {choice}: score {:.3} vs {:.3}, {} supporting precedents",
            view.role,
            win.score,
            lose.score,
            win.support.len()
        );
        if !lose.failed_checks.is_empty() {
            rationale.push_str(&format!("; {} fails {}", choice.other(), lose.failed_checks.join(", ")));
        }
        if !win.failed_checks.is_empty() {
            rationale.push_str(&format!("; {choice} fails {}", win.failed_checks.join(", ")));
        }
        let summary = format!("{} cited, {} slot values scored", evidence.citations.len(), view.role.slots().len());
        (AgentDecision { agent: view.role, choice, confidence, citations: win.support.clone(), rationale }, summary)
    }
}

fn memory_read(ctx: &DebateContext<'_>) -> ToolCall {
    ToolCall {
        kind: ToolKind::Memory,
        query: "reaction report".into(),
        result: format!(
            "type {} ({:.2}); main groups {}; by-product {}",
            ctx.report.reaction_type,
            ctx.report.type_confidence,
            ctx.report.main_fg_names().join(", "),
            ctx.report.top_byproduct().unwrap_or_else(|| "none".into())
        ),
    }
}

impl Judge for HeuristicJudge {
    fn name(&self) -> String {
        "heuristic".into()
    }

    fn init_assess(&self, ctx: &DebateContext<'_>, view: MatchView<'_>) -> Result<Draft, DebateError> {
        let evidence = &ctx.report.evidence;
        let (decision, summary) = self.decide(ctx, view, evidence);
        let search = ToolCall {
            kind: ToolKind::Search,
            query: format!("precedents for {} on {}", ctx.report.reaction_type, view.role),
            result: summary,
        };
        Ok(Draft { decision, tools: vec![memory_read(ctx), search] })
    }

    fn refine(
        &self,
        ctx: &DebateContext<'_>,
        view: MatchView<'_>,
        prior: &Draft,
        peers: &[Post],
        u: u32,
    ) -> Result<Draft, DebateError> {
        let mut latest: BTreeMap<AgentRole, Choice> = BTreeMap::new();
        for p in peers.iter().filter(|p| p.agent != view.role) {
            latest.insert(p.agent, p.choice);
        }
        let agree = latest.values().filter(|&&c| c == prior.decision.choice).count();
        let disagree = latest.len() - agree;
        let board = ToolCall {
            kind: ToolKind::Memory,
            query: "board".into(),
            result: format!("{agree} agree, {disagree} disagree"),
        };
        if prior.decision.confidence >= ctx.settings.uncertainty && disagree <= agree {
            return Ok(Draft { decision: prior.decision.clone(), tools: vec![board] });
        }
        let evidence = ctx.expanded_evidence(u);
        let (mut decision, summary) = self.decide(ctx, view, evidence);
        let mut citations = prior.decision.citations.clone();
        for c in decision.citations.drain(..) {
            if !citations.contains(&c) {
                citations.push(c);
            }
        }
        decision.citations = citations;
        let search = ToolCall {
            kind: ToolKind::Search,
            query: format!("widened precedents, round {u}"),
            result: summary,
        };
        Ok(Draft { decision, tools: vec![board, search] })
    }
}
