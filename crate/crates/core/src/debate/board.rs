//! The per-match memory board and the facilitated debate of one pair.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::judge::{Draft, MatchView};
use super::{majority_vote, AgentDecision, AgentRole, Choice, DebateContext, Judge, TieBreak};
use crate::recall::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolKind {
    Search,
    Memory,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolCall {
    pub kind: ToolKind,
    pub query: String,
    pub result: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub seq: usize,
    pub agent: AgentRole,
    pub micro_round: u32,
    pub choice: Choice,
    pub confidence: f64,
    pub summary: String,
    pub citations: Vec<String>,
    pub tools: Vec<ToolCall>,
}

/// Append-only record of one match.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MemoryBoard {
    /// The reaction the report describes.
    pub report: String,
    pub match_id: String,
    posts: Vec<Post>,
    facilitator_log: Vec<String>,
}

impl MemoryBoard {
    pub fn new(report: &str, match_id: &str) -> Self {
        MemoryBoard { report: report.to_string(), match_id: match_id.to_string(), ..Default::default() }
    }

    pub fn append(&mut self, agent: AgentRole, micro_round: u32, draft: &Draft) {
        let d = &draft.decision;
        self.posts.push(Post {
            seq: self.posts.len(),
            agent,
            micro_round,
            choice: d.choice,
            confidence: d.confidence,
            summary: d.rationale.clone(),
            citations: d.citations.clone(),
            tools: draft.tools.clone(),
        });
    }

    pub fn log(&mut self, line: impl Into<String>) {
        self.facilitator_log.push(line.into());
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn facilitator_log(&self) -> &[String] {
        &self.facilitator_log
    }

    /// Posts by one agent, in order.
    pub fn posts_by(&self, agent: AgentRole) -> impl Iterator<Item = &Post> {
        self.posts.iter().filter(move |p| p.agent == agent)
    }
}

/// Judges seated by role, kept in facilitator turn order.
#[derive(Clone)]
pub struct Panel {
    seats: Vec<(AgentRole, Arc<dyn Judge>)>,
}

impl std::fmt::Debug for Panel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.seats.iter().map(|(r, j)| format!("{r}:{}", j.name()))).finish()
    }
}

impl Panel {
    pub fn new(mut seats: Vec<(AgentRole, Arc<dyn Judge>)>) -> Self {
        seats.sort_by_key(|s| s.0);
        Panel { seats }
    }

    /// The same backend in all four seats.
    pub fn uniform(judge: Arc<dyn Judge>) -> Self {
        Panel::new(AgentRole::ALL.into_iter().map(|r| (r, judge.clone())).collect())
    }

    pub fn seats(&self) -> &[(AgentRole, Arc<dyn Judge>)] {
        &self.seats
    }

    pub fn len(&self) -> usize {
        self.seats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seats.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub match_id: String,
    pub a: String,
    pub b: String,
    /// Final decisions of the agents that did not abstain, in turn order.
    pub decisions: Vec<AgentDecision>,
    pub abstained: Vec<AgentRole>,
    pub winner: Choice,
    pub n_a: usize,
    pub n_b: usize,
    pub path: TieBreak,
    pub board: MemoryBoard,
}

impl MatchOutcome {
    pub fn winner_id(&self) -> &str {
        match self.winner {
            Choice::A => &self.a,
            Choice::B => &self.b,
        }
    }
}

/// Every seated agent assesses, then refines `micro_rounds` times, posting in
/// turn order each round; the final drafts are put to a majority vote. A
/// failing backend abstains for the rest of the match.
pub fn debate_match(ctx: &DebateContext<'_>, match_id: &str, a: &Candidate, b: &Candidate, panel: &Panel) -> MatchOutcome {
    let (id_a, id_b) = (a.id(), b.id());
    let mut board = MemoryBoard::new(&ctx.report.reaction, match_id);
    let mut drafts: BTreeMap<AgentRole, Draft> = BTreeMap::new();
    let mut abstained: Vec<AgentRole> = Vec::new();
    board.log(format!("match {match_id}: A = {id_a}, B = {id_b}"));
    for (role, judge) in panel.seats() {
        let view = MatchView { match_id, role: *role, a, b };
        match judge.init_assess(ctx, view) {
            Ok(d) => {
                board.append(*role, 0, &d);
                drafts.insert(*role, d);
            }
            Err(e) => {
                board.log(format!("{role} abstains at micro-round 0: {e}"));
                abstained.push(*role);
            }
        }
    }
    for u in 1..=ctx.settings.micro_rounds {
        for (role, judge) in panel.seats() {
            let Some(prior) = drafts.get(role) else { continue };
            let view = MatchView { match_id, role: *role, a, b };
            match judge.refine(ctx, view, prior, board.posts(), u) {
                Ok(d) => {
                    board.append(*role, u, &d);
                    drafts.insert(*role, d);
                }
                Err(e) => {
                    board.log(format!("{role} abstains at micro-round {u}: {e}"));
                    drafts.remove(role);
                    abstained.push(*role);
                }
            }
        }
    }
    let decisions: Vec<AgentDecision> = drafts.into_values().map(|d| d.decision).collect();
    let vote = majority_vote(&decisions, &id_a, &id_b);
    board.log(format!("vote {}-{} for {} by {}", vote.n_a, vote.n_b, vote.winner, vote.path));
    MatchOutcome {
        match_id: match_id.to_string(),
        a: id_a,
        b: id_b,
        decisions,
        abstained,
        winner: vote.winner,
        n_a: vote.n_a,
        n_b: vote.n_b,
        path: vote.path,
        board,
    }
}
