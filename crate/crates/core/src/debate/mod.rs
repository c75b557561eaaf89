//! Pairwise debate over candidate conditions: a four-agent judging panel
//! posting to a shared board, majority voting with deterministic
//! tie-breaks, and a seeded knockout tournament down to exactly K survivors.

mod board;
mod heuristic;
mod judge;
mod remote;
mod tournament;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use board::{debate_match, MatchOutcome, MemoryBoard, Panel, Post, ToolCall, ToolKind};
pub use heuristic::{DebateContext, DebateSettings, HeuristicJudge, OptionAssessment};
pub use judge::{Draft, Judge, MatchView, ReplayEntry, ReplayJudge, ScriptedJudge};
pub use remote::{JudgeRequest, JudgeResponse, RemoteJudge};
pub use tournament::{audit_bracket, tournament, BracketLog, MatchRecord, RoundLog, Survivor, TournamentResult, TournamentSettings};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DebateError {
    #[error("pool of {pool} candidates cannot yield {k}")]
    PoolTooSmall { pool: usize, k: usize },
    #[error("judge backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("panel has no judges")]
    EmptyPanel,
}

/// Panel seats in facilitator turn order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentRole {
    Full,
    Cat,
    Sol,
    Rea,
}

impl AgentRole {
    pub const ALL: [AgentRole; 4] = [AgentRole::Full, AgentRole::Cat, AgentRole::Sol, AgentRole::Rea];

    /// Condition slots the agent specializes in.
    pub fn slots(self) -> &'static [crate::condition::Slot] {
        use crate::condition::Slot::*;
        match self {
            AgentRole::Full => &[Catalyst1, Solvent1, Solvent2, Reagent1, Reagent2],
            AgentRole::Cat => &[Catalyst1],
            AgentRole::Sol => &[Solvent1, Solvent2],
            AgentRole::Rea => &[Reagent1, Reagent2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AgentRole::Full => "Full",
            AgentRole::Cat => "Cat",
            AgentRole::Sol => "Sol",
            AgentRole::Rea => "Rea",
        }
    }

    pub fn from_name(s: &str) -> Option<AgentRole> {
        AgentRole::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

impl Choice {
    pub fn other(self) -> Choice {
        match self {
            Choice::A => Choice::B,
            Choice::B => Choice::A,
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Choice::A => "A",
            Choice::B => "B",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDecision {
    pub agent: AgentRole,
    pub choice: Choice,
    pub confidence: f64,
    /// Record ids from the reaction base.
    pub citations: Vec<String>,
    pub rationale: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    Majority,
    ConfidenceSum,
    CanonicalId,
}

impl fmt::Display for TieBreak {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieBreak::Majority => "majority",
            TieBreak::ConfidenceSum => "confidence-sum",
            TieBreak::CanonicalId => "canonical-id",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub winner: Choice,
    pub n_a: usize,
    pub n_b: usize,
    pub path: TieBreak,
}

/// Most votes wins; a tied count goes to the larger confidence sum, and a
/// tied sum to the lexicographically smaller canonical id.
pub fn majority_vote(decisions: &[AgentDecision], id_a: &str, id_b: &str) -> Vote {
    let n_a = decisions.iter().filter(|d| d.choice == Choice::A).count();
    let n_b = decisions.len() - n_a;
    if n_a != n_b {
        let winner = if n_a > n_b { Choice::A } else { Choice::B };
        return Vote { winner, n_a, n_b, path: TieBreak::Majority };
    }
    let sum = |c: Choice| decisions.iter().filter(|d| d.choice == c).map(|d| d.confidence).sum::<f64>();
    let (s_a, s_b) = (sum(Choice::A), sum(Choice::B));
    if s_a != s_b {
        let winner = if s_a > s_b { Choice::A } else { Choice::B };
        return Vote { winner, n_a, n_b, path: TieBreak::ConfidenceSum };
    }
    let winner = if id_b < id_a { Choice::B } else { Choice::A };
    Vote { winner, n_a, n_b, path: TieBreak::CanonicalId }
}
