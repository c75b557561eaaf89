//! The judge backend interface and its recorded and scripted implementations.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AgentDecision, AgentRole, Choice, DebateContext, DebateError, Post, ToolCall};
use crate::recall::Candidate;

/// What a judge sees of the match it sits on.
#[derive(Debug, Clone, Copy)]
pub struct MatchView<'a> {
    pub match_id: &'a str,
    pub role: AgentRole,
    pub a: &'a Candidate,
    pub b: &'a Candidate,
}

/// A decision plus the tool calls that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub decision: AgentDecision,
    pub tools: Vec<ToolCall>,
}

pub trait Judge: Send + Sync {
    fn name(&self) -> String;

    /// Initial assessment, micro-round 0.
    fn init_assess(&self, ctx: &DebateContext<'_>, view: MatchView<'_>) -> Result<Draft, DebateError>;

    /// Refinement at micro-round `u` (1-based) given the peers' posts so far.
    fn refine(
        &self,
        ctx: &DebateContext<'_>,
        view: MatchView<'_>,
        prior: &Draft,
        peers: &[Post],
        u: u32,
    ) -> Result<Draft, DebateError>;
}

/// One recorded judge response. `match_id` may be `*` and `micro_round`
/// may be omitted to match any.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub match_id: String,
    pub agent_role: AgentRole,
    #[serde(default)]
    pub micro_round: Option<u32>,
    pub decision: Choice,
    pub confidence: f64,
    #[serde(default)]
    pub citations: Vec<String>,
    #[serde(default)]
    pub rationale: String,
}

/// Replays recorded responses; a missing recording is an unavailable backend.
#[derive(Debug, Clone, Default)]
pub struct ReplayJudge {
    entries: HashMap<(String, AgentRole, Option<u32>), ReplayEntry>,
}

impl ReplayJudge {
    pub fn new(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        ReplayJudge {
            entries: entries.into_iter().map(|e| ((e.match_id.clone(), e.agent_role, e.micro_round), e)).collect(),
        }
    }

    /// One JSON object per line.
    pub fn load(path: &Path) -> Result<Self, DebateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DebateError::BackendUnavailable(format!("{}: {e}", path.display())))?;
        let entries = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| DebateError::BackendUnavailable(format!("replay line {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<ReplayEntry>, _>>()?;
        Ok(Self::new(entries))
    }

    fn lookup(&self, match_id: &str, role: AgentRole, u: u32) -> Result<Draft, DebateError> {
        let keys = [
            (match_id, Some(u)),
            (match_id, None),
            ("*", Some(u)),
            ("*", None),
        ];
        keys.iter()
            .find_map(|(m, r)| self.entries.get(&(m.to_string(), role, *r)))
            .map(|e| Draft {
                decision: AgentDecision {
                    agent: role,
                    choice: e.decision,
                    confidence: e.confidence.clamp(0.0, 1.0),
                    citations: e.citations.clone(),
                    rationale: e.rationale.clone(),
                },
                tools: Vec::new(),
            })
            .ok_or_else(|| DebateError::BackendUnavailable(format!("no recording for {match_id}/{role}/{u}")))
    }
}

impl Judge for ReplayJudge {
    fn name(&self) -> String {
        "replay".into()
    }

    fn init_assess(&self, _ctx: &DebateContext<'_>, view: MatchView<'_>) -> Result<Draft, DebateError> {
        self.lookup(view.match_id, view.role, 0)
    }

    fn refine(
        &self,
        _ctx: &DebateContext<'_>,
        view: MatchView<'_>,
        _prior: &Draft,
        _peers: &[Post],
        u: u32,
    ) -> Result<Draft, DebateError> {
        self.lookup(view.match_id, view.role, u)
    }
}

pub type Script = dyn Fn(&Candidate, &Candidate, AgentRole) -> (Choice, f64) + Send + Sync;

/// Decides by a fixed function of the two options and never changes its mind.
#[derive(Clone)]
pub struct ScriptedJudge {
    script: Arc<Script>,
}

impl std::fmt::Debug for ScriptedJudge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("ScriptedJudge")
    }
}

impl ScriptedJudge {
    pub fn new(script: impl Fn(&Candidate, &Candidate, AgentRole) -> (Choice, f64) + Send + Sync + 'static) -> Self {
        ScriptedJudge { script: Arc::new(script) }
    }

    /// Always picks `choice` with `confidence`.
    pub fn constant(choice: Choice, confidence: f64) -> Self {
        Self::new(move |_, _, _| (choice, confidence))
    }
}

impl Judge for ScriptedJudge {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn init_assess(&self, _ctx: &DebateContext<'_>, view: MatchView<'_>) -> Result<Draft, DebateError> {
        let (choice, confidence) = (self.script)(view.a, view.b, view.role);
        Ok(Draft {
            decision: AgentDecision { agent: view.role, choice, confidence, citations: Vec::new(), rationale: "scripted".into() },
            tools: Vec::new(),
        })
    }

    fn refine(
        &self,
        _ctx: &DebateContext<'_>,
        _view: MatchView<'_>,
        prior: &Draft,
        _peers: &[Post],
        _u: u32,
    ) -> Result<Draft, DebateError> {
        Ok(prior.clone())
    }
}
