//! A judge served over TCP: one JSON request line, one JSON response line.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::judge::{Draft, MatchView};
use super::{AgentDecision, AgentRole, Choice, DebateContext, DebateError, Judge, Post};
use crate::chemist::ReactionReport;
use crate::condition::ConditionConfig;
use crate::knowbase::Evidence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRequest {
    pub match_id: String,
    pub agent_role: AgentRole,
    pub option_a: ConditionConfig,
    pub option_b: ConditionConfig,
    pub reaction_report: ReactionReport,
    pub evidence: Evidence,
    pub peer_posts: Vec<Post>,
    pub micro_round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeResponse {
    pub decision: Choice,
    pub confidence: f64,
    #[serde(default)]
    pub citations: Vec<String>,
    #[serde(default)]
    pub rationale: String,
}

#[derive(Debug, Clone)]
pub struct RemoteJudge {
    pub endpoint: String,
    pub timeout: Duration,
}

impl RemoteJudge {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        RemoteJudge { endpoint: endpoint.into(), timeout }
    }

    fn exchange(&self, request: &JudgeRequest) -> Result<JudgeResponse, DebateError> {
        let unavailable = |what: &str, e: &dyn std::fmt::Display| {
            DebateError::BackendUnavailable(format!("{} {what}: {e}", self.endpoint))
        };
        let addr = self
            .endpoint
            .to_socket_addrs()
            .map_err(|e| unavailable("resolve", &e))?
            .next()
            .ok_or_else(|| DebateError::BackendUnavailable(format!("{} resolves to nothing", self.endpoint)))?;
        let mut stream = TcpStream::connect_timeout(&addr, self.timeout).map_err(|e| unavailable("connect", &e))?;
        stream.set_read_timeout(Some(self.timeout)).map_err(|e| unavailable("configure", &e))?;
        stream.set_write_timeout(Some(self.timeout)).map_err(|e| unavailable("configure", &e))?;
        let mut line = serde_json::to_string(request).map_err(|e| unavailable("encode", &e))?;
        line.push('\n');
        stream.write_all(line.as_bytes()).map_err(|e| unavailable("send", &e))?;
        let mut reply = String::new();
        BufReader::new(stream).read_line(&mut reply).map_err(|e| unavailable("receive", &e))?;
        let response: JudgeResponse = serde_json::from_str(reply.trim()).map_err(|e| unavailable("decode", &e))?;
        if !(0.0..=1.0).contains(&response.confidence) {
            return Err(DebateError::BackendUnavailable(format!("confidence {} out of range", response.confidence)));
        }
        Ok(response)
    }

    fn ask(&self, ctx: &DebateContext<'_>, view: MatchView<'_>, peers: &[Post], u: u32) -> Result<Draft, DebateError> {
        let request = JudgeRequest {
            match_id: view.match_id.to_string(),
            agent_role: view.role,
            option_a: view.a.config.clone(),
            option_b: view.b.config.clone(),
            reaction_report: ctx.report.clone(),
            evidence: ctx.report.evidence.clone(),
            peer_posts: peers.to_vec(),
            micro_round: u,
        };
        let r = self.exchange(&request)?;
        if let Some(bad) = r.citations.iter().find(|c| !ctx.base.contains(c)) {
            return Err(DebateError::BackendUnavailable(format!("cited unknown record {bad:?}")));
        }
        Ok(Draft {
            decision: AgentDecision {
                agent: view.role,
                choice: r.decision,
                confidence: r.confidence,
                citations: r.citations,
                rationale: r.rationale,
            },
            tools: Vec::new(),
        })
    }
}

impl Judge for RemoteJudge {
    fn name(&self) -> String {
        format!("remote:{}", self.endpoint)
    }

    fn init_assess(&self, ctx: &DebateContext<'_>, view: MatchView<'_>) -> Result<Draft, DebateError> {
        self.ask(ctx, view, &[], 0)
    }

    fn refine(
        &self,
        ctx: &DebateContext<'_>,
        view: MatchView<'_>,
        _prior: &Draft,
        peers: &[Post],
        u: u32,
    ) -> Result<Draft, DebateError> {
        self.ask(ctx, view, peers, u)
    }
}
