//! Supervised examples from debate traces: the query as input, and a target
//! interleaving reasoning with tool spans, closed by the judgment.

use serde::{Deserialize, Serialize};

use super::format::{check_format, scan};
use super::TrainError;
use crate::debate::{AgentRole, Choice, MatchOutcome, ToolCall, ToolKind};

/// Escapes markup characters, newlines, and the judgment keyword so free
/// text can never open a tag or declare a judgment.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for (i, c) in s.char_indices() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '\n' => out.push_str("&#10;"),
            'J' if s[i..].starts_with("Judg") => out.push_str("&#74;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> String {
    s.replace("&#74;", "J").replace("&#10;", "\n").replace("&lt;", "<").replace("&gt;", ">").replace("&amp;", "&")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftInput {
    pub reaction: String,
    pub option_a: String,
    pub option_b: String,
    pub agent: AgentRole,
}

impl SftInput {
    pub fn text(&self) -> String {
        format!(
            "Reaction: {}\nAgent: {}\nOption A: {}\nOption B: {}\nWhich option is better?",
            escape(&self.reaction),
            self.agent,
            escape(&self.option_a),
            escape(&self.option_b)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub input: String,
    pub target: String,
}

impl SftExample {
    /// Paired text block for dumps.
    pub fn block(&self) -> String {
        format!("### input\n{}\n### target\n{}\n", self.input, self.target)
    }
}

fn tag(kind: ToolKind) -> &'static str {
    match kind {
        ToolKind::Search => "search",
        ToolKind::Memory => "memory",
    }
}

/// One reasoning line and one span per tool call, in trace order, then the
/// free-text rationale and the judgment. A span holds the escaped query and
/// result on two lines.
pub fn serialize_sft_example(input: &SftInput, trace: &[ToolCall], rationale: &str, judgment: Choice) -> SftExample {
    let mut lines: Vec<String> = Vec::new();
    for (i, call) in trace.iter().enumerate() {
        let t = tag(call.kind);
        lines.push(format!("Step {}: consult {t}.", i + 1));
        lines.push(format!("<{t}>{}\n{}</{t}>", escape(&call.query), escape(&call.result)));
    }
    if !rationale.is_empty() {
        lines.push(escape(rationale));
    }
    lines.push(format!("Judgement: {judgment}"));
    SftExample { input: input.text(), target: lines.join("\n") }
}

/// Recovers the tool calls and judgment from a target.
pub fn parse_target(target: &str) -> Result<(Vec<ToolCall>, Choice), TrainError> {
    let check = check_format(target);
    let judgment = match (check.format_ok, check.judgment) {
        (true, Some(j)) => j,
        _ => return Err(TrainError::Malformed("transcript fails the format check".into())),
    };
    let calls = scan(target)
        .spans
        .into_iter()
        .filter(|s| s.depth == 0)
        .map(|s| {
            let (query, result) = s
                .content
                .split_once('\n')
                .ok_or_else(|| TrainError::Malformed(format!("{} span lacks a result line", tag(s.kind))))?;
            Ok(ToolCall { kind: s.kind, query: unescape(query), result: unescape(result) })
        })
        .collect::<Result<_, TrainError>>()?;
    Ok((calls, judgment))
}

/// One example per agent that finished the match: its tool calls across
/// every micro-round, its last rationale and its final choice.
pub fn examples_from_outcome(reaction: &str, outcome: &MatchOutcome) -> Vec<SftExample> {
    outcome
        .decisions
        .iter()
        .map(|d| {
            let trace: Vec<ToolCall> = outcome.board.posts_by(d.agent).flat_map(|p| p.tools.iter().cloned()).collect();
            let input = SftInput {
                reaction: reaction.to_string(),
                option_a: outcome.a.clone(),
                option_b: outcome.b.clone(),
                agent: d.agent,
            };
            serialize_sft_example(&input, &trace, &d.rationale, d.choice)
        })
        .collect()
}
