//! Transcript structure: paired `<search>`/`<memory>` spans and a closing
//! judgment line, and the reward computed from them.

use serde::{Deserialize, Serialize};

use crate::debate::{Choice, ToolKind};

/// Bonus for using both tools in a correct transcript.
pub const TOOL_BONUS: f64 = 0.1;

const MARKERS: [&str; 2] = ["Judgement:", "Judgment:"];

fn tag_of(rest: &str) -> Option<(ToolKind, bool, usize)> {
    const TAGS: [(&str, ToolKind, bool); 4] = [
        ("<search>", ToolKind::Search, true),
        ("</search>", ToolKind::Search, false),
        ("<memory>", ToolKind::Memory, true),
        ("</memory>", ToolKind::Memory, false),
    ];
    TAGS.iter().find(|(t, ..)| rest.starts_with(t)).map(|&(t, k, open)| (k, open, t.len()))
}

/// A closed span: kind, depth and raw content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Span<'a> {
    pub kind: ToolKind,
    pub depth: usize,
    pub content: &'a str,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Scan<'a> {
    /// Closed spans in order of their opening tag.
    pub spans: Vec<Span<'a>>,
    /// Tags pair and nest.
    pub balanced: bool,
    /// Text outside every span.
    pub outside: String,
    /// Outside text after the last tag.
    pub tail: &'a str,
}

pub(crate) fn scan(text: &str) -> Scan<'_> {
    let mut stack: Vec<(ToolKind, usize, usize)> = Vec::new();
    let mut spans: Vec<(usize, Span<'_>)> = Vec::new();
    let mut balanced = true;
    let mut outside = String::new();
    let mut last_tag_end = 0usize;
    let mut i = 0usize;
    while i < text.len() {
        let rest = &text[i..];
        let Some(next) = rest.find('<') else {
            if stack.is_empty() {
                outside.push_str(rest);
            }
            break;
        };
        if stack.is_empty() {
            outside.push_str(&rest[..next]);
        }
        let at = i + next;
        match tag_of(&text[at..]) {
            Some((kind, true, len)) => {
                stack.push((kind, at + len, at));
                i = at + len;
                last_tag_end = i;
            }
            Some((kind, false, len)) => {
                match stack.pop() {
                    Some((k, start, open_at)) if k == kind => {
                        spans.push((open_at, Span { kind, depth: stack.len(), content: &text[start..at] }));
                    }
                    _ => balanced = false,
                }
                i = at + len;
                last_tag_end = i;
            }
            None => {
                if stack.is_empty() {
                    outside.push('<');
                }
                i = at + 1;
            }
        }
    }
    if !stack.is_empty() {
        balanced = false;
    }
    spans.sort_by_key(|s| s.0);
    Scan { spans: spans.into_iter().map(|s| s.1).collect(), balanced, outside, tail: &text[last_tag_end..] }
}

/// Parses a judgment that closes `tail`, and requires it to be the only
/// judgment marker outside the spans.
fn judgment(scan: &Scan<'_>) -> Option<Choice> {
    let count: usize = MARKERS.iter().map(|m| scan.outside.matches(m).count()).sum();
    if count != 1 {
        return None;
    }
    let t = scan.tail.trim_end();
    let choice = match t.chars().last()? {
        'A' => Choice::A,
        'B' => Choice::B,
        _ => return None,
    };
    let before = t[..t.len() - 1].trim_end();
    MARKERS.iter().any(|m| before.ends_with(m)).then_some(choice)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatCheck {
    pub format_ok: bool,
    pub used_search: bool,
    pub used_memory: bool,
    /// The declared option when the judgment section parses.
    pub judgment: Option<Choice>,
}

/// Tool flags record at least one closed span of the kind, whether or not
/// the rest of the transcript is well formed.
pub fn check_format(text: &str) -> FormatCheck {
    let s = scan(text);
    let judgment = judgment(&s);
    FormatCheck {
        format_ok: s.balanced && judgment.is_some(),
        used_search: s.spans.iter().any(|x| x.kind == ToolKind::Search),
        used_memory: s.spans.iter().any(|x| x.kind == ToolKind::Memory),
        judgment,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardInput {
    pub format_ok: bool,
    pub acc: bool,
    pub used_search: bool,
    pub used_memory: bool,
}

impl RewardInput {
    /// Flags from the format checker; accuracy is agreement with `truth`.
    pub fn from_transcript(text: &str, truth: Choice) -> Self {
        let f = check_format(text);
        RewardInput {
            format_ok: f.format_ok,
            acc: f.format_ok && f.judgment == Some(truth),
            used_search: f.used_search,
            used_memory: f.used_memory,
        }
    }
}

/// −1 for a malformed transcript, 0 for a wrong answer, otherwise 1 plus
/// [`TOOL_BONUS`] when both tools were used.
pub fn reward(r: RewardInput) -> f64 {
    if !r.format_ok {
        -1.0
    } else if !r.acc {
        0.0
    } else {
        1.0 + if r.used_search && r.used_memory { TOOL_BONUS } else { 0.0 }
    }
}
