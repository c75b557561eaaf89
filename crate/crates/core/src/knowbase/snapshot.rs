//! Single-file index snapshot: a versioned header line followed by the
//! indexed records, rebuilt into identical indexes on load.

use std::io::{BufRead, Write};
use std::sync::Arc;

use super::{KbError, RawRecord, ReactionBase};
use crate::resources::Resources;

pub const SNAPSHOT_HEADER: &str = "condor-kb v1";

impl ReactionBase {
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<(), KbError> {
        let io = |e: std::io::Error| KbError::Snapshot(e.to_string());
        writeln!(out, "{SNAPSHOT_HEADER}").map_err(io)?;
        for r in self.records() {
            let line = serde_json::to_string(&r.to_raw()).map_err(|e| KbError::Snapshot(e.to_string()))?;
            writeln!(out, "{line}").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Every record in a snapshot must re-index; anything else is corruption.
    pub fn read_snapshot<R: BufRead>(source: R, resources: Arc<Resources>) -> Result<Self, KbError> {
        let mut lines = source.lines();
        let header = lines
            .next()
            .transpose()
            .map_err(|e| KbError::UnreadableSource(e.to_string()))?
            .unwrap_or_default();
        if header.trim() != SNAPSHOT_HEADER {
            return Err(KbError::Snapshot(format!("unsupported header {header:?}")));
        }
        let mut raws = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| KbError::UnreadableSource(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawRecord =
                serde_json::from_str(&line).map_err(|e| KbError::Snapshot(format!("line {}: {e}", i + 2)))?;
            if !seen.insert(raw.id.clone()) {
                return Err(KbError::DuplicateId(raw.id));
            }
            raws.push((i + 2, raw));
        }
        let (base, skipped) = ReactionBase::from_raw(raws, resources);
        if let Some((line, reason)) = skipped.first() {
            return Err(KbError::Snapshot(format!("line {line}: {reason}")));
        }
        Ok(base)
    }
}
