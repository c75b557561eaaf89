//! Per-run directory of canonical documents, one subdirectory per query.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{PipelineConfig, PipelineError, Run};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryStore {
    root: PathBuf,
}

/// Keeps ids usable as directory names.
fn dir_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' }).collect()
}

/// Writes beside the target and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

impl MemoryStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        MemoryStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn query_dir(&self, id: &str) -> PathBuf {
        self.root.join(dir_name(id))
    }

    pub fn write_text(&self, id: Option<&str>, name: &str, text: &str) -> Result<PathBuf, PipelineError> {
        let path = match id {
            Some(id) => self.query_dir(id).join(name),
            None => self.root.join(name),
        };
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&self, id: Option<&str>, name: &str, value: &T) -> Result<PathBuf, PipelineError> {
        self.write_text(id, name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// `report.json`, `pool.json`, `bracket.json`, `certified.json`, and
    /// `recommendations.json` when selection succeeded.
    pub fn persist_run(&self, run: &Run, config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
        let id = Some(run.query.id.as_str());
        let mut out = vec![self.write_json(id, "report.json", &run.report)?, self.write_json(id, "pool.json", &run.recall.pool)?];
        if let Some(t) = &run.tournament {
            out.push(self.write_json(id, "bracket.json", t)?);
        }
        out.push(self.write_json(id, "certified.json", &run.certified)?);
        if let Some(doc) = run.recommendations(config) {
            out.push(self.write_text(id, "recommendations.json", &doc.to_json()?)?);
        }
        Ok(out)
    }
}
