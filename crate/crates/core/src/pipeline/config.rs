//! Run configuration in a `key = value` text format.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is known
//! in advance; an unknown key or an out-of-range value aborts loading and
//! names the key.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::debate::{AgentRole, DebateSettings, TournamentSettings};
use crate::knowbase::SimilaritySettings;
use crate::rationale::RationaleSettings;
use crate::recall::RecallSettings;
use crate::tagger::SalienceWeights;
use crate::trainkit::TrainSettings;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("`{key}`: cannot parse {value:?}: {reason}")]
    Parse { key: String, value: String, reason: String },
    #[error("`{key}` = {value} is outside {range}")]
    OutOfRange { key: String, value: String, range: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: String, reason: String },
}

/// Backend seated for one agent role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum JudgeSpec {
    Heuristic,
    /// JSON-lines replay file.
    Replay(PathBuf),
    /// `host:port` of a line-protocol judge.
    Remote(String),
}

impl FromStr for JudgeSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "heuristic" => Ok(JudgeSpec::Heuristic),
            Some(("replay", p)) if !p.is_empty() => Ok(JudgeSpec::Replay(PathBuf::from(p))),
            Some(("remote", a)) if !a.is_empty() => Ok(JudgeSpec::Remote(a.to_string())),
            _ => Err("expected `heuristic`, `replay:PATH` or `remote:HOST:PORT`".into()),
        }
    }
}

impl fmt::Display for JudgeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JudgeSpec::Heuristic => f.write_str("heuristic"),
            JudgeSpec::Replay(p) => write!(f, "replay:{}", p.display()),
            JudgeSpec::Remote(a) => write!(f, "remote:{a}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub base: Option<PathBuf>,
    pub fg_library: Option<PathBuf>,
    pub leaving_groups: Option<PathBuf>,
    pub species: Option<PathBuf>,
    pub seed: u64,
    pub similarity: SimilaritySettings,
    pub salience: SalienceWeights,
    pub recall: RecallSettings,
    pub debate: DebateSettings,
    pub tournament: TournamentSettings,
    pub rationale: RationaleSettings,
    pub train: TrainSettings,
    /// In turn order.
    pub judges: [JudgeSpec; 4],
    pub judge_timeout_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            base: None,
            fg_library: None,
            leaving_groups: None,
            species: None,
            seed: 0,
            similarity: SimilaritySettings::default(),
            salience: SalienceWeights::default(),
            recall: RecallSettings::default(),
            debate: DebateSettings::default(),
            tournament: TournamentSettings::default(),
            rationale: RationaleSettings::default(),
            train: TrainSettings::default(),
            judges: std::array::from_fn(|_| JudgeSpec::Heuristic),
            judge_timeout_ms: 30_000,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Parse { key: key.into(), value: value.into(), reason: e.to_string() })
}

fn ranged<T>(key: &str, value: &str, lo: T, hi: T) -> Result<T, ConfigError>
where
    T: FromStr + PartialOrd + fmt::Display + Copy,
    T::Err: fmt::Display,
{
    let v: T = parse(key, value)?;
    if v >= lo && v <= hi {
        Ok(v)
    } else {
        Err(ConfigError::OutOfRange { key: key.into(), value: value.into(), range: format!("[{lo}, {hi}]") })
    }
}

/// `(lo, hi]`, for knobs that must be strictly positive.
fn positive(key: &str, value: &str, hi: f64) -> Result<f64, ConfigError> {
    let v: f64 = parse(key, value)?;
    if v > 0.0 && v <= hi {
        Ok(v)
    } else {
        Err(ConfigError::OutOfRange { key: key.into(), value: value.into(), range: format!("(0, {hi}]") })
    }
}

fn unit(key: &str, value: &str) -> Result<f64, ConfigError> {
    ranged(key, value, 0.0, 1.0)
}

impl PipelineConfig {
    /// Every accepted key.
    pub const KEYS: &'static [&'static str] = &[
        "base",
        "fg_library",
        "leaving_groups",
        "species",
        "seed",
        "similarity.k",
        "similarity.w_fg",
        "similarity.w_mcs",
        "similarity.w_tanimoto",
        "similarity.mcs_budget",
        "salience.activation",
        "salience.electrophile",
        "salience.nucleophile",
        "salience.neutral",
        "salience.frequency",
        "salience.top_n",
        "recall.k",
        "recall.pool_cap",
        "recall.variant_cap",
        "recall.alternatives_per_slot",
        "recall.feasibility_filter",
        "debate.micro_rounds",
        "debate.uncertainty",
        "debate.neutral_prior",
        "debate.max_citations",
        "tournament.k",
        "tournament.parallel",
        "tournament.keep_boards",
        "rationale.k_out",
        "rationale.delta",
        "rationale.lambda",
        "rationale.max_citations",
        "rationale.exact_limit",
        "train.steps",
        "train.group_size",
        "train.epsilon",
        "train.beta",
        "train.learning_rate",
        "judge",
        "judge.full",
        "judge.cat",
        "judge.sol",
        "judge.rea",
        "judge.timeout_ms",
    ];

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.into() })?;
            c.set(k.trim(), v.trim())?;
        }
        c.check()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read { path: path.display().to_string(), reason: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        let k = key;
        match key {
            "base" => self.base = Some(v.into()),
            "fg_library" => self.fg_library = Some(v.into()),
            "leaving_groups" => self.leaving_groups = Some(v.into()),
            "species" => self.species = Some(v.into()),
            "seed" => self.seed = parse(k, v)?,
            "similarity.k" => self.similarity.k = ranged(k, v, 1, 100_000)?,
            "similarity.w_fg" => self.similarity.w_fg = unit(k, v)?,
            "similarity.w_mcs" => self.similarity.w_mcs = unit(k, v)?,
            "similarity.w_tanimoto" => self.similarity.w_tanimoto = unit(k, v)?,
            "similarity.mcs_budget" => self.similarity.mcs_budget = ranged(k, v, 1, 100_000_000)?,
            "salience.activation" => self.salience.activation = ranged(k, v, 0.0, 10.0)?,
            "salience.electrophile" => self.salience.electrophile = ranged(k, v, 0.0, 10.0)?,
            "salience.nucleophile" => self.salience.nucleophile = ranged(k, v, 0.0, 10.0)?,
            "salience.neutral" => self.salience.neutral = ranged(k, v, 0.0, 10.0)?,
            "salience.frequency" => self.salience.frequency = ranged(k, v, 0.0, 10.0)?,
            "salience.top_n" => self.salience.top_n = ranged(k, v, 1, 64)?,
            "recall.k" => self.recall.k = ranged(k, v, 1, 100_000)?,
            "recall.pool_cap" => self.recall.cap = ranged(k, v, 1, 1_000_000)?,
            "recall.variant_cap" => self.recall.variant_cap = ranged(k, v, 0, 1_000)?,
            "recall.alternatives_per_slot" => self.recall.alternatives_per_slot = ranged(k, v, 0, 100)?,
            "recall.feasibility_filter" => self.recall.feasibility_filter = parse(k, v)?,
            "debate.micro_rounds" => self.debate.micro_rounds = ranged(k, v, 0, 16)?,
            "debate.uncertainty" => self.debate.uncertainty = unit(k, v)?,
            "debate.neutral_prior" => self.debate.neutral_prior = unit(k, v)?,
            "debate.max_citations" => self.debate.max_citations = ranged(k, v, 1, 1_000)?,
            "tournament.k" => self.tournament.k = ranged(k, v, 1, 1_000_000)?,
            "tournament.parallel" => self.tournament.parallel = parse(k, v)?,
            "tournament.keep_boards" => self.tournament.keep_boards = parse(k, v)?,
            "rationale.k_out" => self.rationale.k_out = ranged(k, v, 1, 1_000)?,
            "rationale.delta" => self.rationale.delta = unit(k, v)?,
            "rationale.lambda" => self.rationale.lambda = ranged(k, v, 0.0, 100.0)?,
            "rationale.max_citations" => self.rationale.max_citations = ranged(k, v, 1, 1_000)?,
            "rationale.exact_limit" => self.rationale.exact_limit = ranged(k, v, 0, 20)?,
            "train.steps" => self.train.steps = ranged(k, v, 0, 1_000_000)?,
            "train.group_size" => self.train.group_size = ranged(k, v, 2, 4_096)?,
            "train.epsilon" => self.train.epsilon = positive(k, v, 10.0)?,
            "train.beta" => self.train.beta = ranged(k, v, 0.0, 1e6)?,
            "train.learning_rate" => self.train.learning_rate = positive(k, v, 1_000.0)?,
            "judge" => {
                let spec: JudgeSpec = parse(k, v)?;
                self.judges = std::array::from_fn(|_| spec.clone());
            }
            "judge.full" | "judge.cat" | "judge.sol" | "judge.rea" => {
                let role = AgentRole::from_name(&key["judge.".len()..]).expect("role key");
                self.judges[role as usize] = parse(k, v)?;
            }
            "judge.timeout_ms" => self.judge_timeout_ms = ranged(k, v, 1, 3_600_000)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Cross-key constraints.
    pub fn check(&self) -> Result<(), ConfigError> {
        let s = &self.similarity;
        if s.w_fg + s.w_mcs + s.w_tanimoto <= 0.0 {
            return Err(ConfigError::OutOfRange {
                key: "similarity.w_fg".into(),
                value: "0".into(),
                range: "a positive sum with similarity.w_mcs and similarity.w_tanimoto".into(),
            });
        }
        if self.rationale.k_out > self.tournament.k {
            return Err(ConfigError::OutOfRange {
                key: "rationale.k_out".into(),
                value: self.rationale.k_out.to_string(),
                range: format!("[1, tournament.k = {}]", self.tournament.k),
            });
        }
        Ok(())
    }

    pub fn judge_timeout(&self) -> Duration {
        Duration::from_millis(self.judge_timeout_ms)
    }

    /// Settings with the run seed applied.
    pub fn tournament_settings(&self) -> TournamentSettings {
        TournamentSettings { seed: self.seed, ..self.tournament }
    }

    pub fn train_settings(&self) -> TrainSettings {
        TrainSettings { seed: self.seed, ..self.train }
    }
}
