//! End-to-end orchestration: report, recall, tournament, certification and
//! selection for one query, plus the per-run memory store and top-k
//! evaluation.

mod config;
mod eval;
mod store;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chemist::{general_chemist, ReactionReport};
use crate::condition::ConditionConfig;
use crate::debate::{
    tournament, AgentRole, DebateContext, DebateError, HeuristicJudge, Judge, Panel, RemoteJudge, ReplayJudge,
    TournamentResult,
};
use crate::knowbase::{IngestReport, KbError, QueryContext, RawRecord, ReactionBase, SNAPSHOT_HEADER};
use crate::rationale::{certify_all, select_final, RationaleError, Recommendation, RecommendationSet, ValidityResult};
use crate::reaction::{Reaction, ReactionError};
use crate::recall::{recall, CandidatePool, RecallOutput};
use crate::resources::{ResourceError, Resources};
use crate::trainkit::TrainError;

pub use config::{ConfigError, JudgeSpec, PipelineConfig};
pub use eval::{evaluate, read_test_set, EvalCase, EvalResult, DEFAULT_KS};
pub use store::{write_atomic, MemoryStore};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("resources: {0}")]
    Resources(#[from] ResourceError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("ingest: {0}")]
    Ingest(KbError),
    #[error("query {id}: {source}")]
    Query { id: String, source: ReactionError },
    #[error("recall: {0}")]
    Recall(KbError),
    #[error("judge: {0}")]
    Judge(DebateError),
    #[error("tournament: {0}")]
    Tournament(DebateError),
    #[error(
        "selection: {valid} of {certified} certified candidates are valid, {k_out} needed \
         ({constraint_failures} fail hard checks, {alignment_failures} fall below align threshold, \
         {incoherent} incoherent)"
    )]
    NotEnoughValid {
        valid: usize,
        certified: usize,
        k_out: usize,
        constraint_failures: usize,
        alignment_failures: usize,
        incoherent: usize,
    },
    #[error("malformed test set, line {line}: {reason}")]
    MalformedTestSet { line: usize, reason: String },
    #[error("train: {0}")]
    Train(#[from] TrainError),
    #[error("encode: {0}")]
    Encode(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io { path: path.to_path_buf(), source }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path).map(BufReader::new).map_err(|e| PipelineError::io(path, e))
}

/// Loads a base from a record stream or a snapshot, by header.
pub fn load_base(path: &Path, resources: Arc<Resources>) -> Result<(ReactionBase, IngestReport), PipelineError> {
    let mut reader = open(path)?;
    let is_snapshot = reader.fill_buf().map_err(|e| PipelineError::io(path, e))?.starts_with(SNAPSHOT_HEADER.as_bytes());
    if is_snapshot {
        let base = ReactionBase::read_snapshot(reader, resources).map_err(PipelineError::Ingest)?;
        let report = IngestReport { indexed: base.len(), ..Default::default() };
        Ok((base, report))
    } else {
        ReactionBase::ingest(reader, resources).map_err(PipelineError::Ingest)
    }
}

/// A named query reaction, read from base-format lines or given inline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub reaction: String,
    /// The recorded conditions, when the query doubles as a test case.
    pub label: Option<ConditionConfig>,
}

impl Query {
    pub fn inline(id: &str, reaction: &str) -> Self {
        Query { id: id.into(), reaction: reaction.into(), label: None }
    }

    pub fn from_raw(raw: &RawRecord) -> Self {
        Query {
            id: raw.id.clone(),
            reaction: format!("{}>>{}", raw.reactants.join("."), raw.products.join(".")),
            label: Some(raw.condition()),
        }
    }

    pub fn parse(&self) -> Result<Reaction, PipelineError> {
        Reaction::from_reaction_smiles(&self.reaction).map_err(|source| PipelineError::Query { id: self.id.clone(), source })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub rank: usize,
    pub id: String,
    pub config: ConditionConfig,
    pub utility: f64,
    pub validity: ValidityResult,
    pub rationale: crate::rationale::Rationale,
}

/// The per-query recommendation document; field order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationReport {
    pub query: String,
    pub reaction: String,
    pub reaction_type: String,
    pub type_confidence: f64,
    pub main_fgs: Vec<String>,
    pub byproduct: Option<String>,
    pub seed: u64,
    pub pool_size: usize,
    pub survivors: usize,
    pub k_out: usize,
    pub delta: f64,
    pub lambda: f64,
    pub objective: f64,
    pub diversity: f64,
    pub entries: Vec<ReportEntry>,
}

impl RecommendationReport {
    pub fn configs(&self) -> Vec<ConditionConfig> {
        self.entries.iter().map(|e| e.config.clone()).collect()
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String, PipelineError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Every intermediate of one query.
#[derive(Debug)]
pub struct Run {
    pub query: Query,
    pub report: ReactionReport,
    pub recall: RecallOutput,
    pub tournament: Option<TournamentResult>,
    pub certified: Vec<Recommendation>,
    pub selection: Result<RecommendationSet, PipelineError>,
}

impl Run {
    pub fn recommendations(&self, config: &PipelineConfig) -> Option<RecommendationReport> {
        let set = self.selection.as_ref().ok()?;
        Some(RecommendationReport {
            query: self.query.id.clone(),
            reaction: self.report.reaction.clone(),
            reaction_type: self.report.reaction_type.clone(),
            type_confidence: self.report.type_confidence,
            main_fgs: self.report.main_fg_names(),
            byproduct: self.report.top_byproduct(),
            seed: config.seed,
            pool_size: self.recall.pool.len(),
            survivors: self.certified.len(),
            k_out: set.k_out,
            delta: config.rationale.delta,
            lambda: set.lambda,
            objective: set.objective,
            diversity: set.diversity,
            entries: set
                .entries
                .iter()
                .enumerate()
                .map(|(i, e)| ReportEntry {
                    rank: i + 1,
                    id: e.id(),
                    config: e.config.clone(),
                    utility: e.utility,
                    validity: e.validity,
                    rationale: e.rationale.clone(),
                })
                .collect(),
        })
    }
}

fn not_enough_valid(certified: &[Recommendation], k_out: usize) -> PipelineError {
    let count = |f: &dyn Fn(&ValidityResult) -> bool| certified.iter().filter(|c| f(&c.validity)).count();
    PipelineError::NotEnoughValid {
        valid: count(&|v| v.valid),
        certified: certified.len(),
        k_out,
        constraint_failures: count(&|v| !v.constr_ok),
        alignment_failures: count(&|v| v.align < v.delta),
        incoherent: count(&|v| !v.coherent_ok),
    }
}

pub struct Pipeline {
    pub config: PipelineConfig,
    pub base: ReactionBase,
    panel: Panel,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline").field("records", &self.base.len()).field("panel", &self.panel).finish()
    }
}

impl Pipeline {
    pub fn new(config: PipelineConfig, base: ReactionBase) -> Result<Self, PipelineError> {
        let base = base.with_settings(config.similarity);
        let panel = build_panel(&config)?;
        Ok(Pipeline { config, base, panel })
    }

    /// Resources and base from the paths in `config`; an absent base path
    /// gives an empty base.
    pub fn load(config: PipelineConfig) -> Result<(Self, IngestReport), PipelineError> {
        let resources = Arc::new(Resources::load(
            config.fg_library.as_deref(),
            config.species.as_deref(),
            config.leaving_groups.as_deref(),
        )?);
        let (base, report) = match &config.base {
            Some(p) => load_base(p, resources)?,
            None => (ReactionBase::empty(resources), IngestReport::default()),
        };
        Ok((Pipeline::new(config, base)?, report))
    }

    pub fn report(&self, reaction: &Reaction) -> ReactionReport {
        general_chemist(reaction, &self.base, &self.config.salience)
    }

    pub fn recall(&self, reaction: &Reaction, report: &ReactionReport) -> Result<RecallOutput, PipelineError> {
        let resources = self.base.resources();
        let query = QueryContext::new(reaction, &resources.library);
        let ctx = report.check_context(reaction, resources);
        recall(&self.base, &report.reaction_type, &report.main_fg_names(), &query, &ctx, &self.config.recall)
            .map_err(PipelineError::Recall)
    }

    pub fn context<'a>(&'a self, reaction: &'a Reaction, report: &'a ReactionReport) -> DebateContext<'a> {
        DebateContext::new(&self.base, reaction, report, self.config.debate)
    }

    /// Knockout to `min(K, |pool|)` survivors.
    pub fn tournament(&self, ctx: &DebateContext<'_>, pool: &CandidatePool) -> Result<TournamentResult, PipelineError> {
        let mut settings = self.config.tournament_settings();
        if pool.len() < settings.k {
            log::info!("pool of {} is below K = {}; every candidate survives", pool.len(), settings.k);
            settings.k = pool.len();
        }
        tournament(ctx, pool, &self.panel, &settings).map_err(PipelineError::Tournament)
    }

    pub fn run(&self, query: &Query) -> Result<Run, PipelineError> {
        let reaction = query.parse()?;
        let report = self.report(&reaction);
        let recall = self.recall(&reaction, &report)?;
        let k_out = self.config.rationale.k_out;
        if recall.pool.is_empty() {
            return Ok(Run {
                query: query.clone(),
                report,
                recall,
                tournament: None,
                certified: Vec::new(),
                selection: Err(not_enough_valid(&[], k_out)),
            });
        }
        let ctx = self.context(&reaction, &report);
        let bracket = self.tournament(&ctx, &recall.pool)?;
        let certified = certify_all(&ctx, &bracket.top, &self.config.rationale);
        let r = &self.config.rationale;
        let selection = match select_final(&certified, k_out, r.lambda, r.exact_limit) {
            Ok(set) => Ok(set),
            Err(RationaleError::NotEnoughValid { .. }) => Err(not_enough_valid(&certified, k_out)),
        };
        Ok(Run { query: query.clone(), report, recall, tournament: Some(bracket), certified, selection })
    }

    /// The final document for one query.
    pub fn recommend(&self, query: &Query) -> Result<RecommendationReport, PipelineError> {
        let run = self.run(query)?;
        match run.recommendations(&self.config) {
            Some(doc) => Ok(doc),
            None => Err(run.selection.err().expect("selection failed")),
        }
    }
}

fn build_panel(config: &PipelineConfig) -> Result<Panel, PipelineError> {
    let seats = AgentRole::ALL
        .into_iter()
        .zip(&config.judges)
        .map(|(role, spec)| {
            let judge: Arc<dyn Judge> = match spec {
                JudgeSpec::Heuristic => Arc::new(HeuristicJudge),
                JudgeSpec::Replay(p) => Arc::new(ReplayJudge::load(p).map_err(PipelineError::Judge)?),
                JudgeSpec::Remote(a) => Arc::new(RemoteJudge::new(a.clone(), config.judge_timeout())),
            };
            Ok((role, judge))
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;
    Ok(Panel::new(seats))
}

/// Cases for labeled queries from stored documents, `<dir>/<id>.json` or
/// `<dir>/<id>/recommendations.json`. A missing document predicts nothing.
pub fn stored_cases(dir: &Path, queries: &[Query]) -> Result<Vec<EvalCase>, PipelineError> {
    queries
        .iter()
        .map(|q| {
            let flat = dir.join(format!("{}.json", q.id));
            let nested = MemoryStore::new(dir).query_dir(&q.id).join("recommendations.json");
            let predictions = match [flat, nested].into_iter().find(|p| p.is_file()) {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
                    serde_json::from_str::<RecommendationReport>(&text)?.configs()
                }
                None => {
                    log::warn!("no stored recommendations for {}", q.id);
                    Vec::new()
                }
            };
            Ok(EvalCase { id: q.id.clone(), label: label_of(q)?, predictions })
        })
        .collect()
}

fn label_of(q: &Query) -> Result<ConditionConfig, PipelineError> {
    q.label
        .clone()
        .ok_or_else(|| PipelineError::MalformedTestSet { line: 0, reason: format!("query {} has no label", q.id) })
}

impl Pipeline {
    /// Cases from fresh runs; a query that fails selection predicts nothing.
    pub fn live_cases(&self, queries: &[Query]) -> Result<Vec<EvalCase>, PipelineError> {
        queries
            .iter()
            .map(|q| {
                let predictions = match self.recommend(q) {
                    Ok(doc) => doc.configs(),
                    Err(e @ PipelineError::NotEnoughValid { .. }) => {
                        log::warn!("{}: {e}", q.id);
                        Vec::new()
                    }
                    Err(e) => return Err(e),
                };
                Ok(EvalCase { id: q.id.clone(), label: label_of(q)?, predictions })
            })
            .collect()
    }

    pub fn evaluate(&self, cases: &[EvalCase], ks: &[usize]) -> EvalResult {
        evaluate(cases, ks, &self.base.resources().species)
    }
}

/// Base-format query lines.
pub fn read_queries(path: &Path) -> Result<Vec<Query>, PipelineError> {
    Ok(read_test_set(open(path)?)?.iter().map(Query::from_raw).collect())
}
