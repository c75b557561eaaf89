//! Multi-channel recall: type, reactant, and product channels over the
//! reaction base, their deduplicated union, slot-level recombination into
//! similar conditions, and the capped candidate pool.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::balance::{run_hard_checks, CheckContext};
use crate::condition::{ConditionConfig, Slot};
use crate::knowbase::{KbError, QueryContext, ReactionBase};
use crate::reaction::Side;

pub const DEFAULT_POOL_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallSettings {
    /// Neighbors per similarity channel.
    pub k: usize,
    pub cap: usize,
    /// Variants generated per matched configuration.
    pub variant_cap: usize,
    /// Co-occurring alternatives considered per slot.
    pub alternatives_per_slot: usize,
    pub feasibility_filter: bool,
}

impl Default for RecallSettings {
    fn default() -> Self {
        RecallSettings { k: 64, cap: DEFAULT_POOL_CAP, variant_cap: 8, alternatives_per_slot: 3, feasibility_filter: true }
    }
}

/// A channel hit: record id with its similarity score (0 for the type channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Channels {
    pub s_t: Vec<Hit>,
    pub s_r: Vec<Hit>,
    pub s_p: Vec<Hit>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelHits {
    pub type_channel: bool,
    pub reactant: bool,
    pub product: bool,
}

impl ChannelHits {
    pub fn count(&self) -> u8 {
        self.type_channel as u8 + self.reactant as u8 + self.product as u8
    }

    pub fn union(self, o: ChannelHits) -> ChannelHits {
        ChannelHits {
            type_channel: self.type_channel || o.type_channel,
            reactant: self.reactant || o.reactant,
            product: self.product || o.product,
        }
    }
}

/// One record of the matched union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedRecord {
    pub id: String,
    pub hits: ChannelHits,
    /// Best similarity score over the channels that hit.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Matched,
    Similar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub config: ConditionConfig,
    pub origin: Origin,
    /// Supporting record ids; for similar candidates, those of the parent.
    pub provenance: Vec<String>,
    pub channel_hits: u8,
    /// Best channel similarity (matched) or co-occurrence score (similar).
    pub score: f64,
    /// Canonical id of the matched configuration a variant derives from.
    pub parent: Option<String>,
    pub replaced: Vec<Slot>,
}

impl Candidate {
    pub fn id(&self) -> String {
        self.config.canonical_id()
    }
}

/// Ordered by priority: position 0 is the highest-priority candidate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub candidates: Vec<Candidate>,
    pub cap: usize,
}

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.candidates.iter().map(Candidate::id).collect()
    }
}

/// `S_t` by exact type, `S_r` and `S_p` by top-`k` similarity. An empty
/// query side yields an empty channel.
pub fn recall_channels(base: &ReactionBase, tau: &str, query: &QueryContext, k: usize) -> Result<Channels, KbError> {
    if base.is_empty() {
        return Err(KbError::EmptyBase);
    }
    let s_t = base.query_type(tau).into_iter().map(|id| Hit { id, score: 0.0 }).collect();
    let side = |s: Side| -> Vec<Hit> {
        let q = query.side(s);
        if q.molecules.is_empty() {
            return Vec::new();
        }
        base.query_similar_prepared(q, s, k).into_iter().map(|n| Hit { id: n.id, score: n.score }).collect()
    };
    let (s_r, s_p) = rayon::join(|| side(Side::Reactant), || side(Side::Product));
    Ok(Channels { s_t, s_r, s_p })
}

/// Deduplicated union of the three channels, sorted by id.
pub fn merge_matched(s_t: &[Hit], s_r: &[Hit], s_p: &[Hit]) -> Vec<MatchedRecord> {
    let mut map: BTreeMap<&str, MatchedRecord> = BTreeMap::new();
    let channels: [(&[Hit], ChannelHits); 3] = [
        (s_t, ChannelHits { type_channel: true, ..Default::default() }),
        (s_r, ChannelHits { reactant: true, ..Default::default() }),
        (s_p, ChannelHits { product: true, ..Default::default() }),
    ];
    for (hits, flag) in channels {
        for h in hits {
            let e = map
                .entry(h.id.as_str())
                .or_insert_with(|| MatchedRecord { id: h.id.clone(), hits: ChannelHits::default(), score: 0.0 });
            e.hits = e.hits.union(flag);
            e.score = e.score.max(h.score);
        }
    }
    map.into_values().collect()
}

/// True when the configuration passes every hard check.
pub fn feasible(ctx: &CheckContext<'_>, config: &ConditionConfig) -> bool {
    run_hard_checks(ctx, config).passed
}

/// Drops records whose configuration fails the hard checks; `None` disables
/// the filter.
pub fn feasibility_filter(
    matched: Vec<MatchedRecord>,
    base: &ReactionBase,
    ctx: Option<&CheckContext<'_>>,
) -> Vec<MatchedRecord> {
    let Some(ctx) = ctx else { return matched };
    let mut verdicts: BTreeMap<String, bool> = BTreeMap::new();
    matched
        .into_iter()
        .filter(|m| {
            let Some(r) = base.get(&m.id) else { return false };
            *verdicts.entry(r.condition.canonical_id()).or_insert_with(|| feasible(ctx, &r.condition))
        })
        .collect()
}

/// Groups matched records by configuration: hits are the union over the
/// group, score the maximum, provenance the sorted ids.
pub fn matched_candidates(matched: &[MatchedRecord], base: &ReactionBase) -> Vec<Candidate> {
    let mut groups: BTreeMap<String, Candidate> = BTreeMap::new();
    let mut hits: BTreeMap<String, ChannelHits> = BTreeMap::new();
    for m in matched {
        let Some(r) = base.get(&m.id) else { continue };
        let key = r.condition.canonical_id();
        let c = groups.entry(key.clone()).or_insert_with(|| Candidate {
            config: r.condition.clone(),
            origin: Origin::Matched,
            provenance: Vec::new(),
            channel_hits: 0,
            score: 0.0,
            parent: None,
            replaced: Vec::new(),
        });
        c.provenance.push(m.id.clone());
        c.score = c.score.max(m.score);
        let h = hits.entry(key).or_default();
        *h = h.union(m.hits);
    }
    groups
        .into_iter()
        .map(|(key, mut c)| {
            c.provenance.sort();
            c.channel_hits = hits[&key].count();
            c
        })
        .collect()
}

/// Up to `variant_cap` variants per matched configuration, replacing exactly
/// one slot, then exactly two, with top co-occurring alternatives. Within a
/// level variants are ranked by co-occurrence score, then canonical id.
/// Variants equal to a matched configuration or an earlier variant, and
/// infeasible ones when `ctx` is given, are dropped without using the cap.
#[allow(clippy::too_many_arguments)]
pub fn recombine(
    matched: &[Candidate],
    base: &ReactionBase,
    tau: &str,
    main_fgs: &[String],
    settings: &RecallSettings,
    ctx: Option<&CheckContext<'_>>,
    limit: usize,
) -> Vec<Candidate> {
    let alternatives: BTreeMap<Slot, Vec<(String, f64)>> = Slot::ALL
        .into_iter()
        .map(|slot| {
            let ranked = base.cooccurring_alternatives(slot, tau, main_fgs);
            let top = ranked.first().map_or(1, |r| r.1).max(1) as f64;
            (slot, ranked.into_iter().map(|(s, n)| (s, n as f64 / top)).collect())
        })
        .collect();
    recombine_with(matched, &alternatives, settings, ctx, limit)
}

/// [`recombine`] over explicit per-slot alternatives with scores in [0, 1].
pub fn recombine_with(
    matched: &[Candidate],
    alternatives: &BTreeMap<Slot, Vec<(String, f64)>>,
    settings: &RecallSettings,
    ctx: Option<&CheckContext<'_>>,
    limit: usize,
) -> Vec<Candidate> {
    let mut seen: BTreeSet<String> = matched.iter().map(Candidate::id).collect();
    let mut out: Vec<Candidate> = Vec::new();
    let alts = |slot: Slot, current: &str| -> Vec<(String, f64)> {
        alternatives
            .get(&slot)
            .map(|v| v.iter().filter(|(s, _)| s != current).take(settings.alternatives_per_slot).cloned().collect())
            .unwrap_or_default()
    };
    for parent in matched {
        if out.len() >= limit {
            break;
        }
        let mut taken = 0;
        let one: Vec<(ConditionConfig, f64, Vec<Slot>)> = Slot::ALL
            .into_iter()
            .flat_map(|s| {
                alts(s, parent.config.get(s)).into_iter().map(move |(a, sc)| (parent.config.with(s, &a), sc, vec![s]))
            })
            .collect();
        let mut two: Vec<(ConditionConfig, f64, Vec<Slot>)> = Vec::new();
        for (i, &si) in Slot::ALL.iter().enumerate() {
            for &sj in &Slot::ALL[i + 1..] {
                for (ai, sci) in alts(si, parent.config.get(si)) {
                    for (aj, scj) in alts(sj, parent.config.get(sj)) {
                        two.push((parent.config.with(si, &ai).with(sj, &aj), (sci + scj) / 2.0, vec![si, sj]));
                    }
                }
            }
        }
        for mut level in [one, two] {
            level.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.canonical_id().cmp(&b.0.canonical_id())));
            for (config, score, replaced) in level {
                if taken >= settings.variant_cap || out.len() >= limit {
                    break;
                }
                let id = config.canonical_id();
                if seen.contains(&id) {
                    continue;
                }
                if ctx.is_some_and(|c| !feasible(c, &config)) {
                    continue;
                }
                seen.insert(id);
                taken += 1;
                out.push(Candidate {
                    config,
                    origin: Origin::Similar,
                    provenance: parent.provenance.clone(),
                    channel_hits: 0,
                    score,
                    parent: Some(parent.id()),
                    replaced,
                });
            }
        }
    }
    out
}

fn matched_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.channel_hits
        .cmp(&a.channel_hits)
        .then_with(|| b.score.total_cmp(&a.score))
        .then_with(|| a.id().cmp(&b.id()))
}

fn similar_order(a: &Candidate, b: &Candidate) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.id().cmp(&b.id()))
}

/// Matched candidates (by hit count, then score) ahead of similar ones (by
/// score), deduplicated by canonical id with the matched copy kept, then
/// truncated to `cap`.
pub fn build_pool(mut matched: Vec<Candidate>, mut similar: Vec<Candidate>, cap: usize) -> CandidatePool {
    matched.sort_by(matched_order);
    similar.sort_by(similar_order);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let candidates: Vec<Candidate> =
        matched.into_iter().chain(similar).filter(|c| seen.insert(c.id())).take(cap).collect();
    CandidatePool { candidates, cap }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecallOutput {
    pub channels: Channels,
    pub matched: Vec<MatchedRecord>,
    pub pool: CandidatePool,
}

/// Channels, union, optional feasibility filter, recombination, and pool.
pub fn recall(
    base: &ReactionBase,
    tau: &str,
    main_fgs: &[String],
    query: &QueryContext,
    ctx: &CheckContext<'_>,
    settings: &RecallSettings,
) -> Result<RecallOutput, KbError> {
    let channels = recall_channels(base, tau, query, settings.k)?;
    let merged = merge_matched(&channels.s_t, &channels.s_r, &channels.s_p);
    let filter = settings.feasibility_filter.then_some(ctx);
    let matched = feasibility_filter(merged, base, filter);
    let mut configs = matched_candidates(&matched, base);
    configs.sort_by(matched_order);
    let room = settings.cap.saturating_sub(configs.len());
    let similar = recombine(&configs, base, tau, main_fgs, settings, filter, room);
    let pool = build_pool(configs, similar, settings.cap);
    Ok(RecallOutput { channels, matched, pool })
}

/// Every entry hit a channel, or derives from a matched entry of the pool's
/// input by one or two slot replacements.
pub fn admission_sound(pool: &CandidatePool, matched: &[Candidate]) -> bool {
    let parents: BTreeMap<String, &ConditionConfig> = matched.iter().map(|c| (c.id(), &c.config)).collect();
    pool.candidates.iter().all(|c| match c.origin {
        Origin::Matched => c.channel_hits >= 1,
        Origin::Similar => c
            .parent
            .as_ref()
            .and_then(|p| parents.get(p))
            .is_some_and(|p| (1..=2).contains(&p.hamming(&c.config))),
    })
}
