//! Seeded knockout down to exactly K survivors, with a complete bracket log.
//!
//! Survivors are kept in priority order (pool position). A round pairs
//! everyone after a seeded shuffle, giving a bye to the highest-priority
//! survivor when the count is odd. When halving would drop below K, only the
//! lowest-priority `2·(|W| − K)` survivors play and the rest advance.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::board::{debate_match, MatchOutcome, Panel};
use super::{Choice, DebateContext, DebateError};
use crate::recall::{Candidate, CandidatePool};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TournamentSettings {
    pub k: usize,
    pub seed: u64,
    /// Run the matches of a round on the thread pool.
    pub parallel: bool,
    /// Keep each match's board in the log.
    pub keep_boards: bool,
}

impl Default for TournamentSettings {
    fn default() -> Self {
        TournamentSettings { k: 50, seed: 0, parallel: true, keep_boards: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    /// Pool positions.
    pub a: usize,
    pub b: usize,
    pub winner: usize,
    pub loser: usize,
    pub outcome: MatchOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: u32,
    pub entrants: Vec<usize>,
    pub partial: bool,
    pub bye: Option<usize>,
    /// Entrants that advanced unplayed in a partial round.
    pub advanced: Vec<usize>,
    pub matches: Vec<MatchRecord>,
    pub survivors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketLog {
    pub pool_size: usize,
    pub k: usize,
    pub seed: u64,
    pub rounds: Vec<RoundLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Survivor {
    pub index: usize,
    pub candidate: Candidate,
    pub wins: u32,
    /// Matches won over rounds played; 1 when no round was needed.
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub top: Vec<Survivor>,
    pub log: BracketLog,
}

pub fn tournament(
    ctx: &DebateContext<'_>,
    pool: &CandidatePool,
    panel: &Panel,
    settings: &TournamentSettings,
) -> Result<TournamentResult, DebateError> {
    let k = settings.k;
    if k == 0 || pool.len() < k {
        return Err(DebateError::PoolTooSmall { pool: pool.len(), k });
    }
    if panel.is_empty() {
        return Err(DebateError::EmptyPanel);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut alive: Vec<usize> = (0..pool.len()).collect();
    let mut rounds: Vec<RoundLog> = Vec::new();
    while alive.len() > k {
        let round = rounds.len() as u32 + 1;
        let n = alive.len();
        let partial = n.div_ceil(2) < k;
        let (bye, advanced, mut players) = if partial {
            let m = n - k;
            (None, alive[..n - 2 * m].to_vec(), alive[n - 2 * m..].to_vec())
        } else if n % 2 == 1 {
            (Some(alive[0]), Vec::new(), alive[1..].to_vec())
        } else {
            (None, Vec::new(), alive.clone())
        };
        players.shuffle(&mut rng);
        let pairs: Vec<(usize, usize, usize)> =
            players.chunks_exact(2).enumerate().map(|(i, p)| (i, p[0], p[1])).collect();
        let play = |&(slot, a, b): &(usize, usize, usize)| {
            let id = format!("r{round}m{slot}");
            let mut outcome = debate_match(ctx, &id, &pool.candidates[a], &pool.candidates[b], panel);
            if !settings.keep_boards {
                outcome.board = Default::default();
            }
            let (winner, loser) = if outcome.winner == Choice::A { (a, b) } else { (b, a) };
            MatchRecord { a, b, winner, loser, outcome }
        };
        let matches: Vec<MatchRecord> =
            if settings.parallel { pairs.par_iter().map(play).collect() } else { pairs.iter().map(play).collect() };
        let mut survivors: Vec<usize> =
            bye.into_iter().chain(advanced.iter().copied()).chain(matches.iter().map(|m| m.winner)).collect();
        survivors.sort_unstable();
        log::debug!("round {round}: {n} -> {} ({} matches)", survivors.len(), matches.len());
        rounds.push(RoundLog { round, entrants: alive, partial, bye, advanced, matches, survivors: survivors.clone() });
        alive = survivors;
    }
    let mut wins: BTreeMap<usize, u32> = BTreeMap::new();
    for m in rounds.iter().flat_map(|r| &r.matches) {
        *wins.entry(m.winner).or_default() += 1;
    }
    let total = rounds.len();
    let top = alive
        .into_iter()
        .map(|i| {
            let w = wins.get(&i).copied().unwrap_or(0);
            Survivor {
                index: i,
                candidate: pool.candidates[i].clone(),
                wins: w,
                depth: if total == 0 { 1.0 } else { w as f64 / total as f64 },
            }
        })
        .collect();
    Ok(TournamentResult { top, log: BracketLog { pool_size: pool.len(), k, seed: settings.seed, rounds } })
}

/// Checks that the log accounts for every candidate: each round partitions
/// its entrants into bye, unplayed advances, and match players; every
/// eliminated candidate lost exactly one recorded match; the final
/// survivors are exactly `top`.
pub fn audit_bracket(log: &BracketLog, top: &[Survivor]) -> Result<(), String> {
    let mut alive: Vec<usize> = (0..log.pool_size).collect();
    let mut losses: BTreeMap<usize, usize> = BTreeMap::new();
    for r in &log.rounds {
        if r.entrants != alive {
            return Err(format!("round {}: entrants differ from previous survivors", r.round));
        }
        let mut seen: BTreeSet<usize> = BTreeSet::new();
        let mut take = |i: usize| seen.insert(i);
        if !r.bye.iter().chain(&r.advanced).all(|&i| take(i)) {
            return Err(format!("round {}: duplicate unplayed entrant", r.round));
        }
        for m in &r.matches {
            if !take(m.a) || !take(m.b) {
                return Err(format!("round {}: entrant plays twice", r.round));
            }
            let expected = if m.outcome.winner == Choice::A { (m.a, m.b) } else { (m.b, m.a) };
            if (m.winner, m.loser) != expected {
                return Err(format!("round {}: match {} winner inconsistent", r.round, m.outcome.match_id));
            }
            if m.outcome.n_a + m.outcome.n_b != m.outcome.decisions.len() {
                return Err(format!("round {}: match {} tally mismatch", r.round, m.outcome.match_id));
            }
            *losses.entry(m.loser).or_default() += 1;
        }
        if seen != alive.iter().copied().collect() {
            return Err(format!("round {}: entrants not partitioned", r.round));
        }
        let mut expected: Vec<usize> = r.bye.iter().chain(&r.advanced).copied().chain(r.matches.iter().map(|m| m.winner)).collect();
        expected.sort_unstable();
        if expected != r.survivors {
            return Err(format!("round {}: survivors do not follow from matches", r.round));
        }
        let n = r.entrants.len();
        let want = if r.partial { log.k } else { n.div_ceil(2) };
        if r.survivors.len() != want {
            return Err(format!("round {}: {} survivors, expected {want}", r.round, r.survivors.len()));
        }
        alive = r.survivors.clone();
    }
    let final_ids: Vec<usize> = top.iter().map(|s| s.index).collect();
    if final_ids != alive || alive.len() != log.k {
        return Err("final survivors differ from the reported top".into());
    }
    let eliminated = log.pool_size - alive.len();
    if losses.len() != eliminated || losses.values().any(|&c| c != 1) || alive.iter().any(|i| losses.contains_key(i)) {
        return Err("eliminations do not match recorded losses".into());
    }
    Ok(())
}
