//! Final selection: maximize summed utility plus weighted slot diversity.

use serde::{Deserialize, Serialize};

use super::{Recommendation, RationaleError};
use crate::condition::{ConditionConfig, Slot};

/// Objective differences below this are ties.
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationSet {
    /// Utility descending, then canonical id.
    pub entries: Vec<Recommendation>,
    pub k_out: usize,
    pub lambda: f64,
    pub diversity: f64,
    pub objective: f64,
}

fn distance(a: &ConditionConfig, b: &ConditionConfig) -> f64 {
    a.hamming(b) as f64 / Slot::ALL.len() as f64
}

/// Mean pairwise normalized slot Hamming distance; 0 below two configs.
pub fn diversity(configs: &[&ConditionConfig]) -> f64 {
    let n = configs.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += distance(configs[i], configs[j]);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// `Σu + λ·Div` over `entries`.
pub fn objective(entries: &[Recommendation], lambda: f64) -> f64 {
    let configs: Vec<&ConditionConfig> = entries.iter().map(|e| &e.config).collect();
    entries.iter().map(|e| e.utility).sum::<f64>() + lambda * diversity(&configs)
}

struct Problem {
    utility: Vec<f64>,
    dist: Vec<Vec<f64>>,
    lambda: f64,
}

impl Problem {
    fn value(&self, chosen: &[usize]) -> f64 {
        let n = chosen.len();
        let u: f64 = chosen.iter().map(|&i| self.utility[i]).sum();
        if n < 2 {
            return u;
        }
        let mut d = 0.0;
        for (x, &i) in chosen.iter().enumerate() {
            for &j in &chosen[x + 1..] {
                d += self.dist[i][j];
            }
        }
        u + self.lambda * d / (n * (n - 1) / 2) as f64
    }

    /// Every `k`-subset in lexicographic index order; strict improvement
    /// beyond [`TIE`] is needed to replace the incumbent.
    fn exact(&self, k: usize) -> Vec<usize> {
        let n = self.utility.len();
        let mut idx: Vec<usize> = (0..k).collect();
        let mut best = idx.clone();
        let mut best_v = self.value(&idx);
        loop {
            let Some(p) = (0..k).rev().find(|&p| idx[p] < n - k + p) else { break };
            idx[p] += 1;
            for q in p + 1..k {
                idx[q] = idx[q - 1] + 1;
            }
            let v = self.value(&idx);
            if v > best_v + TIE {
                best_v = v;
                best.clone_from(&idx);
            }
        }
        best
    }

    fn greedy(&self, k: usize) -> Vec<usize> {
        let n = self.utility.len();
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        let mut taken = vec![false; n];
        while chosen.len() < k {
            let mut best: Option<(usize, f64)> = None;
            for i in (0..n).filter(|&i| !taken[i]) {
                chosen.push(i);
                let v = self.value(&chosen);
                chosen.pop();
                if best.is_none_or(|(_, b)| v > b + TIE) {
                    best = Some((i, v));
                }
            }
            let (i, _) = best.expect("k within candidate count");
            taken[i] = true;
            chosen.push(i);
        }
        chosen.sort_unstable();
        chosen
    }
}

/// Drops invalid candidates (and duplicate configs, keeping the higher
/// utility), then picks `k_out` maximizing `Σu + λ·Div`: exhaustively up to
/// `exact_limit` candidates, greedily by marginal gain beyond. Candidates are
/// considered in canonical-id order, so ties go to smaller ids.
pub fn select_final(
    candidates: &[Recommendation],
    k_out: usize,
    lambda: f64,
    exact_limit: usize,
) -> Result<RecommendationSet, RationaleError> {
    let mut pool: Vec<&Recommendation> = candidates.iter().filter(|c| c.validity.valid).collect();
    pool.sort_by(|a, b| a.id().cmp(&b.id()).then_with(|| b.utility.total_cmp(&a.utility)));
    pool.dedup_by(|a, b| a.config == b.config);
    if pool.len() < k_out {
        return Err(RationaleError::NotEnoughValid { valid: pool.len(), k_out });
    }
    let problem = Problem {
        utility: pool.iter().map(|c| c.utility).collect(),
        dist: pool.iter().map(|a| pool.iter().map(|b| distance(&a.config, &b.config)).collect()).collect(),
        lambda,
    };
    let chosen = if k_out == 0 {
        Vec::new()
    } else if pool.len() <= exact_limit {
        problem.exact(k_out)
    } else {
        problem.greedy(k_out)
    };
    let mut entries: Vec<Recommendation> = chosen.into_iter().map(|i| pool[i].clone()).collect();
    entries.sort_by(|a, b| b.utility.total_cmp(&a.utility).then_with(|| a.id().cmp(&b.id())));
    let configs: Vec<&ConditionConfig> = entries.iter().map(|e| &e.config).collect();
    let diversity = diversity(&configs);
    let objective = objective(&entries, lambda);
    Ok(RecommendationSet { entries, k_out, lambda, diversity, objective })
}

#[cfg(test)]
pub(super) fn exact_and_greedy(utility: Vec<f64>, configs: &[ConditionConfig], lambda: f64, k: usize) -> (f64, f64) {
    let problem = Problem {
        utility,
        dist: configs.iter().map(|a| configs.iter().map(|b| distance(a, b)).collect()).collect(),
        lambda,
    };
    (problem.value(&problem.exact(k)), problem.value(&problem.greedy(k)))
}
