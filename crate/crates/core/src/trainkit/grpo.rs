//! A per-position softmax policy and the group-relative clipped objective.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;

/// Added to the group standard deviation before dividing.
pub const ADVANTAGE_FLOOR: f64 = 1e-8;

/// Independent softmax over `vocab` actions at each of `horizon` positions;
/// `logits` is row-major by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub horizon: usize,
    pub vocab: usize,
    pub logits: Vec<f64>,
}

impl ToyPolicy {
    /// All-zero logits: uniform at every position.
    pub fn uniform(horizon: usize, vocab: usize) -> Self {
        ToyPolicy { horizon, vocab, logits: vec![0.0; horizon * vocab] }
    }

    pub fn from_logits(horizon: usize, vocab: usize, logits: Vec<f64>) -> Result<Self, TrainError> {
        if logits.len() != horizon * vocab || vocab == 0 {
            return Err(TrainError::ShapeMismatch(format!("{} logits for {horizon}×{vocab}", logits.len())));
        }
        Ok(ToyPolicy { horizon, vocab, logits })
    }

    pub fn same_shape(&self, other: &ToyPolicy) -> bool {
        self.horizon == other.horizon && self.vocab == other.vocab && self.logits.len() == other.logits.len()
    }

    fn row(&self, t: usize) -> &[f64] {
        &self.logits[t * self.vocab..(t + 1) * self.vocab]
    }

    pub fn log_probs(&self, t: usize) -> Vec<f64> {
        let row = self.row(t);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        row.iter().map(|x| x - lse).collect()
    }

    pub fn probs(&self, t: usize) -> Vec<f64> {
        self.log_probs(t).into_iter().map(f64::exp).collect()
    }

    pub fn log_prob(&self, t: usize, a: usize) -> f64 {
        self.log_probs(t)[a]
    }

    pub fn sequence_log_prob(&self, seq: &[usize]) -> f64 {
        seq.iter().enumerate().map(|(t, &a)| self.log_prob(t, a)).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        (0..self.horizon)
            .map(|t| {
                let p = self.probs(t);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (a, pa) in p.iter().enumerate() {
                    acc += pa;
                    if u < acc {
                        return a;
                    }
                }
                self.vocab - 1
            })
            .collect()
    }

    /// Every full-horizon sequence with its probability.
    pub fn sequences(&self) -> Vec<(Vec<usize>, f64)> {
        let probs: Vec<Vec<f64>> = (0..self.horizon).map(|t| self.probs(t)).collect();
        let mut out = vec![(Vec::with_capacity(self.horizon), 1.0)];
        for p in &probs {
            out = out
                .into_iter()
                .flat_map(|(seq, q)| {
                    p.iter().enumerate().map(move |(a, pa)| {
                        let mut s = seq.clone();
                        s.push(a);
                        (s, q * pa)
                    })
                })
                .collect();
        }
        out
    }

    /// `KL(self_t ‖ other_t)` at position `t`.
    pub fn kl_at(&self, other: &ToyPolicy, t: usize) -> f64 {
        let (lp, lq) = (self.log_probs(t), other.log_probs(t));
        lp.iter().zip(&lq).map(|(a, b)| a.exp() * (a - b)).sum()
    }

    /// Total variation between the two sequence distributions.
    pub fn tv_distance(&self, other: &ToyPolicy) -> f64 {
        let p = self.sequences();
        p.iter().map(|(s, q)| (q - other.sequence_log_prob(s).exp()).abs()).sum::<f64>() / 2.0
    }
}

/// `(R − mean) / (std + ε)` with the population standard deviation.
pub fn group_advantages(rewards: &[f64]) -> Result<Vec<f64>, TrainError> {
    let g = rewards.len();
    if g < 2 {
        return Err(TrainError::GroupTooSmall { g });
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let denom = var.sqrt() + ADVANTAGE_FLOOR;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

/// Rollouts of one query; advantages are per sequence, shared by its tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub sequences: Vec<Vec<usize>>,
    /// Per-token log-probabilities under the sampling policy.
    pub logp_old: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl RolloutGroup {
    pub fn new(sequences: Vec<Vec<usize>>, old: &ToyPolicy, rewards: Vec<f64>) -> Result<Self, TrainError> {
        if sequences.len() != rewards.len() {
            return Err(TrainError::ShapeMismatch(format!("{} sequences, {} rewards", sequences.len(), rewards.len())));
        }
        let advantages = group_advantages(&rewards)?;
        let logp_old = sequences
            .iter()
            .map(|s| {
                check_sequence(old, s)?;
                Ok(s.iter().enumerate().map(|(t, &a)| old.log_prob(t, a)).collect())
            })
            .collect::<Result<_, TrainError>>()?;
        Ok(RolloutGroup { sequences, logp_old, rewards, advantages })
    }
}

fn check_sequence(p: &ToyPolicy, s: &[usize]) -> Result<(), TrainError> {
    if s.is_empty() || s.len() > p.horizon {
        return Err(TrainError::ShapeMismatch(format!("sequence of length {} for horizon {}", s.len(), p.horizon)));
    }
    if let Some(a) = s.iter().find(|&&a| a >= p.vocab) {
        return Err(TrainError::ShapeMismatch(format!("action {a} outside vocabulary of {}", p.vocab)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub value: f64,
    pub surrogate: f64,
    /// Token-averaged exact KL to the reference.
    pub kl: f64,
    /// With respect to the policy logits.
    pub gradient: Vec<f64>,
}

/// Mean over sequences of the token-mean clipped surrogate
/// `min(ρÂ, clip(ρ, 1−ε, 1+ε)Â)`, minus `β` times the token-mean exact KL
/// to `reference`, with its analytic gradient.
pub fn grpo_objective(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    group: &RolloutGroup,
    epsilon: f64,
    beta: f64,
) -> Result<Objective, TrainError> {
    if !policy.same_shape(reference) {
        return Err(TrainError::ShapeMismatch("policy and reference differ in shape".into()));
    }
    let g = group.sequences.len();
    if g == 0 || group.advantages.len() != g || group.logp_old.len() != g {
        return Err(TrainError::ShapeMismatch(format!(
            "{g} sequences, {} advantages, {} old log-prob rows",
            group.advantages.len(),
            group.logp_old.len()
        )));
    }
    if epsilon.is_nan() || epsilon <= 0.0 || beta.is_nan() || beta < 0.0 {
        return Err(TrainError::InvalidSetting(format!("epsilon {epsilon}, beta {beta}")));
    }
    let v = policy.vocab;
    let logp: Vec<Vec<f64>> = (0..policy.horizon).map(|t| policy.log_probs(t)).collect();
    let kl: Vec<f64> = (0..policy.horizon).map(|t| policy.kl_at(reference, t)).collect();
    let ref_logp: Vec<Vec<f64>> = (0..policy.horizon).map(|t| reference.log_probs(t)).collect();
    let mut gradient = vec![0.0; policy.logits.len()];
    let (mut surrogate, mut kl_total) = (0.0, 0.0);
    for ((seq, old), &adv) in group.sequences.iter().zip(&group.logp_old).zip(&group.advantages) {
        check_sequence(policy, seq)?;
        if old.len() != seq.len() {
            return Err(TrainError::ShapeMismatch(format!("{} old log-probs for {} tokens", old.len(), seq.len())));
        }
        let w = 1.0 / (g as f64 * seq.len() as f64);
        for (t, (&a, &lo)) in seq.iter().zip(old).enumerate() {
            let rho = (logp[t][a] - lo).exp();
            let plain = rho * adv;
            let clipped = rho.clamp(1.0 - epsilon, 1.0 + epsilon) * adv;
            surrogate += w * plain.min(clipped);
            let row = &mut gradient[t * v..(t + 1) * v];
            if plain <= clipped {
                // d(ρÂ)/dθ_b = Â·ρ·(1[b = a] − π_b)
                for (b, gb) in row.iter_mut().enumerate() {
                    let pb = logp[t][b].exp();
                    *gb += w * adv * rho * (f64::from(u8::from(b == a)) - pb);
                }
            }
            kl_total += w * kl[t];
            if beta > 0.0 {
                for (b, gb) in row.iter_mut().enumerate() {
                    let pb = logp[t][b].exp();
                    *gb -= beta * w * pb * (logp[t][b] - ref_logp[t][b] - kl[t]);
                }
            }
        }
    }
    Ok(Objective { value: surrogate - beta * kl_total, surrogate, kl: kl_total, gradient })
}
