//! Scripted pairwise-judgment environment and the GRPO ascent loop.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::format::{reward, RewardInput};
use super::grpo::{grpo_objective, RolloutGroup, ToyPolicy};
use super::TrainError;
use crate::debate::Choice;

/// Toy vocabulary; each action renders to one transcript line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ToyAction {
    Think,
    Search,
    Memory,
    JudgeA,
    JudgeB,
    /// An unclosed tag.
    Stray,
}

impl ToyAction {
    pub const ALL: [ToyAction; 6] =
        [ToyAction::Think, ToyAction::Search, ToyAction::Memory, ToyAction::JudgeA, ToyAction::JudgeB, ToyAction::Stray];

    pub fn line(self) -> &'static str {
        match self {
            ToyAction::Think => "Compare the two options.",
            ToyAction::Search => "<search>similar reactions</search>",
            ToyAction::Memory => "<memory>board</memory>",
            ToyAction::JudgeA => "Judgement: A",
            ToyAction::JudgeB => "Judgement: B",
            ToyAction::Stray => "<search>",
        }
    }
}

/// The transcript for a sequence of action indices.
pub fn render(seq: &[usize]) -> String {
    seq.iter().map(|&a| ToyAction::ALL[a].line()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentTask {
    pub id: String,
    pub truth: Choice,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentEnv {
    pub tasks: Vec<JudgmentTask>,
}

impl JudgmentEnv {
    /// `n` tasks whose correct answer is always `truth`.
    pub fn constant(truth: Choice, n: usize) -> Self {
        JudgmentEnv { tasks: (0..n).map(|i| JudgmentTask { id: format!("t{i}"), truth }).collect() }
    }

    pub fn reward(&self, task: usize, seq: &[usize]) -> f64 {
        reward(RewardInput::from_transcript(&render(seq), self.tasks[task].truth))
    }

    /// Exact expected reward of `policy`, averaged over tasks.
    pub fn expected_reward(&self, policy: &ToyPolicy) -> f64 {
        let seqs = policy.sequences();
        let per_task = |task: usize| seqs.iter().map(|(s, p)| p * self.reward(task, s)).sum::<f64>();
        (0..self.tasks.len()).map(per_task).sum::<f64>() / self.tasks.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub steps: usize,
    pub group_size: usize,
    pub epsilon: f64,
    pub beta: f64,
    /// Initial step length of each backtracking search.
    pub learning_rate: f64,
    pub max_backtracks: u32,
    pub seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            steps: 200,
            group_size: 8,
            epsilon: 0.2,
            beta: 0.0,
            learning_rate: 4.0,
            max_backtracks: 30,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    /// Exact expected reward after the step.
    pub mean_reward: f64,
    /// Mean reward of the sampled group.
    pub sample_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub policy: ToyPolicy,
    pub curve: Vec<CurvePoint>,
}

/// Each step samples a group for one task from the current policy, scores
/// it, and takes a backtracking ascent step on the GRPO objective, halving
/// the step until the objective rises by a sufficient margin.
pub fn toy_training_loop(
    policy: &ToyPolicy,
    reference: &ToyPolicy,
    env: &JudgmentEnv,
    settings: &TrainSettings,
) -> Result<TrainOutcome, TrainError> {
    if env.tasks.is_empty() {
        return Err(TrainError::InvalidSetting("environment has no tasks".into()));
    }
    if policy.vocab != ToyAction::ALL.len() || !policy.same_shape(reference) {
        return Err(TrainError::ShapeMismatch(format!(
            "policy {}×{} and reference {}×{} over {} actions",
            policy.horizon,
            policy.vocab,
            reference.horizon,
            reference.vocab,
            ToyAction::ALL.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut theta = policy.clone();
    let mut curve = Vec::with_capacity(settings.steps);
    for step in 1..=settings.steps {
        let task = rng.gen_range(0..env.tasks.len());
        let sequences: Vec<Vec<usize>> = (0..settings.group_size).map(|_| theta.sample(&mut rng)).collect();
        let rewards: Vec<f64> = sequences.iter().map(|s| env.reward(task, s)).collect();
        let sample_mean = rewards.iter().sum::<f64>() / rewards.len().max(1) as f64;
        let group = RolloutGroup::new(sequences, &theta, rewards)?;
        let start = grpo_objective(&theta, reference, &group, settings.epsilon, settings.beta)?;
        let norm2: f64 = start.gradient.iter().map(|g| g * g).sum();
        let mut lr = settings.learning_rate;
        for _ in 0..settings.max_backtracks {
            if norm2 == 0.0 {
                break;
            }
            let mut trial = theta.clone();
            for (x, g) in trial.logits.iter_mut().zip(&start.gradient) {
                *x += lr * g;
            }
            let value = grpo_objective(&trial, reference, &group, settings.epsilon, settings.beta)?.value;
            if value >= start.value + 1e-4 * lr * norm2 {
                theta = trial;
                break;
            }
            lr /= 2.0;
        }
        let mean_reward = env.expected_reward(&theta);
        log::debug!("step {step}: expected {mean_reward:.4}, sampled {sample_mean:.4}");
        curve.push(CurvePoint { step, mean_reward, sample_mean });
    }
    Ok(TrainOutcome { policy: theta, curve })
}

/// One `step<TAB>mean_reward` line per point.
pub fn write_curve<W: Write>(mut w: W, curve: &[CurvePoint]) -> io::Result<()> {
    for p in curve {
        writeln!(w, "{}\t{}", p.step, p.mean_reward)?;
    }
    Ok(())
}
