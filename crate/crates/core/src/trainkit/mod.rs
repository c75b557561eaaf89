//! Training kit at toy scale: transcript format checking, the hierarchical
//! reward, group-relative advantages, the clipped GRPO objective with an
//! exact KL anchor, a softmax toy policy trained on scripted pairwise
//! judgments, and SFT example serialization from debate traces.

mod format;
mod grpo;
mod sft;
mod train;

use thiserror::Error;

pub use format::{check_format, reward, FormatCheck, RewardInput, TOOL_BONUS};
pub use grpo::{group_advantages, grpo_objective, Objective, RolloutGroup, ToyPolicy, ADVANTAGE_FLOOR};
pub use sft::{escape, examples_from_outcome, parse_target, serialize_sft_example, unescape, SftExample, SftInput};
pub use train::{
    render, toy_training_loop, write_curve, CurvePoint, JudgmentEnv, JudgmentTask, ToyAction, TrainOutcome, TrainSettings,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("group of {g} rollouts is too small to normalize")]
    GroupTooSmall { g: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("malformed transcript: {0}")]
    Malformed(String),
    #[error("invalid setting: {0}")]
    InvalidSetting(String),
}
