//! Feed-forward policy/value networks.
//!
//! Networks are small tanh MLPs in double precision with one linear logit
//! head per categorical action component and a scalar value head. The three
//! low-level modes can share a trunk ([`LowLevelPolicies`]); the commander
//! is an independent net. All gradients are computed by hand-rolled
//! backpropagation so they can be verified against finite differences.

mod checkpoint;
mod dist;
mod layer;
mod net;

pub use checkpoint::{load_checkpoint, load_checkpoint_as, save_checkpoint, CHECKPOINT_VERSION};
pub use dist::{
    head_entropy, log_prob_and_entropy, masked_probs, sample_heads, ActionMask,
};
pub use layer::DenseLayer;
pub use net::{
    ForwardPass, LowLevelPolicies, ModeBranch, PolicyNet, PolicyRole, COMMANDER_HEAD_SPEC,
    LOW_LEVEL_HEAD_SPEC,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("masked action: {0}")]
    MaskedAction(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
