//! Learned latent world model: a fixed linear feature encoder, a residual
//! transition network in latent space, a left-inverse decoder playing the
//! role of the pose estimator, and exact reverse-mode gradients.

mod checkpoint;
mod encoder;
mod graph;
mod learned;
mod net;

pub(crate) use checkpoint::hex_digest;
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use encoder::{decode, encode, pose_features, FeatureDecoder, FeatureEncoder, LatentState};
pub use graph::{Gradients, Graph, NodeId};
pub use learned::LearnedWorldModel;
pub use net::{latent_rollout_endpoint, net_step, DynamicsNet, NetInit};

/// `‖x − y‖²`.
pub fn latent_sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}
