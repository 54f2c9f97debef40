//! Group-action consistency for action-conditioned planar world models.
//!
//! The crate covers the full loop: exact SE(2) algebra, synthesis of
//! identity / inverse / compatibility action segments, reference simulators
//! with injectable violations, a small latent dynamics model trained with
//! group-action regularization, and the GAC / GAR evaluation metrics.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod latent;
pub mod metrics;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod se2;
pub mod segments;
pub mod training;

pub use error::{Error, Result};
pub use latent::{DynamicsNet, FeatureDecoder, FeatureEncoder, Graph, LatentState};
pub use metrics::{GacReport, GarReport, ProbeConfig, ProbeKind};
pub use models::{ExactModel, PerturbedModel, Trajectory, ViolationConfig, WorldModel};
pub use se2::{DistanceParams, Pose2};
pub use segments::{ActionIncrement, ActionSegment, DirichletParams};
pub use training::{ConstraintKind, GALossConfig, GALossValues, RolloutMode, TrainRunConfig};
