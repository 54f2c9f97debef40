use rand_distr::{Distribution, StandardNormal};

use super::{decode, encode, net_step, DynamicsNet, FeatureDecoder, FeatureEncoder, LatentState};
use crate::models::WorldModel;
use crate::rng::NoiseSource;
use crate::se2::Pose2;
use crate::segments::ActionIncrement;

/// The trained transition wrapped as a pose-level world model:
/// encode the pose, take one latent step, add sampling noise, decode.
#[derive(Debug, Clone)]
pub struct LearnedWorldModel {
    pub encoder: FeatureEncoder,
    pub decoder: FeatureDecoder,
    pub net: DynamicsNet,
    /// Std-dev of Gaussian noise added to the predicted latent; the source
    /// of rollout-to-rollout dispersion.
    pub gen_noise_sigma: f64,
    pub name: String,
}

impl LearnedWorldModel {
    pub fn new(
        encoder: FeatureEncoder,
        net: DynamicsNet,
        gen_noise_sigma: f64,
        name: impl Into<String>,
    ) -> Self {
        let decoder = encoder.decoder();
        LearnedWorldModel {
            encoder,
            decoder,
            net,
            gen_noise_sigma,
            name: name.into(),
        }
    }

    pub fn predict_latent(
        &self,
        state: &Pose2,
        action: &ActionIncrement,
        noise: &mut NoiseSource,
    ) -> LatentState {
        let z = encode(state, &self.encoder, noise);
        let mut next = net_step(&z, action, &self.net);
        if self.gen_noise_sigma > 0.0 {
            for v in &mut next.0 {
                let e: f64 = StandardNormal.sample(noise);
                *v += self.gen_noise_sigma * e;
            }
        }
        next
    }
}

impl WorldModel for LearnedWorldModel {
    fn step(&self, state: &Pose2, action: &ActionIncrement, noise: &mut NoiseSource) -> Pose2 {
        let next = self.predict_latent(state, action, noise);
        match decode(&next, &self.decoder) {
            Ok(p) => p,
            // Heading undecodable or latent diverged: keep the last valid
            // heading, take whatever position is finite.
            Err(_) => {
                let [x, y, _, _] = self.decoder.features(&next.0);
                let fin = |v: f64, fallback: f64| if v.is_finite() { v } else { fallback };
                Pose2::new(state.theta, fin(x, state.x), fin(y, state.y))
            }
        }
    }

    fn label(&self) -> String {
        self.name.clone()
    }

    fn is_deterministic(&self) -> bool {
        self.gen_noise_sigma == 0.0 && self.encoder.obs_noise_sigma == 0.0
    }
}
