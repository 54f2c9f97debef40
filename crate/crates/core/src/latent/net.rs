use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::LatentState;
use crate::rng::noise_source;
use crate::segments::{ActionIncrement, ActionSegment};
use crate::{Error, Result};

/// Residual one-hidden-layer network `z' = z + W2·tanh(W1·[z; a] + b1) + b2`.
///
/// Parameters are stored flat in the order `W1` (row-major `H × (d+3)`),
/// `b1`, `W2` (row-major `d × H`), `b2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsNet {
    latent_dim: usize,
    hidden: usize,
    params: Vec<f64>,
}

/// Initialization scales. `W1 ~ N(0, input_gain² / (d+3))`,
/// `W2 ~ N(0, output_gain² / H)`, biases zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetInit {
    pub input_gain: f64,
    pub output_gain: f64,
}

impl Default for NetInit {
    fn default() -> Self {
        NetInit {
            input_gain: 1.0,
            output_gain: 0.0,
        }
    }
}

impl DynamicsNet {
    pub fn param_count(latent_dim: usize, hidden: usize) -> usize {
        (latent_dim + 3) * hidden + hidden + hidden * latent_dim + latent_dim
    }

    pub fn zeros(latent_dim: usize, hidden: usize) -> Self {
        DynamicsNet {
            latent_dim,
            hidden,
            params: vec![0.0; Self::param_count(latent_dim, hidden)],
        }
    }

    pub fn random(latent_dim: usize, hidden: usize, seed: u64, init: NetInit) -> Self {
        let mut net = Self::zeros(latent_dim, hidden);
        let mut rng = noise_source(seed);
        let fan_in = (latent_dim + 3) as f64;
        let w1_std = init.input_gain / fan_in.sqrt();
        let w2_std = init.output_gain / (hidden as f64).sqrt();
        let (w1, _, w2, _) = net.offsets();
        for i in w1.clone() {
            let e: f64 = StandardNormal.sample(&mut rng);
            net.params[i] = w1_std * e;
        }
        for i in w2.clone() {
            let e: f64 = StandardNormal.sample(&mut rng);
            net.params[i] = w2_std * e;
        }
        net
    }

    pub fn from_params(latent_dim: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        let expected = Self::param_count(latent_dim, hidden);
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                left: expected,
                right: params.len(),
            });
        }
        Ok(DynamicsNet {
            latent_dim,
            hidden,
            params,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn input_dim(&self) -> usize {
        self.latent_dim + 3
    }

    /// Index ranges of `W1`, `b1`, `W2`, `b2`.
    pub(crate) fn offsets(
        &self,
    ) -> (
        std::ops::Range<usize>,
        std::ops::Range<usize>,
        std::ops::Range<usize>,
        std::ops::Range<usize>,
    ) {
        let (d, h) = (self.latent_dim, self.hidden);
        let w1 = 0..(d + 3) * h;
        let b1 = w1.end..w1.end + h;
        let w2 = b1.end..b1.end + h * d;
        let b2 = w2.end..w2.end + d;
        (w1, b1, w2, b2)
    }

    /// Forward pass returning `z'` and the hidden activations `tanh(·)`.
    pub(crate) fn forward(&self, z: &[f64], a: &ActionIncrement) -> (Vec<f64>, Vec<f64>) {
        let (d, h, n_in) = (self.latent_dim, self.hidden, self.input_dim());
        debug_assert_eq!(z.len(), d);
        let (w1r, b1r, w2r, b2r) = self.offsets();
        let (w1, b1, w2, b2) = (
            &self.params[w1r],
            &self.params[b1r],
            &self.params[w2r],
            &self.params[b2r],
        );
        let act = a.as_array();
        let mut hidden = Vec::with_capacity(h);
        for j in 0..h {
            let row = &w1[j * n_in..(j + 1) * n_in];
            let mut pre = b1[j];
            for i in 0..d {
                pre += row[i] * z[i];
            }
            for k in 0..3 {
                pre += row[d + k] * act[k];
            }
            hidden.push(pre.tanh());
        }
        let mut out = z.to_vec();
        for i in 0..d {
            let row = &w2[i * h..(i + 1) * h];
            let mut acc = b2[i];
            for j in 0..h {
                acc += row[j] * hidden[j];
            }
            out[i] += acc;
        }
        (out, hidden)
    }
}

pub fn net_step(z: &LatentState, a: &ActionIncrement, net: &DynamicsNet) -> LatentState {
    LatentState(net.forward(&z.0, a).0)
}

/// Folds [`net_step`] over `u`; an empty segment returns `z0`.
pub fn latent_rollout_endpoint(
    z0: &LatentState,
    u: &ActionSegment,
    net: &DynamicsNet,
) -> LatentState {
    u.iter().fold(z0.clone(), |z, a| net_step(&z, a, net))
}
