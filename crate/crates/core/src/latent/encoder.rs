use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, noise_source, NoiseSource};
use crate::se2::Pose2;
use crate::{Error, Result};

const MAX_CONDITION: f64 = 1e6;

/// Latent vector `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatentState(pub Vec<f64>);

impl LatentState {
    pub fn zeros(d: usize) -> Self {
        LatentState(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `(x, y, cos θ, sin θ)`.
pub fn pose_features(pose: &Pose2) -> [f64; 4] {
    let (s, c) = pose.theta.sin_cos();
    [pose.x, pose.y, c, s]
}

/// Fixed random linear map from pose features to a `d`-dimensional latent.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    projection: DMatrix<f64>,
    pub obs_noise_sigma: f64,
    pub seed: u64,
}

impl FeatureEncoder {
    /// Samples a full-rank `d × 4` projection with i.i.d. `N(0, 1/4)` entries,
    /// redrawing (from a derived seed) while the condition number exceeds 1e6.
    pub fn new(latent_dim: usize, seed: u64, obs_noise_sigma: f64) -> Result<Self> {
        if latent_dim < 4 {
            return Err(Error::InvalidArgument(format!(
                "latent dim must be >= 4, got {latent_dim}"
            )));
        }
        if !(obs_noise_sigma >= 0.0) || !obs_noise_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "obs_noise_sigma must be >= 0, got {obs_noise_sigma}"
            )));
        }
        for attempt in 0u64.. {
            let mut rng = noise_source(derive_seed(seed, &[attempt]));
            let projection = DMatrix::from_fn(latent_dim, 4, |_, _| {
                0.5 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
            });
            if condition_number(&projection) <= MAX_CONDITION {
                return Ok(FeatureEncoder {
                    projection,
                    obs_noise_sigma,
                    seed,
                });
            }
        }
        unreachable!()
    }

    /// Builds an encoder from an explicit row-major `d × 4` matrix.
    pub fn from_projection(rows: &[[f64; 4]], seed: u64, obs_noise_sigma: f64) -> Result<Self> {
        let d = rows.len();
        if d < 4 {
            return Err(Error::InvalidArgument(format!(
                "latent dim must be >= 4, got {d}"
            )));
        }
        let projection = DMatrix::from_fn(d, 4, |i, j| rows[i][j]);
        let cond = condition_number(&projection);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::InvalidArgument(format!(
                "projection is ill-conditioned (cond {cond:e})"
            )));
        }
        Ok(FeatureEncoder {
            projection,
            obs_noise_sigma,
            seed,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.projection.nrows()
    }

    pub fn projection(&self) -> &DMatrix<f64> {
        &self.projection
    }

    pub fn projection_rows(&self) -> Vec<[f64; 4]> {
        (0..self.latent_dim())
            .map(|i| [0, 1, 2, 3].map(|j| self.projection[(i, j)]))
            .collect()
    }

    pub fn decoder(&self) -> FeatureDecoder {
        FeatureDecoder::from_projection(&self.projection)
    }

    /// Noise-free encoding.
    pub fn encode_clean(&self, pose: &Pose2) -> LatentState {
        let f = DVector::from_row_slice(&pose_features(pose));
        LatentState((&self.projection * f).as_slice().to_vec())
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `z = P·(x, y, cos θ, sin θ) + ε`, `ε ~ N(0, σ²I)`.
pub fn encode(pose: &Pose2, encoder: &FeatureEncoder, noise: &mut NoiseSource) -> LatentState {
    let mut z = encoder.encode_clean(pose);
    if encoder.obs_noise_sigma > 0.0 {
        for v in &mut z.0 {
            let e: f64 = StandardNormal.sample(noise);
            *v += encoder.obs_noise_sigma * e;
        }
    }
    z
}

/// Left inverse `(PᵀP)⁻¹Pᵀ` of the encoder projection.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDecoder {
    pinv: DMatrix<f64>,
}

impl FeatureDecoder {
    pub fn from_projection(projection: &DMatrix<f64>) -> Self {
        let pt = projection.transpose();
        let gram = &pt * projection;
        let inv = gram.try_inverse().expect("projection has full column rank");
        FeatureDecoder { pinv: inv * pt }
    }

    pub fn pinv(&self) -> &DMatrix<f64> {
        &self.pinv
    }

    pub fn features(&self, z: &[f64]) -> [f64; 4] {
        let zv = DVector::from_column_slice(z);
        let f = &self.pinv * zv;
        [f[0], f[1], f[2], f[3]]
    }
}

pub fn decode(z: &LatentState, decoder: &FeatureDecoder) -> Result<Pose2> {
    if !z.is_finite() {
        return Err(Error::NonFinite("latent state"));
    }
    let [x, y, c, s] = decoder.features(&z.0);
    if c == 0.0 && s == 0.0 {
        return Err(Error::HeadingUndefined);
    }
    Ok(Pose2::new(s.atan2(c), x, y))
}
