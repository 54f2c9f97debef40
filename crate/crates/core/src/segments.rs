//! Local ego-motion increments and the three families of constraint segments.

use std::ops::{Add, Mul, Neg};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::numeric::exact_sum;
use crate::rng::{noise_source, NoiseSource};
use crate::se2::Pose2;
use crate::{Error, Result};

/// Body-frame motion `(dx, dy, dθ)`. Serializes as `[dx, dy, dtheta]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct ActionIncrement {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl ActionIncrement {
    pub const ZERO: ActionIncrement = ActionIncrement {
        dx: 0.0,
        dy: 0.0,
        dtheta: 0.0,
    };

    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        ActionIncrement { dx, dy, dtheta }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.dx, self.dy, self.dtheta]
    }

    /// Finite components and `|dθ| ≤ π`.
    pub fn is_local(&self) -> bool {
        self.dx.is_finite()
            && self.dy.is_finite()
            && self.dtheta.is_finite()
            && self.dtheta.abs() <= std::f64::consts::PI
    }

    /// The rigid motion this increment induces when composed on the right.
    pub fn to_pose(&self) -> Pose2 {
        Pose2::new(self.dtheta, self.dx, self.dy)
    }

    pub fn is_translation_only(&self) -> bool {
        self.dtheta == 0.0
    }
}

impl From<[f64; 3]> for ActionIncrement {
    fn from(v: [f64; 3]) -> Self {
        ActionIncrement::new(v[0], v[1], v[2])
    }
}

impl From<ActionIncrement> for [f64; 3] {
    fn from(a: ActionIncrement) -> Self {
        a.as_array()
    }
}

impl Neg for ActionIncrement {
    type Output = ActionIncrement;
    fn neg(self) -> Self {
        ActionIncrement::new(-self.dx, -self.dy, -self.dtheta)
    }
}

impl Add for ActionIncrement {
    type Output = ActionIncrement;
    fn add(self, rhs: Self) -> Self {
        ActionIncrement::new(self.dx + rhs.dx, self.dy + rhs.dy, self.dtheta + rhs.dtheta)
    }
}

impl Mul<ActionIncrement> for f64 {
    type Output = ActionIncrement;
    fn mul(self, rhs: ActionIncrement) -> ActionIncrement {
        ActionIncrement::new(self * rhs.dx, self * rhs.dy, self * rhs.dtheta)
    }
}

/// An ordered run of increments. Serializes as a JSON array of triples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionSegment {
    pub increments: Vec<ActionIncrement>,
}

impl ActionSegment {
    pub fn new(increments: Vec<ActionIncrement>) -> Self {
        ActionSegment { increments }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ActionIncrement> {
        self.increments.iter()
    }

    /// Componentwise sum, correctly rounded.
    pub fn cumulative_sum(&self) -> ActionIncrement {
        ActionIncrement::new(
            exact_sum(self.increments.iter().map(|a| a.dx)),
            exact_sum(self.increments.iter().map(|a| a.dy)),
            exact_sum(self.increments.iter().map(|a| a.dtheta)),
        )
    }

    /// Sub-segment `[start, start + len)`.
    pub fn window(&self, start: usize, len: usize) -> Result<ActionSegment> {
        let end = start + len;
        if end > self.len() {
            return Err(Error::OutOfRange {
                index: end,
                limit: self.len(),
            });
        }
        Ok(ActionSegment::new(self.increments[start..end].to_vec()))
    }

    pub fn concat(&self, other: &ActionSegment) -> ActionSegment {
        let mut increments = self.increments.clone();
        increments.extend_from_slice(&other.increments);
        ActionSegment::new(increments)
    }
}

impl FromIterator<ActionIncrement> for ActionSegment {
    fn from_iter<T: IntoIterator<Item = ActionIncrement>>(iter: T) -> Self {
        ActionSegment::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ActionSegment {
    type Item = &'a ActionIncrement;
    type IntoIter = std::slice::Iter<'a, ActionIncrement>;
    fn into_iter(self) -> Self::IntoIter {
        self.increments.iter()
    }
}

/// Symmetric Dirichlet concentration plus the seed of its sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirichletParams {
    pub concentration: f64,
    pub seed: u64,
}

impl DirichletParams {
    pub fn new(concentration: f64, seed: u64) -> Result<Self> {
        let p = DirichletParams {
            concentration,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.concentration > 0.0) || !self.concentration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "dirichlet concentration must be finite and > 0, got {}",
                self.concentration
            )));
        }
        Ok(())
    }
}

impl Default for DirichletParams {
    fn default() -> Self {
        DirichletParams {
            concentration: 1.0,
            seed: 0,
        }
    }
}

pub fn make_identity_segment(l: usize) -> Result<ActionSegment> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "identity segment length must be >= 1".into(),
        ));
    }
    Ok(ActionSegment::new(vec![ActionIncrement::ZERO; l]))
}

/// Forward–inverse cycle `(a_1 … a_l, −a_l … −a_1)`.
pub fn make_inverse_segment(u: &ActionSegment) -> Result<ActionSegment> {
    if u.is_empty() {
        return Err(Error::EmptySegment);
    }
    let mut increments = Vec::with_capacity(2 * u.len());
    increments.extend_from_slice(&u.increments);
    increments.extend(u.increments.iter().rev().map(|&a| -a));
    Ok(ActionSegment::new(increments))
}

/// Draws `l` weights from a symmetric Dirichlet by normalizing independent
/// `Gamma(α, 1)` variates taken from `rng`.
pub fn sample_dirichlet_weights_with(
    l: usize,
    concentration: f64,
    rng: &mut NoiseSource,
) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::InvalidArgument(
            "dirichlet dimension must be >= 1".into(),
        ));
    }
    DirichletParams {
        concentration,
        seed: 0,
    }
    .validate()?;
    let gamma = Gamma::new(concentration, 1.0)
        .map_err(|e| Error::InvalidArgument(format!("gamma({concentration}): {e}")))?;
    let draws: Vec<f64> = (0..l).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        // Every variate underflowed (tiny concentration): put all mass on
        // the largest draw.
        let argmax = draws
            .iter()
            .enumerate()
            .fold(0, |best, (i, &v)| if v > draws[best] { i } else { best });
        let mut w = vec![0.0; l];
        w[argmax] = 1.0;
        return Ok(w);
    }
    Ok(draws.into_iter().map(|g| g / total).collect())
}

pub fn sample_dirichlet_weights(l: usize, params: &DirichletParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut rng = noise_source(params.seed);
    sample_dirichlet_weights_with(l, params.concentration, &mut rng)
}

/// `u_b[i] = w_i · Σ u_a` for an explicit weight vector.
pub fn redistribute(u_a: &ActionSegment, weights: &[f64]) -> Result<ActionSegment> {
    if u_a.is_empty() {
        return Err(Error::EmptySegment);
    }
    if weights.len() != u_a.len() {
        return Err(Error::LengthMismatch {
            left: u_a.len(),
            right: weights.len(),
        });
    }
    if u_a.len() == 1 {
        return Ok(u_a.clone());
    }
    let total = u_a.cumulative_sum();
    Ok(weights.iter().map(|&w| w * total).collect())
}

pub fn make_compatibility_segment(
    u_a: &ActionSegment,
    params: &DirichletParams,
) -> Result<ActionSegment> {
    if u_a.is_empty() {
        return Err(Error::EmptySegment);
    }
    let w = sample_dirichlet_weights(u_a.len(), params)?;
    redistribute(u_a, &w)
}

/// Draws an increment uniformly from a box, used by tests and the Python
/// bindings to build random segments.
pub fn random_increment<R: Rng + ?Sized>(rng: &mut R, trans: f64, rot: f64) -> ActionIncrement {
    ActionIncrement::new(
        rng.random_range(-trans..=trans),
        rng.random_range(-trans..=trans),
        rng.random_range(-rot..=rot),
    )
}
