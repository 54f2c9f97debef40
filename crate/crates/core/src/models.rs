//! World-model interface and the two reference simulators.
//!
//! [`ExactModel`] realizes the SE(2) right action exactly. [`PerturbedModel`]
//! wraps the same kinematics with violation injectors (drift, asymmetric
//! gain, saturation, Gaussian noise) whose effect on every metric can be
//! checked by direct simulation.

use std::fmt;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::{noise_source, NoiseSource};
use crate::se2::Pose2;
use crate::segments::{ActionIncrement, ActionSegment};
use crate::{Error, Result};

/// A (possibly stochastic) transition `s' = f(s, a)`.
///
/// Implementations must be total and must draw all randomness from the
/// supplied noise source.
pub trait WorldModel: Send + Sync {
    fn step(&self, state: &Pose2, action: &ActionIncrement, noise: &mut NoiseSource) -> Pose2;

    /// Short label used in reports.
    fn label(&self) -> String;

    /// True when `step` never consumes randomness.
    fn is_deterministic(&self) -> bool {
        false
    }
}

impl<M: WorldModel + ?Sized> WorldModel for &M {
    fn step(&self, state: &Pose2, action: &ActionIncrement, noise: &mut NoiseSource) -> Pose2 {
        (**self).step(state, action, noise)
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

impl<M: WorldModel + ?Sized> WorldModel for Box<M> {
    fn step(&self, state: &Pose2, action: &ActionIncrement, noise: &mut NoiseSource) -> Pose2 {
        (**self).step(state, action, noise)
    }
    fn label(&self) -> String {
        (**self).label()
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
}

/// `state ∘ (R(dθ), (dx, dy))`.
pub fn exact_step(state: &Pose2, action: &ActionIncrement) -> Pose2 {
    state.compose(&action.to_pose())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactModel;

impl WorldModel for ExactModel {
    fn step(&self, state: &Pose2, action: &ActionIncrement, _noise: &mut NoiseSource) -> Pose2 {
        exact_step(state, action)
    }
    fn label(&self) -> String {
        "exact".into()
    }
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Violation injectors applied to the commanded increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViolationConfig {
    /// Added to every realized increment (breaks identity).
    pub drift_bias: ActionIncrement,
    /// `c` in `c·tanh(a/c)`; `None` disables (breaks compatibility).
    pub saturation_scale: Option<f64>,
    /// `(γ⁺, γ⁻)` gains on positive / negative translation components
    /// (breaks inverse).
    pub asym_gain: (f64, f64),
    /// Std-dev of zero-mean Gaussian noise on the realized increment.
    pub noise_sigma: f64,
}

impl Default for ViolationConfig {
    fn default() -> Self {
        ViolationConfig {
            drift_bias: ActionIncrement::ZERO,
            saturation_scale: None,
            asym_gain: (1.0, 1.0),
            noise_sigma: 0.0,
        }
    }
}

impl ViolationConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.drift_bias.is_local() {
            return Err(Error::InvalidArgument(
                "drift_bias must be a finite local increment".into(),
            ));
        }
        if let Some(c) = self.saturation_scale {
            if !(c > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "saturation_scale must be > 0, got {c}"
                )));
            }
        }
        let (gp, gn) = self.asym_gain;
        if !(gp > 0.0 && gn > 0.0) || !gp.is_finite() || !gn.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "asym_gain must be positive, got ({gp}, {gn})"
            )));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn is_disabled(&self) -> bool {
        *self == ViolationConfig::default()
    }

    /// The increment the simulator actually executes.
    pub fn realize(&self, action: &ActionIncrement, noise: &mut NoiseSource) -> ActionIncrement {
        let mut a = *action;
        if let Some(c) = self.saturation_scale.filter(|c| c.is_finite()) {
            let sat = |v: f64| c * (v / c).tanh();
            a = ActionIncrement::new(sat(a.dx), sat(a.dy), sat(a.dtheta));
        }
        let (gp, gn) = self.asym_gain;
        if (gp, gn) != (1.0, 1.0) {
            let gain = |v: f64| if v > 0.0 { gp * v } else { gn * v };
            a.dx = gain(a.dx);
            a.dy = gain(a.dy);
        }
        if self.drift_bias != ActionIncrement::ZERO {
            a = a + self.drift_bias;
        }
        if self.noise_sigma > 0.0 {
            let mut n = || -> f64 { StandardNormal.sample(noise) };
            let (ex, ey, et) = (n(), n(), n());
            a = a + self.noise_sigma * ActionIncrement::new(ex, ey, et);
        }
        a
    }
}

impl fmt::Display for ViolationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.drift_bias != ActionIncrement::ZERO {
            let d = self.drift_bias;
            parts.push(format!("drift:{},{},{}", d.dx, d.dy, d.dtheta));
        }
        if let Some(c) = self.saturation_scale {
            parts.push(format!("sat:{c}"));
        }
        if self.asym_gain != (1.0, 1.0) {
            parts.push(format!("asym:{},{}", self.asym_gain.0, self.asym_gain.1));
        }
        if self.noise_sigma > 0.0 {
            parts.push(format!("noise:{}", self.noise_sigma));
        }
        if parts.is_empty() {
            write!(f, "exact")
        } else {
            write!(f, "{}", parts.join("+"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbedModel {
    pub cfg: ViolationConfig,
}

impl PerturbedModel {
    pub fn new(cfg: ViolationConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PerturbedModel { cfg })
    }
}

pub fn perturbed_step(
    state: &Pose2,
    action: &ActionIncrement,
    cfg: &ViolationConfig,
    noise: &mut NoiseSource,
) -> Pose2 {
    exact_step(state, &cfg.realize(action, noise))
}

impl WorldModel for PerturbedModel {
    fn step(&self, state: &Pose2, action: &ActionIncrement, noise: &mut NoiseSource) -> Pose2 {
        perturbed_step(state, action, &self.cfg, noise)
    }
    fn label(&self) -> String {
        self.cfg.to_string()
    }
    fn is_deterministic(&self) -> bool {
        self.cfg.noise_sigma == 0.0
    }
}

/// Poses `s_0 … s_T`, start included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub poses: Vec<Pose2>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose2>) -> Result<Self> {
        if poses.is_empty() {
            return Err(Error::InvalidArgument(
                "trajectory needs at least one pose".into(),
            ));
        }
        Ok(Trajectory { poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn start(&self) -> &Pose2 {
        &self.poses[0]
    }

    pub fn end(&self) -> &Pose2 {
        self.poses.last().expect("trajectory is never empty")
    }
}

/// Folds `model.step` over `actions` using an explicit noise source.
pub fn rollout_with<M: WorldModel + ?Sized>(
    model: &M,
    start: &Pose2,
    actions: &ActionSegment,
    noise: &mut NoiseSource,
) -> Trajectory {
    let mut poses = Vec::with_capacity(actions.len() + 1);
    poses.push(*start);
    let mut s = *start;
    for a in actions {
        s = model.step(&s, a, noise);
        poses.push(s);
    }
    Trajectory { poses }
}

pub fn rollout<M: WorldModel + ?Sized>(
    model: &M,
    start: &Pose2,
    actions: &ActionSegment,
    seed: u64,
) -> Trajectory {
    let mut noise = noise_source(seed);
    rollout_with(model, start, actions, &mut noise)
}

/// Endpoint of a rollout without storing intermediate poses.
pub fn rollout_endpoint<M: WorldModel + ?Sized>(
    model: &M,
    start: &Pose2,
    actions: &ActionSegment,
    noise: &mut NoiseSource,
) -> Pose2 {
    actions.iter().fold(*start, |s, a| model.step(&s, a, noise))
}

/// Parses reference model names such as `exact`, `drift:0.1,0,0`,
/// `noise:0.01`, `sat:1`, `asym:1.2,1.0`, or combinations joined by `+`.
pub fn parse_violation_spec(spec: &str) -> Result<ViolationConfig> {
    let mut cfg = ViolationConfig::default();
    if spec == "exact" {
        return Ok(cfg);
    }
    let bad = || Error::UnknownModel(spec.to_string());
    for part in spec.split('+') {
        let (name, args) = part.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (name.trim(), nums.as_slice()) {
            ("drift", [dx, dy, dt]) => cfg.drift_bias = ActionIncrement::new(*dx, *dy, *dt),
            ("sat", [c]) => cfg.saturation_scale = Some(*c),
            ("asym", [gp, gn]) => cfg.asym_gain = (*gp, *gn),
            ("noise", [s]) => cfg.noise_sigma = *s,
            _ => return Err(bad()),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se2::{angle_distance, state_distance, DistanceParams};
    use crate::segments::{make_inverse_segment, random_increment};
    use rand::Rng;
    use std::f64::consts::PI;

    fn close(a: &Pose2, b: &Pose2, tol: f64) -> bool {
        angle_distance(a.theta, b.theta) <= tol
            && (a.x - b.x).abs() <= tol
            && (a.y - b.y).abs() <= tol
    }

    #[test]
    fn exact_step_examples() {
        let mut rng = noise_source(0);
        let s = Pose2::new(0.4, 1.0, -2.0);
        assert_eq!(ExactModel.step(&s, &ActionIncrement::ZERO, &mut rng), s);
        let out = exact_step(
            &Pose2::identity(),
            &ActionIncrement::new(1.0, 0.0, PI / 2.0),
        );
        assert!(close(&out, &Pose2::new(PI / 2.0, 1.0, 0.0), 1e-15));
        let out = exact_step(
            &Pose2::new(PI / 2.0, 0.0, 0.0),
            &ActionIncrement::new(1.0, 0.0, 0.0),
        );
        assert!(close(&out, &Pose2::new(PI / 2.0, 0.0, 1.0), 1e-15));
    }

    #[test]
    fn disabled_injectors_are_exact() {
        let m = PerturbedModel::new(ViolationConfig::default()).unwrap();
        let mut rng = noise_source(3);
        let mut r2 = noise_source(4);
        for _ in 0..500 {
            let s = Pose2::new(rng.random_range(-PI..PI), rng.random_range(-5.0..5.0), 1.0);
            let a = random_increment(&mut rng, 1.0, 1.0);
            assert_eq!(m.step(&s, &a, &mut r2), exact_step(&s, &a));
        }
    }

    #[test]
    fn injector_spot_values() {
        let mut rng = noise_source(0);
        let drift = ViolationConfig {
            drift_bias: ActionIncrement::new(0.1, 0.0, 0.0),
            ..Default::default()
        };
        let out = perturbed_step(&Pose2::identity(), &ActionIncrement::ZERO, &drift, &mut rng);
        assert_eq!(out, Pose2::new(0.0, 0.1, 0.0));

        let sat = ViolationConfig {
            saturation_scale: Some(1.0),
            ..Default::default()
        };
        let realized = sat.realize(&ActionIncrement::new(2.0, 0.0, 0.0), &mut rng);
        assert!((realized.dx - 2.0f64.tanh()).abs() < 1e-15);
        assert!((realized.dx - 0.9640).abs() < 1e-4);

        let asym = ViolationConfig {
            asym_gain: (1.2, 1.0),
            ..Default::default()
        };
        assert_eq!(
            asym.realize(&ActionIncrement::new(1.0, -1.0, 0.3), &mut rng),
            ActionIncrement::new(1.2, -1.0, 0.3)
        );
    }

    #[test]
    fn rollout_contracts() {
        let start = Pose2::new(0.3, 1.0, 2.0);
        let t = rollout(&ExactModel, &start, &ActionSegment::default(), 0);
        assert_eq!(t.poses, vec![start]);

        let mut rng = noise_source(99);
        for _ in 0..1000 {
            let n = rng.random_range(1..=8);
            let u: ActionSegment = (0..n)
                .map(|_| random_increment(&mut rng, 1.0, 0.8))
                .collect();
            let traj = rollout(&ExactModel, &start, &u, 1);
            assert_eq!(traj.len(), n + 1);
            let composed = u
                .iter()
                .fold(Pose2::identity(), |g, a| g.compose(&a.to_pose()));
            assert!(close(traj.end(), &start.compose(&composed), 1e-9));
            for (i, a) in u.iter().enumerate() {
                assert_eq!(traj.poses[i + 1], exact_step(&traj.poses[i], a));
            }
        }
    }

    #[test]
    fn translation_only_inverse_cancels() {
        let mut rng = noise_source(17);
        for _ in 0..200 {
            let start = Pose2::new(rng.random_range(-PI..PI), 2.0, -1.0);
            let u: ActionSegment = (0..rng.random_range(1..6))
                .map(|_| random_increment(&mut rng, 1.0, 0.0))
                .collect();
            let inv = make_inverse_segment(&u).unwrap();
            let end = *rollout(&ExactModel, &start, &inv, 0).end();
            assert!(close(&end, &start, 1e-9));
        }
    }

    #[test]
    fn rotation_breaks_negation_inverse() {
        let u = ActionSegment::new(vec![ActionIncrement::new(1.0, 0.0, PI / 2.0)]);
        let inv = make_inverse_segment(&u).unwrap();
        let end = *rollout(&ExactModel, &Pose2::identity(), &inv, 0).end();
        // forward: (π/2, (1, 0)); then -a: rotate by -π/2 after moving (-1,0) in
        // a frame facing +y, landing at (1, -1).
        assert!(close(&end, &Pose2::new(0.0, 1.0, -1.0), 1e-12));
        assert!(state_distance(&end, &Pose2::identity(), &DistanceParams::default()) > 1.0);
    }

    #[test]
    fn noise_free_rollouts_ignore_seed() {
        let m = PerturbedModel::new(ViolationConfig {
            drift_bias: ActionIncrement::new(0.01, 0.0, 0.002),
            saturation_scale: Some(0.8),
            ..Default::default()
        })
        .unwrap();
        let mut rng = noise_source(5);
        let u: ActionSegment = (0..20)
            .map(|_| random_increment(&mut rng, 1.0, 0.5))
            .collect();
        assert_eq!(
            rollout(&m, &Pose2::identity(), &u, 1),
            rollout(&m, &Pose2::identity(), &u, 2)
        );
        let noisy = PerturbedModel::new(ViolationConfig {
            noise_sigma: 0.05,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(
            rollout(&noisy, &Pose2::identity(), &u, 1),
            rollout(&noisy, &Pose2::identity(), &u, 1)
        );
        assert_ne!(
            rollout(&noisy, &Pose2::identity(), &u, 1),
            rollout(&noisy, &Pose2::identity(), &u, 2)
        );
    }

    #[test]
    fn parse_model_refs() {
        assert!(parse_violation_spec("exact").unwrap().is_disabled());
        let c = parse_violation_spec("drift:0.1,0,0").unwrap();
        assert_eq!(c.drift_bias, ActionIncrement::new(0.1, 0.0, 0.0));
        let c = parse_violation_spec("sat:1+noise:0.02+asym:1.2,1").unwrap();
        assert_eq!(c.saturation_scale, Some(1.0));
        assert_eq!(c.noise_sigma, 0.02);
        assert_eq!(c.asym_gain, (1.2, 1.0));
        assert_eq!(parse_violation_spec(&c.to_string()).unwrap(), c);
        assert!(matches!(
            parse_violation_spec("warp:1"),
            Err(Error::UnknownModel(_))
        ));
        assert!(parse_violation_spec("noise:-1").is_err());
        assert!(parse_violation_spec("drift:1").is_err());
    }
}
