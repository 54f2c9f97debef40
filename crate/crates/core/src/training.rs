//! Group-action regularized training of the latent transition network.
//!
//! Per batch the objective is `l_pred + λ_ga · λ_c · L_c`, where `c` is one
//! constraint type (identity, inverse, compatibility) drawn uniformly from
//! the enabled set. Constraint rollouts start from a detached `z_t` and run
//! free (on the model's own latents) or teacher-forced (each transition
//! conditioned on an encoded reference pose).

use std::fmt;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::latent::{
    encode, latent_sq_dist, net_step, Checkpoint, DynamicsNet, FeatureEncoder, Graph, LatentState,
    NetInit, NodeId,
};
use crate::models::exact_step;
use crate::rng::{derive_seed, noise_source, NoiseSource};
use crate::se2::Pose2;
use crate::segments::{
    make_identity_segment, make_inverse_segment, redistribute, sample_dirichlet_weights_with,
    ActionIncrement, ActionSegment, DirichletParams,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    Id,
    Inv,
    Comp,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 3] = [
        ConstraintKind::Id,
        ConstraintKind::Inv,
        ConstraintKind::Comp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKind::Id => "id",
            ConstraintKind::Inv => "inv",
            ConstraintKind::Comp => "comp",
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RolloutMode {
    FreeRunning,
    TeacherForced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GALossConfig {
    pub lambda_id: f64,
    pub lambda_inv: f64,
    pub lambda_comp: f64,
    pub lambda_ga: f64,
    /// Maximum constraint span `L`; segment lengths are uniform in `1..=L`.
    pub max_span: usize,
    pub dirichlet: DirichletParams,
    pub mode: RolloutMode,
}

impl Default for GALossConfig {
    fn default() -> Self {
        GALossConfig {
            lambda_id: 1.0,
            lambda_inv: 1.0,
            lambda_comp: 1.0,
            lambda_ga: 0.5,
            max_span: 4,
            dirichlet: DirichletParams::default(),
            mode: RolloutMode::FreeRunning,
        }
    }
}

impl GALossConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_id", self.lambda_id),
            ("lambda_inv", self.lambda_inv),
            ("lambda_comp", self.lambda_comp),
            ("lambda_ga", self.lambda_ga),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.max_span == 0 {
            return Err(Error::InvalidArgument("max_span must be >= 1".into()));
        }
        self.dirichlet.validate()
    }

    pub fn weight(&self, kind: ConstraintKind) -> f64 {
        match kind {
            ConstraintKind::Id => self.lambda_id,
            ConstraintKind::Inv => self.lambda_inv,
            ConstraintKind::Comp => self.lambda_comp,
        }
    }

    /// Constraints with positive weight; all three when every weight is zero.
    pub fn enabled(&self) -> Vec<ConstraintKind> {
        let on: Vec<_> = ConstraintKind::ALL
            .into_iter()
            .filter(|&k| self.weight(k) > 0.0)
            .collect();
        if on.is_empty() {
            ConstraintKind::ALL.to_vec()
        } else {
            on
        }
    }
}

/// Losses of one batch. Inactive constraint losses are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GALossValues {
    pub l_id: Option<f64>,
    pub l_inv: Option<f64>,
    pub l_comp: Option<f64>,
    pub l_pred: f64,
    pub active_constraint: ConstraintKind,
}

impl GALossValues {
    fn with_active(kind: ConstraintKind, value: f64, l_pred: f64) -> Self {
        let mut v = GALossValues {
            l_id: None,
            l_inv: None,
            l_comp: None,
            l_pred,
            active_constraint: kind,
        };
        match kind {
            ConstraintKind::Id => v.l_id = Some(value),
            ConstraintKind::Inv => v.l_inv = Some(value),
            ConstraintKind::Comp => v.l_comp = Some(value),
        }
        v
    }

    pub fn active_loss(&self) -> f64 {
        match self.active_constraint {
            ConstraintKind::Id => self.l_id,
            ConstraintKind::Inv => self.l_inv,
            ConstraintKind::Comp => self.l_comp,
        }
        .unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    PlainGradientDescent,
    AdaptiveMoments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainRunConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Directory holding the `train/` split.
    pub dataset: PathBuf,
    pub hidden: usize,
    pub init: NetInit,
    /// Global gradient-norm clip; `0` disables.
    pub grad_clip: f64,
}

impl Default for TrainRunConfig {
    fn default() -> Self {
        TrainRunConfig {
            steps: 10000,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 7,
            optimizer: OptimizerKind::AdaptiveMoments,
            dataset: PathBuf::from("data"),
            hidden: 64,
            init: NetInit::default(),
            grad_clip: 10.0,
        }
    }
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::InvalidArgument(
                "steps, batch_size and hidden must be >= 1".into(),
            ));
        }
        if !(self.grad_clip >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grad_clip must be >= 0, got {}",
                self.grad_clip
            )));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// First-order optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        Optimizer {
            kind,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        match self.kind {
            OptimizerKind::PlainGradientDescent => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::AdaptiveMoments => {
                self.t += 1;
                let c1 = 1.0 - Self::BETA1.powi(self.t);
                let c2 = 1.0 - Self::BETA2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
                    self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] -= lr * mh / (vh.sqrt() + Self::EPS);
                }
            }
        }
    }
}

/// One supervised transition `(s, a, s')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub pose: Pose2,
    pub action: ActionIncrement,
    pub next: Pose2,
}

/// A native segment cut from a dataset sequence, with the poses it visits.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintItem {
    /// Recorded poses `s_t … s_{t+l}`.
    pub poses: Vec<Pose2>,
    pub base: ActionSegment,
    /// Dirichlet weights for the compatibility decomposition.
    pub weights: Vec<f64>,
}

impl ConstraintItem {
    pub fn start(&self) -> &Pose2 {
        &self.poses[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub transitions: Vec<Transition>,
    pub active: ConstraintKind,
    pub items: Vec<ConstraintItem>,
}

/// Draws a batch. Random-stream consumption does not depend on any loss
/// weight, so runs differing only in weights see identical batches.
pub fn sample_batch(
    dataset: &Dataset,
    cfg: &GALossConfig,
    batch_size: usize,
    rng: &mut NoiseSource,
) -> Result<TrainBatch> {
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("dataset is empty".into()));
    }
    let enabled = cfg.enabled();
    let active = enabled[rng.random_range(0..enabled.len())];
    let mut transitions = Vec::with_capacity(batch_size);
    let mut items = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let seq = &dataset.sequences[rng.random_range(0..dataset.len())];
        let n = seq.actions.len();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "dataset sequence has no actions".into(),
            ));
        }
        let t = rng.random_range(0..n);
        transitions.push(Transition {
            pose: *seq.pose(t),
            action: seq.actions.increments[t],
            next: *seq.pose(t + 1),
        });

        let l = rng.random_range(1..=cfg.max_span.min(n));
        let t = rng.random_range(0..=n - l);
        let weights = sample_dirichlet_weights_with(l, cfg.dirichlet.concentration, rng)?;
        items.push(ConstraintItem {
            poses: seq.trajectory.poses[t..=t + l].to_vec(),
            base: seq.actions.window(t, l)?,
            weights,
        });
    }
    Ok(TrainBatch {
        transitions,
        active,
        items,
    })
}

/// Mean one-step latent prediction error `D_z(f(enc(s), a), enc(s'))`.
pub fn prediction_loss(
    net: &DynamicsNet,
    encoder: &FeatureEncoder,
    batch: &[Transition],
    noise: &mut NoiseSource,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("prediction batch is empty".into()));
    }
    let total: f64 = batch
        .iter()
        .map(|tr| {
            let z = encode(&tr.pose, encoder, noise);
            let target = encode(&tr.next, encoder, noise);
            latent_sq_dist(&net_step(&z, &tr.action, net).0, &target.0)
        })
        .sum();
    Ok(total / batch.len() as f64)
}

/// Reference poses visited by a constraint segment, used for teacher forcing.
/// The inverse half retraces the forward poses; the compatibility
/// alternative follows exact kinematics from the start pose.
fn reference_poses(
    kind: ConstraintKind,
    item: &ConstraintItem,
    segment: &ActionSegment,
    alt: bool,
) -> Vec<Pose2> {
    match kind {
        ConstraintKind::Id => vec![*item.start(); segment.len() + 1],
        ConstraintKind::Inv => {
            let mut r = item.poses.clone();
            r.extend(item.poses.iter().rev().skip(1));
            r
        }
        ConstraintKind::Comp if !alt => item.poses.clone(),
        ConstraintKind::Comp => {
            let mut r = vec![*item.start()];
            for a in segment {
                let next = exact_step(r.last().expect("non-empty"), a);
                r.push(next);
            }
            r
        }
    }
}

struct GraphContext<'a> {
    encoder: &'a FeatureEncoder,
    mode: RolloutMode,
}

impl GraphContext<'_> {
    /// Endpoint of `segment` from `zt`, free-running or teacher-forced.
    fn endpoint(
        &self,
        g: &mut Graph<'_>,
        zt: NodeId,
        segment: &ActionSegment,
        refs: impl FnOnce() -> Vec<Pose2>,
        noise: &mut NoiseSource,
    ) -> NodeId {
        match self.mode {
            RolloutMode::FreeRunning => g.rollout(zt, segment),
            RolloutMode::TeacherForced => {
                let n = segment.len();
                if n == 0 {
                    return zt;
                }
                let input = if n == 1 {
                    zt
                } else {
                    let refs = refs();
                    let z = encode(&refs[n - 1], self.encoder, noise);
                    g.constant(&z)
                };
                g.step(input, &segment.increments[n - 1])
            }
        }
    }

    /// Adds the `kind` loss of one item to `g` with the given weight and
    /// returns its unweighted value.
    fn add_constraint(
        &self,
        g: &mut Graph<'_>,
        zt_value: &LatentState,
        kind: ConstraintKind,
        item: &ConstraintItem,
        weight: f64,
        noise: &mut NoiseSource,
    ) -> Result<f64> {
        let leaf = g.constant(zt_value);
        let zt = g.detach(leaf);
        let l = item.base.len();
        Ok(match kind {
            ConstraintKind::Id => {
                let u = make_identity_segment(l)?;
                let end =
                    self.endpoint(g, zt, &u, || reference_poses(kind, item, &u, false), noise);
                g.add_sq_dist(end, zt, weight)
            }
            ConstraintKind::Inv => {
                let u = make_inverse_segment(&item.base)?;
                let end =
                    self.endpoint(g, zt, &u, || reference_poses(kind, item, &u, false), noise);
                g.add_sq_dist(end, zt, weight)
            }
            ConstraintKind::Comp => {
                let ub = redistribute(&item.base, &item.weights)?;
                let ea = self.endpoint(
                    g,
                    zt,
                    &item.base,
                    || reference_poses(kind, item, &item.base, false),
                    noise,
                );
                let eb =
                    self.endpoint(g, zt, &ub, || reference_poses(kind, item, &ub, true), noise);
                g.add_sq_dist(ea, eb, weight)
            }
        })
    }
}

/// Active-constraint loss for a single start latent and base segment, with
/// the constraint type and Dirichlet weights drawn from `noise`.
/// `l_pred` is reported as zero.
pub fn ga_losses(
    net: &DynamicsNet,
    z_t: &LatentState,
    base_segment: &ActionSegment,
    cfg: &GALossConfig,
    noise: &mut NoiseSource,
) -> Result<GALossValues> {
    if base_segment.is_empty() {
        return Err(Error::EmptySegment);
    }
    let enabled = cfg.enabled();
    let kind = enabled[noise.random_range(0..enabled.len())];
    let weights =
        sample_dirichlet_weights_with(base_segment.len(), cfg.dirichlet.concentration, noise)?;
    let value = constraint_loss(net, z_t, kind, base_segment, &weights)?;
    Ok(GALossValues::with_active(kind, value, 0.0))
}

/// Free-running constraint loss evaluated without recording a graph.
pub fn constraint_loss(
    net: &DynamicsNet,
    z_t: &LatentState,
    kind: ConstraintKind,
    base: &ActionSegment,
    weights: &[f64],
) -> Result<f64> {
    use crate::latent::latent_rollout_endpoint as end;
    Ok(match kind {
        ConstraintKind::Id => latent_sq_dist(
            &end(z_t, &make_identity_segment(base.len())?, net).0,
            &z_t.0,
        ),
        ConstraintKind::Inv => {
            latent_sq_dist(&end(z_t, &make_inverse_segment(base)?, net).0, &z_t.0)
        }
        ConstraintKind::Comp => {
            let ub = redistribute(base, weights)?;
            latent_sq_dist(&end(z_t, base, net).0, &end(z_t, &ub, net).0)
        }
    })
}

/// Loss values and parameter gradients for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchEvaluation {
    pub values: GALossValues,
    /// `l_pred + λ_ga · λ_c · L_c`.
    pub total: f64,
    pub pred_grad: Vec<f64>,
    /// Gradient of the weighted group-action term (all zeros when its
    /// weight is zero).
    pub ga_grad: Vec<f64>,
}

impl BatchEvaluation {
    pub fn grad(&self) -> Vec<f64> {
        self.pred_grad
            .iter()
            .zip(&self.ga_grad)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Evaluates the per-batch objective with `kind` as the active constraint.
pub fn evaluate_batch_as(
    net: &DynamicsNet,
    encoder: &FeatureEncoder,
    batch: &TrainBatch,
    kind: ConstraintKind,
    cfg: &GALossConfig,
    noise: &mut NoiseSource,
) -> Result<BatchEvaluation> {
    if batch.transitions.is_empty() || batch.items.is_empty() {
        return Err(Error::InvalidArgument("batch is empty".into()));
    }
    let mut pg = Graph::new(net);
    let wp = 1.0 / batch.transitions.len() as f64;
    let mut l_pred = 0.0;
    for tr in &batch.transitions {
        let z = encode(&tr.pose, encoder, noise);
        let target = encode(&tr.next, encoder, noise);
        let zn = pg.constant(&z);
        let next = pg.step(zn, &tr.action);
        let tn = pg.constant(&target);
        l_pred += wp * pg.add_sq_dist(next, tn, wp);
    }
    let pred_grad = pg.backward()?.params;

    let ga_weight = cfg.lambda_ga * cfg.weight(kind);
    let wg = 1.0 / batch.items.len() as f64;
    let ctx = GraphContext {
        encoder,
        mode: cfg.mode,
    };
    let mut gg = Graph::new(net);
    let mut l_ga = 0.0;
    for item in &batch.items {
        let zt = encode(item.start(), encoder, noise);
        l_ga += wg * ctx.add_constraint(&mut gg, &zt, kind, item, ga_weight * wg, noise)?;
    }
    let ga_grad = if ga_weight > 0.0 {
        gg.backward()?.params
    } else {
        vec![0.0; net.params().len()]
    };

    let total = l_pred + ga_weight * l_ga;
    Ok(BatchEvaluation {
        values: GALossValues::with_active(kind, l_ga, l_pred),
        total,
        pred_grad,
        ga_grad,
    })
}

/// Deterministic three-term objective `l_pred + (λ_ga/|C|) Σ_c λ_c L_c` over
/// the enabled constraints, i.e. the expectation of the per-batch objective
/// under uniform constraint sampling.
pub fn expected_objective(
    net: &DynamicsNet,
    encoder: &FeatureEncoder,
    batch: &TrainBatch,
    cfg: &GALossConfig,
) -> Result<f64> {
    let enabled = cfg.enabled();
    let mut ga = 0.0;
    let mut l_pred = 0.0;
    for &kind in &enabled {
        let e = evaluate_batch_as(net, encoder, batch, kind, cfg, &mut noise_source(0))?;
        l_pred = e.values.l_pred;
        ga += cfg.weight(kind) * e.values.active_loss();
    }
    Ok(l_pred + cfg.lambda_ga / enabled.len() as f64 * ga)
}

/// One optimizer update on `∇(l_pred + λ_ga λ_c L_c)`.
#[allow(clippy::too_many_arguments)]
pub fn train_step(
    net: &mut DynamicsNet,
    optimizer: &mut Optimizer,
    encoder: &FeatureEncoder,
    cfg: &GALossConfig,
    run: &TrainRunConfig,
    batch: &TrainBatch,
    noise: &mut NoiseSource,
    step: usize,
) -> Result<BatchEvaluation> {
    let eval = evaluate_batch_as(net, encoder, batch, batch.active, cfg, noise)?;
    if !eval.total.is_finite() {
        return Err(Error::NonFiniteLoss { step });
    }
    let mut grad = eval.grad();
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss { step });
    }
    if run.grad_clip > 0.0 {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if norm > run.grad_clip {
            let s = run.grad_clip / norm;
            grad.iter_mut().for_each(|g| *g *= s);
        }
    }
    optimizer.update(net.params_mut(), &grad, run.learning_rate);
    Ok(eval)
}

/// One row of the loss curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub step: usize,
    pub active_constraint: ConstraintKind,
    pub l_pred: f64,
    pub l_ga: f64,
    pub total: f64,
}

pub fn loss_curve_csv(rows: &[LossRow]) -> String {
    let mut out = String::from("step,active_constraint,l_pred,l_ga,total\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.step, r.active_constraint, r.l_pred, r.l_ga, r.total
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub net: DynamicsNet,
    pub checkpoint: Checkpoint,
    pub curve: Vec<LossRow>,
}

/// Seed streams of a training run.
const STREAM_INIT: u64 = 1;
const STREAM_BATCH: u64 = 2;
const STREAM_NOISE: u64 = 3;

pub fn initial_net(run: &TrainRunConfig, latent_dim: usize) -> DynamicsNet {
    DynamicsNet::random(
        latent_dim,
        run.hidden,
        derive_seed(run.seed, &[STREAM_INIT]),
        run.init,
    )
}

/// Runs `run.steps` updates; calls `observe(step, &net)` after each one.
pub fn train_with<F: FnMut(usize, &DynamicsNet)>(
    run: &TrainRunConfig,
    cfg: &GALossConfig,
    dataset: &Dataset,
    encoder: &FeatureEncoder,
    gen_noise_sigma: f64,
    observe: F,
) -> Result<TrainOutput> {
    train_from(
        initial_net(run, encoder.latent_dim()),
        0,
        run,
        cfg,
        dataset,
        encoder,
        gen_noise_sigma,
        observe,
    )
}

/// Continues training `net`, which has already taken `prior_steps` updates
/// (recorded in the checkpoint step count). Optimizer state starts fresh.
#[allow(clippy::too_many_arguments)]
pub fn train_from<F: FnMut(usize, &DynamicsNet)>(
    mut net: DynamicsNet,
    prior_steps: usize,
    run: &TrainRunConfig,
    cfg: &GALossConfig,
    dataset: &Dataset,
    encoder: &FeatureEncoder,
    gen_noise_sigma: f64,
    mut observe: F,
) -> Result<TrainOutput> {
    run.validate()?;
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".into()));
    }
    if net.latent_dim() != encoder.latent_dim() || net.hidden() != run.hidden {
        return Err(Error::InvalidArgument(format!(
            "network shape d={}, H={} does not match encoder d={} / hidden {}",
            net.latent_dim(),
            net.hidden(),
            encoder.latent_dim(),
            run.hidden
        )));
    }
    let mut optimizer = Optimizer::new(run.optimizer, net.params().len());
    let mut batch_rng = noise_source(derive_seed(run.seed, &[STREAM_BATCH]));
    let mut noise = noise_source(derive_seed(run.seed, &[STREAM_NOISE]));
    let mut curve = Vec::with_capacity(run.steps);
    for step in 1..=run.steps {
        let batch = sample_batch(dataset, cfg, run.batch_size, &mut batch_rng)?;
        let eval = train_step(
            &mut net,
            &mut optimizer,
            encoder,
            cfg,
            run,
            &batch,
            &mut noise,
            step,
        )?;
        curve.push(LossRow {
            step,
            active_constraint: eval.values.active_constraint,
            l_pred: eval.values.l_pred,
            l_ga: eval.values.active_loss(),
            total: eval.total,
        });
        observe(step, &net);
    }
    let checkpoint = Checkpoint::new(encoder, &net, gen_noise_sigma, prior_steps + run.steps);
    Ok(TrainOutput {
        net,
        checkpoint,
        curve,
    })
}

pub fn train(
    run: &TrainRunConfig,
    cfg: &GALossConfig,
    dataset: &Dataset,
    encoder: &FeatureEncoder,
    gen_noise_sigma: f64,
) -> Result<TrainOutput> {
    train_with(run, cfg, dataset, encoder, gen_noise_sigma, |_, _| {})
}

/// Noise-free one-step prediction loss over every transition of a dataset.
pub fn dataset_prediction_loss(
    net: &DynamicsNet,
    encoder: &FeatureEncoder,
    dataset: &Dataset,
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for seq in &dataset.sequences {
        for (t, a) in seq.actions.iter().enumerate() {
            let z = encoder.encode_clean(seq.pose(t));
            let target = encoder.encode_clean(seq.pose(t + 1));
            total += latent_sq_dist(&net_step(&z, a, net).0, &target.0);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_split, DatasetSpec, Split};

    fn tiny_dataset() -> Dataset {
        let spec = DatasetSpec {
            n_train: 6,
            n_eval: 1,
            length: 12,
            ..Default::default()
        };
        generate_split(&spec, Split::Train).unwrap()
    }

    fn random_net(d: usize, h: usize, seed: u64) -> DynamicsNet {
        DynamicsNet::random(
            d,
            h,
            seed,
            NetInit {
                input_gain: 1.0,
                output_gain: 0.5,
            },
        )
    }

    #[test]
    fn prediction_loss_examples() {
        let enc = FeatureEncoder::new(8, 1, 0.0).unwrap();
        let zero = DynamicsNet::zeros(8, 4);
        let data = tiny_dataset();
        let seq = &data.sequences[0];
        let batch: Vec<Transition> = (0..5)
            .map(|t| Transition {
                pose: *seq.pose(t),
                action: seq.actions.increments[t],
                next: *seq.pose(t + 1),
            })
            .collect();
        let mut rng = noise_source(0);
        assert!(prediction_loss(&zero, &enc, &batch, &mut rng).unwrap() > 0.0);

        let still: Vec<Transition> = batch
            .iter()
            .map(|t| Transition {
                pose: t.pose,
                action: ActionIncrement::ZERO,
                next: t.pose,
            })
            .collect();
        assert_eq!(prediction_loss(&zero, &enc, &still, &mut rng).unwrap(), 0.0);

        let net = random_net(8, 4, 3);
        let one = &batch[..1];
        let direct = latent_sq_dist(
            &net_step(&enc.encode_clean(&one[0].pose), &one[0].action, &net).0,
            &enc.encode_clean(&one[0].next).0,
        );
        assert_eq!(prediction_loss(&net, &enc, one, &mut rng).unwrap(), direct);
        assert!(prediction_loss(&net, &enc, &[], &mut rng).is_err());
    }

    #[test]
    fn zero_net_satisfies_every_constraint() {
        let net = DynamicsNet::zeros(6, 5);
        let z = LatentState(vec![0.3, -1.0, 2.0, 0.0, 0.5, 1.5]);
        let base = ActionSegment::new(vec![
            ActionIncrement::new(0.2, 0.1, 0.3),
            ActionIncrement::new(0.1, 0.0, -0.2),
        ]);
        for kind in ConstraintKind::ALL {
            assert_eq!(
                constraint_loss(&net, &z, kind, &base, &[0.3, 0.7]).unwrap(),
                0.0
            );
        }
        let v = ga_losses(
            &net,
            &z,
            &base,
            &GALossConfig::default(),
            &mut noise_source(2),
        )
        .unwrap();
        assert_eq!(v.active_loss(), 0.0);
        let present = [v.l_id, v.l_inv, v.l_comp]
            .iter()
            .filter(|x| x.is_some())
            .count();
        assert_eq!(present, 1);
    }

    #[test]
    fn single_step_compatibility_is_trivial() {
        let net = random_net(6, 5, 1);
        let z = LatentState(vec![0.3, -1.0, 2.0, 0.0, 0.5, 1.5]);
        let base = ActionSegment::new(vec![ActionIncrement::new(0.2, 0.1, 0.3)]);
        assert_eq!(
            constraint_loss(&net, &z, ConstraintKind::Comp, &base, &[1.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn identity_loss_matches_hand_unrolled_tiny_net() {
        // d = 2, H = 1: W1 = [w_z0, w_z1, w_dx, w_dy, w_dθ], b1, W2 = [v0, v1], b2 = [c0, c1]
        let p = vec![0.4, -0.3, 0.0, 0.0, 0.0, 0.1, 0.5, -0.2, 0.05, 0.02];
        let net = DynamicsNet::from_params(2, 1, p).unwrap();
        let z0 = [0.7, -0.4];
        let step = |z: [f64; 2]| {
            let h = (0.4 * z[0] - 0.3 * z[1] + 0.1).tanh();
            [z[0] + 0.5 * h + 0.05, z[1] - 0.2 * h + 0.02]
        };
        let z2 = step(step(z0));
        let expected = (z2[0] - z0[0]).powi(2) + (z2[1] - z0[1]).powi(2);
        let base = ActionSegment::new(vec![ActionIncrement::new(0.3, 0.0, 0.1); 2]);
        let got = constraint_loss(
            &net,
            &LatentState(z0.to_vec()),
            ConstraintKind::Id,
            &base,
            &[0.5, 0.5],
        )
        .unwrap();
        assert!((got - expected).abs() < 1e-15);
    }

    #[test]
    fn graph_and_plain_losses_agree() {
        let enc = FeatureEncoder::new(6, 2, 0.0).unwrap();
        let net = random_net(6, 8, 4);
        let data = tiny_dataset();
        let cfg = GALossConfig::default();
        let batch = sample_batch(&data, &cfg, 4, &mut noise_source(5)).unwrap();
        for kind in ConstraintKind::ALL {
            let e =
                evaluate_batch_as(&net, &enc, &batch, kind, &cfg, &mut noise_source(0)).unwrap();
            let plain: f64 = batch
                .items
                .iter()
                .map(|it| {
                    constraint_loss(
                        &net,
                        &enc.encode_clean(it.start()),
                        kind,
                        &it.base,
                        &it.weights,
                    )
                    .unwrap()
                })
                .sum::<f64>()
                / batch.items.len() as f64;
            assert!((e.values.active_loss() - plain).abs() < 1e-12 * (1.0 + plain));
            let pred =
                prediction_loss(&net, &enc, &batch.transitions, &mut noise_source(0)).unwrap();
            assert!((e.values.l_pred - pred).abs() < 1e-12 * (1.0 + pred));
        }
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let enc = FeatureEncoder::new(6, 2, 0.0).unwrap();
        let mut net = random_net(6, 8, 4);
        let before = net.clone();
        let run = TrainRunConfig {
            learning_rate: 0.0,
            grad_clip: 0.0,
            ..Default::default()
        };
        let cfg = GALossConfig::default();
        let batch = sample_batch(&tiny_dataset(), &cfg, 4, &mut noise_source(1)).unwrap();
        let mut opt = Optimizer::new(OptimizerKind::PlainGradientDescent, net.params().len());
        let e = train_step(
            &mut net,
            &mut opt,
            &enc,
            &cfg,
            &run,
            &batch,
            &mut noise_source(0),
            1,
        )
        .unwrap();
        assert_eq!(net, before);
        assert!(e.values.l_pred > 0.0);
    }

    #[test]
    fn zero_lambda_is_pure_prediction_training() {
        let enc = FeatureEncoder::new(6, 2, 0.0).unwrap();
        let data = tiny_dataset();
        let run = TrainRunConfig {
            steps: 5,
            batch_size: 4,
            hidden: 8,
            ..Default::default()
        };
        let ga0 = GALossConfig {
            lambda_ga: 0.0,
            ..Default::default()
        };
        let mut net = initial_net(&run, 6);
        let mut opt = Optimizer::new(run.optimizer, net.params().len());
        let mut rng = noise_source(9);
        let mut pure = net.clone();
        let mut opt2 = opt.clone();
        for step in 1..=5 {
            let batch = sample_batch(&data, &ga0, 4, &mut rng).unwrap();
            train_step(
                &mut net,
                &mut opt,
                &enc,
                &ga0,
                &run,
                &batch,
                &mut noise_source(0),
                step,
            )
            .unwrap();
            let g = evaluate_batch_as(
                &pure,
                &enc,
                &batch,
                batch.active,
                &ga0,
                &mut noise_source(0),
            )
            .unwrap();
            assert!(g.ga_grad.iter().all(|&x| x == 0.0));
            let mut grad = g.pred_grad.clone();
            let norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
            if run.grad_clip > 0.0 && norm > run.grad_clip {
                let c = run.grad_clip;
                grad.iter_mut().for_each(|x| *x *= c / norm);
            }
            let grad: Vec<f64> = grad.iter().map(|x| x + 0.0).collect();
            opt2.update(pure.params_mut(), &grad, run.learning_rate);
            assert_eq!(net, pure);
        }
    }

    #[test]
    fn training_is_deterministic_and_rejects_empty_data() {
        let enc = FeatureEncoder::new(6, 2, 0.0).unwrap();
        let data = tiny_dataset();
        let run = TrainRunConfig {
            steps: 6,
            batch_size: 4,
            hidden: 8,
            ..Default::default()
        };
        let cfg = GALossConfig::default();
        let a = train(&run, &cfg, &data, &enc, 0.0).unwrap();
        let b = train(&run, &cfg, &data, &enc, 0.0).unwrap();
        assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
        assert_eq!(a.curve.len(), 6);
        assert!(train(&run, &cfg, &Dataset::default(), &enc, 0.0).is_err());
        assert!(loss_curve_csv(&a.curve).lines().count() == 7);
    }

    #[test]
    fn single_constraint_configs_sample_only_that_constraint() {
        let cfg = GALossConfig {
            lambda_id: 0.0,
            lambda_comp: 0.0,
            ..Default::default()
        };
        assert_eq!(cfg.enabled(), vec![ConstraintKind::Inv]);
        let data = tiny_dataset();
        let mut rng = noise_source(3);
        for _ in 0..20 {
            assert_eq!(
                sample_batch(&data, &cfg, 2, &mut rng).unwrap().active,
                ConstraintKind::Inv
            );
        }
    }

    #[test]
    fn config_validation() {
        assert!(GALossConfig {
            lambda_ga: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(GALossConfig {
            max_span: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainRunConfig {
            steps: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(TrainRunConfig {
            learning_rate: f64::NAN,
            ..Default::default()
        }
        .validate()
        .is_err());
    }
}
