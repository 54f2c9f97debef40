//! GAC probes and aggregation, trajectory alignment, and GAR dispersion.
//!
//! Every probe instance draws its noise from a seed derived from
//! `(seed, kind, k, l, sequence, start)`, so results do not depend on how
//! instances are scheduled across workers.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Sequence;
use crate::models::{rollout_endpoint, rollout_with, Trajectory, WorldModel};
use crate::numeric::mean_std;
use crate::rng::{derive_seed, noise_source};
use crate::se2::{state_distance, DistanceParams, Pose2};
use crate::segments::{
    make_identity_segment, make_inverse_segment, redistribute, sample_dirichlet_weights,
    ActionSegment, DirichletParams,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Identity,
    Inverse,
    Composition,
}

impl ProbeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeKind::Identity => "identity",
            ProbeKind::Inverse => "inverse",
            ProbeKind::Composition => "composition",
        }
    }

    fn stream(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How compatibility probes redistribute the summed increment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "scheme")]
pub enum WeightScheme {
    Dirichlet { concentration: f64 },
    Uniform,
}

/// Settings shared by every probe of a suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeSettings {
    pub dist: DistanceParams,
    pub seed: u64,
    /// Base actions replayed between consecutive identity pauses.
    pub insert_spacing: usize,
    pub weights: WeightScheme,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            dist: DistanceParams::default(),
            seed: 0,
            insert_spacing: 2,
            weights: WeightScheme::Dirichlet { concentration: 1.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub kind: ProbeKind,
    pub k: usize,
    pub l: usize,
    pub start_indices: Vec<usize>,
    pub n_sequences: usize,
}

/// Longest supported probe segment.
pub const MAX_PROBE_SPAN: usize = 8;

impl ProbeConfig {
    /// Base actions consumed from the start offset.
    pub fn extent(&self, insert_spacing: usize) -> usize {
        match self.kind {
            ProbeKind::Identity => (self.k - 1) * insert_spacing,
            ProbeKind::Inverse => self.k * self.l,
            ProbeKind::Composition => self.l,
        }
    }

    /// Builds a config whose `starts` offsets are spread uniformly over the
    /// valid range of a sequence with `n_actions` actions.
    pub fn uniform(
        kind: ProbeKind,
        k: usize,
        l: usize,
        n_actions: usize,
        starts: usize,
        n_sequences: usize,
        insert_spacing: usize,
    ) -> Result<Self> {
        let mut cfg = ProbeConfig {
            kind,
            k,
            l,
            start_indices: Vec::new(),
            n_sequences,
        };
        cfg.validate()?;
        let extent = cfg.extent(insert_spacing);
        if extent > n_actions {
            return Err(Error::OutOfRange {
                index: extent,
                limit: n_actions,
            });
        }
        cfg.start_indices = uniform_starts(n_actions - extent, starts);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.l == 0 {
            return Err(Error::InvalidArgument("probe k and l must be >= 1".into()));
        }
        if self.kind == ProbeKind::Composition && self.k != 1 {
            return Err(Error::InvalidArgument(
                "composition probes carry k = 1".into(),
            ));
        }
        if self.l > MAX_PROBE_SPAN {
            return Err(Error::InvalidArgument(format!(
                "probe l must be <= {MAX_PROBE_SPAN}, got {}",
                self.l
            )));
        }
        Ok(())
    }
}

/// `count` offsets evenly spaced over `0..=max_start`.
pub fn uniform_starts(max_start: usize, count: usize) -> Vec<usize> {
    if count <= 1 {
        return vec![0];
    }
    let mut v: Vec<usize> = (0..count).map(|i| i * max_start / (count - 1)).collect();
    v.dedup();
    v
}

/// Configuration-level error with the per-segment errors behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub kind: ProbeKind,
    pub k: usize,
    pub l: usize,
    pub mean: f64,
    pub std: f64,
    pub n_segments: usize,
    pub start_indices: Vec<usize>,
    #[serde(skip)]
    pub errors: Vec<f64>,
}

impl ProbeResult {
    pub fn from_errors(cfg: &ProbeConfig, errors: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&errors);
        ProbeResult {
            kind: cfg.kind,
            k: cfg.k,
            l: cfg.l,
            mean,
            std,
            n_segments: errors.len(),
            start_indices: cfg.start_indices.clone(),
            errors,
        }
    }
}

fn instance_seed(settings: &ProbeSettings, cfg: &ProbeConfig, seq: usize, start: usize) -> u64 {
    derive_seed(
        settings.seed,
        &[
            cfg.kind.stream(),
            cfg.k as u64,
            cfg.l as u64,
            seq as u64,
            start as u64,
        ],
    )
}

fn check_inputs(
    cfg: &ProbeConfig,
    sequences: &[Sequence],
    expected: ProbeKind,
    spacing: usize,
) -> Result<()> {
    cfg.validate()?;
    if cfg.kind != expected {
        return Err(Error::InvalidArgument(format!(
            "expected a {expected} probe, got {}",
            cfg.kind
        )));
    }
    if cfg.n_sequences > sequences.len() {
        return Err(Error::OutOfRange {
            index: cfg.n_sequences,
            limit: sequences.len(),
        });
    }
    let extent = cfg.extent(spacing);
    for seq in &sequences[..cfg.n_sequences] {
        for &s in &cfg.start_indices {
            if s + extent > seq.actions.len() {
                return Err(Error::OutOfRange {
                    index: s + extent,
                    limit: seq.actions.len(),
                });
            }
        }
    }
    Ok(())
}

/// Runs `per_instance` over every (sequence, start) pair in parallel and
/// concatenates the returned segment errors in a fixed order.
fn collect_errors<F>(cfg: &ProbeConfig, sequences: &[Sequence], per_instance: F) -> Result<Vec<f64>>
where
    F: Fn(usize, &Sequence, usize) -> Result<Vec<f64>> + Sync,
{
    let jobs: Vec<(usize, usize)> = (0..cfg.n_sequences)
        .flat_map(|q| cfg.start_indices.iter().map(move |&s| (q, s)))
        .collect();
    let parts = jobs
        .par_iter()
        .map(|&(q, s)| per_instance(q, &sequences[q], s))
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Identity probe: `k` zero-action pauses of length `l`, separated by
/// `insert_spacing` base actions. Each pause contributes the distance
/// between the states at its end and its start.
pub fn probe_identity<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    cfg: &ProbeConfig,
    settings: &ProbeSettings,
) -> Result<ProbeResult> {
    let spacing = settings.insert_spacing;
    check_inputs(cfg, sequences, ProbeKind::Identity, spacing)?;
    let pause = make_identity_segment(cfg.l)?;
    let errors = collect_errors(cfg, sequences, |q, seq, s| {
        let mut noise = noise_source(instance_seed(settings, cfg, q, s));
        let mut state = *seq.pose(s);
        let mut errs = Vec::with_capacity(cfg.k);
        for j in 0..cfg.k {
            let before = state;
            state = rollout_endpoint(model, &state, &pause, &mut noise);
            errs.push(state_distance(&state, &before, &settings.dist));
            if j + 1 < cfg.k {
                let between = seq.actions.window(s + j * spacing, spacing)?;
                state = rollout_endpoint(model, &state, &between, &mut noise);
            }
        }
        Ok(errs)
    })?;
    Ok(ProbeResult::from_errors(cfg, errors))
}

/// Inverse probe: `k` consecutive base segments of length `l`, each
/// executed as a forward–inverse cycle from wherever the previous cycle
/// ended; each cycle contributes its return distance.
pub fn probe_inverse<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    cfg: &ProbeConfig,
    settings: &ProbeSettings,
) -> Result<ProbeResult> {
    check_inputs(cfg, sequences, ProbeKind::Inverse, settings.insert_spacing)?;
    let errors = collect_errors(cfg, sequences, |q, seq, s| {
        let mut noise = noise_source(instance_seed(settings, cfg, q, s));
        let mut state = *seq.pose(s);
        let mut errs = Vec::with_capacity(cfg.k);
        for j in 0..cfg.k {
            let cycle = make_inverse_segment(&seq.actions.window(s + j * cfg.l, cfg.l)?)?;
            let before = state;
            state = rollout_endpoint(model, &state, &cycle, &mut noise);
            errs.push(state_distance(&state, &before, &settings.dist));
        }
        Ok(errs)
    })?;
    Ok(ProbeResult::from_errors(cfg, errors))
}

/// Alternative decomposition used by the composition probe at one instance.
pub fn composition_pair(
    u_a: &ActionSegment,
    scheme: WeightScheme,
    seed: u64,
) -> Result<ActionSegment> {
    let weights = match scheme {
        WeightScheme::Dirichlet { concentration } => {
            sample_dirichlet_weights(u_a.len(), &DirichletParams::new(concentration, seed)?)?
        }
        WeightScheme::Uniform => vec![1.0 / u_a.len() as f64; u_a.len()],
    };
    redistribute(u_a, &weights)
}

/// Composition probe: endpoint distance between a base window and its
/// redistributed decomposition, rolled out with independent noise.
pub fn probe_composition<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    cfg: &ProbeConfig,
    settings: &ProbeSettings,
) -> Result<ProbeResult> {
    check_inputs(
        cfg,
        sequences,
        ProbeKind::Composition,
        settings.insert_spacing,
    )?;
    let errors = collect_errors(cfg, sequences, |q, seq, s| {
        let seed = instance_seed(settings, cfg, q, s);
        let u_a = seq.actions.window(s, cfg.l)?;
        let u_b = composition_pair(&u_a, settings.weights, derive_seed(seed, &[0]))?;
        let start = seq.pose(s);
        let end_a = rollout_endpoint(
            model,
            start,
            &u_a,
            &mut noise_source(derive_seed(seed, &[1])),
        );
        let end_b = rollout_endpoint(
            model,
            start,
            &u_b,
            &mut noise_source(derive_seed(seed, &[2])),
        );
        Ok(vec![state_distance(&end_a, &end_b, &settings.dist)])
    })?;
    Ok(ProbeResult::from_errors(cfg, errors))
}

pub fn run_probe<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    cfg: &ProbeConfig,
    settings: &ProbeSettings,
) -> Result<ProbeResult> {
    match cfg.kind {
        ProbeKind::Identity => probe_identity(model, sequences, cfg, settings),
        ProbeKind::Inverse => probe_inverse(model, sequences, cfg, settings),
        ProbeKind::Composition => probe_composition(model, sequences, cfg, settings),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentError {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GacReport {
    pub model: String,
    pub configs: Vec<ProbeResult>,
    pub delta_id: ComponentError,
    pub delta_inv: ComponentError,
    pub delta_comp: ComponentError,
    pub e_gac: f64,
}

/// Component means over configurations, their instance-level spreads, and
/// `E_GAC = (Δ̄_id + Δ̄_inv + Δ̄_comp) / 3`.
pub fn aggregate_gac(model: &str, results: &[ProbeResult]) -> Result<GacReport> {
    let mut configs = results.to_vec();
    configs.sort_by_key(|r| (r.kind, r.k, r.l));
    let component = |kind: ProbeKind| -> Result<ComponentError> {
        let family: Vec<&ProbeResult> = configs.iter().filter(|r| r.kind == kind).collect();
        if family.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "no {kind} probe configurations"
            )));
        }
        let mean = family.iter().map(|r| r.mean).sum::<f64>() / family.len() as f64;
        let all: Vec<f64> = family
            .iter()
            .flat_map(|r| r.errors.iter().copied())
            .collect();
        let std = if all.is_empty() {
            // Reports rebuilt from stored summaries: average config spreads.
            family.iter().map(|r| r.std).sum::<f64>() / family.len() as f64
        } else {
            mean_std(&all).1
        };
        Ok(ComponentError { mean, std })
    };
    let delta_id = component(ProbeKind::Identity)?;
    let delta_inv = component(ProbeKind::Inverse)?;
    let delta_comp = component(ProbeKind::Composition)?;
    let e_gac = (delta_id.mean + delta_inv.mean + delta_comp.mean) / 3.0;
    Ok(GacReport {
        model: model.to_string(),
        configs,
        delta_id,
        delta_inv,
        delta_comp,
        e_gac,
    })
}

/// The probe families of a GAC suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeGrid {
    /// `(k, l)` pairs for identity probes.
    pub identity: Vec<(usize, usize)>,
    /// `(k, l)` pairs for inverse probes.
    pub inverse: Vec<(usize, usize)>,
    /// Window lengths for composition probes.
    pub composition: Vec<usize>,
    pub starts_per_sequence: usize,
    pub n_sequences: usize,
    pub insert_spacing: usize,
    pub dirichlet_concentration: f64,
    pub alpha_rot: f64,
    pub seed: u64,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid {
            identity: vec![(1, 3), (3, 3), (5, 3)],
            inverse: vec![(1, 1), (1, 3), (1, 5)],
            composition: vec![2, 4, 6],
            starts_per_sequence: 8,
            n_sequences: 20,
            insert_spacing: 2,
            dirichlet_concentration: 1.0,
            alpha_rot: 1.0,
            seed: 11,
        }
    }
}

impl ProbeGrid {
    pub fn settings(&self) -> Result<ProbeSettings> {
        Ok(ProbeSettings {
            dist: DistanceParams::new(self.alpha_rot)?,
            seed: self.seed,
            insert_spacing: self.insert_spacing,
            weights: WeightScheme::Dirichlet {
                concentration: self.dirichlet_concentration,
            },
        })
    }

    /// Concrete probe configurations for sequences with `n_actions` actions,
    /// in (kind, k, l) order.
    pub fn configs(&self, n_actions: usize, n_sequences: usize) -> Result<Vec<ProbeConfig>> {
        let n_seq = self.n_sequences.min(n_sequences);
        let mk = |kind, k, l| {
            ProbeConfig::uniform(
                kind,
                k,
                l,
                n_actions,
                self.starts_per_sequence,
                n_seq,
                self.insert_spacing,
            )
        };
        let mut out = Vec::new();
        for &(k, l) in &self.identity {
            out.push(mk(ProbeKind::Identity, k, l)?);
        }
        for &(k, l) in &self.inverse {
            out.push(mk(ProbeKind::Inverse, k, l)?);
        }
        for &l in &self.composition {
            out.push(mk(ProbeKind::Composition, 1, l)?);
        }
        out.sort_by_key(|c| (c.kind, c.k, c.l));
        Ok(out)
    }
}

/// Runs every probe of `grid` on `model` and aggregates the report.
pub fn run_gac<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    grid: &ProbeGrid,
) -> Result<GacReport> {
    let n_actions = sequences
        .iter()
        .map(|s| s.actions.len())
        .min()
        .ok_or_else(|| Error::InvalidArgument("no evaluation sequences".into()))?;
    let settings = grid.settings()?;
    let results = grid
        .configs(n_actions, sequences.len())?
        .iter()
        .map(|cfg| run_probe(model, sequences, cfg, &settings))
        .collect::<Result<Vec<_>>>()?;
    aggregate_gac(&model.label(), &results)
}

/// Rigid transform (rotation + translation) that best maps `traj`'s
/// positions onto `reference`'s in the least-squares sense, applied to
/// every pose of `traj`.
pub fn align_trajectory(traj: &Trajectory, reference: &Trajectory) -> Result<Trajectory> {
    let transform = alignment_transform(&traj.poses, &reference.poses)?;
    Ok(Trajectory {
        poses: traj.poses.iter().map(|p| transform.compose(p)).collect(),
    })
}

/// The SE(2) element `g` minimizing `Σ ‖g·p_i − q_i‖²` over positions.
pub fn alignment_transform(src: &[Pose2], dst: &[Pose2]) -> Result<Pose2> {
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch {
            left: src.len(),
            right: dst.len(),
        });
    }
    if src.len() < 2 {
        return Err(Error::InvalidArgument(
            "alignment needs at least two poses".into(),
        ));
    }
    let n = src.len() as f64;
    let (mut pcx, mut pcy, mut qcx, mut qcy) = (0.0, 0.0, 0.0, 0.0);
    for (p, q) in src.iter().zip(dst) {
        pcx += p.x;
        pcy += p.y;
        qcx += q.x;
        qcy += q.y;
    }
    let (pcx, pcy, qcx, qcy) = (pcx / n, pcy / n, qcx / n, qcy / n);
    let (mut dot, mut cross) = (0.0, 0.0);
    for (p, q) in src.iter().zip(dst) {
        let (px, py) = (p.x - pcx, p.y - pcy);
        let (qx, qy) = (q.x - qcx, q.y - qcy);
        dot += px * qx + py * qy;
        cross += px * qy - py * qx;
    }
    let phi = cross.atan2(dot);
    let (s, c) = phi.sin_cos();
    Ok(Pose2::new(
        phi,
        qcx - (c * pcx - s * pcy),
        qcy - (s * pcx + c * pcy),
    ))
}

/// Mean pairwise, time-averaged state distance across `N` trajectories.
/// With `aligned`, every trajectory is first aligned to the first one.
pub fn gar_error(trajectories: &[Trajectory], dist: &DistanceParams, aligned: bool) -> Result<f64> {
    let n = trajectories.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "GAR needs N >= 2 rollouts, got {n}"
        )));
    }
    let t = trajectories[0].len();
    for tr in trajectories {
        if tr.len() != t {
            return Err(Error::LengthMismatch {
                left: t,
                right: tr.len(),
            });
        }
    }
    let owned;
    let trajs: &[Trajectory] = if aligned {
        let reference = &trajectories[0];
        let mut v = vec![reference.clone()];
        for tr in &trajectories[1..] {
            v.push(align_trajectory(tr, reference)?);
        }
        owned = v;
        &owned
    } else {
        trajectories
    };
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let pair: f64 = trajs[i]
                .poses
                .iter()
                .zip(&trajs[j].poses)
                .map(|(a, b)| state_distance(a, b, dist))
                .sum();
            total += pair / t as f64;
        }
    }
    Ok(2.0 * total / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// GAR at one horizon, summarized over evaluation sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarReport {
    pub n_rollouts: usize,
    pub horizon: usize,
    pub n_sequences: usize,
    pub aligned_error: MeanStd,
    pub nonaligned_error: MeanStd,
    /// Per-sequence `(aligned, non-aligned)` values.
    pub per_sequence: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GarSpec {
    pub n_rollouts: usize,
    pub horizons: Vec<usize>,
    pub n_sequences: usize,
    pub alpha_rot: f64,
    pub seed: u64,
}

impl Default for GarSpec {
    fn default() -> Self {
        GarSpec {
            n_rollouts: 5,
            horizons: vec![16, 64],
            n_sequences: 20,
            alpha_rot: 1.0,
            seed: 13,
        }
    }
}

/// Samples `n_rollouts` rollouts of the first `horizon` actions of each
/// sequence and reports both GAR variants over states `s_1 … s_T`.
pub fn evaluate_gar<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    n_rollouts: usize,
    horizon: usize,
    n_sequences: usize,
    dist: &DistanceParams,
    seed: u64,
) -> Result<GarReport> {
    if n_rollouts < 2 {
        return Err(Error::InvalidArgument(format!(
            "GAR needs N >= 2 rollouts, got {n_rollouts}"
        )));
    }
    if n_sequences == 0 || n_sequences > sequences.len() {
        return Err(Error::OutOfRange {
            index: n_sequences,
            limit: sequences.len(),
        });
    }
    let per_sequence = (0..n_sequences)
        .into_par_iter()
        .map(|q| {
            let seq = &sequences[q];
            let actions = seq.actions.window(0, horizon)?;
            let trajs: Vec<Trajectory> = (0..n_rollouts)
                .map(|i| {
                    let mut noise =
                        noise_source(derive_seed(seed, &[horizon as u64, q as u64, i as u64]));
                    let full = rollout_with(model, seq.start(), &actions, &mut noise);
                    Trajectory {
                        poses: full.poses[1..].to_vec(),
                    }
                })
                .collect();
            let nonaligned = gar_error(&trajs, dist, false)?;
            let aligned = if horizon >= 2 {
                gar_error(&trajs, dist, true)?
            } else {
                nonaligned
            };
            Ok((aligned, nonaligned))
        })
        .collect::<Result<Vec<_>>>()?;
    let (am, asd) = mean_std(&per_sequence.iter().map(|p| p.0).collect::<Vec<_>>());
    let (nm, nsd) = mean_std(&per_sequence.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(GarReport {
        n_rollouts,
        horizon,
        n_sequences,
        aligned_error: MeanStd { mean: am, std: asd },
        nonaligned_error: MeanStd { mean: nm, std: nsd },
        per_sequence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarSuite {
    pub model: String,
    pub reports: Vec<GarReport>,
}

pub fn run_gar<M: WorldModel + ?Sized>(
    model: &M,
    sequences: &[Sequence],
    spec: &GarSpec,
) -> Result<GarSuite> {
    let dist = DistanceParams::new(spec.alpha_rot)?;
    let n_seq = spec.n_sequences.min(sequences.len());
    let reports = spec
        .horizons
        .iter()
        .map(|&h| {
            evaluate_gar(
                model,
                sequences,
                spec.n_rollouts,
                h,
                n_seq,
                &dist,
                spec.seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GarSuite {
        model: model.label(),
        reports,
    })
}

/// Quotes a CSV field when it holds a delimiter; violation specs do.
pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl GacReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,kind,k,l,mean,std\n");
        for r in &self.configs {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&self.model),
                r.kind,
                r.k,
                r.l,
                r.mean,
                r.std
            ));
        }
        out
    }

    /// One-row summary: component means with stds, then e_gac.
    pub fn summary_csv(&self) -> String {
        format!(
            "model,delta_id,delta_id_std,delta_inv,delta_inv_std,delta_comp,delta_comp_std,e_gac\n{},{},{},{},{},{},{},{}\n",
            csv_field(&self.model),
            self.delta_id.mean,
            self.delta_id.std,
            self.delta_inv.mean,
            self.delta_inv.std,
            self.delta_comp.mean,
            self.delta_comp.std,
            self.e_gac
        )
    }

    /// Whitespace-separated blocks per probe kind for trend plots.
    pub fn gnuplot_data(&self) -> String {
        let mut out = String::new();
        for kind in [
            ProbeKind::Identity,
            ProbeKind::Inverse,
            ProbeKind::Composition,
        ] {
            out.push_str(&format!("# {kind}\n# k l mean std\n"));
            for r in self.configs.iter().filter(|r| r.kind == kind) {
                out.push_str(&format!("{} {} {} {}\n", r.k, r.l, r.mean, r.std));
            }
            out.push_str("\n\n");
        }
        out
    }
}

impl GarSuite {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,horizon,n_rollouts,aligned_mean,aligned_std,nonaligned_mean,nonaligned_std\n",
        );
        for r in &self.reports {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                csv_field(&self.model),
                r.horizon,
                r.n_rollouts,
                r.aligned_error.mean,
                r.aligned_error.std,
                r.nonaligned_error.mean,
                r.nonaligned_error.std
            ));
        }
        out
    }

    pub fn horizon(&self, h: usize) -> Option<&GarReport> {
        self.reports.iter().find(|r| r.horizon == h)
    }
}
