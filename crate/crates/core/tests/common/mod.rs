//! Independent reference implementations used as test oracles.
//!
//! Poses are 3×3 homogeneous matrices here, increments are realized by
//! re-deriving the injector formulas, and metrics are recomputed with plain
//! loops. Nothing in this module calls the library's kinematics.
#![allow(dead_code)]

use gawm::data::{Dataset, DatasetSpec, Sequence, Split};
use gawm::metrics::{ProbeConfig, ProbeKind, ProbeSettings, WeightScheme};
use gawm::rng::derive_seed;
use gawm::segments::{sample_dirichlet_weights, DirichletParams};
use gawm::{ActionIncrement, ActionSegment, Pose2, ViolationConfig};

pub type Mat3 = [[f64; 3]; 3];

pub fn mat_from_pose(p: &Pose2) -> Mat3 {
    let (s, c) = p.theta.sin_cos();
    [[c, -s, p.x], [s, c, p.y], [0.0, 0.0, 1.0]]
}

pub fn mat_from_increment(a: &ActionIncrement) -> Mat3 {
    let (s, c) = a.dtheta.sin_cos();
    [[c, -s, a.dx], [s, c, a.dy], [0.0, 0.0, 1.0]]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Heading in `(-π, π]` and position of a homogeneous matrix.
pub fn mat_parts(m: &Mat3) -> (f64, f64, f64) {
    let mut th = m[1][0].atan2(m[0][0]);
    if th <= -std::f64::consts::PI {
        th += 2.0 * std::f64::consts::PI;
    }
    (th, m[0][2], m[1][2])
}

pub fn mat_distance(a: &Mat3, b: &Mat3, alpha: f64) -> f64 {
    let (ta, xa, ya) = mat_parts(a);
    let (tb, xb, yb) = mat_parts(b);
    // Relative rotation angle, in [0, π].
    let (s, c) = ((tb - ta).sin(), (tb - ta).cos());
    let dth = s.atan2(c).abs();
    ((xa - xb).powi(2) + (ya - yb).powi(2)).sqrt() + alpha * dth
}

pub fn pose_distance(a: &Pose2, b: &Pose2, alpha: f64) -> f64 {
    mat_distance(&mat_from_pose(a), &mat_from_pose(b), alpha)
}

/// Realized increment of a noise-free violation config:
/// `asym ⊙ c·tanh(a/c) + drift`.
pub fn realize(cfg: &ViolationConfig, a: &ActionIncrement) -> ActionIncrement {
    let sat = |v: f64| match cfg.saturation_scale {
        Some(c) if c.is_finite() => c * (v / c).tanh(),
        _ => v,
    };
    let (gp, gn) = cfg.asym_gain;
    let gain = |v: f64| if v > 0.0 { gp * v } else { gn * v };
    ActionIncrement {
        dx: gain(sat(a.dx)) + cfg.drift_bias.dx,
        dy: gain(sat(a.dy)) + cfg.drift_bias.dy,
        dtheta: sat(a.dtheta) + cfg.drift_bias.dtheta,
    }
}

/// Stepwise simulation of a noise-free model in matrix form.
pub fn simulate(cfg: &ViolationConfig, start: &Mat3, actions: &[ActionIncrement]) -> Mat3 {
    actions.iter().fold(*start, |m, a| {
        mat_mul(&m, &mat_from_increment(&realize(cfg, a)))
    })
}

pub fn negated_reverse(u: &[ActionIncrement]) -> Vec<ActionIncrement> {
    let mut out = u.to_vec();
    out.extend(u.iter().rev().map(|a| ActionIncrement {
        dx: -a.dx,
        dy: -a.dy,
        dtheta: -a.dtheta,
    }));
    out
}

/// Per-segment probe errors of a noise-free model, recomputed by direct
/// simulation in the same (sequence, start, segment) order the library uses.
pub fn oracle_probe_errors(
    cfg: &ViolationConfig,
    seqs: &[Sequence],
    probe: &ProbeConfig,
    settings: &ProbeSettings,
) -> Vec<f64> {
    let alpha = settings.dist.alpha_rot;
    let mut out = Vec::new();
    for (q, seq) in seqs.iter().take(probe.n_sequences).enumerate() {
        let acts = &seq.actions.increments;
        for &s in &probe.start_indices {
            let mut m = mat_from_pose(seq.pose(s));
            match probe.kind {
                ProbeKind::Identity => {
                    let zeros = vec![
                        ActionIncrement {
                            dx: 0.0,
                            dy: 0.0,
                            dtheta: 0.0
                        };
                        probe.l
                    ];
                    let sp = settings.insert_spacing;
                    for j in 0..probe.k {
                        let before = m;
                        m = simulate(cfg, &m, &zeros);
                        out.push(mat_distance(&m, &before, alpha));
                        if j + 1 < probe.k {
                            m = simulate(cfg, &m, &acts[s + j * sp..s + (j + 1) * sp]);
                        }
                    }
                }
                ProbeKind::Inverse => {
                    for j in 0..probe.k {
                        let u = &acts[s + j * probe.l..s + (j + 1) * probe.l];
                        let before = m;
                        m = simulate(cfg, &m, &negated_reverse(u));
                        out.push(mat_distance(&m, &before, alpha));
                    }
                }
                ProbeKind::Composition => {
                    let u_a = &acts[s..s + probe.l];
                    let u_b = oracle_redistribution(u_a, settings, probe, q, s);
                    let end_a = simulate(cfg, &m, u_a);
                    let end_b = simulate(cfg, &m, &u_b);
                    out.push(mat_distance(&end_a, &end_b, alpha));
                }
            }
        }
    }
    out
}

/// `u_b[i] = w_i Σ u_a` with the weights the probe draws for this instance.
fn oracle_redistribution(
    u_a: &[ActionIncrement],
    settings: &ProbeSettings,
    probe: &ProbeConfig,
    q: usize,
    s: usize,
) -> Vec<ActionIncrement> {
    if u_a.len() == 1 {
        return u_a.to_vec();
    }
    let weights = match settings.weights {
        WeightScheme::Uniform => vec![1.0 / u_a.len() as f64; u_a.len()],
        WeightScheme::Dirichlet { concentration } => {
            let inst = derive_seed(
                settings.seed,
                &[2, probe.k as u64, probe.l as u64, q as u64, s as u64],
            );
            let params = DirichletParams::new(concentration, derive_seed(inst, &[0])).unwrap();
            sample_dirichlet_weights(u_a.len(), &params).unwrap()
        }
    };
    let (mut sx, mut sy, mut st) = (0.0, 0.0, 0.0);
    for a in u_a {
        sx += a.dx;
        sy += a.dy;
        st += a.dtheta;
    }
    weights
        .iter()
        .map(|w| ActionIncrement {
            dx: w * sx,
            dy: w * sy,
            dtheta: w * st,
        })
        .collect()
}

/// Direct double loop over rollout pairs and time steps.
pub fn oracle_gar(trajs: &[Vec<Pose2>], alpha: f64) -> f64 {
    let n = trajs.len();
    let t = trajs[0].len();
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let acc: f64 = trajs[i]
                .iter()
                .zip(&trajs[j])
                .map(|(a, b)| pose_distance(a, b, alpha))
                .sum();
            total += acc / t as f64;
            pairs += 1;
        }
    }
    total / pairs as f64
}

/// Small dataset with the default action distribution.
pub fn small_dataset(n: usize, length: usize, seed: u64, model: &str) -> Dataset {
    let spec = DatasetSpec {
        n_train: n,
        n_eval: n,
        length,
        model: model.into(),
        seed,
        ..DatasetSpec::default()
    };
    gawm::data::generate_split(&spec, Split::Eval).unwrap()
}

/// Same as [`small_dataset`] but with every heading increment zeroed.
pub fn translation_only_dataset(n: usize, length: usize, seed: u64) -> Dataset {
    let mut spec = DatasetSpec {
        n_train: n,
        n_eval: n,
        length,
        seed,
        ..DatasetSpec::default()
    };
    spec.actions.mean[2] = 0.0;
    spec.actions.std[2] = 0.0;
    gawm::data::generate_split(&spec, Split::Eval).unwrap()
}

/// Hand-unrolled residual tanh MLP step on flat parameters.
pub fn mlp_step(params: &[f64], d: usize, h: usize, z: &[f64], a: &ActionIncrement) -> Vec<f64> {
    let n_in = d + 3;
    let w1 = &params[..h * n_in];
    let b1 = &params[h * n_in..h * n_in + h];
    let w2 = &params[h * n_in + h..h * n_in + h + d * h];
    let b2 = &params[h * n_in + h + d * h..];
    let input: Vec<f64> = z.iter().copied().chain([a.dx, a.dy, a.dtheta]).collect();
    let hidden: Vec<f64> = (0..h)
        .map(|j| (b1[j] + (0..n_in).map(|i| w1[j * n_in + i] * input[i]).sum::<f64>()).tanh())
        .collect();
    (0..d)
        .map(|i| z[i] + b2[i] + (0..h).map(|j| w2[i * h + j] * hidden[j]).sum::<f64>())
        .collect()
}

pub fn mlp_rollout(params: &[f64], d: usize, h: usize, z: &[f64], u: &ActionSegment) -> Vec<f64> {
    u.iter()
        .fold(z.to_vec(), |z, a| mlp_step(params, d, h, &z, a))
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
