mod common;

use gawm::rng::noise_source;
use gawm::training::{
    constraint_loss, evaluate_batch_as, expected_objective, prediction_loss, sample_batch, train,
    train_with, OptimizerKind,
};
use gawm::{ConstraintKind, FeatureEncoder, GALossConfig, TrainRunConfig};

use common::small_dataset;

fn run_cfg(steps: usize) -> TrainRunConfig {
    TrainRunConfig {
        steps,
        batch_size: 8,
        ..TrainRunConfig::default()
    }
}

/// Averaging the per-batch objective over the uniform constraint draw gives
/// `l_pred + (λ_ga/3) Σ_c λ_c L_c`, recomputed here without a graph.
#[test]
fn per_batch_objective_is_unbiased() {
    let data = small_dataset(8, 32, 41, "exact");
    let enc = FeatureEncoder::new(16, 3, 0.0).unwrap();
    let net = gawm::training::initial_net(
        &TrainRunConfig {
            init: gawm::latent::NetInit {
                input_gain: 1.0,
                output_gain: 0.5,
            },
            ..run_cfg(1)
        },
        16,
    );
    let cfg = GALossConfig {
        lambda_ga: 0.5,
        lambda_id: 0.7,
        lambda_inv: 1.3,
        lambda_comp: 1.0,
        ..GALossConfig::default()
    };
    let mut rng = noise_source(5);
    let mut counts = [0usize; 3];
    let n_batches = 300;
    for _ in 0..n_batches {
        let batch = sample_batch(&data, &cfg, 8, &mut rng).unwrap();
        counts[ConstraintKind::ALL
            .iter()
            .position(|&k| k == batch.active)
            .unwrap()] += 1;

        let mean_over_draw: f64 = ConstraintKind::ALL
            .iter()
            .map(|&k| {
                evaluate_batch_as(&net, &enc, &batch, k, &cfg, &mut noise_source(0))
                    .unwrap()
                    .total
            })
            .sum::<f64>()
            / 3.0;
        let l_pred = prediction_loss(&net, &enc, &batch.transitions, &mut noise_source(0)).unwrap();
        let mut ga = 0.0;
        for &k in &ConstraintKind::ALL {
            let lk: f64 = batch
                .items
                .iter()
                .map(|it| {
                    constraint_loss(
                        &net,
                        &enc.encode_clean(it.start()),
                        k,
                        &it.base,
                        &it.weights,
                    )
                    .unwrap()
                })
                .sum::<f64>()
                / batch.items.len() as f64;
            ga += cfg.weight(k) * lk;
        }
        let oracle = l_pred + cfg.lambda_ga / 3.0 * ga;
        assert!((mean_over_draw - oracle).abs() <= 1e-6 * oracle.abs().max(1e-12));
        let library = expected_objective(&net, &enc, &batch, &cfg).unwrap();
        assert!((library - oracle).abs() <= 1e-6 * oracle.abs().max(1e-12));
    }
    // Uniform draw: each type near 100 of 300 (±5σ).
    for c in counts {
        assert!(
            (c as f64 - 100.0).abs() < 5.0 * (300.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt(),
            "{counts:?}"
        );
    }
}

#[test]
fn ga_runs_diverge_at_first_nonzero_constraint_loss() {
    let data = small_dataset(8, 32, 43, "exact");
    let enc = FeatureEncoder::new(16, 3, 0.0).unwrap();
    let run = run_cfg(6);
    let trace = |lambda: f64| {
        let cfg = GALossConfig {
            lambda_ga: lambda,
            ..GALossConfig::default()
        };
        let mut params = Vec::new();
        let out = train_with(&run, &cfg, &data, &enc, 0.0, |_, net| {
            params.push(net.params().to_vec())
        })
        .unwrap();
        (params, out.curve)
    };
    let (base, base_curve) = trace(0.0);
    let (ga, ga_curve) = trace(0.5);
    // Same batches and constraint draws in both runs.
    for (a, b) in base_curve.iter().zip(&ga_curve) {
        assert_eq!(a.active_constraint, b.active_constraint);
    }
    // The zero-output init makes every constraint loss vanish at step 1,
    // so the traces part only once the net is no longer the identity.
    let first_diff = base
        .iter()
        .zip(&ga)
        .position(|(a, b)| a != b)
        .expect("runs diverge");
    let first_active = ga_curve.iter().position(|r| r.l_ga > 0.0);
    assert_eq!(Some(first_diff), first_active);
    for i in 0..=first_diff {
        assert_eq!(base_curve[i].l_pred, ga_curve[i].l_pred);
    }
    assert_ne!(
        base_curve[first_diff + 1].l_pred,
        ga_curve[first_diff + 1].l_pred
    );
}

#[test]
fn constraint_weights_are_inert_without_ga() {
    let data = small_dataset(6, 32, 47, "exact");
    let enc = FeatureEncoder::new(16, 3, 0.0).unwrap();
    let run = run_cfg(5);
    let a = train(
        &run,
        &GALossConfig {
            lambda_ga: 0.0,
            ..GALossConfig::default()
        },
        &data,
        &enc,
        0.0,
    )
    .unwrap();
    let b = train(
        &run,
        &GALossConfig {
            lambda_ga: 0.0,
            lambda_id: 3.0,
            lambda_inv: 0.2,
            ..GALossConfig::default()
        },
        &data,
        &enc,
        0.0,
    )
    .unwrap();
    assert_eq!(a.net, b.net);
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let data = small_dataset(6, 32, 53, "exact");
    let enc = FeatureEncoder::new(16, 3, 0.0).unwrap();
    for optimizer in [
        OptimizerKind::AdaptiveMoments,
        OptimizerKind::PlainGradientDescent,
    ] {
        let run = TrainRunConfig {
            learning_rate: 0.0,
            optimizer,
            ..run_cfg(4)
        };
        let out = train(&run, &GALossConfig::default(), &data, &enc, 0.0).unwrap();
        assert_eq!(out.net, gawm::training::initial_net(&run, 16));
        assert_eq!(out.curve.len(), 4);
        assert!(out.curve.iter().all(|r| r.l_pred > 0.0));
    }
}

#[test]
fn training_is_bit_reproducible() {
    let data = small_dataset(6, 32, 59, "exact");
    let enc = FeatureEncoder::new(16, 3, 0.0).unwrap();
    let run = run_cfg(20);
    let a = train(&run, &GALossConfig::default(), &data, &enc, 0.02).unwrap();
    let b = train(&run, &GALossConfig::default(), &data, &enc, 0.02).unwrap();
    assert_eq!(a.checkpoint.to_bytes(), b.checkpoint.to_bytes());
    assert_eq!(a.curve, b.curve);
}

#[test]
fn prediction_training_reduces_loss() {
    let data = small_dataset(20, 32, 61, "exact");
    let enc = FeatureEncoder::new(16, 3, 0.0).unwrap();
    let run = TrainRunConfig {
        steps: 300,
        batch_size: 16,
        learning_rate: 3e-3,
        ..TrainRunConfig::default()
    };
    let start = gawm::training::initial_net(&run, 16);
    let out = train(
        &run,
        &GALossConfig {
            lambda_ga: 0.0,
            ..GALossConfig::default()
        },
        &data,
        &enc,
        0.0,
    )
    .unwrap();
    let before = gawm::training::dataset_prediction_loss(&start, &enc, &data);
    let after = gawm::training::dataset_prediction_loss(&out.net, &enc, &data);
    assert!(after < 0.5 * before, "{before} -> {after}");
}
