//! End-to-end behavior of the training loop.

use hsspde_core::{ClusterTree, Hss};
use hsspde_neural::{LayerSpec, MapSpec, ModelSpec, NeuralHssModel, Tensor};
use hsspde_optim::{fit, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn single_layer_spec(d: usize, levels: usize, rank: usize) -> ModelSpec {
    ModelSpec {
        lift: MapSpec::Identity,
        layers: vec![LayerSpec::Hss1d {
            dim: d,
            levels,
            rank,
            activation: true,
        }],
        project: MapSpec::Identity,
    }
}

/// Inputs drawn uniform, targets through a ground-truth random HSS operator.
fn linear_dataset(d: usize, n: usize, seed: u64) -> (Tensor, Tensor, Hss) {
    let tree = ClusterTree::balanced(d, 1).unwrap();
    let truth = Hss::random(tree, 1, seed, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xFEED);
    let mut inputs = Tensor::zeros(&[n, d]);
    let mut targets = Tensor::zeros(&[n, d]);
    for b in 0..n {
        let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let y = truth.matvec(&x).unwrap();
        inputs.chunk_mut(n, b).copy_from_slice(&x);
        targets.chunk_mut(n, b).copy_from_slice(&y);
    }
    (inputs, targets, truth)
}

#[test]
fn zero_learning_rate_leaves_parameters_unchanged() {
    let spec = single_layer_spec(8, 1, 1);
    let mut model = NeuralHssModel::build(&spec, 4, 1.0).unwrap();
    let before = model.write_params();
    let (inputs, targets, _) = linear_dataset(8, 16, 11);
    let config = TrainConfig {
        epochs: 3,
        batch_size: 8,
        peak_lr: 0.0,
        min_lr: 0.0,
        ..TrainConfig::default()
    };
    fit(&mut model, &inputs, &targets, None, &config).unwrap();
    assert_eq!(model.write_params(), before);
}

#[test]
fn identical_seeds_give_bitwise_identical_runs() {
    let spec = single_layer_spec(8, 1, 1);
    let (inputs, targets, _) = linear_dataset(8, 24, 3);
    let config = TrainConfig {
        epochs: 12,
        batch_size: 7,
        weight_decay: 1e-3,
        alpha_penalty: 0.5,
        eval_every: 4,
        ..TrainConfig::default()
    };
    let run = |_| {
        let mut model = NeuralHssModel::build(&spec, 21, 1.0).unwrap();
        let report = fit(
            &mut model,
            &inputs,
            &targets,
            Some((&inputs, &targets)),
            &config,
        )
        .unwrap();
        (model.write_params(), report)
    };
    let (p1, r1) = run(0);
    let (p2, r2) = run(1);
    assert_eq!(p1, p2, "final parameters must be bitwise identical");
    assert_eq!(r1.steps, r2.steps);
    assert_eq!(r1.epoch_loss, r2.epoch_loss);
    assert_eq!(r1.alpha_dev, r2.alpha_dev);
    assert_eq!(r1.evals, r2.evals);
}

#[test]
fn schedule_endpoints_are_exact_in_the_report() {
    let spec = single_layer_spec(8, 1, 1);
    let mut model = NeuralHssModel::build(&spec, 5, 1.0).unwrap();
    let (inputs, targets, _) = linear_dataset(8, 8, 9);
    let config = TrainConfig {
        epochs: 10,
        batch_size: 8,
        peak_lr: 3e-3,
        min_lr: 1e-6,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &inputs, &targets, None, &config).unwrap();
    assert_eq!(report.steps.first().unwrap().lr, 3e-3);
    let last = report.steps.last().unwrap().lr;
    assert!((last - 1e-6).abs() < 1e-18, "final lr {last}");
}

#[test]
fn training_reduces_loss_on_a_linear_target() {
    let spec = single_layer_spec(16, 1, 2);
    let mut model = NeuralHssModel::build(&spec, 13, 0.5).unwrap();
    let (inputs, targets, _) = linear_dataset(16, 64, 31);
    let config = TrainConfig {
        epochs: 120,
        batch_size: 64,
        peak_lr: 1e-2,
        min_lr: 1e-5,
        weight_decay: 0.0,
        alpha_penalty: 1.0,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &inputs, &targets, None, &config).unwrap();
    assert!(report.steps.iter().all(|s| s.train_loss.is_finite()));
    let first = report.epoch_loss.first().unwrap();
    let last = report.epoch_loss.last().unwrap();
    assert!(
        last < &(first * 1e-2),
        "loss should drop by 100x: {first} -> {last}"
    );
}

#[test]
fn alphas_converge_toward_one_under_the_penalty() {
    // Linear target, slope started away from 1, lambda > 0: |alpha - 1|
    // must decrease monotonically over the last 10% of epochs.
    let spec = single_layer_spec(8, 1, 1);
    let mut model = NeuralHssModel::build(&spec, 17, 0.8).unwrap();
    let layout = model.layout();
    let mut params = model.write_params();
    for b in layout.blocks.iter().filter(|b| b.is_alpha) {
        params[b.offset] = 0.5;
    }
    model.read_params(&params).unwrap();

    let (inputs, targets, _) = linear_dataset(8, 48, 77);
    let config = TrainConfig {
        epochs: 200,
        batch_size: 48,
        peak_lr: 5e-3,
        min_lr: 1e-6,
        weight_decay: 0.0,
        alpha_penalty: 1.0,
        ..TrainConfig::default()
    };
    let report = fit(&mut model, &inputs, &targets, None, &config).unwrap();
    let tail = &report.alpha_dev[180..];
    for w in tail.windows(2) {
        assert!(
            w[1] <= w[0] + 1e-12,
            "alpha deviation increased near the end: {} -> {}",
            w[0],
            w[1]
        );
    }
    assert!(report.alpha_dev.last().unwrap() < &0.05);
}

#[test]
fn empty_dataset_is_rejected() {
    let spec = single_layer_spec(8, 1, 1);
    let mut model = NeuralHssModel::build(&spec, 1, 1.0).unwrap();
    let inputs = Tensor::zeros(&[0, 8]);
    let targets = Tensor::zeros(&[0, 8]);
    let err = fit(&mut model, &inputs, &targets, None, &TrainConfig::default()).unwrap_err();
    assert!(err.to_string().contains("empty"));
}

#[test]
fn report_csv_round_trip() {
    let spec = single_layer_spec(8, 1, 1);
    let mut model = NeuralHssModel::build(&spec, 2, 1.0).unwrap();
    let (inputs, targets, _) = linear_dataset(8, 10, 5);
    let config = TrainConfig {
        epochs: 4,
        batch_size: 4,
        eval_every: 2,
        ..TrainConfig::default()
    };
    let report = fit(
        &mut model,
        &inputs,
        &targets,
        Some((&inputs, &targets)),
        &config,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("train.csv");
    report.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epoch,step,lr,train_loss,eval_metric");
    // 4 epochs x 3 steps (10 samples, batch 4 keeps the last partial batch).
    assert_eq!(lines.len(), 1 + 12);
    // Eval ran on epochs 1 and 3; their last rows carry a metric.
    let with_eval: Vec<_> = lines[1..]
        .iter()
        .filter(|l| !l.ends_with(','))
        .collect();
    assert_eq!(with_eval.len(), 2);
}
