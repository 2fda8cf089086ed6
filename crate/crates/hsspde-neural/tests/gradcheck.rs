//! Central finite differences as the oracle for every hand-written VJP.

use hsspde_neural::{LayerSpec, MapSpec, ModelSpec, NeuralHssModel, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 0.5 * ||model(x) - target||^2 and its output adjoint.
fn loss_and_adjoint(model: &NeuralHssModel, x: &Tensor, target: &Tensor) -> (f64, Tensor) {
    let (y, _) = model.forward(x).unwrap();
    let mut d = y.clone();
    d.axpy(-1.0, target);
    let loss = 0.5 * d.norm2().powi(2);
    (loss, d)
}

/// Checks every parameter block of `model` against central differences at
/// `h = 1e-6`; block error is measured as ||analytic - fd|| relative to the
/// larger of the two norms.
fn check_all_blocks(model: &NeuralHssModel, x: &Tensor, target: &Tensor, tol: f64) {
    let (_, dpred) = loss_and_adjoint(model, x, target);
    let (_, tape) = model.forward(x).unwrap();
    let (grads, _) = model.vjp(&tape, &dpred).unwrap();

    let layout = model.layout();
    let params = model.write_params();
    let mut probe = model.clone();
    let h = 1e-6;
    for block in &layout.blocks {
        let mut fd = vec![0.0; block.len];
        for k in 0..block.len {
            let idx = block.offset + k;
            let mut plus = params.clone();
            plus[idx] += h;
            probe.read_params(&plus).unwrap();
            let (lp, _) = loss_and_adjoint(&probe, x, target);
            let mut minus = params.clone();
            minus[idx] -= h;
            probe.read_params(&minus).unwrap();
            let (lm, _) = loss_and_adjoint(&probe, x, target);
            fd[k] = (lp - lm) / (2.0 * h);
        }
        let analytic = &grads.data[block.offset..block.offset + block.len];
        let diff: f64 = analytic
            .iter()
            .zip(&fd)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let na: f64 = analytic.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nf: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        let rel = diff / na.max(nf).max(1e-8);
        assert!(
            rel <= tol,
            "block {} rel err {rel:.3e} (analytic norm {na:.3e}, fd norm {nf:.3e})",
            block.name
        );
    }
}

fn random_tensor(shape: &[usize], seed: u64, scale: f64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len: usize = shape.iter().product();
    Tensor::from_vec(
        shape,
        (0..len).map(|_| (rng.random::<f64>() - 0.5) * scale).collect(),
    )
    .unwrap()
}

#[test]
fn two_layer_hss_model_gradients() {
    let spec = ModelSpec {
        lift: MapSpec::Identity,
        layers: vec![
            LayerSpec::Hss1d {
                dim: 16,
                levels: 2,
                rank: 2,
                activation: true,
            },
            LayerSpec::Hss1d {
                dim: 16,
                levels: 2,
                rank: 2,
                activation: false,
            },
        ],
        project: MapSpec::Identity,
    };
    let mut model = NeuralHssModel::build(&spec, 12, 1.0).unwrap();
    // Move the slope off the identity regime so its gradient is exercised.
    let layout = model.layout();
    let mut params = model.write_params();
    for b in layout.blocks.iter().filter(|b| b.is_alpha) {
        params[b.offset] = 0.7;
    }
    model.read_params(&params).unwrap();

    let x = random_tensor(&[3, 16], 100, 2.0);
    let target = random_tensor(&[3, 16], 101, 2.0);
    check_all_blocks(&model, &x, &target, 1e-5);
}

#[test]
fn nd_layer_gradients() {
    let spec = ModelSpec {
        lift: MapSpec::Identity,
        layers: vec![LayerSpec::NdHss {
            dims: vec![8, 8],
            levels: 1,
            rank: 1,
            outer_rank: 2,
            activation: true,
        }],
        project: MapSpec::Identity,
    };
    let mut model = NeuralHssModel::build(&spec, 21, 1.0).unwrap();
    let layout = model.layout();
    let mut params = model.write_params();
    for b in layout.blocks.iter().filter(|b| b.is_alpha) {
        params[b.offset] = 0.55;
    }
    model.read_params(&params).unwrap();

    let x = random_tensor(&[2, 8, 8], 200, 2.0);
    let target = random_tensor(&[2, 8, 8], 201, 2.0);
    check_all_blocks(&model, &x, &target, 1e-5);
}

#[test]
fn lift_project_and_dense_baseline_gradients() {
    let spec = ModelSpec {
        lift: MapSpec::Cp {
            in_shape: vec![2, 6],
            out_shape: vec![8],
            rank: 2,
        },
        layers: vec![
            LayerSpec::Hss1d {
                dim: 8,
                levels: 1,
                rank: 2,
                activation: true,
            },
            LayerSpec::Dense1d {
                in_dim: 8,
                out_dim: 8,
                activation: true,
            },
        ],
        project: MapSpec::Dense {
            in_shape: vec![8],
            out_shape: vec![6],
        },
    };
    let mut model = NeuralHssModel::build(&spec, 33, 1.0).unwrap();
    let layout = model.layout();
    let mut params = model.write_params();
    for b in layout.blocks.iter().filter(|b| b.is_alpha) {
        params[b.offset] = 1.3;
    }
    model.read_params(&params).unwrap();

    let x = random_tensor(&[2, 2, 6], 300, 2.0);
    let target = random_tensor(&[2, 6], 301, 2.0);
    check_all_blocks(&model, &x, &target, 1e-5);
}

#[test]
fn input_adjoint_matches_finite_differences() {
    let spec = ModelSpec {
        lift: MapSpec::Identity,
        layers: vec![LayerSpec::Hss1d {
            dim: 8,
            levels: 1,
            rank: 2,
            activation: true,
        }],
        project: MapSpec::Identity,
    };
    let mut model = NeuralHssModel::build(&spec, 8, 1.0).unwrap();
    let mut params = model.write_params();
    let layout = model.layout();
    for b in layout.blocks.iter().filter(|b| b.is_alpha) {
        params[b.offset] = 0.4;
    }
    model.read_params(&params).unwrap();

    let x = random_tensor(&[2, 8], 400, 2.0);
    let target = random_tensor(&[2, 8], 401, 2.0);
    let (_, dpred) = loss_and_adjoint(&model, &x, &target);
    let (_, tape) = model.forward(&x).unwrap();
    let (_, dx) = model.vjp(&tape, &dpred).unwrap();

    let h = 1e-6;
    for i in 0..x.len() {
        let mut xp = x.clone();
        xp.data_mut()[i] += h;
        let (lp, _) = loss_and_adjoint(&model, &xp, &target);
        let mut xm = x.clone();
        xm.data_mut()[i] -= h;
        let (lm, _) = loss_and_adjoint(&model, &xm, &target);
        let fd = (lp - lm) / (2.0 * h);
        let got = dx.data()[i];
        assert!(
            (fd - got).abs() <= 1e-5 * (1.0 + fd.abs()),
            "input entry {i}: fd {fd} analytic {got}"
        );
    }
}

#[test]
fn zero_adjoint_gives_zero_gradient_set() {
    let spec = ModelSpec {
        lift: MapSpec::Identity,
        layers: vec![LayerSpec::Hss1d {
            dim: 8,
            levels: 1,
            rank: 1,
            activation: true,
        }],
        project: MapSpec::Identity,
    };
    let model = NeuralHssModel::build(&spec, 2, 1.0).unwrap();
    let x = random_tensor(&[2, 8], 500, 2.0);
    let (_, tape) = model.forward(&x).unwrap();
    let (grads, dx) = model.vjp(&tape, &Tensor::zeros(&[2, 8])).unwrap();
    assert!(grads.data.iter().all(|v| *v == 0.0));
    assert!(dx.data().iter().all(|v| *v == 0.0));
}
