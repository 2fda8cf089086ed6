//! Evaluation metrics and the additive-residual rollout.

use hsspde_neural::{NeuralHssModel, Tensor};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("shape mismatch: prediction {pred:?} vs target {target:?}")]
    Shape { pred: Vec<usize>, target: Vec<usize> },

    #[error("target sample {index} has zero norm; relative error undefined")]
    ZeroNormTarget { index: usize },

    #[error("model has no residual_scale; it was not trained in residual mode")]
    MissingResidualScale,

    #[error(transparent)]
    Neural(#[from] hsspde_neural::NeuralError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// Named per-sample metric values; the aggregate is their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric: String,
    pub values: Vec<f64>,
}

impl EvalReport {
    pub fn aggregate(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV rows `sample_index,value` followed by one aggregate line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "sample_index,{}", self.metric)?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(f, "{i},{v}")?;
        }
        writeln!(f, "aggregate,{}", self.aggregate())?;
        Ok(())
    }
}

fn check_shapes(pred: &Tensor, target: &Tensor) -> Result<usize> {
    if pred.shape() != target.shape() || pred.ndim() < 1 {
        return Err(MetricsError::Shape {
            pred: pred.shape().to_vec(),
            target: target.shape().to_vec(),
        });
    }
    Ok(pred.shape()[0])
}

/// Per-sample values of `||pred_b - target_b|| / ||target_b||` over the
/// leading batch axis.
pub fn relative_l2_report(pred: &Tensor, target: &Tensor) -> Result<EvalReport> {
    let batch = check_shapes(pred, target)?;
    let mut values = Vec::with_capacity(batch);
    for b in 0..batch {
        let p = pred.chunk(batch, b);
        let t = target.chunk(batch, b);
        let tn: f64 = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        if tn == 0.0 {
            return Err(MetricsError::ZeroNormTarget { index: b });
        }
        let dn: f64 = p
            .iter()
            .zip(t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        values.push(dn / tn);
    }
    Ok(EvalReport {
        metric: "relative_l2".to_string(),
        values,
    })
}

/// Mean relative L2 error over the batch.
pub fn relative_l2(pred: &Tensor, target: &Tensor) -> Result<f64> {
    Ok(relative_l2_report(pred, target)?.aggregate())
}

/// Per-sample unweighted L2 norms of the full trajectory difference
/// (time and grid axes together).
pub fn trajectory_l2_report(pred: &Tensor, target: &Tensor) -> Result<EvalReport> {
    let batch = check_shapes(pred, target)?;
    let mut values = Vec::with_capacity(batch);
    for b in 0..batch {
        let p = pred.chunk(batch, b);
        let t = target.chunk(batch, b);
        let dn: f64 = p
            .iter()
            .zip(t)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        values.push(dn);
    }
    Ok(EvalReport {
        metric: "trajectory_l2".to_string(),
        values,
    })
}

/// Mean trajectory L2 error over the batch.
pub fn trajectory_l2(pred: &Tensor, target: &Tensor) -> Result<f64> {
    Ok(trajectory_l2_report(pred, target)?.aggregate())
}

/// Residual rollout: iterates `u <- u + s * model(u)` for `steps` steps,
/// where `s` is the residual scale frozen into the model at training time.
/// Returns `steps + 1` states, the first being `u0` verbatim.
pub fn rollout(model: &NeuralHssModel, u0: &Tensor, steps: usize) -> Result<Tensor> {
    let scale = model
        .residual_scale
        .ok_or(MetricsError::MissingResidualScale)?;
    let grid = u0.shape().to_vec();
    let mut out_shape = vec![steps + 1];
    out_shape.extend_from_slice(&grid);
    let mut out = Tensor::zeros(&out_shape);
    out.chunk_mut(steps + 1, 0).copy_from_slice(u0.data());

    let mut batched_shape = vec![1usize];
    batched_shape.extend_from_slice(&grid);
    let mut state = u0.reshaped(&batched_shape)?;
    for t in 0..steps {
        let (delta, _) = model.forward(&state)?;
        let (sd, dd) = (state.data_mut(), delta.data());
        for (s, d) in sd.iter_mut().zip(dd) {
            *s += scale * d;
        }
        out.chunk_mut(steps + 1, t + 1).copy_from_slice(state.data());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hsspde_core::{ClusterTree, Hss};
    use hsspde_neural::{HssLinearLayer, Layer, LayerSpec, MapSpec, ModelSpec, NeuralHssModel};

    fn t(shape: &[usize], data: Vec<f64>) -> Tensor {
        Tensor::from_vec(shape, data).unwrap()
    }

    #[test]
    fn exact_prediction_scores_zero() {
        let a = t(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(relative_l2(&a, &a).unwrap(), 0.0);
        assert_eq!(trajectory_l2(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn doubled_prediction_scores_one() {
        let target = t(&[2, 2], vec![1.0, 2.0, -1.0, 0.5]);
        let mut pred = target.clone();
        pred.scale(2.0);
        let v = relative_l2(&pred, &target).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
    }

    #[test]
    fn relative_l2_matches_hand_computation() {
        let pred = t(&[2, 2], vec![1.0, 1.0, 3.0, 4.0]);
        let target = t(&[2, 2], vec![1.0, 2.0, 3.0, 0.0]);
        let s0 = 1.0 / (1.0f64 + 4.0).sqrt();
        let s1 = 4.0 / 3.0;
        let expect = 0.5 * (s0 + s1);
        assert!((relative_l2(&pred, &target).unwrap() - expect).abs() <= 1e-14);
    }

    #[test]
    fn relative_l2_is_scale_invariant() {
        let pred = t(&[2, 3], vec![0.3, -1.0, 2.0, 0.7, 0.1, -0.4]);
        let target = t(&[2, 3], vec![1.0, -0.6, 1.4, 0.9, 0.2, -0.8]);
        let base = relative_l2(&pred, &target).unwrap();
        for c in [3.0, -0.25, 1e6] {
            let mut p = pred.clone();
            p.scale(c);
            let mut tt = target.clone();
            tt.scale(c);
            let v = relative_l2(&p, &tt).unwrap();
            assert!((v - base).abs() <= 1e-14 * (1.0 + base));
        }
    }

    #[test]
    fn metrics_are_batch_permutation_invariant() {
        let pred = t(&[3, 2], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let target = t(&[3, 2], vec![1.5, 2.0, 2.0, 4.5, 5.0, 5.0]);
        let perm = [2usize, 0, 1];
        let permute = |x: &Tensor| {
            let mut data = Vec::new();
            for &p in &perm {
                data.extend_from_slice(x.chunk(3, p));
            }
            t(&[3, 2], data)
        };
        assert!(
            (relative_l2(&pred, &target).unwrap()
                - relative_l2(&permute(&pred), &permute(&target)).unwrap())
            .abs()
                < 1e-15
        );
        assert!(
            (trajectory_l2(&pred, &target).unwrap()
                - trajectory_l2(&permute(&pred), &permute(&target)).unwrap())
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn zero_norm_target_names_sample() {
        let pred = t(&[2, 2], vec![1.0, 1.0, 1.0, 1.0]);
        let target = t(&[2, 2], vec![1.0, 2.0, 0.0, 0.0]);
        let err = relative_l2(&pred, &target).unwrap_err();
        assert!(err.to_string().contains("sample 1"));
    }

    #[test]
    fn constant_offset_trajectory_error() {
        let target = Tensor::zeros(&[1, 4, 5]);
        let eps = 1e-3;
        let pred = Tensor::scalar_filled(&[1, 4, 5], eps);
        let v = trajectory_l2(&pred, &target).unwrap();
        assert!((v - eps * 20f64.sqrt()).abs() < 1e-15);
    }

    fn zero_model(d: usize) -> NeuralHssModel {
        let spec = ModelSpec {
            lift: MapSpec::Identity,
            layers: vec![LayerSpec::Hss1d {
                dim: d,
                levels: 1,
                rank: 1,
                activation: false,
            }],
            project: MapSpec::Identity,
        };
        let mut m = NeuralHssModel::build(&spec, 0, 0.0).unwrap();
        m.residual_scale = Some(1.0);
        m
    }

    #[test]
    fn zero_model_rollout_is_constant() {
        let model = zero_model(4);
        let u0 = t(&[4], vec![1.0, -2.0, 3.0, 0.5]);
        let states = rollout(&model, &u0, 5).unwrap();
        assert_eq!(states.shape(), &[6, 4]);
        for s in 0..6 {
            assert_eq!(states.chunk(6, s), u0.data());
        }
    }

    #[test]
    fn zero_scale_rollout_is_constant() {
        let tree = ClusterTree::balanced(4, 1).unwrap();
        let mut model = zero_model(4);
        model.layers[0] = Layer::Hss(HssLinearLayer::new(
            Hss::random(tree, 1, 3, 1.0).unwrap(),
            false,
        ));
        model.residual_scale = Some(0.0);
        let u0 = t(&[4], vec![0.4, 0.3, 0.2, 0.1]);
        let states = rollout(&model, &u0, 3).unwrap();
        for s in 0..4 {
            assert_eq!(states.chunk(4, s), u0.data());
        }
    }

    #[test]
    fn one_step_matches_manual_computation_bitwise() {
        let tree = ClusterTree::balanced(4, 1).unwrap();
        let w = Hss::random(tree, 1, 9, 1.0).unwrap();
        let mut model = zero_model(4);
        model.layers[0] = Layer::Hss(HssLinearLayer::new(w.clone(), false));
        model.residual_scale = Some(0.25);
        let u0 = t(&[4], vec![1.0, 0.0, -1.0, 2.0]);
        let states = rollout(&model, &u0, 1).unwrap();
        let delta = w.matvec(u0.data()).unwrap();
        for i in 0..4 {
            let manual = u0.data()[i] + 0.25 * delta[i];
            assert_eq!(states.chunk(2, 1)[i], manual);
        }
        assert_eq!(states.chunk(2, 0), u0.data());
    }

    #[test]
    fn missing_residual_scale_is_an_error() {
        let mut model = zero_model(4);
        model.residual_scale = None;
        let u0 = t(&[4], vec![1.0; 4]);
        assert!(matches!(
            rollout(&model, &u0, 2),
            Err(MetricsError::MissingResidualScale)
        ));
    }

    #[test]
    fn report_csv_has_aggregate_line() {
        let report = EvalReport {
            metric: "relative_l2".into(),
            values: vec![0.25, 0.75],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.csv");
        report.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("sample_index,relative_l2"));
        assert!(text.contains("aggregate,0.5"));
    }
}
