//! The full model: optional lifting map, a stack of structured layers, an
//! optional projection, and a flat view of every parameter for the optimizer.

use crate::error::{NeuralError, Result};
use crate::layer::{DenseLayer, DenseLayerTape, HssLayerTape, HssLinearLayer};
use crate::nd_layer::{NdHssLayer, NdHssTape};
use crate::tensor::Tensor;
use crate::tensor_map::{LinearTensorMap, TensorMapTape};
use hsspde_core::{seed, ClusterTree, Hss, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One layer of the stack.
#[derive(Debug, Clone)]
pub enum Layer {
    Hss(HssLinearLayer),
    Nd(NdHssLayer),
    Dense(DenseLayer),
}

#[derive(Debug)]
pub enum LayerTape {
    Hss(HssLayerTape),
    Nd(NdHssTape),
    Dense(DenseLayerTape),
}

impl Layer {
    fn apply(&self, x: &Tensor) -> Result<(Tensor, LayerTape)> {
        Ok(match self {
            Layer::Hss(l) => {
                let (y, t) = l.apply(x)?;
                (y, LayerTape::Hss(t))
            }
            Layer::Nd(l) => {
                let (y, t) = l.apply(x)?;
                (y, LayerTape::Nd(t))
            }
            Layer::Dense(l) => {
                let (y, t) = l.apply(x)?;
                (y, LayerTape::Dense(t))
            }
        })
    }

    fn vjp(&self, tape: &LayerTape, dy: &Tensor, grad: &mut Layer) -> Result<Tensor> {
        match (self, tape, grad) {
            (Layer::Hss(l), LayerTape::Hss(t), Layer::Hss(g)) => l.vjp(t, dy, g),
            (Layer::Nd(l), LayerTape::Nd(t), Layer::Nd(g)) => l.vjp(t, dy, g),
            (Layer::Dense(l), LayerTape::Dense(t), Layer::Dense(g)) => l.vjp(t, dy, g),
            _ => Err(NeuralError::StaleTape {
                recorded: 0,
                needed: 1,
            }),
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            Layer::Hss(l) => l.alpha,
            Layer::Nd(l) => l.alpha,
            Layer::Dense(l) => l.alpha,
        }
    }
}

/// One named slice of the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ParamBlock {
    pub name: String,
    pub offset: usize,
    pub len: usize,
    /// Activation-slope blocks are excluded from weight decay.
    pub is_alpha: bool,
}

#[derive(Debug, Clone)]
pub struct ParamLayout {
    pub blocks: Vec<ParamBlock>,
    pub total: usize,
}

/// Gradients for every parameter, flattened in declaration order (the same
/// order as [`NeuralHssModel::write_params`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub data: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(n: usize) -> Self {
        Self { data: vec![0.0; n] }
    }

    pub fn block<'a>(&'a self, layout: &ParamLayout, name: &str) -> Option<&'a [f64]> {
        layout
            .blocks
            .iter()
            .find(|b| b.name == name)
            .map(|b| &self.data[b.offset..b.offset + b.len])
    }

    pub fn norm2(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Lift -> layer stack -> projection. `residual_scale` is set at training
/// time for time-stepping models (the maximum residual magnitude over the
/// training split) and consumed by the rollout.
#[derive(Debug, Clone)]
pub struct NeuralHssModel {
    pub lift: Option<LinearTensorMap>,
    pub layers: Vec<Layer>,
    pub project: Option<LinearTensorMap>,
    pub residual_scale: Option<f64>,
    pub spec: ModelSpec,
}

#[derive(Debug)]
pub struct ModelTape {
    lift: Option<TensorMapTape>,
    layers: Vec<LayerTape>,
    project: Option<TensorMapTape>,
}

impl NeuralHssModel {
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, ModelTape)> {
        let mut cur = x.clone();
        let lift = match &self.lift {
            Some(map) => {
                let (y, t) = map.apply(&cur)?;
                cur = y;
                Some(t)
            }
            None => None,
        };
        let mut layer_tapes = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, t) = layer.apply(&cur)?;
            cur = y;
            layer_tapes.push(t);
        }
        let project = match &self.project {
            Some(map) => {
                let (y, t) = map.apply(&cur)?;
                cur = y;
                Some(t)
            }
            None => None,
        };
        Ok((
            cur,
            ModelTape {
                lift,
                layers: layer_tapes,
                project,
            },
        ))
    }

    /// Chains the component reverse passes; returns the gradient for every
    /// parameter and the adjoint of the model input.
    pub fn vjp(&self, tape: &ModelTape, d_pred: &Tensor) -> Result<(GradientSet, Tensor)> {
        let mut gmodel = self.zeroed_clone();
        let mut g = d_pred.clone();
        if let (Some(map), Some(t)) = (&self.project, &tape.project) {
            g = map.vjp(t, &g, gmodel.project.as_mut().unwrap())?;
        }
        for idx in (0..self.layers.len()).rev() {
            g = self.layers[idx].vjp(&tape.layers[idx], &g, &mut gmodel.layers[idx])?;
        }
        if let (Some(map), Some(t)) = (&self.lift, &tape.lift) {
            g = map.vjp(t, &g, gmodel.lift.as_mut().unwrap())?;
        }
        Ok((GradientSet { data: gmodel.write_params() }, g))
    }

    /// Clone with every parameter (including alphas) set to zero, used as a
    /// gradient accumulator.
    fn zeroed_clone(&self) -> Self {
        let mut c = self.clone();
        let zeros = vec![0.0; c.param_count()];
        c.read_params(&zeros).expect("zeroing a clone cannot fail");
        c
    }

    pub fn param_count(&self) -> usize {
        self.layout().total
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.layers.iter().map(Layer::alpha).collect()
    }

    pub fn layout(&self) -> ParamLayout {
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        let mut push = |name: String, len: usize, is_alpha: bool, offset: &mut usize| {
            blocks.push(ParamBlock {
                name,
                offset: *offset,
                len,
                is_alpha,
            });
            *offset += len;
        };
        if let Some(map) = &self.lift {
            map_layout("lift", map, &mut push, &mut offset);
        }
        for (i, layer) in self.layers.iter().enumerate() {
            let prefix = format!("layer{i}");
            match layer {
                Layer::Hss(l) => {
                    for (name, len) in l.weight.block_dims() {
                        push(format!("{prefix}.{name}"), len, false, &mut offset);
                    }
                }
                Layer::Nd(l) => {
                    for (k, term) in l.factors.iter().enumerate() {
                        for (j, h) in term.iter().enumerate() {
                            for (name, len) in h.block_dims() {
                                push(
                                    format!("{prefix}.term{k}.mode{j}.{name}"),
                                    len,
                                    false,
                                    &mut offset,
                                );
                            }
                        }
                    }
                }
                Layer::Dense(l) => {
                    push(
                        format!("{prefix}.weight"),
                        l.weight.rows() * l.weight.cols(),
                        false,
                        &mut offset,
                    );
                }
            }
            push(format!("{prefix}.alpha"), 1, true, &mut offset);
        }
        if let Some(map) = &self.project {
            map_layout("project", map, &mut push, &mut offset);
        }
        ParamLayout {
            blocks,
            total: offset,
        }
    }

    /// Every parameter in declaration order: lift, then each layer (weight
    /// blocks, then its alpha), then projection.
    pub fn write_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        if let Some(map) = &self.lift {
            write_map(map, &mut out);
        }
        for layer in &self.layers {
            match layer {
                Layer::Hss(l) => {
                    l.weight.write_flat(&mut out);
                    out.push(l.alpha);
                }
                Layer::Nd(l) => {
                    for term in &l.factors {
                        for h in term {
                            h.write_flat(&mut out);
                        }
                    }
                    out.push(l.alpha);
                }
                Layer::Dense(l) => {
                    out.extend_from_slice(l.weight.data());
                    out.push(l.alpha);
                }
            }
        }
        if let Some(map) = &self.project {
            write_map(map, &mut out);
        }
        out
    }

    pub fn read_params(&mut self, src: &[f64]) -> Result<()> {
        let need = self.param_count();
        if src.len() != need {
            return Err(NeuralError::LengthMismatch {
                context: "model parameter vector",
                expected: need,
                actual: src.len(),
            });
        }
        let mut pos = 0usize;
        if let Some(map) = &mut self.lift {
            pos = read_map(map, src, pos);
        }
        for layer in &mut self.layers {
            match layer {
                Layer::Hss(l) => {
                    pos += l.weight.read_flat(&src[pos..]).map_err(NeuralError::Core)?;
                    l.alpha = src[pos];
                    pos += 1;
                }
                Layer::Nd(l) => {
                    for term in &mut l.factors {
                        for h in term {
                            pos += h.read_flat(&src[pos..]).map_err(NeuralError::Core)?;
                        }
                    }
                    l.alpha = src[pos];
                    pos += 1;
                }
                Layer::Dense(l) => {
                    let n = l.weight.rows() * l.weight.cols();
                    l.weight.data_mut().copy_from_slice(&src[pos..pos + n]);
                    pos += n;
                    l.alpha = src[pos];
                    pos += 1;
                }
            }
        }
        if let Some(map) = &mut self.project {
            pos = read_map(map, src, pos);
        }
        debug_assert_eq!(pos, need);
        Ok(())
    }
}

fn map_layout(
    prefix: &str,
    map: &LinearTensorMap,
    push: &mut impl FnMut(String, usize, bool, &mut usize),
    offset: &mut usize,
) {
    match map {
        LinearTensorMap::Dense { weight, .. } => {
            push(
                format!("{prefix}.weight"),
                weight.rows() * weight.cols(),
                false,
                offset,
            );
        }
        LinearTensorMap::Cp {
            coeffs,
            out_factors,
            in_factors,
            ..
        } => {
            push(format!("{prefix}.coeffs"), coeffs.len(), false, offset);
            for (i, term) in out_factors.iter().enumerate() {
                for (j, f) in term.iter().enumerate() {
                    push(format!("{prefix}.out{i}.mode{j}"), f.len(), false, offset);
                }
            }
            for (i, term) in in_factors.iter().enumerate() {
                for (j, f) in term.iter().enumerate() {
                    push(format!("{prefix}.in{i}.mode{j}"), f.len(), false, offset);
                }
            }
        }
    }
}

fn write_map(map: &LinearTensorMap, out: &mut Vec<f64>) {
    match map {
        LinearTensorMap::Dense { weight, .. } => out.extend_from_slice(weight.data()),
        LinearTensorMap::Cp {
            coeffs,
            out_factors,
            in_factors,
            ..
        } => {
            out.extend_from_slice(coeffs);
            for term in out_factors {
                for f in term {
                    out.extend_from_slice(f);
                }
            }
            for term in in_factors {
                for f in term {
                    out.extend_from_slice(f);
                }
            }
        }
    }
}

fn read_map(map: &mut LinearTensorMap, src: &[f64], mut pos: usize) -> usize {
    match map {
        LinearTensorMap::Dense { weight, .. } => {
            let n = weight.rows() * weight.cols();
            weight.data_mut().copy_from_slice(&src[pos..pos + n]);
            pos + n
        }
        LinearTensorMap::Cp {
            coeffs,
            out_factors,
            in_factors,
            ..
        } => {
            let nc = coeffs.len();
            coeffs.copy_from_slice(&src[pos..pos + nc]);
            pos += nc;
            for term in out_factors.iter_mut().chain(in_factors.iter_mut()) {
                for f in term {
                    let n = f.len();
                    f.copy_from_slice(&src[pos..pos + n]);
                    pos += n;
                }
            }
            pos
        }
    }
}

// ---------------------------------------------------------------------------
// Architecture descriptors and the builder.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    /// HSS structured `dim x dim` layer.
    Hss1d {
        dim: usize,
        levels: usize,
        rank: usize,
        activation: bool,
    },
    /// m-dimensional layer: one HSS factor per mode per separable term.
    NdHss {
        dims: Vec<usize>,
        levels: usize,
        rank: usize,
        outer_rank: usize,
        activation: bool,
    },
    /// Unstructured rectangular layer (dense baseline).
    Dense1d {
        in_dim: usize,
        out_dim: usize,
        activation: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    #[default]
    Identity,
    Dense {
        in_shape: Vec<usize>,
        out_shape: Vec<usize>,
    },
    Cp {
        in_shape: Vec<usize>,
        out_shape: Vec<usize>,
        rank: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default)]
    pub lift: MapSpec,
    pub layers: Vec<LayerSpec>,
    #[serde(default)]
    pub project: MapSpec,
}

fn build_map(spec: &MapSpec, rng: &mut ChaCha8Rng) -> Result<Option<LinearTensorMap>> {
    let uniform = |rng: &mut ChaCha8Rng, bound: f64| rng.random::<f64>() * 2.0 * bound - bound;
    Ok(match spec {
        MapSpec::Identity => None,
        MapSpec::Dense {
            in_shape,
            out_shape,
        } => {
            let rows: usize = out_shape.iter().product();
            let cols: usize = in_shape.iter().product();
            let bound = 1.0 / (cols as f64).sqrt();
            let mut weight = Mat::zeros(rows, cols);
            for v in weight.data_mut() {
                *v = uniform(rng, bound);
            }
            Some(LinearTensorMap::Dense {
                in_shape: in_shape.clone(),
                out_shape: out_shape.clone(),
                weight,
            })
        }
        MapSpec::Cp {
            in_shape,
            out_shape,
            rank,
        } => {
            let mut coeffs = vec![0.0; *rank];
            let cbound = 1.0 / (*rank as f64).sqrt();
            for c in &mut coeffs {
                *c = uniform(rng, cbound);
            }
            let factors = |shape: &[usize], rng: &mut ChaCha8Rng| -> Vec<Vec<Vec<f64>>> {
                (0..*rank)
                    .map(|_| {
                        shape
                            .iter()
                            .map(|&d| {
                                let bound = 1.0 / (d as f64).sqrt();
                                (0..d).map(|_| uniform(rng, bound)).collect()
                            })
                            .collect()
                    })
                    .collect()
            };
            let out_factors = factors(out_shape, rng);
            let in_factors = factors(in_shape, rng);
            Some(LinearTensorMap::Cp {
                in_shape: in_shape.clone(),
                out_shape: out_shape.clone(),
                coeffs,
                out_factors,
                in_factors,
            })
        }
    })
}

impl NeuralHssModel {
    /// Builds the model with randomly initialized weights (uniform with
    /// bound `init_scale / sqrt(fan)` per block) and every alpha at 1, the
    /// identity regime of the activation. Component sub-seeds are derived
    /// from `init_seed` by position, so construction is bitwise stable.
    pub fn build(spec: &ModelSpec, init_seed: u64, init_scale: f64) -> Result<Self> {
        let mut stream = 0u64;
        let mut next_seed = || {
            let s = seed::derive(init_seed, stream);
            stream += 1;
            s
        };
        let mut lift_rng = ChaCha8Rng::seed_from_u64(next_seed());
        let lift = build_map(&spec.lift, &mut lift_rng)?;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for layer_spec in &spec.layers {
            let s = next_seed();
            layers.push(match layer_spec {
                LayerSpec::Hss1d {
                    dim,
                    levels,
                    rank,
                    activation,
                } => {
                    let tree = ClusterTree::balanced(*dim, *levels).map_err(NeuralError::Core)?;
                    let weight =
                        Hss::random(tree, *rank, s, init_scale).map_err(NeuralError::Core)?;
                    Layer::Hss(HssLinearLayer::new(weight, *activation))
                }
                LayerSpec::NdHss {
                    dims,
                    levels,
                    rank,
                    outer_rank,
                    activation,
                } => {
                    let mut factors = Vec::with_capacity(*outer_rank);
                    for k in 0..*outer_rank {
                        let mut term = Vec::with_capacity(dims.len());
                        for (j, &d) in dims.iter().enumerate() {
                            let tree =
                                ClusterTree::balanced(d, *levels).map_err(NeuralError::Core)?;
                            let sub = seed::derive(s, (k * dims.len() + j) as u64);
                            term.push(
                                Hss::random(tree, *rank, sub, init_scale)
                                    .map_err(NeuralError::Core)?,
                            );
                        }
                        factors.push(term);
                    }
                    Layer::Nd(NdHssLayer::new(factors, *activation)?)
                }
                LayerSpec::Dense1d {
                    in_dim,
                    out_dim,
                    activation,
                } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    let bound = init_scale / (*in_dim as f64).sqrt();
                    let mut weight = Mat::zeros(*out_dim, *in_dim);
                    for v in weight.data_mut() {
                        *v = rng.random::<f64>() * 2.0 * bound - bound;
                    }
                    Layer::Dense(DenseLayer::new(weight, *activation))
                }
            });
        }
        let mut project_rng = ChaCha8Rng::seed_from_u64(next_seed());
        let project = build_map(&spec.project, &mut project_rng)?;
        Ok(Self {
            lift,
            layers,
            project,
            residual_scale: None,
            spec: spec.clone(),
        })
    }
}
