//! Differentiable structured layers and the full lift/stack/project model,
//! with hand-written reverse-mode gradients for every parameter.

pub mod activation;
pub mod error;
pub mod layer;
pub mod model;
pub mod nd_layer;
pub mod tensor;
pub mod tensor_map;
pub mod serialize;

pub use activation::{leaky_relu, leaky_relu_vjp};
pub use error::{NeuralError, Result};
pub use layer::{DenseLayer, HssLinearLayer};
pub use model::{
    GradientSet, Layer, LayerSpec, MapSpec, ModelSpec, ModelTape, NeuralHssModel, ParamBlock,
    ParamLayout,
};
pub use nd_layer::{modal_apply_hss, NdHssLayer};
pub use serialize::{load_model, save_model, ModelManifest};
pub use tensor::{modal_product, Tensor};
pub use tensor_map::LinearTensorMap;
