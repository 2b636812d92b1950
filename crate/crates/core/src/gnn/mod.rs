//! Graph neural network backbones (structure2vec, GCN, GIN, 2-IGN+), the
//! shared policy/value head, the training loss with its gradient, and
//! checkpoint files.

mod checkpoint;
mod model;
mod network;
mod tape;
mod tensor;

pub use checkpoint::{load_params, load_params_as, read_params, save_params, write_params, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{forward, layout, param_count, Dims, GraphOps, ModelKind, TensorSpec};
pub use network::{
    head, loss_and_grad_theta, loss_and_gradients, node_outputs_theta, softmax, Example, Gradients, NetworkOutput, Params,
    PolicyValue, UniformStub,
};
pub use tape::{Sparse, Tape, Var};
pub use tensor::Matrix;

#[cfg(test)]
mod tests;
