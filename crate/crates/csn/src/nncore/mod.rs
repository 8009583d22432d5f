//! Dense-matrix layer primitives: the substrate every model here is built
//! from. All arithmetic is 64-bit; every op is a pure function of its inputs.

mod adam;
mod layers;
mod matrix;

pub use adam::{adam_update, AdamState};
pub use layers::{
    activation, activation_backward, affine, affine_backward, cross_layer, cross_layer_backward,
    cross_layer_forward, sigmoid, Activation, AffineGrads, AffineParams, CrossGrads, CrossParams,
};
pub use matrix::Matrix;
