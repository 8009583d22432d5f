//! Cross spline net: per-feature spline basis expansions feeding a linear
//! projection, a stack of cross layers (a degree-(k+1) polynomial in the
//! bases), and a scalar head. The crate also ships the training loop,
//! synthetic benchmark generators, the bike-sharing ingestion path, and
//! model diagnostics (ICE/PDP, permutation importance, interaction
//! statistics).

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod gradcheck;
pub mod model;
pub mod nncore;
pub mod simgen;
pub mod spline;
pub mod train;
mod util;

pub use data::{Dataset, ResponseKind, Split, Standardizer, TrainingStats};
pub use error::{CsnError, Result};
pub use model::{
    build_csn, build_fcnn, load_model, save_model, treenet2_config, Arch, CsnConfig, FcnnConfig,
    HeadKind, Loss, Model,
};
pub use spline::BasisKind;
pub use train::{evaluate, fit, random_search, FitHistory, Metric, TrainConfig};
