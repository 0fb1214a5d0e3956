//! Physics-informed networks for multi-frequency Poisson problems, trained
//! on a stretched domain and refined by a residual-correction stage.

pub mod autodiff;
pub mod checkpoint;
pub mod error;
pub mod format;
pub mod metrics;
pub mod network;
pub mod optimizer;
pub mod problems;
pub mod sampling;
pub mod selfcheck;
pub mod training;

pub use autodiff::{jet_forward, loss_param_gradient, Activation, ActivationKind, Jet, ParamGradient};
pub use checkpoint::{Checkpoint, CheckpointHeader};
pub use error::{Error, Result};
pub use metrics::{ErrorReport, SpectrumReport};
pub use network::{forward, init_xavier_normal, MlpSpec, ParamSet};
pub use problems::{Problem, ProblemSpec};
pub use training::{run, train, train_scaled, RunResult, TrainConfig};
