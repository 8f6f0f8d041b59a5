//! Networks, gradient flows and Fourier band diagnostics for measuring how
//! training error is distributed across frequencies.

pub mod diag;
pub mod error;
pub mod experiment;
pub mod flow;
pub mod grad;
pub mod nnet;
pub mod spectral;

pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, RunOutput, Summary};
pub use flow::{Checkpoint, TrajectoryRecord};
pub use grad::LossKind;
pub use nnet::{Activation, NetworkSpec, Theta};
pub use spectral::{Grid, Spectrum};
