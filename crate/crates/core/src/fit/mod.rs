//! Gradient-based fitting of Gaussian mixtures to silhouettes.

pub mod adam;
pub mod config;
pub mod driver;
pub mod layout;
pub mod objective;

pub use adam::{adam_step, AdamParams, AdamState};
pub use config::{FitConfig, FitMode, Parameterization};
pub use driver::{fit, fit_from, fit_with_observer, initialize, FitDiagnostics, FitResult};
pub use layout::{reparameterize, FittedGaussian, ImagePose, ModelValues, ParamLayout, ParamVector, RawModel};
pub use objective::{forward_loss, loss, loss_and_grad, Dataset, LossGrad, Observation};
