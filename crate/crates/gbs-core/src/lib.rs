//! Classical simulation laboratory for Gaussian boson sampling (GBS) with
//! threshold detectors.
//!
//! The crate models a squeezed-light interferometry experiment at desk scale:
//! Gaussian states are tracked as complex covariance matrices, click-pattern
//! probabilities are evaluated through the Torontonian kernel, and a family of
//! samplers (exact and adversarial mocks) feeds the validation statistics and
//! classical-cost benchmarks.
//!
//! All numerical code is generic over the real scalar type (`f32` or `f64`)
//! through the [`Scalar`] trait; `f64` aliases are exported at the crate root.

pub mod bench;
pub mod kernels;
pub mod linalg;
pub mod num;
pub mod presets;
pub mod probability;
pub mod rng;
pub mod samplers;
pub mod state;
pub mod textcfg;
pub mod validation;

pub use crate::num::{CompensatedSum, Scalar};

/// Default real scalar used by the CLI and reference configurations.
pub type Real = f64;
/// Complex number over the default scalar.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix over the default scalar.
pub type Matrix64 = linalg::CMatrix<f64>;
/// Gaussian state over the default scalar.
pub type GaussianState64 = state::GaussianState<f64>;
/// Experiment description over the default scalar.
pub type ExperimentSpec64 = state::ExperimentSpec<f64>;
