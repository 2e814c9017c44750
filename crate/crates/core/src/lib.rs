//! Numerical toolkit for Gaussian quantum optics, photon counting statistics,
//! camera-based squeezing estimation, light-source discrimination and the
//! correction of turbulence-distorted Laguerre-Gaussian modes.
//!
//! Quadratures follow `X = (a + a†)/2`, `P = (a − a†)/(2i)` so that `[X, P] = i/2`
//! and the vacuum covariance matrix is `Γ = I/2`. Multi-mode vectors are ordered
//! `(X₁, P₁, X₂, P₂, …)`.

pub mod camera;
pub mod constants;
pub mod error;
pub mod fft;
pub mod gaussian;
pub mod metrology;
pub mod modes;
pub mod photon;
pub mod pipeline;
pub mod rng;
pub mod source_id;
pub mod special;
pub mod tomography;
pub mod turbulence;

pub use error::{QpbError, Result};
pub use gaussian::{GaussianState, StateParams, SymplecticTransform};

pub use modes::{BeamGeometry, ComplexField, GridSpec};
pub use photon::PhotonDistribution;
