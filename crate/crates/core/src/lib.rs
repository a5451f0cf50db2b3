//! Open-system dynamics of two coupled harmonic oscillators, one of which
//! exchanges energy with a thermal bath.
//!
//! All frequencies, rates and times are in units of the bare mode frequency ω0.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod coefficients;
pub mod error;
pub mod exact;
pub mod fock;
pub mod gaussian;
pub mod generator;
mod linalg;
pub mod moments;
pub mod ode;
pub mod params;
pub mod quadrature;
pub mod spectral;

pub use coefficients::{cp_threshold, dissipator_coefficients, CoefficientSet, CpThreshold};
pub use error::{Error, Result};
pub use gaussian::{eigenmode_covariance, gaussian_fidelity, lambda_c, EigenmodeCovariance, Fidelity};
pub use generator::{cg_redfield_generator, local_generator, propagate, steady_state, AffineGenerator};
pub use linalg::check_blas;
pub use moments::{mixture_moments, LocalMoments, MomentState, Scheme, Trajectory};
pub use params::{CoarseGrain, ModelParams, Temperature};
