//! Nonlinear Embedding Transform for unsupervised domain adaptation.
//!
//! A labeled source domain and an unlabeled target domain are mapped into a
//! shared `k`-dimensional space through a kernel expansion `Z = Aᵀ K`. The
//! coefficients trade off three goals: small marginal and class-conditional
//! maximum mean discrepancy between the domains, a spectral embedding that
//! keeps same-class source points together, and a Frobenius penalty on `A`.
//! Target labels are predicted with 1-nearest-neighbor in that space.
//!
//! ```no_run
//! use net_adapt::data::{two_moon, DomainShift};
//! use net_adapt::kernel::KernelSpec;
//! use net_adapt::solver::{net_fit, HyperParams};
//!
//! let (source, target) = two_moon(150, 0.1, &DomainShift::rotation(30.0), 7);
//! let hp = HyperParams::new(1.0, 1.0, 1.0, 10);
//! let fit = net_fit(&source.x, source.labels().unwrap(), &target.x, &KernelSpec::gaussian_median(), &hp).unwrap();
//! let predicted = fit.target_labels().unwrap();
//! # let _ = predicted;
//! ```

pub mod classify;
pub mod cli;
pub mod data;
pub mod embedding;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod mmd;
pub mod selection;
pub mod solver;

/// Class labels are positive integers `1..=C`.
pub type Label = u32;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use solver::{Algorithm, HyperParams, ProjectionResult};
