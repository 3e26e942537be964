//! Goal-oriented error estimation for P1 finite elements with rough
//! lognormal coefficients.
//!
//! The crate covers sampling of Brownian-bridge and Wiener paths and of 2D
//! fields with exponential covariance, explicit and assembled 1D solves, the
//! two-level and single-mesh Galerkin estimators, the Fourier study of the
//! error density, quadrature-error estimators, the 2D estimators on a
//! triangulated square and a seeded Monte Carlo harness writing CSV runs.
//!
//! ```
//! use roughfem::fem1d::Observable;
//! use roughfem::estimators1d::PathAnalysis;
//! use roughfem::randfield::{sample_brownian_bridge, lognormal_of, CellPoint};
//! use roughfem::rng::RngStream;
//!
//! let path = sample_brownian_bridge(12, &mut RngStream::new(7, 0)).unwrap();
//! let a = lognormal_of(&path, CellPoint::Left).unwrap();
//! let g = Observable::one();
//! let run = PathAnalysis::new(&a, &g).unwrap();
//! let report = run.estimate(6).unwrap();
//! assert!(report.e_est >= report.f_tilde.abs());
//! ```

pub mod error;
pub mod estimators1d;
pub mod fem1d;
pub mod fem2d;
pub mod frequency;
pub mod grid;
pub mod mcharness;
pub mod quadrature;
pub mod randfield;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
