//! Random eigenfunction ensembles on model manifolds.
//!
//! The crate samples functions drawn uniformly from spectral blocks of the
//! Laplacian on the round sphere `S^d` and the flat torus `T^d`, measures their
//! `L^q`/`L^inf` norms against closed-form moment laws, and simulates the damped
//! wave equation on `T^d` to study how randomly chosen data loses energy.
//!
//! Modules, bottom-up:
//!
//! * [`geometry`] manifolds, frequency windows, spectral blocks, Weyl counting.
//! * [`sphere`] real orthonormal spherical harmonics and exact quadrature on `S^2`.
//! * [`torus`] plane-wave synthesis on `T^d` (direct and FFT).
//! * [`fields`] block-level synthesis and the spectral-projector diagonal.
//! * [`ensembles`] coefficient-sphere, Haar and product-measure samplers, Kakutani.
//! * [`normlab`] norms, closed-form moments and the concentration experiments.
//! * [`wave`] spectral Strang solver for the damped wave equation and decay studies.
//! * [`experiment`] config parsing and the result writer behind the `randwave` CLI.

pub mod ensembles;
pub mod error;
pub mod experiment;
pub mod fields;
pub mod geometry;
pub mod normlab;
pub mod parallel;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod sphere;
pub mod stats;
pub mod torus;
pub mod wave;

pub use error::{Error, Result};
pub use num_complex::Complex64;
