//! Laplace–Beltrami eigenvalue computation on domains in the hyperbolic
//! plane, with post-processing that checks hot-spots behaviour of low
//! Neumann and mixed Dirichlet–Neumann eigenfunctions.
//!
//! The pipeline is: describe a domain ([`domain`]), triangulate it in
//! Poincaré-disk coordinates ([`mesh`]), assemble P1 stiffness/mass
//! operators for the conformal metric ([`fem`]), solve the generalized
//! symmetric eigenproblem ([`eigen`]), and analyze eigenfunctions for
//! interior critical points, extremum locations and nodal structure
//! ([`analysis`]). The [`special`] module evaluates the radial Legendre
//! eigenfunctions and the disk spectra used as references throughout.

pub mod analysis;
pub mod domain;

pub mod eigen;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod mesh;
pub mod special;

pub use error::{Error, Result};
