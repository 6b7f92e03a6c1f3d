//! Counting and classifying the solution branches of `−Δu = |u|^{p−1}u + λu` that
//! bifurcate from a multiple Dirichlet eigenvalue of a rectangle or box.
//!
//! The pipeline is: [`spectrum`] locates the eigenvalue and its exact mode set,
//! [`reduced`] builds the finite-dimensional functional on that eigenspace,
//! [`critpoints`] finds and classifies its critical points into a branch prediction,
//! and [`pdeverify`] checks the prediction against a finite-difference solve.

pub mod critpoints;
pub mod pdeverify;
pub mod reduced;
pub mod report;
pub mod spectrum;

pub use reduced::ReducedFunctional;
pub use spectrum::{DomainSpec, EigenGroup, EigenMode};
