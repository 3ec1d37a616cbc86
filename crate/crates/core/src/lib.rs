//! Mutual-information landscapes over polytopes of joint distributions with
//! fixed pairwise marginals.
//!
//! The central object is a triple `(S, X, Y)` of finite random variables. With
//! the marginals `P(S,X)` and `P(S,Y)` held fixed, the mutual information
//! `I(S : X,Y)` is a convex function on the resulting polytope. This crate
//! computes that function, its minimizers and their location, the BROJA and
//! series-expansion information decompositions, closed-form discriminants for
//! the all-binary model and the one-dimensional Gaussian analogue.
//!
//! | module       | contents                                                    |
//! |--------------|-------------------------------------------------------------|
//! | [`dist`]     | distributions, entropy, mutual information, KL, derivatives |
//! | [`domain`]   | shuffle distribution, kernel basis, coordinates, bounds     |
//! | [`binomial`] | log-binomial signal and noise correlations                  |
//! | [`infomin`]  | minimization of `I` and minimizer certificates              |
//! | [`decomp`]   | BROJA PID, series expansion, translation identities         |
//! | [`geometry`] | corner coordinates, discriminant, volumes, tare map         |
//! | [`gaussian`] | Gaussian mutual information and covariance scan             |
//!
//! All information values are in nats internally; [`InfoValue::bits`]
//! converts at presentation time.

pub mod binomial;
pub mod decomp;
pub mod dist;
pub mod domain;
mod error;
pub mod gaussian;
pub mod geometry;
pub mod infomin;
pub mod quadrature;
pub mod transport;

pub use binomial::{Binomial, CorrelationValue, Sign};
pub use dist::{InfoValue, JointDistribution, StateSpace, TangentVector};
pub use domain::{CorrelationDomain, DomainCoords, KernelBasisVector, MarginalPair};
pub use error::{Error, Result};
pub use infomin::{minimize_information, Location, MinimizeOptions, MinimizerReport};
