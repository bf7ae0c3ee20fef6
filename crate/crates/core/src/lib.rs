//! Discrete-time active inference.
//!
//! The crate covers the whole perception / planning / learning loop of an
//! agent with a factorised categorical generative model:
//!
//! * [`model`] holds the likelihood `A`, transitions `B`, preferences `C`,
//!   initial prior `D` and the JSON model file format.
//! * [`inference`] does exact Bayesian filtering, prediction and
//!   forward-backward smoothing over the joint state, plus the per-factor
//!   fixed-point filter.
//! * [`efe`] scores policies by expected free energy in both the
//!   epistemic/utility and the ambiguity/risk form.
//! * [`policy`] enumerates policies and forms the softmax posterior.
//! * [`learning`] applies the Dirichlet hyperparameter update at the end of
//!   an episode.
//! * [`varfree`] contains the variational free energy functional, CAVI and
//!   an exact mixture-of-Dirichlets posterior used to check the learning rule.
//! * [`env`] provides environments, including the T-maze.
//! * [`run`] drives agent/environment episodes for the command line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod efe;
pub mod env;
pub mod error;
pub mod inference;
pub mod learning;
pub mod math;
pub mod model;
pub mod policy;
pub mod run;
pub mod varfree;

pub use error::{Error, Result};
pub use model::GenerativeModel;
