//! Quantum machine-learning toolkit for weather time series.
//!
//! The crate bundles an exact statevector simulator ([`qsim`]), parameterized
//! circuit templates ([`circuits`]), parameter-shift gradients ([`autodiff`]),
//! optimizers ([`optim`]), fidelity-kernel SVMs ([`qkernel`]), feed-forward
//! and recurrent quantum/classical models ([`models`], [`recurrent`]) and the
//! data pipeline for ERA5-style monthly extracts ([`weather`]).
//!
//! Data-parallel loops (kernel rows, per-sample gradients, shift
//! evaluations) go through [`par`], which uses rayon when the `parallel`
//! feature is enabled.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod circuits;
pub mod error;
pub mod models;
pub mod numfmt;
pub mod optim;
pub mod par;
pub mod qkernel;
pub mod qsim;
pub mod recurrent;
pub mod weather;

pub use error::{Error, Result};
