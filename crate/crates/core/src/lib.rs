//! Minimax-optimal nonlinear-phase FIR filter design.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autocorr;
pub mod certificate;
pub mod error;
mod extrema;
pub mod io;
pub mod lp_oracle;
pub mod par;
pub mod pipeline;
pub mod remez;
pub mod spectral_factor;
pub mod spectrum;
pub mod weight;

pub use error::{Error, Result};
