//! Frank-Wolfe over atoms spread across a simulated network.
//!
//! Start with [`fw::solve_fw`] for the centralized solver and
//! [`dfw::solve_dfw`] for the distributed one. [`harness::run_experiment`]
//! drives both from a config.

// `!(x > 0.0)` is how parameter checks reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod dfw;
pub mod error;
pub mod fw;
pub mod harness;
pub mod netsim;
pub mod objectives;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/objectives.md")]
    mod objectives {}
    #[doc = include_str!("../../../book/src/frank-wolfe.md")]
    mod frank_wolfe {}
    #[doc = include_str!("../../../book/src/network.md")]
    mod network {}
    #[doc = include_str!("../../../book/src/distributed.md")]
    mod distributed {}
    #[doc = include_str!("../../../book/src/approximate.md")]
    mod approximate {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
