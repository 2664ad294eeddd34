//! Wasserstein distributionally robust two-stage conic optimization over
//! zero-one uncertainty: exact reformulations of the worst-case expectation
//! over a ball of distributions around the empirical scenario sample,
//! penalty-based mixed-binary representations, lift-and-project outer
//! approximations, exact decomposition methods, and the bundled network
//! models the methods are exercised on.

pub mod ambiguity;
mod error;
pub mod exact;
pub mod lift;
pub mod models;
pub mod reformulations;
pub mod synth;
pub mod two_stage;

pub use error::DroError;
