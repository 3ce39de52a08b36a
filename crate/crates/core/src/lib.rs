//! Wildfire aerial-firefighting sandbox: a cellular fire and fleet simulator,
//! its Markov decision process wrapper, a PPO mission coordinator and the
//! evaluation harness used to compare it with random tactics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod env;
pub mod fire;
pub mod fleet;
pub mod harness;
pub mod ppo;
pub mod rng;
pub mod world;

#[cfg(test)]
pub(crate) mod testutil;
