//! Energy-minimal resource allocation for semantic communication.
//!
//! A base station serves `U` users that upload compressed semantic
//! representations of their data. The system jointly picks, per user, a
//! selection flag, transmit power, semantic compression ratio, and a
//! bandwidth share, minimizing total transmission energy while a distortion
//! budget keeps the downstream AI task (training or inference) within a
//! target performance gap.
//!
//! Modules:
//! - [`distortion`]: variance composition and the AI-performance bounds that
//!   turn a distortion budget into a feasibility test.
//! - [`compression`]: measured compression-ratio-to-loss table with
//!   interpolation and inverse lookup.
//! - [`channel`]: channel gains, Shannon rate, per-link time and energy.
//! - [`env`]: episodic decision environment with structural constraint
//!   squashing, penalties, and reward.
//! - [`nn`]: minimal dense network with reverse-mode gradients.
//! - [`ddpg`]: actor-critic learner with replay, OU exploration noise, and
//!   soft target updates.
//! - [`baselines`]: random policy and an exhaustive grid-search oracle for
//!   small instances.
//! - [`config`] / [`harness`]: scenario files, seeded sweeps, CSV emission,
//!   checkpoints.
//! - [`verify`]: fast self-checks wired to the CLI `verify` subcommand.

pub mod baselines;
pub mod channel;
pub mod compression;
pub mod config;
pub mod ddpg;
pub mod distortion;
pub mod env;
pub mod error;
pub mod harness;
pub mod nn;
pub mod verify;

pub use error::{Error, Result};
